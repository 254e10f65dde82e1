/** Typed client for the gateway HTTP+JSON interface. */

export interface ExecutionResult {
  status: string;
  payload: unknown;
  message: string;
}

export interface QueryResponse {
  request_id: string;
  label: [string, string];
  params: Record<string, string>;
  result: ExecutionResult;
  cached: boolean;
  backend_id: string;
  latency_ms: number;
}

export interface HistoryEntry {
  request_id: string;
  session_id: string;
  timestamp: number;
  query: string;
  label: [string, string];
  status: string;
  message: string;
}

export interface HealthResponse {
  status: string;
  registry_version: number;
  backends: { id: string; reachable: boolean }[];
}

export class GatewayError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      if (body && typeof body.detail === 'string') detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new GatewayError(resp.status, detail);
  }
  return resp.json() as Promise<T>;
}

export class GatewayClient {
  constructor(private baseUrl: string = '') {}

  async submitQuery(text: string, sessionId: string): Promise<QueryResponse> {
    const resp = await fetch(`${this.baseUrl}/v1/query`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ text, session_id: sessionId }),
    });
    return asJson<QueryResponse>(resp);
  }

  async getHistory(
    sessionId: string,
    limit = 20,
    before?: number,
  ): Promise<HistoryEntry[]> {
    const params = new URLSearchParams({
      session_id: sessionId,
      limit: String(limit),
    });
    if (before !== undefined) params.set('before', String(before));
    const resp = await fetch(`${this.baseUrl}/v1/history?${params}`);
    const body = await asJson<{ entries: HistoryEntry[] }>(resp);
    return body.entries;
  }

  async health(): Promise<HealthResponse> {
    return asJson<HealthResponse>(await fetch(`${this.baseUrl}/v1/health`));
  }
}
