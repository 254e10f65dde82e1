/** Pure HTML-string renderers, total over every response status. */

import type { HistoryEntry, QueryResponse } from './api.js';

function escapeHtml(s: string): string {
  return s
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

function paramsTable(params: Record<string, string>): string {
  const keys = Object.keys(params);
  if (keys.length === 0) return '';
  const rows = keys
    .map(
      (k) =>
        `<tr><td>${escapeHtml(k)}</td><td>${escapeHtml(params[k])}</td></tr>`,
    )
    .join('');
  return `<table class="params"><tbody>${rows}</tbody></table>`;
}

function payloadBlock(payload: unknown): string {
  if (payload === null || payload === undefined) return '';
  if (typeof payload === 'object' && payload !== null) {
    const record = payload as Record<string, unknown>;
    if (Object.keys(record).length === 1 && 'value' in record) {
      return `<p class="value">${escapeHtml(String(record.value))}</p>`;
    }
  }
  return `<pre class="payload">${escapeHtml(JSON.stringify(payload, null, 1))}</pre>`;
}

export function renderResultCard(resp: QueryResponse): string {
  const [module, fn] = resp.label;
  const badge = `<span class="badge">${escapeHtml(module)}.${escapeHtml(fn)}</span>`;
  const cachedTag = resp.cached ? '<span class="cached">cached</span>' : '';
  if (resp.result.status === 'ok') {
    return (
      `<div class="card ok">${badge}${cachedTag}` +
      paramsTable(resp.params) +
      payloadBlock(resp.result.payload) +
      `<p class="message">${escapeHtml(resp.result.message)}</p></div>`
    );
  }
  // every non-ok status (invalid_route, missing_param, bad_param,
  // exec_error, anything future) renders as a warning card
  return (
    `<div class="card warning" data-status="${escapeHtml(resp.result.status)}">` +
    `${badge}${cachedTag}` +
    paramsTable(resp.params) +
    `<p class="message">${escapeHtml(resp.result.message || resp.result.status)}</p>` +
    `</div>`
  );
}

export function renderUnavailableBanner(detail: string): string {
  return `<div class="banner unavailable">classifier unavailable: ${escapeHtml(detail)}</div>`;
}

export function renderNetworkError(): string {
  return '<div class="banner network-error">request failed <button class="retry">retry</button></div>';
}

export function renderHistory(entries: HistoryEntry[]): string {
  if (entries.length === 0) {
    return '<p class="empty">No queries yet in this session.</p>';
  }
  const rows = entries
    .map(
      (e) =>
        `<li class="history-row ${e.status === 'ok' ? 'ok' : 'warn'}" ` +
        `data-query="${escapeHtml(e.query)}">` +
        `<span class="hq">${escapeHtml(e.query)}</span>` +
        `<span class="hl">${escapeHtml(e.label[0])}.${escapeHtml(e.label[1])}</span>` +
        `<span class="hs">${escapeHtml(e.status)}</span></li>`,
    )
    .join('');
  return `<ul class="history">${rows}</ul>`;
}

/** Append a page to existing entries, dropping anything already shown. */
export function mergeHistoryPage(
  existing: HistoryEntry[],
  page: HistoryEntry[],
): HistoryEntry[] {
  const seen = new Set(existing.map((e) => e.request_id));
  return existing.concat(page.filter((e) => !seen.has(e.request_id)));
}
