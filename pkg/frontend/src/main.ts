/** DOM wiring: query box, result area, health banner, history panel. */

import { GatewayClient, GatewayError, HistoryEntry } from './api.js';
import {
  mergeHistoryPage,
  renderHistory,
  renderNetworkError,
  renderResultCard,
  renderUnavailableBanner,
} from './render.js';
import { getSessionId } from './session.js';

const PAGE_SIZE = 20;

declare global {
  interface Window {
    GATEWAY_URL?: string;
  }
}

function init(): void {
  const client = new GatewayClient(window.GATEWAY_URL ?? '');
  const sessionId = getSessionId(window.localStorage);

  const queryBox = document.getElementById('query') as HTMLInputElement;
  const submit = document.getElementById('submit') as HTMLButtonElement;
  const resultArea = document.getElementById('result') as HTMLElement;
  const bannerArea = document.getElementById('banner') as HTMLElement;
  const historyArea = document.getElementById('history-panel') as HTMLElement;
  const loadMore = document.getElementById('load-more') as HTMLButtonElement;

  let entries: HistoryEntry[] = [];
  let inflight = false;

  const syncSubmit = () => {
    submit.disabled = inflight || queryBox.value.trim() === '';
  };
  queryBox.addEventListener('input', syncSubmit);
  syncSubmit();

  const refreshHistory = async () => {
    try {
      entries = await client.getHistory(sessionId, Math.max(entries.length, PAGE_SIZE));
      historyArea.innerHTML = renderHistory(entries);
      historyArea.classList.remove('stale');
    } catch {
      historyArea.classList.add('stale'); // stale-data indicator
    }
  };

  loadMore.addEventListener('click', async () => {
    const oldest = entries[entries.length - 1];
    try {
      const page = await client.getHistory(sessionId, PAGE_SIZE, oldest?.timestamp);
      entries = mergeHistoryPage(entries, page);
      historyArea.innerHTML = renderHistory(entries);
      historyArea.classList.remove('stale');
    } catch {
      historyArea.classList.add('stale');
    }
  });

  // clicking a history row re-fills the query box (re-run affordance)
  historyArea.addEventListener('click', (event) => {
    const row = (event.target as HTMLElement).closest('.history-row');
    if (row instanceof HTMLElement && row.dataset.query !== undefined) {
      queryBox.value = row.dataset.query;
      syncSubmit();
    }
  });

  submit.addEventListener('click', async () => {
    const text = queryBox.value.trim();
    if (text === '' || inflight) return;
    inflight = true;
    syncSubmit();
    bannerArea.innerHTML = '';
    try {
      const resp = await client.submitQuery(text, sessionId);
      resultArea.innerHTML = renderResultCard(resp);
    } catch (err) {
      if (err instanceof GatewayError && err.status === 503) {
        bannerArea.innerHTML = renderUnavailableBanner(err.message);
      } else if (err instanceof GatewayError) {
        bannerArea.innerHTML = renderUnavailableBanner(err.message);
      } else {
        bannerArea.innerHTML = renderNetworkError();
      }
    } finally {
      inflight = false;
      syncSubmit();
      void refreshHistory();
    }
  });

  void client
    .health()
    .then((h) => {
      if (h.status !== 'ok') {
        bannerArea.innerHTML = renderUnavailableBanner('gateway degraded');
      }
    })
    .catch(() => {
      bannerArea.innerHTML = renderNetworkError();
    });

  void refreshHistory();
}

if (typeof document !== 'undefined') {
  document.addEventListener('DOMContentLoaded', init);
}
