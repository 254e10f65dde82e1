/** Client-minted opaque session token, persisted across page loads. */

const STORAGE_KEY = 'nlgateway.session_id';
const TOKEN_LENGTH = 16;
const ALPHABET = 'ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789';

export function mintSessionId(rand: () => number = Math.random): string {
  let token = '';
  for (let i = 0; i < TOKEN_LENGTH; i++) {
    token += ALPHABET[Math.floor(rand() * ALPHABET.length)];
  }
  return token;
}

export interface KVStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export function getSessionId(storage: KVStorage): string {
  const existing = storage.getItem(STORAGE_KEY);
  if (existing && /^[A-Za-z0-9_-]{1,64}$/.test(existing)) return existing;
  const minted = mintSessionId();
  storage.setItem(STORAGE_KEY, minted);
  return minted;
}
