"""In-process TTL cache with LRU eviction for classification results."""
from __future__ import annotations

import hashlib
import re
import threading
from collections import OrderedDict
from typing import Any, Optional

from .clocks import SystemClock

DEFAULT_TTL_S = 300.0
DEFAULT_CAPACITY = 10_000


def cache_key(registry_version: int, query: str) -> str:
    normalized = re.sub(r"\s+", " ", query.strip().lower())
    return hashlib.sha256(f"{registry_version}\x00{normalized}".encode()).hexdigest()


class TTLCache:
    """Thread-safe TTL + LRU map. Failures degrade to a miss, never an error."""

    def __init__(self, ttl_s: float = DEFAULT_TTL_S, capacity: int = DEFAULT_CAPACITY,
                 clock=None):
        self.ttl_s = ttl_s
        self.capacity = capacity
        self.clock = clock or SystemClock()
        self._lock = threading.Lock()
        self._store: OrderedDict[str, tuple[float, Any]] = OrderedDict()

    def lookup(self, key: str) -> Optional[Any]:
        now = self.clock.now()
        with self._lock:
            entry = self._store.get(key)
            if entry is None:
                return None
            expires_at, value = entry
            if now >= expires_at:
                del self._store[key]
                return None
            self._store.move_to_end(key)
            return value

    def store(self, key: str, value: Any, ttl_s: Optional[float] = None) -> None:
        expires_at = self.clock.now() + (ttl_s if ttl_s is not None else self.ttl_s)
        with self._lock:
            self._store[key] = (expires_at, value)
            self._store.move_to_end(key)
            while len(self._store) > self.capacity:
                self._store.popitem(last=False)

    def __len__(self) -> int:
        with self._lock:
            return len(self._store)


class ExternalKVCache:
    """Adapter for an external key-value cache server (RESP text protocol).

    Speaks GET / SET-with-EX over TCP. Any connection or protocol failure
    degrades to a cache miss so the request path never depends on the cache.
    """

    def __init__(self, url: str, ttl_s: float = DEFAULT_TTL_S,
                 encode=None, decode=None):
        import urllib.parse
        parsed = urllib.parse.urlparse(url if "//" in url else f"tcp://{url}")
        self.host = parsed.hostname or "localhost"
        self.port = parsed.port or 6379
        self.ttl_s = ttl_s
        self._encode = encode or (lambda v: v)
        self._decode = decode or (lambda v: v)
        self._lock = threading.Lock()

    def _command(self, *parts: str) -> Optional[bytes]:
        import socket
        msg = f"*{len(parts)}\r\n".encode()
        for p in parts:
            data = p.encode()
            msg += b"$%d\r\n%s\r\n" % (len(data), data)
        try:
            with self._lock, socket.create_connection((self.host, self.port),
                                                      timeout=2.0) as sock:
                sock.sendall(msg)
                buf = b""
                while not buf.endswith(b"\r\n"):
                    chunk = sock.recv(4096)
                    if not chunk:
                        return None
                    buf += chunk
                if buf.startswith(b"$-1"):
                    return None
                if buf.startswith(b"$"):
                    header, _, rest = buf.partition(b"\r\n")
                    length = int(header[1:])
                    while len(rest) < length + 2:
                        rest += sock.recv(4096)
                    return rest[:length]
                if buf.startswith(b"+") or buf.startswith(b":"):
                    return buf[1:].rstrip(b"\r\n")
                return None
        except OSError:
            return None

    def lookup(self, key: str) -> Optional[Any]:
        raw = self._command("GET", key)
        if raw is None:
            return None
        try:
            return self._decode(raw.decode())
        except Exception:
            return None

    def store(self, key: str, value: Any, ttl_s: Optional[float] = None) -> None:
        try:
            encoded = self._encode(value)
        except Exception:
            return
        ttl = int(ttl_s if ttl_s is not None else self.ttl_s)
        self._command("SET", key, encoded, "EX", str(max(ttl, 1)))
