import json
import socket
import threading

from nlgateway.cache import ExternalKVCache, TTLCache, cache_key
from nlgateway.clocks import FakeClock


def test_cache_key_normalizes_case_and_whitespace():
    assert cache_key(1, "Add 5 And 3") == cache_key(1, "  add  5 and   3 ")
    assert cache_key(1, "add 5 and 3") != cache_key(2, "add 5 and 3")


def test_store_then_lookup_within_ttl():
    clock = FakeClock()
    cache = TTLCache(ttl_s=300, clock=clock)
    cache.store("k", "v")
    clock.advance(1)
    assert cache.lookup("k") == "v"


def test_expired_entry_is_a_miss():
    clock = FakeClock()
    cache = TTLCache(ttl_s=300, clock=clock)
    cache.store("k", "v")
    clock.advance(301)
    assert cache.lookup("k") is None


def test_expiry_boundary_millisecond():
    clock = FakeClock()
    cache = TTLCache(ttl_s=300, clock=clock)
    cache.store("k", "v")
    clock.advance(300 - 0.001)
    assert cache.lookup("k") == "v"
    clock.advance(0.002)  # now 1 ms past expires_at
    assert cache.lookup("k") is None


def test_lru_eviction_order():
    clock = FakeClock()
    cache = TTLCache(ttl_s=1000, capacity=3, clock=clock)
    for k in ("a", "b", "c"):
        cache.store(k, k)
    cache.lookup("a")          # a becomes most recently used
    cache.store("d", "d")      # evicts b, the least recently used
    assert cache.lookup("b") is None
    assert cache.lookup("a") == "a"
    assert cache.lookup("c") == "c"
    assert cache.lookup("d") == "d"


def test_capacity_overflow_evicts_earliest_used():
    clock = FakeClock()
    cache = TTLCache(ttl_s=1000, capacity=10_000, clock=clock)
    for i in range(10_001):
        cache.store(f"k{i}", i)
    assert cache.lookup("k0") is None
    assert cache.lookup("k1") == 1
    assert len(cache) == 10_000


def test_overwrite_refreshes_value():
    clock = FakeClock()
    cache = TTLCache(ttl_s=10, clock=clock)
    cache.store("k", "v1")
    cache.store("k", "v2")
    assert cache.lookup("k") == "v2"


def test_concurrent_store_lookup():
    cache = TTLCache(ttl_s=100, capacity=500)

    def worker(base):
        for i in range(200):
            cache.store(f"{base}-{i}", i)
            cache.lookup(f"{base}-{i}")

    threads = [threading.Thread(target=worker, args=(n,)) for n in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(cache) <= 500


class _FakeKVServer(threading.Thread):
    """Tiny RESP server supporting GET and SET-with-EX, enough for the adapter."""

    def __init__(self):
        super().__init__(daemon=True)
        self.sock = socket.socket()
        self.sock.bind(("127.0.0.1", 0))
        self.sock.listen(4)
        self.port = self.sock.getsockname()[1]
        self.data = {}

    def run(self):
        while True:
            try:
                conn, _ = self.sock.accept()
            except OSError:
                return
            with conn:
                buf = conn.recv(65536).decode()
                parts = [p for p in buf.split("\r\n")
                         if p and not p.startswith(("*", "$"))]
                if not parts:
                    continue
                cmd = parts[0].upper()
                if cmd == "GET":
                    value = self.data.get(parts[1])
                    if value is None:
                        conn.sendall(b"$-1\r\n")
                    else:
                        conn.sendall(f"${len(value)}\r\n{value}\r\n".encode())
                elif cmd == "SET":
                    self.data[parts[1]] = parts[2]
                    conn.sendall(b"+OK\r\n")


def test_external_kv_cache_round_trip():
    server = _FakeKVServer()
    server.start()
    cache = ExternalKVCache(f"127.0.0.1:{server.port}", ttl_s=60,
                            encode=json.dumps, decode=json.loads)
    assert cache.lookup("missing") is None
    cache.store("k", {"x": 1})
    assert cache.lookup("k") == {"x": 1}
    server.sock.close()


def test_external_kv_cache_degrades_to_miss_when_unreachable():
    cache = ExternalKVCache("127.0.0.1:1", ttl_s=60)  # nothing listening
    cache.store("k", "v")
    assert cache.lookup("k") is None
