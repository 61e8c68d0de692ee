"""Global random oracle with context-restricted programmability.

One table keyed by (context, input).  Contexts are registered up front and
partitioned into programmable and non-programmable; a simulator-only
``sim_program`` hook can fill fresh cells in programmable contexts and is a
no-op everywhere else.  Cells are never overwritten.  Per-caller query logs
feed the straight-line extractor.

Two modes: "ideal" lazily samples uniform 256-bit values from a seedable
generator; "real" evaluates a domain-separated SHA-256 and cannot be
programmed.
"""

import hashlib
import threading

from .codec import Label, encode
from .rng import Drbg

DIGEST_BYTES = 32

CTX_UC = "ctx_UC"
CTX_KEYBOX = "ctx_KeyBox"
CTX_DLEQ = "ctx_DLEQ"
CTX_S32 = "ctx_SDKG.s32"
CTX_RCPT = "ctx_USV.rcpt"
CTX_BEACON = "ctx_beacon"

DEFAULT_CONTEXTS = (
    (CTX_UC, True),
    (CTX_KEYBOX, True),
    (CTX_DLEQ, True),
    (CTX_S32, False),
    (CTX_RCPT, False),
    (CTX_BEACON, False),
)


class OracleError(Exception):
    pass


class LogEntry:
    __slots__ = ("ctx", "parts", "output")

    def __init__(self, ctx, parts, output):
        self.ctx = ctx
        self.parts = parts
        self.output = output

    @property
    def input(self) -> bytes:
        return b"".join(self.parts)


class Oracle:
    def __init__(self, mode="ideal", seed=None, contexts=DEFAULT_CONTEXTS):
        if mode not in ("ideal", "real"):
            raise OracleError("mode must be 'ideal' or 'real'")
        self.mode = mode
        self._contexts = {}
        self._table = {}
        self._logs = {}
        self._rng = Drbg(seed)
        self._lock = threading.Lock()
        for name, programmable in contexts:
            self.register_context(name, programmable)

    def register_context(self, name: str, programmable: bool):
        with self._lock:
            if name in self._contexts:
                raise OracleError("context %r already registered" % name)
            self._contexts[name] = programmable

    def is_programmable(self, ctx: str) -> bool:
        try:
            return self._contexts[ctx]
        except KeyError:
            raise OracleError("unknown context %r" % ctx) from None

    @staticmethod
    def _as_parts(x):
        if isinstance(x, (bytes, bytearray)):
            return (bytes(x),)
        return tuple(bytes(p) for p in x)

    def _cell_key(self, ctx, parts):
        h = hashlib.sha256()
        for p in parts:
            h.update(p)
        return (ctx, h.digest())

    def query(self, caller: str, ctx: str, x) -> bytes:
        """Return H(ctx, x); records the call in the caller's log."""
        parts = self._as_parts(x)
        with self._lock:
            if ctx not in self._contexts:
                raise OracleError("unknown context %r" % ctx)
            if self.mode == "real":
                h = hashlib.sha256(b"gROCRP")
                h.update(encode((Label(ctx), b"".join(parts))))
                out = h.digest()
            else:
                key = self._cell_key(ctx, parts)
                out = self._table.get(key)
                if out is None:
                    out = self._rng.random_bytes(DIGEST_BYTES)
                    self._table[key] = out
            self._logs.setdefault(caller, []).append(LogEntry(ctx, parts, out))
            return out

    def sim_program(self, ctx: str, x, y: bytes) -> bool:
        """Install T[ctx, x] = y; fails on non-programmable or occupied cells."""
        if self.mode == "real":
            raise OracleError("programming is impossible in real-hash mode")
        if len(y) != DIGEST_BYTES:
            raise OracleError("programmed value must be %d bytes" % DIGEST_BYTES)
        parts = self._as_parts(x)
        with self._lock:
            if ctx not in self._contexts:
                raise OracleError("unknown context %r" % ctx)
            if not self._contexts[ctx]:
                return False
            key = self._cell_key(ctx, parts)
            if key in self._table:
                return False
            self._table[key] = bytes(y)
            return True

    def hb(self, caller: str, ctx: str, x, b: int) -> int:
        """Least-significant b bits of the digest, as an integer in [0, 2^b)."""
        if not 1 <= b <= 8 * DIGEST_BYTES:
            raise OracleError("b out of range")
        digest = self.query(caller, ctx, x)
        return int.from_bytes(digest, "big") & ((1 << b) - 1)

    def log_of(self, caller: str, ctx=None):
        with self._lock:
            entries = list(self._logs.get(caller, ()))
        if ctx is None:
            return entries
        return [e for e in entries if e.ctx == ctx]
