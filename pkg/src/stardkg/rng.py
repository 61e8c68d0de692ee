"""Seedable deterministic byte generator (SHA-256 counter mode).

Every source of randomness in the simulation flows through a Drbg so that a
run is reproducible from a single master seed.  With seed=None the generator
is keyed from os.urandom and behaves as a fresh CSPRNG.
"""

import hashlib
import os


class Drbg:
    def __init__(self, seed=None):
        if seed is None:
            key = os.urandom(32)
        elif isinstance(seed, int):
            key = seed.to_bytes(32, "big", signed=False)
        elif isinstance(seed, (bytes, bytearray)):
            key = hashlib.sha256(bytes(seed)).digest()
        else:
            raise TypeError("seed must be None, int, or bytes")
        self._key = key
        self._counter = 0

    def random_bytes(self, n: int) -> bytes:
        out = bytearray()
        while len(out) < n:
            block = hashlib.sha256(
                self._key + self._counter.to_bytes(8, "big")
            ).digest()
            self._counter += 1
            out.extend(block)
        return bytes(out[:n])

    def randint_below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ValueError("n must be positive")
        nbytes = (n.bit_length() + 7) // 8
        limit = (1 << (8 * nbytes)) // n * n
        while True:
            v = int.from_bytes(self.random_bytes(nbytes), "big")
            if v < limit:
                return v % n

    def child(self, label) -> "Drbg":
        """Independent generator derived from this one's key and a label."""
        if isinstance(label, str):
            label = label.encode()
        sub = Drbg(0)
        sub._key = hashlib.sha256(self._key + b"/child/" + label).digest()
        return sub

    def get_state(self):
        return (self._key, self._counter)

    def set_state(self, state):
        self._key, self._counter = state
