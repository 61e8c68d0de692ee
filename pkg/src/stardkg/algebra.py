"""Prime-order group and scalar field with two instantiations.

Production mode is secp256k1 (256-bit order, compressed 33-byte points,
Jacobian arithmetic).  Toy mode is the additive group Z_q for a small prime
q, where discrete log is trivial; it exists for algebraic correctness tests
and brute-force oracles, never for security.  The toy trapdoor (the discrete
log of the second generator) is retained only behind an explicit test flag.
"""

import hashlib

from .rng import Drbg


class MathError(Exception):
    pass


class ParamError(Exception):
    pass


# secp256k1
_Q = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F
_N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
_GX = 0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798
_GY = 0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8


class CurvePoint:
    """secp256k1 point, affine storage, identity as (None, None)."""

    __slots__ = ("x", "y")

    def __init__(self, x, y):
        self.x = x
        self.y = y

    @classmethod
    def identity(cls):
        return cls(None, None)

    @classmethod
    def generator(cls):
        return cls(_GX, _GY)

    def is_identity(self):
        return self.x is None

    def __eq__(self, other):
        return (
            isinstance(other, CurvePoint)
            and self.x == other.x
            and self.y == other.y
        )

    def __hash__(self):
        return hash(("secp256k1", self.x, self.y))

    def __neg__(self):
        if self.is_identity():
            return self
        return CurvePoint(self.x, (-self.y) % _Q)

    def __add__(self, other):
        if not isinstance(other, CurvePoint):
            return NotImplemented
        if self.is_identity():
            return other
        if other.is_identity():
            return self
        if self.x == other.x:
            if (self.y + other.y) % _Q == 0:
                return CurvePoint.identity()
            return self._double()
        lam = (other.y - self.y) * pow(other.x - self.x, -1, _Q) % _Q
        x3 = (lam * lam - self.x - other.x) % _Q
        y3 = (lam * (self.x - x3) - self.y) % _Q
        return CurvePoint(x3, y3)

    def _double(self):
        lam = 3 * self.x * self.x * pow(2 * self.y, -1, _Q) % _Q
        x3 = (lam * lam - 2 * self.x) % _Q
        y3 = (lam * (self.x - x3) - self.y) % _Q
        return CurvePoint(x3, y3)

    def __sub__(self, other):
        return self + (-other)

    def __rmul__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        k %= _N
        if k == 0 or self.is_identity():
            return CurvePoint.identity()
        return _jacobian_mul(k, self)

    def point_bytes(self) -> bytes:
        """Compressed SEC1; the identity is 33 zero bytes."""
        if self.is_identity():
            return b"\x00" * 33
        prefix = b"\x03" if self.y & 1 else b"\x02"
        return prefix + self.x.to_bytes(32, "big")


def _jacobian_mul(k, p):
    # (X, Y, Z) with x = X/Z^2, y = Y/Z^3; a = 0 curve
    rx, ry, rz = None, None, None  # identity
    px, py, pz = p.x, p.y, 1
    for bit in bin(k)[2:]:
        if rx is not None:
            rx, ry, rz = _jdbl(rx, ry, rz)
        if bit == "1":
            if rx is None:
                rx, ry, rz = px, py, pz
            else:
                rx, ry, rz = _jadd(rx, ry, rz, px, py, pz)
            if rx is None:
                rx = ry = rz = None
    if rx is None:
        return CurvePoint.identity()
    zi = pow(rz, -1, _Q)
    zi2 = zi * zi % _Q
    return CurvePoint(rx * zi2 % _Q, ry * zi2 * zi % _Q)


def _jdbl(x, y, z):
    s = 4 * x * y * y % _Q
    m = 3 * x * x % _Q
    x3 = (m * m - 2 * s) % _Q
    y3 = (m * (s - x3) - 8 * pow(y, 4, _Q)) % _Q
    z3 = 2 * y * z % _Q
    return x3, y3, z3


def _jadd(x1, y1, z1, x2, y2, z2):
    z1s, z2s = z1 * z1 % _Q, z2 * z2 % _Q
    u1, u2 = x1 * z2s % _Q, x2 * z1s % _Q
    s1, s2 = y1 * z2s * z2 % _Q, y2 * z1s * z1 % _Q
    if u1 == u2:
        if s1 != s2:
            return None, None, None  # inverse points
        return _jdbl(x1, y1, z1)
    h = (u2 - u1) % _Q
    r = (s2 - s1) % _Q
    h2 = h * h % _Q
    h3 = h2 * h % _Q
    u1h2 = u1 * h2 % _Q
    x3 = (r * r - h3 - 2 * u1h2) % _Q
    y3 = (r * (u1h2 - x3) - s1 * h3) % _Q
    z3 = h * z1 % _Q * z2 % _Q
    return x3, y3, z3


class ToyPoint:
    """Element of the additive group Z_q written multiplicatively as kG."""

    __slots__ = ("v", "m")

    def __init__(self, v, m):
        self.v = v % m
        self.m = m

    def is_identity(self):
        return self.v == 0

    def __eq__(self, other):
        return (
            isinstance(other, ToyPoint) and self.v == other.v and self.m == other.m
        )

    def __hash__(self):
        return hash(("toy", self.v, self.m))

    def __neg__(self):
        return ToyPoint(-self.v, self.m)

    def __add__(self, other):
        if not isinstance(other, ToyPoint) or other.m != self.m:
            return NotImplemented
        return ToyPoint(self.v + other.v, self.m)

    def __sub__(self, other):
        return self + (-other)

    def __rmul__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        return ToyPoint(k * self.v, self.m)

    def point_bytes(self) -> bytes:
        width = (self.m.bit_length() + 7) // 8
        return self.v.to_bytes(width, "big")


class GroupParams:
    """Public parameters: order p, generator G, second generator H."""

    def __init__(self, mode, p, G, H, trapdoor=None):
        self.mode = mode
        self.p = p
        self.G = G
        self.H = H
        self.scalar_width = (p.bit_length() + 7) // 8
        self.point_width = 33 if mode == "production" else self.scalar_width
        self._trapdoor = trapdoor

    @property
    def trapdoor(self) -> int:
        """Discrete log of H; available only in toy mode with the test flag."""
        if self._trapdoor is None:
            raise ParamError("trapdoor access is gated to toy test mode")
        return self._trapdoor

    @property
    def has_trapdoor(self) -> bool:
        return self._trapdoor is not None

    def identity(self):
        if self.mode == "production":
            return CurvePoint.identity()
        return ToyPoint(0, self.p)

    def point_from_bytes(self, raw: bytes):
        from .codec import CodecError

        if self.mode == "production":
            if len(raw) != 33:
                raise CodecError("bad point width")
            if raw == b"\x00" * 33:
                return CurvePoint.identity()
            if raw[0] not in (2, 3):
                raise CodecError("bad point prefix")
            x = int.from_bytes(raw[1:], "big")
            if x >= _Q:
                raise CodecError("point x out of range")
            rhs = (pow(x, 3, _Q) + 7) % _Q
            y = pow(rhs, (_Q + 1) // 4, _Q)
            if y * y % _Q != rhs:
                raise CodecError("point not on curve")
            if (y & 1) != (raw[0] & 1):
                y = _Q - y
            return CurvePoint(x, y)
        if len(raw) != self.point_width:
            raise CodecError("bad point width")
        v = int.from_bytes(raw, "big")
        if v >= self.p:
            raise CodecError("point out of range")
        return ToyPoint(v, self.p)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for sp in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % sp == 0:
            return n == sp
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _hash_to_group(seed: bytes):
    """Deterministic second generator: counter-resampled hash-to-curve.

    The counter is appended as an unsigned 64-bit integer; candidates that
    miss the curve or land in {identity, G} are skipped.  Even-y lift.
    """
    g = CurvePoint.generator()
    counter = 0
    while True:
        digest = hashlib.sha256(
            b"USV.H" + seed + counter.to_bytes(8, "big")
        ).digest()
        counter += 1
        x = int.from_bytes(digest, "big") % _Q
        rhs = (pow(x, 3, _Q) + 7) % _Q
        y = pow(rhs, (_Q + 1) // 4, _Q)
        if y * y % _Q != rhs:
            continue
        if y & 1:
            y = _Q - y
        cand = CurvePoint(x, y)
        if cand.is_identity() or cand == g:
            continue
        return cand


def setup(mode, beacon_seed=b"", prime=None, trapdoor=None, keep_trapdoor=False):
    """Build group parameters.

    production: H is derived deterministically from beacon_seed.
    toy: additive Z_prime with G = 1 and H = trapdoor * G; prime must stay
    below 2^20 so exhaustive search remains feasible.
    """
    if mode == "production":
        return GroupParams("production", _N, CurvePoint.generator(),
                           _hash_to_group(bytes(beacon_seed)))
    if mode == "toy":
        if prime is None or trapdoor is None:
            raise ParamError("toy mode needs prime and trapdoor")
        if prime >= 1 << 20 or not _is_prime(prime) or prime <= 3:
            raise ParamError("toy prime must be a prime in (3, 2^20)")
        g = ToyPoint(1, prime)
        h = ToyPoint(trapdoor, prime)
        if h.is_identity() or h == g:
            raise ParamError("H must avoid {identity, G}")
        return GroupParams("toy", prime, g, h,
                           trapdoor % prime if keep_trapdoor else None)
    raise ParamError("unknown mode %r" % (mode,))


def sc_add(pp: GroupParams, a: int, b: int) -> int:
    return (a + b) % pp.p


def sc_sub(pp: GroupParams, a: int, b: int) -> int:
    return (a - b) % pp.p


def sc_mul(pp: GroupParams, a: int, b: int) -> int:
    return a * b % pp.p


def sc_neg(pp: GroupParams, a: int) -> int:
    return -a % pp.p


def inv(pp: GroupParams, a: int) -> int:
    a %= pp.p
    if a == 0:
        raise MathError("inverse of zero")
    return pow(a, -1, pp.p)


def rand_scalar(pp: GroupParams, rng: Drbg, exclude=()) -> int:
    """Uniform over Z_p minus the exclusion set."""
    banned = {e % pp.p for e in exclude}
    if len(banned) >= pp.p:
        raise MathError("exclusion set covers the field")
    while True:
        v = rng.randint_below(pp.p)
        if v not in banned:
            return v
