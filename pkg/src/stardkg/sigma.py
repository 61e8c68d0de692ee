"""Schnorr and Chaum-Pedersen three-move protocols.

Challenges are integers in [0, 2^t) embedded into Z_p (parameter validation
elsewhere guarantees 2^t < p).  Transcripts are plain (commitment, e, z)
values; the session/label tags of tagged statements enter only through the
non-interactive transform's hash inputs, never this algebra.
"""

from .algebra import inv, rand_scalar


class ExtractError(Exception):
    pass


# Schnorr for knowledge of m with M = mG; m = 0 is allowed.

def dl_commit(pp, rng):
    j = rand_scalar(pp, rng)
    return j, j * pp.G


def dl_respond(pp, j, e, m):
    return (j + e * m) % pp.p


def dl_verify(pp, M, a, e, z) -> bool:
    return z * pp.G == a + e * M


def dl_simulate(pp, M, e, rng):
    """Honest-verifier simulator: z uniform, commitment solved backwards."""
    z = rand_scalar(pp, rng)
    return z * pp.G - e * M, e, z


def dl_extract(pp, a, e1, z1, e2, z2) -> int:
    if e1 % pp.p == e2 % pp.p:
        raise ExtractError("challenges coincide")
    return (z1 - z2) * inv(pp, e1 - e2) % pp.p


# Chaum-Pedersen for knowledge of r with A = rG and B = rH.
# Statements with an identity component are outside the statement space.

def dleq_commit(pp, rng):
    j = rand_scalar(pp, rng)
    return j, (j * pp.G, j * pp.H)


def dleq_respond(pp, j, e, r):
    return (j + e * r) % pp.p


def dleq_verify(pp, A, B, a, e, z) -> bool:
    if A.is_identity() or B.is_identity():
        return False
    j1, j2 = a
    return z * pp.G == j1 + e * A and z * pp.H == j2 + e * B


def dleq_simulate(pp, A, B, e, rng):
    z = rand_scalar(pp, rng)
    return (z * pp.G - e * A, z * pp.H - e * B), e, z


def dleq_extract(pp, a, e1, z1, e2, z2) -> int:
    if e1 % pp.p == e2 % pp.p:
        raise ExtractError("challenges coincide")
    return (z1 - z2) * inv(pp, e1 - e2) % pp.p
