"""Non-interactive proofs from sigma protocols via rare-hash search.

The prover runs r independent first moves, then for each repetition walks
challenges e = 0..2^t-1 looking for a hash value of zero over the encoded
tuple (statement, all commitments, repetition index, e, response); it stops
at the first zero and otherwise keeps the best (lowest, later-equal-replaces)
candidate.  The verifier recomputes every hash and accepts when all sigma
checks pass and the hash values sum to at most the slack S.  Because an
honest prover queries the oracle once per attempted challenge, a witness can
be recovered from its query log alone, with no rewinding: any repetition
with two logged distinct-challenge responses yields the witness by special
soundness.
"""

import math
from dataclasses import dataclass, field

from . import sigma
from .codec import TAG_SCALAR, TAG_TUPLE, TAG_U64, CodecError, Label, encode
from .grocrp import DIGEST_BYTES
from .rng import Drbg


class ProverError(Exception):
    pass


@dataclass(frozen=True)
class FischlinParams:
    t: int  # challenge bits
    b: int  # rarity bits
    r: int  # repetitions
    S: int  # verifier slack

    def __post_init__(self):
        if not (1 <= self.b <= self.t and self.r >= 1 and self.S >= 0):
            raise ProverError("invalid parameter tuple")

    def validate(self, pp):
        if (1 << self.t) >= pp.p:
            raise ProverError("challenge space must embed into Z_p")


PRODUCTION_PARAMS = FischlinParams(13, 8, 32, 32)
TEST_PARAMS = FischlinParams(4, 2, 4, 4)


@dataclass(frozen=True)
class DlStatement:
    """Discrete-log statement M = mG, optionally tagged (sid, label, ...)."""

    M: object
    tag: tuple = ()

    def encodable(self):
        return (*self.tag, self.M)


@dataclass(frozen=True)
class DleqStatement:
    A: object
    B: object

    def encodable(self):
        return (self.A, self.B)


@dataclass
class FischlinProof:
    kind: str  # "dl" | "dleq"
    triples: tuple  # ((a_i, e_i, z_i), ...)
    trials: tuple = field(default=None, compare=False)  # rarity-search stats


class HonestReject:
    """Completeness failure: the assembled proof missed the sum test."""

    def __init__(self, trials):
        self.trials = trials


class _DlOps:
    kind = "dl"

    @staticmethod
    def check_witness(pp, stmt, w):
        return w * pp.G == stmt.M

    @staticmethod
    def commit(pp, rng):
        return sigma.dl_commit(pp, rng)

    @staticmethod
    def respond(pp, j, e, w):
        return sigma.dl_respond(pp, j, e, w)

    @staticmethod
    def verify(pp, stmt, a, e, z):
        return sigma.dl_verify(pp, stmt.M, a, e, z)

    @staticmethod
    def simulate(pp, stmt, e, rng):
        return sigma.dl_simulate(pp, stmt.M, e, rng)

    @staticmethod
    def extract(pp, e1, z1, e2, z2):
        return sigma.dl_extract(pp, None, e1, z1, e2, z2)

    @staticmethod
    def statement_ok(stmt):
        return True


class _DleqOps:
    kind = "dleq"

    @staticmethod
    def check_witness(pp, stmt, w):
        return w * pp.G == stmt.A and w * pp.H == stmt.B

    @staticmethod
    def commit(pp, rng):
        return sigma.dleq_commit(pp, rng)

    @staticmethod
    def respond(pp, j, e, w):
        return sigma.dleq_respond(pp, j, e, w)

    @staticmethod
    def verify(pp, stmt, a, e, z):
        return sigma.dleq_verify(pp, stmt.A, stmt.B, a, e, z)

    @staticmethod
    def simulate(pp, stmt, e, rng):
        (a, e, z) = sigma.dleq_simulate(pp, stmt.A, stmt.B, e, rng)
        return a, e, z

    @staticmethod
    def extract(pp, e1, z1, e2, z2):
        return sigma.dleq_extract(pp, None, e1, z1, e2, z2)

    @staticmethod
    def statement_ok(stmt):
        return not (stmt.A.is_identity() or stmt.B.is_identity())


def _ops_for(stmt):
    if isinstance(stmt, DlStatement):
        return _DlOps
    if isinstance(stmt, DleqStatement):
        return _DleqOps
    raise ProverError("unsupported statement type")


def _commitment_encodable(kind, a):
    return a if kind == "dl" else tuple(a)


def hash_input_builder(pp, stmt, avec_encodable):
    """Precompute the fixed prefix of every rarity hash input.

    The full input is encode((stmt, avec, U64(i), U64(e), z)); only the last
    three fields vary per trial and all have fixed encoded width, so the
    tuple frame and the statement/commitment encodings are computed once.
    Returns (prefix, suffix_fn) with suffix_fn(i, e, z) -> bytes.
    """
    stmt_b = encode(stmt.encodable(), pp)
    avec_b = encode(avec_encodable, pp)
    w = pp.scalar_width
    payload_len = len(stmt_b) + len(avec_b) + 2 * 13 + 5 + w
    prefix = bytes([TAG_TUPLE]) + payload_len.to_bytes(4, "big") + stmt_b + avec_b
    u64_hdr = bytes([TAG_U64]) + (8).to_bytes(4, "big")
    sc_hdr = bytes([TAG_SCALAR]) + w.to_bytes(4, "big")

    def suffix(i, e, z):
        return (
            u64_hdr + i.to_bytes(8, "big")
            + u64_hdr + e.to_bytes(8, "big")
            + sc_hdr + z.to_bytes(w, "big")
        )

    return prefix, suffix


def rarity_search(oracle, caller, ctx, params, pp, stmt, commits, respond, witness):
    """Early-break search over challenges for each prepared commitment.

    ``commits`` is the list of (nonce, commitment) pairs; the commitment
    vector is bound into every hash input.  Returns (triples, trial_counts).
    Per-challenge temporaries are dropped as soon as the loop advances.
    """
    ops_kind = "dl" if isinstance(stmt, DlStatement) else "dleq"
    avec = tuple(_commitment_encodable(ops_kind, a) for _, a in commits)
    prefix, suffix = hash_input_builder(pp, stmt, avec)
    cap = 1 << params.t
    worst = (1 << params.b) - 1
    triples = []
    counts = []
    for i, (j, a) in enumerate(commits):
        best = None
        best_s = worst
        n = 0
        chosen = None
        for e in range(cap):
            z = respond(pp, j, e, witness)
            n += 1
            s = oracle.hb(caller, ctx, (prefix, suffix(i, e, z)), params.b)
            if s == 0:
                chosen = (e, z)
                break
            if s <= best_s:
                best_s = s
                best = (e, z)
        if chosen is None:
            chosen = best
        triples.append((a, chosen[0], chosen[1]))
        counts.append(n)
    return tuple(triples), tuple(counts)


def prove(oracle, caller, ctx, params, pp, stmt, witness, rng: Drbg):
    """Produce a proof, or HonestReject when the slack test misses."""
    params.validate(pp)
    ops = _ops_for(stmt)
    if not ops.check_witness(pp, stmt, witness):
        raise ProverError("witness does not satisfy the statement")
    commits = [ops.commit(pp, rng) for _ in range(params.r)]
    triples, counts = rarity_search(
        oracle, caller, ctx, params, pp, stmt, commits, ops.respond, witness
    )
    proof = FischlinProof(ops.kind, triples, counts)
    if _sum_of_rarities(oracle, caller, ctx, params, pp, stmt, proof) > params.S:
        return HonestReject(counts)
    return proof


def _sum_of_rarities(oracle, caller, ctx, params, pp, stmt, proof):
    avec = tuple(_commitment_encodable(proof.kind, a) for a, _, _ in proof.triples)
    prefix, suffix = hash_input_builder(pp, stmt, avec)
    total = 0
    for i, (_, e, z) in enumerate(proof.triples):
        total += oracle.hb(caller, ctx, (prefix, suffix(i, e, z)), params.b)
    return total


def verify(oracle, caller, ctx, params, pp, stmt, proof) -> bool:
    """All sigma transcripts valid and rarity values summing to at most S."""
    try:
        params.validate(pp)
        ops = _ops_for(stmt)
    except ProverError:
        return False
    if not isinstance(proof, FischlinProof) or proof.kind != ops.kind:
        return False
    if len(proof.triples) != params.r or not ops.statement_ok(stmt):
        return False
    cap = 1 << params.t
    for a, e, z in proof.triples:
        if not (isinstance(e, int) and 0 <= e < cap):
            return False
        if not isinstance(z, int) or not 0 <= z < pp.p:
            return False
        if not ops.verify(pp, stmt, a, e, z):
            return False
    return _sum_of_rarities(oracle, caller, ctx, params, pp, stmt, proof) <= params.S


def extract(log_entries, ctx, params, pp, stmt, proof):
    """Witness recovery from a prover's oracle log, no rewinding.

    Scans the log for rarity queries carrying this proof's statement and
    commitment vector, groups them by repetition, and applies special
    soundness to any repetition with two verifying distinct-challenge
    entries.  Returns None when no such pair exists.
    """
    ops = _ops_for(stmt)
    avec = tuple(_commitment_encodable(proof.kind, a) for a, _, _ in proof.triples)
    prefix, _ = hash_input_builder(pp, stmt, avec)
    w = pp.scalar_width
    suffix_len = 2 * 13 + 5 + w
    per_rep = {}
    for entry in log_entries:
        if entry.ctx != ctx:
            continue
        data = entry.input
        if len(data) != len(prefix) + suffix_len or not data.startswith(prefix):
            continue
        tail = data[len(prefix):]
        i = int.from_bytes(tail[5:13], "big")
        e = int.from_bytes(tail[18:26], "big")
        z = int.from_bytes(tail[31 : 31 + w], "big")
        if i >= len(proof.triples) or e >= (1 << params.t) or z >= pp.p:
            continue
        a = proof.triples[i][0]
        if not ops.verify(pp, stmt, a, e, z):
            continue
        per_rep.setdefault(i, {})[e] = z
    for i, answers in per_rep.items():
        if len(answers) >= 2:
            (e1, z1), (e2, z2) = list(answers.items())[:2]
            return ops.extract(pp, e1, z1, e2, z2)
    return None


def simulate(oracle, ctx, params, pp, stmt, rng: Drbg):
    """Zero-knowledge simulator: accepts any statement, even off-language.

    Samples (e_i, z_i), derives commitments from the honest-verifier
    simulator, then programs every rarity cell to zero (sum 0 <= S).
    Returns None if some cell was already queried; raises in real-hash mode.
    """
    params.validate(pp)
    ops = _ops_for(stmt)
    sim_triples = []
    for _ in range(params.r):
        e = rng.randint_below(1 << params.t)
        a, e, z = ops.simulate(pp, stmt, e, rng)
        sim_triples.append((a, e, z))
    avec = tuple(_commitment_encodable(ops.kind, a) for a, _, _ in sim_triples)
    prefix, suffix = hash_input_builder(pp, stmt, avec)
    for i, (_, e, z) in enumerate(sim_triples):
        yi = int.from_bytes(rng.random_bytes(DIGEST_BYTES), "big")
        yi &= ~((1 << params.b) - 1)  # force the rarity value to zero
        y = yi.to_bytes(DIGEST_BYTES, "big")
        if not oracle.sim_program(ctx, (prefix, suffix(i, e, z)), y):
            return None
    return FischlinProof(ops.kind, tuple(sim_triples))


def soundness_bound_log2(params: FischlinParams, q: int) -> float:
    """log2 of (q+1) * binom(S+r, r) / 2^(b*r)."""
    n = math.comb(params.S + params.r, params.r)
    return math.log2(q + 1) + math.log2(n) - params.b * params.r


def soundness_bound(params: FischlinParams, q: int) -> float:
    return 2.0 ** soundness_bound_log2(params, q)


def honest_reject_bound(params: FischlinParams) -> float:
    """Union bound r * (1 - 2^-b)^(2^t) on an honest prover being rejected."""
    log_miss = (1 << params.t) * math.log1p(-(2.0 ** -params.b))
    return params.r * math.exp(log_miss)


# --- wire form -------------------------------------------------------------
#
# Proofs pack fixed-width fields (compressed point(s), ceil(t/8)-byte
# challenge, scalar-width response) per triple; this is the canonical
# serialization whose size the harness reports.

def _e_width(params):
    return (params.t + 7) // 8


def pack_proof(pp, params, proof: FischlinProof) -> bytes:
    ew = _e_width(params)
    out = bytearray()
    for a, e, z in proof.triples:
        if proof.kind == "dl":
            out += a.point_bytes()
        else:
            out += a[0].point_bytes() + a[1].point_bytes()
        out += e.to_bytes(ew, "big")
        out += z.to_bytes(pp.scalar_width, "big")
    return bytes(out)


def unpack_proof(pp, params, kind: str, data: bytes) -> FischlinProof:
    ew = _e_width(params)
    npoints = 1 if kind == "dl" else 2
    step = npoints * pp.point_width + ew + pp.scalar_width
    if len(data) != step * params.r:
        raise CodecError("bad proof length")
    triples = []
    for i in range(params.r):
        chunk = data[i * step : (i + 1) * step]
        pts = [
            pp.point_from_bytes(chunk[k * pp.point_width : (k + 1) * pp.point_width])
            for k in range(npoints)
        ]
        a = pts[0] if kind == "dl" else (pts[0], pts[1])
        off = npoints * pp.point_width
        e = int.from_bytes(chunk[off : off + ew], "big")
        z = int.from_bytes(chunk[off + ew :], "big")
        triples.append((a, e, z))
    return FischlinProof(kind, tuple(triples))


# --- affine composition ----------------------------------------------------

@dataclass(frozen=True)
class AffineStatement:
    """Public tuple (X, gamma, M, B, Delta) with derived Y and D targets."""

    X: object
    gamma: int
    M: object
    B: object
    Delta: object

    def derived(self, pp):
        Y = self.M + self.gamma * self.B
        D = self.X - self.Delta - Y
        return Y, D


def _affine_sub_statements(pp, stmt: AffineStatement, sid, labels):
    Y, D = stmt.derived(pp)
    ly, ld = labels
    return (
        DlStatement(Y, tag=(sid, Label(ly))),
        DlStatement(D, tag=(sid, Label(ld))),
    )


def prove_affine(oracle, caller, ctx, params, pp, stmt, sid, labels, alpha, delta, rng):
    """Two tagged dl proofs for the derived points; either may HonestReject."""
    sy, sd = _affine_sub_statements(pp, stmt, sid, labels)
    py = prove(oracle, caller, ctx, params, pp, sy, alpha, rng)
    if isinstance(py, HonestReject):
        return py
    pd = prove(oracle, caller, ctx, params, pp, sd, delta, rng)
    if isinstance(pd, HonestReject):
        return pd
    return (py, pd)


def verify_affine(oracle, caller, ctx, params, pp, stmt, sid, labels, proof_pair) -> bool:
    if not isinstance(proof_pair, tuple) or len(proof_pair) != 2:
        return False
    sy, sd = _affine_sub_statements(pp, stmt, sid, labels)
    return verify(oracle, caller, ctx, params, pp, sy, proof_pair[0]) and verify(
        oracle, caller, ctx, params, pp, sd, proof_pair[1]
    )
