"""Certificates with a deterministic public opening to a group element.

A certificate (C, tag) commits to a hidden scalar m while letting any
verifier derive the unique point M = mG from public data alone: the tag
carries the ratio m/r, the point (m+r)G, and an equality-of-logs proof for
the derived pair (rG, rH).  Opening is straight-line (no trapdoor, no
rewinding) and at most one opening is derivable per fixed certificate.

Also here: the opening-conditional tag simulator, the reduction that turns
an equivocating certificate pair into the discrete log of H, and the
handle-bound two-party verification table keyed by (sid, cid, sender,
recipient) with non-programmable receipt digests.
"""

import json
from dataclasses import dataclass

from . import fischlin
from .algebra import inv, rand_scalar
from .codec import Label, PartyId, encode
from .fischlin import DleqStatement, FischlinProof, HonestReject
from .grocrp import CTX_DLEQ, CTX_RCPT


class CertError(Exception):
    pass


class SimError(Exception):
    pass


@dataclass(frozen=True)
class UsvCertificate:
    C: object          # commitment point M + rH
    ratio: int         # m * r^-1 mod p
    sum_point: object  # (m + r) G
    dleq_proof: FischlinProof

    def wire(self, pp, params) -> bytes:
        packed = fischlin.pack_proof(pp, params, self.dleq_proof)
        return encode((self.C, self.ratio, self.sum_point, packed), pp)

    @classmethod
    def from_wire(cls, pp, params, data: bytes):
        from .codec import decode

        C, ratio, sum_point, packed = decode(data, pp)
        proof = fischlin.unpack_proof(pp, params, "dleq", packed)
        return cls(C, ratio, sum_point, proof)


def _build_cert(oracle, caller, params, pp, m, r, rng):
    M = m * pp.G
    R = r * pp.H
    C = M + R
    ratio = m * inv(pp, r) % pp.p
    sum_point = (m + r) % pp.p * pp.G
    stmt = DleqStatement(sum_point - M, C - M)  # (rG, rH)
    proof = fischlin.prove(oracle, caller, CTX_DLEQ, params, pp, stmt, r, rng)
    while isinstance(proof, HonestReject):
        proof = fischlin.prove(oracle, caller, CTX_DLEQ, params, pp, stmt, r, rng)
    return UsvCertificate(C, ratio, sum_point, proof)


def cert(oracle, caller, params, pp, m, rng) -> UsvCertificate:
    """Certify a nonzero scalar; the blinding r avoids -m so the ratio is
    never -1 in an honest certificate."""
    m %= pp.p
    if m == 0:
        raise CertError("certified scalar must be nonzero")
    r = rand_scalar(pp, rng, exclude=(0, -m))
    return _build_cert(oracle, caller, params, pp, m, r, rng)


def derive(pp, certificate: UsvCertificate):
    """Deterministic opening: (M, R) with C = M + R, or None at ratio -1."""
    nu = certificate.ratio % pp.p
    if nu == pp.p - 1:
        return None
    M = nu * inv(pp, nu + 1) % pp.p * certificate.sum_point
    R = certificate.C - M
    return (M, R)


def vcert(oracle, caller, params, pp, certificate: UsvCertificate) -> bool:
    opening = derive(pp, certificate)
    if opening is None:
        return False
    M, _ = opening
    stmt = DleqStatement(certificate.sum_point - M, certificate.C - M)
    return fischlin.verify(
        oracle, caller, CTX_DLEQ, params, pp, stmt, certificate.dleq_proof
    )


def open_cert(oracle, caller, params, pp, certificate):
    """Verified opening: derive gated on certificate validity."""
    if not vcert(oracle, caller, params, pp, certificate):
        return None
    return derive(pp, certificate)


def open_point(oracle, caller, params, pp, certificate):
    """The public M component of the verified opening (None propagates)."""
    opening = open_cert(oracle, caller, params, pp, certificate)
    if opening is None:
        return None
    return opening[0]


def simulate_tag(oracle, params, pp, C, opening, rng) -> UsvCertificate:
    """Tag simulator conditioned on a fixed opening (M, R) with C = M + R.

    Builds a fresh ratio and sum point deriving to the same M, then lets the
    proof simulator program an accepting equality proof for the (generally
    off-language) derived statement.  Ideal oracle mode only.
    """
    M, R = opening
    if C != M + R:
        raise SimError("opening does not match the commitment")
    if M.is_identity():
        raise SimError("identity openings are not simulatable")
    nu = rand_scalar(pp, rng, exclude=(0, -1))
    sum_point = (1 + inv(pp, nu)) % pp.p * M
    stmt = DleqStatement(sum_point - M, C - M)
    from .grocrp import OracleError

    try:
        proof = fischlin.simulate(oracle, CTX_DLEQ, params, pp, stmt, rng)
    except OracleError as exc:
        raise SimError("oracle programming unavailable: %s" % exc) from exc
    if proof is None:
        raise SimError("oracle cell already fixed; simulation failed")
    return UsvCertificate(C, nu, sum_point, proof)


def equivocation_to_dl(log_entries, params, pp, cert_a, cert_b):
    """Reduce two distinct verified openings of one C to the dlog of H.

    Extracts both blinding scalars from the forger's oracle log, recovers
    the committed scalars through the ratios, and solves the two
    decompositions of C for x with xG = H.  Returns None when extraction
    fails; rejects non-equivocating inputs outright.
    """
    if cert_a.C != cert_b.C:
        raise ValueError("certificates must share a commitment")
    op_a = derive(pp, cert_a)
    op_b = derive(pp, cert_b)
    if op_a is None or op_b is None or op_a[0] == op_b[0]:
        raise ValueError("inputs do not equivocate")
    witnesses = []
    for certificate, (M, _) in ((cert_a, op_a), (cert_b, op_b)):
        stmt = DleqStatement(certificate.sum_point - M, certificate.C - M)
        r = fischlin.extract(
            log_entries, CTX_DLEQ, params, pp, stmt, certificate.dleq_proof
        )
        if r is None:
            return None
        if r * pp.G != stmt.A or r * pp.H != stmt.B:
            return None
        witnesses.append(r)
    r_a, r_b = witnesses
    if (r_b - r_a) % pp.p == 0:
        return None
    m_a = cert_a.ratio * r_a % pp.p
    m_b = cert_b.ratio * r_b % pp.p
    x = (m_a - m_b) * inv(pp, r_b - r_a) % pp.p
    if x * pp.G != pp.H:
        return None
    return x


_BOT = Label("bot")


class UsvHandleTable:
    """Two-party handle registry binding (commitment, opening) via receipts.

    Keys are (sid, cid, sender, recipient).  The first commit under a key
    fixes it permanently; a second commit flips the entry to invalid.  The
    receipt digest lives in a non-programmable oracle context, so no
    substituted certificate with a different opening can verify later.
    """

    def __init__(self, oracle, params, pp, caller="F_usv"):
        self.oracle = oracle
        self.params = params
        self.pp = pp
        self.caller = caller
        self._table = {}

    def _receipt(self, sid, cid, sender, recipient, C, M):
        body = (sid, cid, PartyId(sender), PartyId(recipient), C,
                _BOT if M is None else M)
        return self.oracle.query(self.caller, CTX_RCPT, encode(body, self.pp))

    def commit(self, sid, cid, sender, recipient, certificate) -> bytes:
        M = open_point(self.oracle, self.caller, self.params, self.pp, certificate)
        d = self._receipt(sid, cid, sender, recipient, certificate.C, M)
        key = (sid, cid, sender, recipient)
        if key in self._table:
            old = self._table[key]
            self._table[key] = (old[0], old[1], "invalid")
            return d
        status = "invalid" if M is None else "pending"
        self._table[key] = (M, d, status)
        return d

    def verify(self, sid, cid, sender, recipient, certificate):
        """1 on a matching re-presentation, 0 on mismatch/invalid, None if
        the handle does not exist."""
        key = (sid, cid, sender, recipient)
        if key not in self._table:
            return None
        M, d, status = self._table[key]
        if status == "invalid":
            return 0
        M2 = open_point(self.oracle, self.caller, self.params, self.pp, certificate)
        if M2 is None or M2 != M:
            return 0
        d2 = self._receipt(sid, cid, sender, recipient, certificate.C, M2)
        return 1 if d2 == d else 0

    def export_json(self) -> str:
        rows = []
        for (sid, cid, s, r), (M, d, status) in sorted(
            self._table.items(), key=lambda kv: repr(kv[0])
        ):
            rows.append(
                {
                    "sid": sid.hex(),
                    "cid": cid.hex(),
                    "sender": s,
                    "recipient": r,
                    "opening": None if M is None else M.point_bytes().hex(),
                    "receipt": d.hex(),
                    "status": status,
                }
            )
        return json.dumps(rows, sort_keys=True)
