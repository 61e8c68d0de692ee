"""Star DKG engine: the two-active-party base run plus device registration.

The initiating leaf contributes a certified linear polynomial; the center
contributes its own and proves the affine structure of both aggregate
points with straight-line-extractable proofs.  An accepting transcript
pins the public key K = 3*X1 - 2*X2 and every installed share:

    k12 + k2 = k13 + k3 = 3*x1 - 2*x2   (two reconstruction paths)

Shares are derived and installed inside each party's keystore after the
center accepts; hosts erase all share-deriving scalars immediately after
the installing calls return.  Recovery devices join later through one-shot
sealed transfer of the three registration scalars, with the target keystore
checking transcript consistency (K13 + k3*G = K) before committing.
"""

from dataclasses import dataclass, field

from . import fischlin, usv
from .algebra import inv, rand_scalar
from .codec import TAG_LABEL, TAG_TUPLE, Label, decode, encode
from .fischlin import AffineStatement, HonestReject
from .grocrp import CTX_RCPT, CTX_S32, CTX_UC
from .keybox import make_reg_ad, slot_id
from .usv import UsvCertificate

AFF1_LABELS = ("aff1.Y", "aff1.D")
AFF2_LABELS = ("aff2.Y", "aff2.D")

ABORT_REASON_FOR_CHECK = {
    "C1": "receipt-digest",
    "C2": "usv-linkage",
    "C3": "aff1-proof",
    "C4": "aff2-proof",
    "C5": "s32-digest",
    "C6": "key-mismatch",
}


@dataclass
class RoundOne:
    cid2: bytes
    cert: UsvCertificate
    B2: object
    h32: bytes
    sigma21: int
    d: bytes


@dataclass
class RoundTwo:
    X1: object
    M1: object
    B1: object
    sigma12: int
    aff1: tuple  # (proof_Y, proof_D)


@dataclass
class RoundThree:
    X2: object
    aff2: tuple
    K_rec: object


@dataclass
class SdkgTranscript:
    T1: RoundOne
    T2: RoundTwo
    T3: RoundThree


@dataclass
class SessionResult:
    outcome: str  # "accepted" | "aborted"
    abort_party: str = None
    abort_reason: str = None
    K: object = None
    transcript: SdkgTranscript = None
    wire_sizes: dict = field(default_factory=dict)
    proof_trials: list = field(default_factory=list)
    honest_rejects: int = 0
    sigma_table: dict = None


class SessionEnv:
    """Shared fixtures for one simulated execution."""

    def __init__(self, pp, oracle, params, net, usv_table, rng, keyboxes,
                 testing=False):
        self.pp = pp
        self.oracle = oracle
        self.params = params
        self.net = net
        self.usv_table = usv_table
        self.rng = rng
        self.keyboxes = keyboxes
        self.testing = testing


def derive_k13(pp, M1, B1, X1):
    """Public recovery-side key point, a function of round-two data only."""
    return 2 * (M1 + B1) - X1


def _prove_affine_retry(env, caller, stmt, sid, labels, alpha, delta, rng):
    """Completeness misses are liveness events; retry with fresh nonces."""
    rejects = 0
    while True:
        pair = fischlin.prove_affine(
            env.oracle, caller, CTX_UC, env.params, env.pp,
            stmt, sid, labels, alpha, delta, rng,
        )
        if not isinstance(pair, HonestReject):
            return pair, rejects
        rejects += 1


# --- wire formats -----------------------------------------------------------

def encode_round1(env, sid, m: RoundOne) -> bytes:
    return encode(
        (Label("r1"), m.cert.wire(env.pp, env.params), m.B2, m.h32,
         m.sigma21, sid, m.cid2, m.d),
        env.pp,
    )


def decode_round1(env, payload):
    kind, cert_wire, B2, h32, sigma21, sid, cid2, d = decode(payload, env.pp)
    cert = UsvCertificate.from_wire(env.pp, env.params, cert_wire)
    return sid, RoundOne(cid2, cert, B2, h32, sigma21, d)


def encode_round2(env, sid, m: RoundTwo) -> bytes:
    py, pd = m.aff1
    return encode(
        (Label("r2"), sid, m.X1, m.M1, m.B1, m.sigma12,
         fischlin.pack_proof(env.pp, env.params, py),
         fischlin.pack_proof(env.pp, env.params, pd)),
        env.pp,
    )


def decode_round2(env, payload):
    kind, sid, X1, M1, B1, sigma12, py_raw, pd_raw = decode(payload, env.pp)
    aff1 = (
        fischlin.unpack_proof(env.pp, env.params, "dl", py_raw),
        fischlin.unpack_proof(env.pp, env.params, "dl", pd_raw),
    )
    return sid, RoundTwo(X1, M1, B1, sigma12, aff1)


def encode_round3(env, sid, m: RoundThree) -> bytes:
    py, pd = m.aff2
    return encode(
        (Label("r3"), sid, m.X2,
         fischlin.pack_proof(env.pp, env.params, py),
         fischlin.pack_proof(env.pp, env.params, pd),
         m.K_rec),
        env.pp,
    )


def decode_round3(env, payload):
    kind, sid, X2, py_raw, pd_raw, K_rec = decode(payload, env.pp)
    aff2 = (
        fischlin.unpack_proof(env.pp, env.params, "dl", py_raw),
        fischlin.unpack_proof(env.pp, env.params, "dl", pd_raw),
    )
    return sid, RoundThree(X2, aff2, K_rec)


# --- acceptance predicate ---------------------------------------------------

def acc_sdkg_checks(oracle, params, pp, sid, sender, recipient, T):
    """Evaluate every acceptance check independently.

    Returns (parse_ok, checks) where checks maps C1..C6 to booleans; any
    derivation failure (unopenable certificate, malformed field) clears
    parse_ok and the dependent checks.
    """
    checks = {c: False for c in ("C1", "C2", "C3", "C4", "C5", "C6")}
    caller = "acc"
    try:
        t1, t2, t3 = T.T1, T.T2, T.T3
        M2 = usv.open_point(oracle, caller, params, pp, t1.cert)
        if M2 is None:
            return False, checks
        receipt_body = (
            sid, t1.cid2, _party(sender), _party(recipient), t1.cert.C,
            M2,
        )
        d_star = oracle.query(caller, CTX_RCPT, encode(receipt_body, pp))
        Y1 = t2.M1 + 2 * t2.B1
        D1 = t2.X1 - t1.sigma21 * pp.G - Y1
        Y2 = M2 + 3 * t1.B2
        D2 = t3.X2 - t2.sigma12 * pp.G - Y2
        K_hat = 3 * t2.X1 - 2 * t3.X2
    except Exception:
        return False, checks
    checks["C1"] = t1.d == d_star
    checks["C2"] = t1.sigma21 * pp.G - 2 * t1.B2 == M2
    stmt1 = AffineStatement(t2.X1, 2, t2.M1, t2.B1, t1.sigma21 * pp.G)
    checks["C3"] = (
        t2.sigma12 * pp.G == t2.M1 + 3 * t2.B1
        and fischlin.verify_affine(
            oracle, caller, CTX_UC, params, pp, stmt1, sid, AFF1_LABELS, t2.aff1
        )
    )
    stmt2 = AffineStatement(t3.X2, 3, M2, t1.B2, t2.sigma12 * pp.G)
    checks["C4"] = fischlin.verify_affine(
        oracle, caller, CTX_UC, params, pp, stmt2, sid, AFF2_LABELS, t3.aff2
    )
    h_star = oracle.query(caller, CTX_S32, encode((sid, t1.cid2, D2), pp))
    checks["C5"] = t1.h32 == h_star
    checks["C6"] = t3.K_rec == K_hat
    return True, checks


def acc_sdkg_detail(oracle, params, pp, sid, sender, recipient, T):
    parse_ok, checks = acc_sdkg_checks(oracle, params, pp, sid, sender, recipient, T)
    if not parse_ok:
        return 0, "parse"
    for name in ("C1", "C2", "C3", "C4", "C5", "C6"):
        if not checks[name]:
            return 0, name
    return 1, None


def acc_sdkg(oracle, params, pp, sid, sender, recipient, T) -> int:
    return acc_sdkg_detail(oracle, params, pp, sid, sender, recipient, T)[0]


def _party(pid):
    from .codec import PartyId

    return PartyId(pid)


# --- party state machines ----------------------------------------------------

class LeafParty:
    """Initiating leaf: rounds one and three, then share installation."""

    def __init__(self, env, sid, pid="P2", mutate=None):
        self.env = env
        self.sid = sid
        self.pid = pid
        self.keybox = env.keyboxes[pid]
        self.retained = {}
        self.erased = set()
        self.public = {}
        self.aborted = None
        self.installed = False
        self.honest_rejects = 0
        self.sent_proofs = []
        self._mutate = mutate or (lambda kind, fields: fields)
        self._rng = env.rng.child("leaf:%s" % pid)

    def _abort(self, reason):
        self.aborted = reason

    def start(self):
        env = self.env
        out = self.keybox.use(b"", "SDKG.LeafInit", (self.sid,))
        if out is None:
            return self._abort("leaf-init")
        cert, B2, s21, s22, s23 = out
        cid2 = self._rng.random_bytes(16)
        d = env.usv_table.commit(self.sid, cid2, self.pid, "P1", cert)
        s32 = rand_scalar(env.pp, self._rng)
        h32 = env.oracle.query(
            self.pid, CTX_S32, encode((self.sid, cid2, s32 * env.pp.G), env.pp)
        )
        self.retained.update({"sigma22": s22, "sigma23": s23, "sigma32": s32})
        self.public.update(
            {"cid2": cid2, "cert": cert, "B2": B2, "sigma21_G": s21 * env.pp.G}
        )
        fields = {
            "cid2": cid2, "cert": cert, "B2": B2, "h32": h32,
            "sigma21": s21, "d": d,
        }
        fields = self._mutate("round1", fields)
        msg = RoundOne(fields["cid2"], fields["cert"], fields["B2"],
                       fields["h32"], fields["sigma21"], fields["d"])
        payload = encode_round1(env, self.sid, msg)
        # the evaluation at 2 was handed to the center; drop the scalar
        self.erased.add("sigma21")
        env.net.chan_send(self.sid, self.pid, "P1", payload)
        return msg

    def on_round2(self, payload):
        env = self.env
        pp = env.pp
        try:
            sid, msg = decode_round2(env, payload)
        except Exception:
            return self._abort("parse")
        if sid != self.sid:
            return self._abort("session-mismatch")
        if msg.sigma12 * pp.G != msg.M1 + 3 * msg.B1:
            return self._abort("sigma12-linkage")
        stmt1 = AffineStatement(
            msg.X1, 2, msg.M1, msg.B1, self.public["sigma21_G"]
        )
        if not fischlin.verify_affine(
            env.oracle, self.pid, CTX_UC, env.params, pp,
            stmt1, self.sid, AFF1_LABELS, msg.aff1,
        ):
            return self._abort("aff1-proof")
        s12 = msg.sigma12
        s22 = self.retained["sigma22"]
        s32 = self.retained["sigma32"]
        self.retained["sigma12"] = s12
        X2 = (s12 + s22 + s32) % pp.p * pp.G
        cert = self.public["cert"]
        M2 = usv.open_point(env.oracle, self.pid, env.params, pp, cert)
        stmt2 = AffineStatement(X2, 3, M2, self.public["B2"], s12 * pp.G)
        aff2, rejects = _prove_affine_retry(
            env, self.pid, stmt2, self.sid, AFF2_LABELS, s22, s32,
            self._rng.child("aff2"),
        )
        self.honest_rejects = rejects
        self.sent_proofs = list(aff2)
        K = 3 * msg.X1 - 2 * X2
        self.public.update({"X1": msg.X1, "X2": X2, "K": K})
        fields = self._mutate("round3", {"X2": X2, "aff2": aff2, "K_rec": K})
        out = RoundThree(fields["X2"], fields["aff2"], fields["K_rec"])
        env.net.chan_send(self.sid, self.pid, "P1", encode_round3(env, self.sid, out))
        env.net.pub_publish(
            self.sid, self.pid, encode((Label("pub-key"), fields["K_rec"]), pp)
        )
        return out

    def install(self) -> bool:
        env = self.env
        ok = (
            self.keybox.load(
                slot_id(env.pp, self.sid, "k2"), "g2",
                (self.retained["sigma12"], self.retained["sigma22"],
                 self.retained["sigma32"]),
            )
            and self.keybox.load(
                slot_id(env.pp, self.sid, "k32"), "g32_reg",
                (self.retained["sigma32"],),
            )
            and self.keybox.load(
                slot_id(env.pp, self.sid, "k23"), "g23_reg",
                (self.retained["sigma23"],),
            )
        )
        if ok:
            self.erased.update(self.retained)
            self.retained.clear()
            self.installed = True
        return ok

    def state_blob(self) -> bytes:
        items = tuple(
            (Label(k), v) for k, v in sorted(self.retained.items())
        )
        return encode(items, self.env.pp)


class CenterParty:
    """Mandatory center: verifies the leaf, contributes its polynomial,
    accepts or aborts, installs its two shares plus the sealed-transfer
    scalar."""

    def __init__(self, env, sid, pid="P1", mutate=None):
        self.env = env
        self.sid = sid
        self.pid = pid
        self.keybox = env.keyboxes[pid]
        self.retained = {}
        self.erased = set()
        self.public = {}
        self.aborted = None
        self.accepted = False
        self.installed = False
        self.seen_cids = set()
        self.sent_proofs = []
        self._mutate = mutate or (lambda kind, fields: fields)
        self._rng = env.rng.child("center:%s" % pid)
        self.honest_rejects = 0

    def _abort(self, reason):
        self.aborted = reason

    def on_round1(self, payload):
        env = self.env
        pp = env.pp
        try:
            sid, msg = decode_round1(env, payload)
        except Exception:
            return self._abort("parse")
        if sid != self.sid:
            return self._abort("session-mismatch")
        if msg.cid2 in self.seen_cids:
            return self._abort("freshness")
        self.seen_cids.add(msg.cid2)
        if env.usv_table.verify(self.sid, msg.cid2, "P2", self.pid, msg.cert) != 1:
            return self._abort("usv-verify")
        M2 = usv.open_point(env.oracle, self.pid, env.params, pp, msg.cert)
        if M2 is None:
            return self._abort("usv-open")
        body = (self.sid, msg.cid2, _party("P2"), _party(self.pid),
                msg.cert.C, M2)
        d_star = env.oracle.query(self.pid, "ctx_USV.rcpt", encode(body, pp))
        if msg.d != d_star:
            return self._abort("receipt-digest")
        if msg.cert.ratio % pp.p == pp.p - 1:
            return self._abort("nu-minus-one")
        if msg.sigma21 * pp.G - 2 * msg.B2 != M2:
            return self._abort("usv-linkage")

        m1 = rand_scalar(pp, self._rng, exclude=(0,))
        b1 = rand_scalar(pp, self._rng)
        s31 = rand_scalar(pp, self._rng)
        M1 = m1 * pp.G
        B1 = b1 * pp.G
        s11 = (m1 + 2 * b1) % pp.p
        s12 = (m1 + 3 * b1) % pp.p
        s13 = (m1 + b1) % pp.p
        del m1, b1  # the polynomial itself is not retained
        X1 = (s11 + msg.sigma21 + s31) % pp.p * pp.G
        stmt1 = AffineStatement(X1, 2, M1, B1, msg.sigma21 * pp.G)
        aff1, rejects = _prove_affine_retry(
            env, self.pid, stmt1, self.sid, AFF1_LABELS, s11, s31,
            self._rng.child("aff1"),
        )
        self.honest_rejects = rejects
        self.sent_proofs = list(aff1)
        self.retained.update(
            {"sigma21": msg.sigma21, "sigma11": s11, "sigma13": s13,
             "sigma31": s31}
        )
        self.public.update(
            {"cid2": msg.cid2, "cert": msg.cert, "B2": msg.B2, "M2": M2,
             "h32": msg.h32, "X1": X1, "M1": M1, "B1": B1,
             "sigma12_G": s12 * pp.G}
        )
        fields = self._mutate(
            "round2",
            {"X1": X1, "M1": M1, "B1": B1, "sigma12": s12, "aff1": aff1},
        )
        out = RoundTwo(fields["X1"], fields["M1"], fields["B1"],
                       fields["sigma12"], fields["aff1"])
        env.net.chan_send(self.sid, self.pid, "P2", encode_round2(env, self.sid, out))
        return out

    def on_round3(self, payload):
        env = self.env
        pp = env.pp
        try:
            sid, msg = decode_round3(env, payload)
        except Exception:
            return self._abort("parse")
        if sid != self.sid:
            return self._abort("session-mismatch")
        M2 = self.public["M2"]
        Y2 = M2 + 3 * self.public["B2"]
        D2 = msg.X2 - self.public["sigma12_G"] - Y2
        stmt2 = AffineStatement(
            msg.X2, 3, M2, self.public["B2"], self.public["sigma12_G"]
        )
        if not fischlin.verify_affine(
            env.oracle, self.pid, CTX_UC, env.params, pp,
            stmt2, self.sid, AFF2_LABELS, msg.aff2,
        ):
            return self._abort("aff2-proof")
        h_star = env.oracle.query(
            self.pid, CTX_S32, encode((self.sid, self.public["cid2"], D2), pp)
        )
        if self.public["h32"] != h_star:
            return self._abort("s32-digest")
        K_hat = 3 * self.public["X1"] - 2 * msg.X2
        if msg.K_rec != K_hat:
            return self._abort("key-mismatch")
        self.public.update({"X2": msg.X2, "K": K_hat})
        self.accepted = True
        return True

    def install(self) -> bool:
        env = self.env
        r = self.retained
        ok = (
            self.keybox.load(
                slot_id(env.pp, self.sid, "k12"), "g12",
                (r["sigma11"], r["sigma21"], r["sigma31"]),
            )
            and self.keybox.load(
                slot_id(env.pp, self.sid, "k13"), "g13",
                (r["sigma11"], r["sigma21"], r["sigma31"], r["sigma13"]),
            )
            and self.keybox.load(
                slot_id(env.pp, self.sid, "k31"), "g31_reg", (r["sigma31"],)
            )
        )
        if ok:
            self.erased.update(self.retained)
            self.retained.clear()
            self.installed = True
        return ok

    def state_blob(self) -> bytes:
        items = tuple(
            (Label(k), v) for k, v in sorted(self.retained.items())
        )
        return encode(items, self.env.pp)


# --- session runner ----------------------------------------------------------

class BaseSession:
    def __init__(self, env, sid, mutations=None, scheduler=None):
        self.env = env
        self.sid = sid
        self.mutations = mutations or {}
        self.scheduler = scheduler
        self.wire = {}

    def _mutator(self, kind, fields):
        plan = self.mutations.get(kind)
        if not plan:
            return fields
        out = dict(fields)
        for name, mut in plan.items():
            out[name] = mut(out[name]) if callable(mut) else mut
        return out

    def run(self) -> SessionResult:
        env = self.env
        net = env.net
        p1 = CenterParty(env, self.sid, mutate=self._mutator)
        p2 = LeafParty(env, self.sid, mutate=self._mutator)
        observed = {}

        def center_handler(envlp):
            if envlp.kind == "pub":
                return
            kind = _peek_kind(envlp.payload)
            if p1.aborted:
                return
            if kind == "r1":
                observed["r1"] = envlp.payload
                p1.on_round1(envlp.payload)
            elif kind == "r3":
                observed["r3"] = envlp.payload
                p1.on_round3(envlp.payload)

        def leaf_handler(envlp):
            if envlp.kind == "pub":
                return
            if p2.aborted:
                return
            if _peek_kind(envlp.payload) == "r2":
                observed["r2"] = envlp.payload
                p2.on_round2(envlp.payload)

        net.set_handler("P1", center_handler)
        net.set_handler("P2", leaf_handler)
        net.init_channel(self.sid, "P2", "P1")
        net.init_channel(self.sid, "P1", "P2")

        p2.start()
        from .transport import FifoScheduler

        net.run(self.scheduler or FifoScheduler())
        self.p1, self.p2 = p1, p2

        result = SessionResult(outcome="aborted")
        for party in (p1, p2):
            if party.aborted:
                result.abort_party = party.pid
                result.abort_reason = party.aborted
                break
        transcript = self._assemble_transcript(observed)
        result.transcript = transcript
        result.wire_sizes = {k: len(v) for k, v in observed.items()}
        if p1.accepted and not p2.aborted:
            if env.testing:
                result.sigma_table = {
                    "s11": p1.retained["sigma11"],
                    "s21": p1.retained["sigma21"],
                    "s31": p1.retained["sigma31"],
                    "s13": p1.retained["sigma13"],
                    "s12": p2.retained["sigma12"],
                    "s22": p2.retained["sigma22"],
                    "s32": p2.retained["sigma32"],
                    "s23": p2.retained["sigma23"],
                }
            if not (p1.install() and p2.install()):
                result.outcome = "aborted"
                result.abort_reason = "install"
                return result
            result.outcome = "accepted"
            result.K = p1.public["K"]
        trials = []
        for proof in (*p1.sent_proofs, *p2.sent_proofs):
            if proof.trials:
                trials.extend(proof.trials)
        cert = p2.public.get("cert")
        if cert is not None and cert.dleq_proof.trials:
            trials.extend(cert.dleq_proof.trials)
        result.proof_trials = trials
        result.honest_rejects = p1.honest_rejects + p2.honest_rejects
        return result

    def _assemble_transcript(self, observed):
        env = self.env
        if not all(k in observed for k in ("r1", "r2", "r3")):
            return None
        try:
            _, t1 = decode_round1(env, observed["r1"])
            _, t2 = decode_round2(env, observed["r2"])
            _, t3 = decode_round3(env, observed["r3"])
        except Exception:
            return None
        return SdkgTranscript(t1, t2, t3)


def _peek_kind(payload):
    """Read the leading kind label without a full (params-bound) decode."""
    if len(payload) < 10 or payload[0] != TAG_TUPLE or payload[5] != TAG_LABEL:
        return None
    n = int.from_bytes(payload[6:10], "big")
    if len(payload) < 10 + n:
        return None
    return payload[10 : 10 + n].decode("latin-1")


def transcript_export(env, sid, result: SessionResult) -> dict:
    """Hex-encoded round records plus a per-component byte breakdown."""
    T = result.transcript
    if T is None:
        return {"sid": sid.hex(), "complete": False}
    pp, params = env.pp, env.params
    r1 = encode_round1(env, sid, T.T1)
    r2 = encode_round2(env, sid, T.T2)
    r3 = encode_round3(env, sid, T.T3)
    return {
        "sid": sid.hex(),
        "complete": True,
        "T1": r1.hex(),
        "T2": r2.hex(),
        "T3": r3.hex(),
        "bytes": {
            "T1": len(r1),
            "T2": len(r2),
            "T3": len(r3),
            "cert": len(T.T1.cert.wire(pp, params)),
            "pi_aff1": sum(
                len(fischlin.pack_proof(pp, params, p)) for p in T.T2.aff1
            ),
            "pi_aff2": sum(
                len(fischlin.pack_proof(pp, params, p)) for p in T.T3.aff2
            ),
            "total": len(r1) + len(r2) + len(r3),
        },
    }


# --- registration ------------------------------------------------------------

@dataclass
class BaseRecord:
    """Public session metadata a finalized base run leaves behind."""

    sid: bytes
    K: object
    K13: object


def base_record_from(env, sid, result: SessionResult) -> BaseRecord:
    t2 = result.transcript.T2
    return BaseRecord(sid, result.K, derive_k13(env.pp, t2.M1, t2.B1, t2.X1))


def register_device(env, record: BaseRecord, joiner: str, sponsor: str,
                    registered=None, tamper=None) -> tuple:
    """One-shot enrollment of a recovery device.

    The center seals its registration scalar, the sponsor seals the two
    sponsor-state scalars, and the joiner's keystore installs everything
    atomically after checking the public key and recovery point against
    the session record.  Returns (ok, reason).
    """
    tamper = tamper or {}
    registered = set() if registered is None else registered
    if joiner in registered:
        return False, "duplicate-joiner"
    if sponsor != "P2" and sponsor not in registered:
        return False, "unauthorized-sponsor"
    pp = env.pp
    sid = record.sid
    net = env.net
    kb1 = env.keyboxes["P1"]
    kbs = env.keyboxes[sponsor]
    kbj = env.keyboxes[joiner]

    ad31 = make_reg_ad(pp, sid, "P1", joiner, "k31")
    ad32 = make_reg_ad(pp, sid, sponsor, joiner, "k32")
    ad23 = make_reg_ad(pp, sid, sponsor, joiner, "k23")

    blob1 = kb1.use(slot_id(pp, sid, "k31"), "SealToPeer", (joiner, ad31))
    if tamper.get("ad_mismatch"):
        # sponsor seals the right slot under the wrong slot tag
        wrong = make_reg_ad(pp, sid, sponsor, joiner, "k31")
        blob2a = kbs.use(slot_id(pp, sid, "k32"), "SealToPeer", (joiner, wrong))
    elif tamper.get("wrong_scalar"):
        # sponsor encrypts a junk scalar under the correct associated data
        junk_slot = slot_id(pp, sid + b"junk", "k32")
        kbs.load(junk_slot, "g32_reg", (tamper["wrong_scalar"] % pp.p,))
        blob2a = kbs.use(junk_slot, "SealToPeer", (joiner, ad32))
    else:
        blob2a = kbs.use(slot_id(pp, sid, "k32"), "SealToPeer", (joiner, ad32))
    blob2b = kbs.use(slot_id(pp, sid, "k23"), "SealToPeer", (joiner, ad23))
    if blob1 is None or blob2a is None or blob2b is None:
        return False, "seal"

    K_sent = record.K + pp.G if tamper.get("k_mismatch") else record.K
    K13_sponsor = record.K13 + pp.G if tamper.get("k13_mismatch") else record.K13

    net.init_channel(sid, "P1", joiner)
    net.init_channel(sid, sponsor, joiner)
    inbox = {}

    def joiner_handler(envlp):
        if envlp.kind == "pub":
            return
        try:
            fieldsv = decode(envlp.payload, pp)
        except Exception:
            return
        if fieldsv[0] == Label("reg1"):
            inbox["reg1"] = fieldsv
        elif fieldsv[0] == Label("reg2"):
            inbox["reg2"] = fieldsv

    net.set_handler(joiner, joiner_handler)
    net.chan_send(
        sid, "P1", joiner,
        encode((Label("reg1"), sid, blob1.wire(pp), record.K13, K_sent), pp),
    )
    net.chan_send(
        sid, sponsor, joiner,
        encode((Label("reg2"), sid, blob2a.wire(pp), blob2b.wire(pp),
                K13_sponsor), pp),
    )
    from .transport import FifoScheduler

    net.run(FifoScheduler())
    if "reg1" not in inbox or "reg2" not in inbox:
        return False, "transport"
    _, sid1, blob1_wire, K13_a, K_net = inbox["reg1"]
    _, sid2, blob2a_wire, blob2b_wire, K13_b = inbox["reg2"]
    if sid1 != sid or sid2 != sid:
        return False, "session-mismatch"
    if K_net != record.K:
        return False, "key-mismatch"
    if K13_a != K13_b:
        return False, "recovery-point-mismatch"
    ok = kbj.install_registration(
        sid, blob1_wire, blob2a_wire, blob2b_wire,
        ad31, ad32, ad23, record.K, K13_a,
    )
    if not ok:
        return False, "install"
    registered.add(joiner)
    return True, None


def rdr_extend(env, record: BaseRecord, joins) -> list:
    """Run a chain of registrations; failures stay isolated per joiner."""
    registered = set()
    outcomes = []
    for joiner, sponsor in joins:
        ok, reason = register_device(
            env, record, joiner, sponsor, registered=registered
        )
        outcomes.append((joiner, sponsor, ok, reason))
    return outcomes


# --- test oracles ------------------------------------------------------------

@dataclass
class DerivedShares:
    x1: int
    x2: int
    k: int
    k12: int
    k2: int
    k13: int
    k3: int
    K: object
    K13: object


def derive_all_shares_oracle(pp, table) -> DerivedShares:
    """Recompute every share from a full evaluation table (tests only)."""
    p = pp.p
    s11, s21, s31 = table["s11"], table["s21"], table["s31"]
    s12, s22, s32 = table["s12"], table["s22"], table["s32"]
    s23 = table["s23"]
    s13 = table.get("s13", (2 * s11 - s12) % p)
    x1 = (s11 + s21 + s31) % p
    x2 = (s12 + s22 + s32) % p
    k = (3 * x1 - 2 * x2) % p
    k12 = 3 * x1 % p
    k2 = -2 * x2 % p
    k13 = (2 * s13 - x1) % p
    k3 = 2 * (s23 + 2 * s31 - s32) % p
    return DerivedShares(
        x1, x2, k, k12, k2, k13, k3, k * pp.G, k13 * pp.G
    )


def finalize_consistency(oracle, pp, sid, T: SdkgTranscript,
                         x1, x2, s31, s32):
    """Cross-check programmed scalars against an accepting transcript and
    derive the induced shares exactly as the finalization rule does."""
    p = pp.p
    t1, t2, t3 = T.T1, T.T2, T.T3
    if t2.X1 != x1 * pp.G or t3.X2 != x2 * pp.G:
        return None
    h_star = oracle.query(
        "finalize", CTX_S32, encode((sid, t1.cid2, s32 * pp.G), pp)
    )
    if t1.h32 != h_star:
        return None
    Y1 = t2.M1 + 2 * t2.B1
    D1 = t2.X1 - t1.sigma21 * pp.G - Y1
    if D1 != s31 * pp.G:
        return None
    s11 = (x1 - t1.sigma21 - s31) % p
    s13 = (2 * s11 - t2.sigma12) % p
    k12 = 3 * x1 % p
    k2 = -2 * x2 % p
    k13 = (2 * s13 - x1) % p
    k = (k12 + k2) % p
    s22 = (x2 - t2.sigma12 - s32) % p
    k3 = (k - k13) % p
    s23 = (k3 * inv(pp, 2) - 2 * s31 + s32) % p
    return {
        "sigma11": s11, "sigma13": s13, "sigma22": s22, "sigma23": s23,
        "k12": k12, "k2": k2, "k13": k13, "k3": k3, "k": k,
        "K": k * pp.G, "K13": derive_k13(pp, t2.M1, t2.B1, t2.X1),
    }
