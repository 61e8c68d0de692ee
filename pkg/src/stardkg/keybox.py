"""Simulated per-party keystore with a fixed admissible API profile.

Slots are write-once and hold scalars that never leave the instance in any
caller-recoverable form: the API returns public points, proofs, sealed
ciphertexts, and one-shot opaque handles, nothing else.  Cross-instance
transfer goes through KEM-DEM sealing (X25519 + HKDF + ChaCha20Poly1305)
bound to caller-supplied associated data.  A monotonic epoch counter guards
against state rollback; the guard can be disabled explicitly to demonstrate
the failure mode it exists to prevent.

The derivation routines installable via ``load`` and the operations callable
via ``use`` form a closed allowlist; everything else returns None, and all
failure causes look identical to the caller.
"""

import hashlib
import json
import pickle
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305
from cryptography.hazmat.primitives.hashes import SHA256
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from . import fischlin, sigma, usv
from .algebra import rand_scalar
from .codec import CodecError, Label, PartyId, decode, encode
from .fischlin import DlStatement, FischlinProof
from .grocrp import CTX_KEYBOX
from .rng import Drbg

HANDLE_TAG = Label("hdl")
REG_LABEL = Label("SDKG.reg")

LOAD_PROFILE = ("g12", "g13", "g2", "g3", "g31_reg", "g32_reg", "g23_reg")
USE_PROFILE = (
    "GetPub",
    "SDKG.LeafInit",
    "USV.Cert",
    "FS.Start",
    "FS.Prove",
    "SealToPeer",
    "OpenFromPeer",
)
KEY_INDEPENDENT = ("OpenFromPeer", "USV.Cert", "SDKG.LeafInit")


def slot_id(pp, sid: bytes, tag: str) -> bytes:
    return encode((sid, Label(tag)), pp)


def make_reg_ad(pp, sid: bytes, sender: str, recipient: str, tag: str) -> bytes:
    return encode(
        (REG_LABEL, sid, PartyId(sender), PartyId(recipient), Label(tag)), pp
    )


def _scalars(payload, n):
    if not (isinstance(payload, tuple) and len(payload) == n):
        return None
    if not all(isinstance(v, int) for v in payload):
        return None
    return payload


def _is_point(v):
    return hasattr(v, "point_bytes")


def _check_reg_ad(pp, ad, expected_tag):
    try:
        parsed = decode(ad, pp)
    except CodecError:
        return False
    if not (isinstance(parsed, tuple) and len(parsed) == 5):
        return False
    if parsed[0] != REG_LABEL:
        return False
    return parsed[4] == Label(expected_tag)


def _ad_scalar_pair(pp, item, expected_tag):
    """(ad, scalar) component with the slot tag re-checked; None on mismatch."""
    if not (isinstance(item, tuple) and len(item) == 2):
        return None
    ad, value = item
    if not isinstance(ad, (bytes, bytearray)) or not isinstance(value, int):
        return None
    if not _check_reg_ad(pp, bytes(ad), expected_tag):
        return None
    return value


def _g12(pp, m):
    vals = _scalars(m, 3)
    if vals is None:
        return None
    x1 = sum(vals) % pp.p
    return 3 * x1 % pp.p


def _g13(pp, m):
    vals = _scalars(m, 4)
    if vals is None:
        return None
    s11, s21, s31, s13 = vals
    x1 = (s11 + s21 + s31) % pp.p
    return (2 * s13 - x1) % pp.p


def _g2(pp, m):
    vals = _scalars(m, 3)
    if vals is None:
        return None
    x2 = sum(vals) % pp.p
    return -2 * x2 % pp.p


def _g3(pp, m):
    if not (isinstance(m, tuple) and len(m) == 5):
        return None
    head, K, K13 = m[:3], m[3], m[4]
    if not (_is_point(K) and _is_point(K13)):
        return None
    if all(isinstance(v, int) for v in head):
        s23, s32, s31 = head
    else:
        s23 = _ad_scalar_pair(pp, head[0], "k23")
        s32 = _ad_scalar_pair(pp, head[1], "k32")
        s31 = _ad_scalar_pair(pp, head[2], "k31")
        if s23 is None or s32 is None or s31 is None:
            return None
    k3 = 2 * (s23 + 2 * s31 - s32) % pp.p
    if K13 + k3 * pp.G != K:
        return None
    return k3


def _g_reg(expected_tag):
    def g(pp, m):
        if not (isinstance(m, tuple) and len(m) == 1):
            return None
        item = m[0]
        if isinstance(item, int):
            return item % pp.p
        value = _ad_scalar_pair(pp, item, expected_tag)
        return None if value is None else value % pp.p

    return g


DERIVATIONS = {
    "g12": _g12,
    "g13": _g13,
    "g2": _g2,
    "g3": _g3,
    "g31_reg": _g_reg("k31"),
    "g32_reg": _g_reg("k32"),
    "g23_reg": _g_reg("k23"),
}


@dataclass(frozen=True)
class SealedBlob:
    recipient: str
    kem_ct: bytes  # ephemeral public key
    dem_ct: bytes
    ad_digest: bytes

    def wire(self, pp) -> bytes:
        return encode(
            (PartyId(self.recipient), self.kem_ct, self.dem_ct, self.ad_digest), pp
        )

    @classmethod
    def from_wire(cls, pp, data: bytes):
        recipient, kem_ct, dem_ct, ad_digest = decode(data, pp)
        return cls(recipient.value.decode(), kem_ct, dem_ct, ad_digest)


def _dem_key(shared, epk, rpk):
    return HKDF(
        algorithm=SHA256(), length=32, salt=None, info=b"stardkg/seal" + epk + rpk
    ).derive(shared)


class KeyBox:
    def __init__(self, owner: str, pp, oracle, params, rng: Drbg,
                 allow_state_rollback=False, testing=False):
        self.owner = owner
        self.pp = pp
        self.oracle = oracle
        self.params = params  # proof parameters are profile-fixed
        self._rng = rng
        self._caller = "keybox:%s" % owner
        self._allow_rollback = allow_state_rollback
        self._testing = testing
        self._slots = {}
        self._buf = {}
        self._fs = {}  # FS.Start/FS.Prove share this family state
        self._epoch = 0
        sk = rng.random_bytes(32)
        self._seal_sk = X25519PrivateKey.from_private_bytes(sk)
        self._storage_key = rng.random_bytes(32)
        self._directory = {}

    # --- directory / identity ------------------------------------------

    def sealing_public_key(self) -> bytes:
        return self._seal_sk.public_key().public_bytes_raw()

    def set_directory(self, directory):
        self._directory = dict(directory)

    # --- internals -------------------------------------------------------

    def _bump(self):
        self._epoch += 1

    def _resolve(self, payload):
        """Substitute typed handles; one-shot, all-or-nothing."""
        if not isinstance(payload, tuple):
            return None
        used = []
        out = []
        for item in payload:
            if (
                isinstance(item, tuple)
                and len(item) == 2
                and item[0] == HANDLE_TAG
                and isinstance(item[1], (bytes, bytearray))
            ):
                token = bytes(item[1])
                if token not in self._buf:
                    return None
                ad, value = self._buf[token]
                out.append((ad, value))
                used.append(token)
            else:
                out.append(item)
        for token in used:
            del self._buf[token]
        return tuple(out)

    def _state(self):
        return {
            "slots": dict(self._slots),
            "buf": dict(self._buf),
            "fs": {t: dict(rec) for t, rec in self._fs.items()},
            "rng": self._rng.get_state(),
            "epoch": self._epoch,
        }

    def _install_state(self, state):
        self._slots = dict(state["slots"])
        self._buf = dict(state["buf"])
        self._fs = {t: dict(rec) for t, rec in state["fs"].items()}
        self._rng.set_state(state["rng"])
        self._epoch = state["epoch"]

    # --- load ------------------------------------------------------------

    def load(self, slot: bytes, derivation: str, payload) -> bool:
        """Install a derived scalar into an empty slot.

        All failures (occupied slot, unknown derivation, handle resolution,
        derivation-internal checks) are indistinguishable to the caller.
        """
        if slot in self._slots or derivation not in LOAD_PROFILE:
            return False
        resolved = self._resolve(payload)
        if resolved is None:
            return False
        value = DERIVATIONS[derivation](self.pp, resolved)
        if value is None:
            return False
        self._slots[slot] = value % self.pp.p
        self._bump()
        return True

    # --- use -------------------------------------------------------------

    def use(self, slot: bytes, op: str, payload=None):
        if op not in USE_PROFILE:
            return None
        if op not in KEY_INDEPENDENT and slot not in self._slots:
            return None
        handler = {
            "GetPub": self._op_get_pub,
            "SDKG.LeafInit": self._op_leaf_init,
            "USV.Cert": self._op_usv_cert,
            "FS.Start": self._op_fs_start,
            "FS.Prove": self._op_fs_prove,
            "SealToPeer": self._op_seal,
            "OpenFromPeer": self._op_open,
        }[op]
        return handler(slot, payload)

    def _op_get_pub(self, slot, payload):
        return self._slots[slot] * self.pp.G

    def _op_usv_cert(self, slot, payload):
        m = rand_scalar(self.pp, self._rng, exclude=(0,))
        certificate = usv.cert(
            self.oracle, self._caller, self.params, self.pp, m, self._rng
        )
        self._bump()
        return certificate

    def _op_leaf_init(self, slot, payload):
        """Linear polynomial setup for the initiating leaf.

        Samples the secret intercept and slope internally, certifies the
        intercept, and releases only the certificate, the slope commitment,
        and the three evaluations; the secrets never reach the host.
        """
        if not (isinstance(payload, tuple) and len(payload) == 1):
            return None
        m2 = rand_scalar(self.pp, self._rng, exclude=(0,))
        b2 = rand_scalar(self.pp, self._rng)
        p = self.pp.p
        certificate = usv.cert(
            self.oracle, self._caller, self.params, self.pp, m2, self._rng
        )
        out = (
            certificate,
            b2 * self.pp.G,
            (m2 + 2 * b2) % p,  # evaluation at 2
            (m2 + 3 * b2) % p,  # evaluation at 3
            (m2 + b2) % p,      # evaluation at 1
        )
        self._bump()
        return out

    def _op_fs_start(self, slot, payload):
        if not (isinstance(payload, tuple) and len(payload) == 2):
            return None
        sid, K = payload
        if not isinstance(sid, (bytes, bytearray)) or not _is_point(K):
            return None
        k = self._slots[slot]
        if K != k * self.pp.G:
            return None
        nonces = [rand_scalar(self.pp, self._rng) for _ in range(self.params.r)]
        avec = tuple(j * self.pp.G for j in nonces)
        token = self._rng.random_bytes(16)
        self._fs[token] = {
            "slot": slot,
            "sid": bytes(sid),
            "K": K,
            "nonces": tuple(nonces),
            "avec": avec,
            "sealed": False,
        }
        self._bump()
        return (HANDLE_TAG, token), avec

    def _op_fs_prove(self, slot, payload):
        if not (
            isinstance(payload, tuple)
            and len(payload) == 2
            and payload[0] == HANDLE_TAG
        ):
            return None
        token = bytes(payload[1])
        rec = self._fs.get(token)
        if rec is None or rec["sealed"] or rec["slot"] != slot:
            return None
        k = self._slots[slot]
        stmt = DlStatement(rec["K"], tag=(rec["sid"],))
        commits = list(zip(rec["nonces"], rec["avec"]))
        triples, counts = fischlin.rarity_search(
            self.oracle, self._caller, CTX_KEYBOX, self.params, self.pp,
            stmt, commits, sigma.dl_respond, k,
        )
        rec["sealed"] = True
        rec["nonces"] = None  # per-challenge material never outlives the call
        self._bump()
        return FischlinProof("dl", triples, counts)

    def _op_seal(self, slot, payload):
        if not (isinstance(payload, tuple) and len(payload) == 2):
            return None
        peer, ad = payload
        if isinstance(peer, PartyId):
            peer = peer.value.decode()
        if peer not in self._directory or not isinstance(ad, (bytes, bytearray)):
            return None
        ad = bytes(ad)
        rpk = self._directory[peer]
        esk = X25519PrivateKey.from_private_bytes(self._rng.random_bytes(32))
        epk = esk.public_key().public_bytes_raw()
        shared = esk.exchange(X25519PublicKey.from_public_bytes(rpk))
        key = _dem_key(shared, epk, rpk)
        pt = self._slots[slot].to_bytes(self.pp.scalar_width, "big")
        ct = ChaCha20Poly1305(key).encrypt(b"\x00" * 12, pt, ad)
        self._bump()
        return SealedBlob(peer, epk, ct, hashlib.sha256(ad).digest())

    def _op_open(self, slot, payload):
        if not (isinstance(payload, tuple) and len(payload) == 2):
            return None
        blob, ad = payload
        if isinstance(blob, (bytes, bytearray)):
            try:
                blob = SealedBlob.from_wire(self.pp, bytes(blob))
            except (CodecError, UnicodeDecodeError):
                return None
        if not isinstance(blob, SealedBlob) or not isinstance(ad, (bytes, bytearray)):
            return None
        ad = bytes(ad)
        try:
            epub = X25519PublicKey.from_public_bytes(blob.kem_ct)
            shared = self._seal_sk.exchange(epub)
            key = _dem_key(shared, blob.kem_ct, self.sealing_public_key())
            pt = ChaCha20Poly1305(key).decrypt(b"\x00" * 12, blob.dem_ct, ad)
        except (InvalidTag, ValueError):
            return None
        if len(pt) != self.pp.scalar_width:
            return None
        value = int.from_bytes(pt, "big")
        if value >= self.pp.p:
            return None
        token = self._rng.random_bytes(16)
        self._buf[token] = (ad, value)
        self._bump()
        return (HANDLE_TAG, token)

    # --- registration install (atomic) -----------------------------------

    def install_registration(self, sid, blob_k31, blob_k32, blob_k23,
                             ad31, ad32, ad23, K, K13) -> bool:
        """Open the three sealed shares and install sponsor state plus the
        recovery share; commits only if every step succeeds."""
        saved = self._state()
        ok = self._install_registration_inner(
            sid, blob_k31, blob_k32, blob_k23, ad31, ad32, ad23, K, K13
        )
        if not ok:
            self._install_state(saved)
            return False
        return True

    def _install_registration_inner(self, sid, blob_k31, blob_k32, blob_k23,
                                    ad31, ad32, ad23, K, K13):
        h32 = self.use(b"", "OpenFromPeer", (blob_k32, ad32))
        h23 = self.use(b"", "OpenFromPeer", (blob_k23, ad23))
        if h32 is None or h23 is None:
            return False
        if not self.load(slot_id(self.pp, sid, "k32"), "g32_reg", (h32,)):
            return False
        if not self.load(slot_id(self.pp, sid, "k23"), "g23_reg", (h23,)):
            return False
        # handles are consumed by the loads above; reopen for the share
        h31 = self.use(b"", "OpenFromPeer", (blob_k31, ad31))
        h32 = self.use(b"", "OpenFromPeer", (blob_k32, ad32))
        h23 = self.use(b"", "OpenFromPeer", (blob_k23, ad23))
        if h31 is None or h32 is None or h23 is None:
            return False
        return self.load(
            slot_id(self.pp, sid, "k3"), "g3", (h23, h32, h31, K, K13)
        )

    # --- state continuity -------------------------------------------------

    def export_sealed_state(self) -> bytes:
        raw = pickle.dumps(self._state())
        return ChaCha20Poly1305(self._storage_key).encrypt(
            b"\x00" * 12, raw, b"keybox-state"
        )

    def import_sealed_state(self, blob: bytes) -> bool:
        """Reinstall a sealed state; refuses non-greater epochs unless the
        rollback guard was explicitly disabled."""
        try:
            raw = ChaCha20Poly1305(self._storage_key).decrypt(
                b"\x00" * 12, blob, b"keybox-state"
            )
        except InvalidTag:
            return False
        state = pickle.loads(raw)
        if state["epoch"] <= self._epoch and not self._allow_rollback:
            return False
        self._install_state(state)
        return True

    # --- harness-visible metadata -----------------------------------------

    def corrupt_snapshot(self) -> dict:
        """Owner-visible metadata only; never slot values, buffered payloads,
        or proving nonces."""
        return {
            "owner": self.owner,
            "epoch": self._epoch,
            "slots": sorted(s.hex() for s in self._slots),
            "fs_handles": [
                {"token": t.hex(), "sealed": rec["sealed"]}
                for t, rec in sorted(self._fs.items())
            ],
            "buffered": len(self._buf),
        }

    def corrupt_snapshot_json(self) -> str:
        return json.dumps(self.corrupt_snapshot(), sort_keys=True)

    def resident_scalar_encodings(self):
        """Canonical encodings of resident scalars, for the no-export scan."""
        if not self._testing:
            raise RuntimeError("introspection is gated to test instances")
        return [
            v.to_bytes(self.pp.scalar_width, "big") for v in self._slots.values()
        ]


def fs_verify(oracle, caller, params, pp, sid, K, proof) -> bool:
    """Public check for in-keystore proofs; runs outside any instance."""
    return fischlin.verify(
        oracle, caller, CTX_KEYBOX, params, pp, DlStatement(K, tag=(bytes(sid),)), proof
    )
