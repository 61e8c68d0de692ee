"""Scenario runner: honest sessions, tamper matrix, registration chains,
the rollback and equivocation demos, the commit-reveal beacon, benchmarks,
and the acceptance suite.

Every scenario is reproducible from one integer seed: the oracle, every
keystore generator, the scheduler, and all protocol randomness derive from
it, so a report (minus wall-clock timings) is a pure function of
(seed, profile, group, oracle mode).
"""

import json
import time

from . import fischlin, keybox as kb, sdkg, usv
from .algebra import setup
from .codec import Label, PartyId, encode
from .fischlin import (
    DlStatement,
    FischlinParams,
    FischlinProof,
    HonestReject,
    PRODUCTION_PARAMS,
    TEST_PARAMS,
)
from .grocrp import CTX_BEACON, CTX_DLEQ, CTX_KEYBOX, CTX_S32, CTX_UC, Oracle
from .rng import Drbg
from .sdkg import BaseSession, SessionEnv, acc_sdkg_checks, acc_sdkg_detail
from .transport import Network, SeededScheduler
from .usv import UsvHandleTable

PROFILES = {"production": PRODUCTION_PARAMS, "test": TEST_PARAMS}

TOY_PRIME = 101
TOY_TRAPDOOR = 7
# toy group large enough to embed 13-bit challenges
TOY_WIDE_PRIME = 65537
BEACON_SEED = b"stardkg-public-beacon"

# pinned seeds for the acceptance runs (recorded for reproducibility; the
# extraction criterion requires a seed whose 1000 sampled rarity searches
# all take at least two attempts in some repetition)
SEEDS = {
    "base": 1001,
    "rarity": 1003,
    "extract": 39,
    "two_path": 1005,
    "tamper": 1006,
    "one_shot": 1007,
    "registration": 1008,
    "equivocation": 1009,
    "oracle": 1010,
    "scan": 1011,
    "beacon": 1012,
}


def make_group(group, keep_trapdoor=False):
    if group == "production":
        return setup("production", beacon_seed=BEACON_SEED)
    if group == "toy":
        return setup("toy", prime=TOY_PRIME, trapdoor=TOY_TRAPDOOR,
                     keep_trapdoor=keep_trapdoor)
    if group == "toy-wide":
        return setup("toy", prime=TOY_WIDE_PRIME, trapdoor=TOY_TRAPDOOR,
                     keep_trapdoor=keep_trapdoor)
    raise ValueError("unknown group %r" % group)


def build_env(seed, profile="test", group="toy", oracle_mode="ideal",
              parties=("P1", "P2", "P3"), testing=True, keep_trapdoor=False,
              allow_state_rollback=False):
    pp = make_group(group, keep_trapdoor=keep_trapdoor)
    params = PROFILES[profile] if isinstance(profile, str) else profile
    rng = Drbg(seed)
    oracle = Oracle(mode=oracle_mode,
                    seed=rng.child("oracle").randint_below(1 << 62))
    net = Network(rng.child("net"))
    keyboxes = {}
    directory = {}
    for pid in parties:
        net.register_party(pid)
        box = kb.KeyBox(pid, pp, oracle, params, rng.child("kb:" + pid),
                        testing=testing,
                        allow_state_rollback=allow_state_rollback)
        keyboxes[pid] = box
        directory[pid] = box.sealing_public_key()
    for box in keyboxes.values():
        box.set_directory(directory)
    table = UsvHandleTable(oracle, params, pp)
    return SessionEnv(pp, oracle, params, net, table, rng, keyboxes,
                      testing=testing)


class ScanRegistry:
    """Accumulates visible artifacts and resident-scalar patterns across
    scenarios; patterns narrower than 8 bytes are skipped (a toy-group
    scalar is 1 byte wide, so substring matching would be meaningless)."""

    def __init__(self):
        self.artifacts = []
        self.patterns = []

    def add_artifact(self, label, blob):
        if isinstance(blob, str):
            blob = blob.encode()
        self.artifacts.append((label, bytes(blob)))

    def add_patterns(self, encodings):
        for enc in encodings:
            if len(enc) >= 8:
                self.patterns.append(bytes(enc))

    def harvest_env(self, env, label):
        for i, payload in enumerate(env.net.all_payloads):
            self.add_artifact("%s:wire[%d]" % (label, i), payload)
        for ev in env.net.adversary_view:
            if ev.payload is not None:
                self.add_artifact("%s:view" % label, ev.payload)
        for pid, box in env.keyboxes.items():
            self.add_artifact("%s:snapshot:%s" % (label, pid),
                              box.corrupt_snapshot_json())
            self.add_patterns(box.resident_scalar_encodings())

    def violations(self):
        hits = []
        for pattern in self.patterns:
            for label, blob in self.artifacts:
                if pattern in blob:
                    hits.append((pattern.hex(), label))
        return hits


SCAN = ScanRegistry()


def _json_default(v):
    if isinstance(v, bytes):
        return v.hex()
    if hasattr(v, "point_bytes"):
        return v.point_bytes().hex()
    raise TypeError(type(v).__name__)


def report_json(report: dict) -> str:
    trimmed = {k: v for k, v in report.items() if not k.endswith("_secs")}
    return json.dumps(trimmed, sort_keys=True, default=_json_default)


# --- scenarios ---------------------------------------------------------------

def run_base(profile="production", group="production", seed=0,
             oracle_mode="ideal", scan=None) -> dict:
    """Honest end-to-end session with size and proof-statistics accounting."""
    t0 = time.monotonic()
    env = build_env(seed, profile=profile, group=group,
                    oracle_mode=oracle_mode)
    sid = env.rng.child("sid").random_bytes(16)
    session = BaseSession(env, sid,
                          scheduler=SeededScheduler(env.rng.child("sched")))
    result = session.run()
    pp, params = env.pp, env.params

    report = {
        "scenario": "base",
        "profile": profile if isinstance(profile, str) else repr(profile),
        "group": group,
        "seed": seed,
        "outcome": result.outcome,
        "abort": result.abort_reason,
    }
    if result.outcome == "accepted":
        t = result.transcript
        pi_dl = len(fischlin.pack_proof(pp, params, t.T2.aff1[0]))
        pi_aff = sum(
            len(fischlin.pack_proof(pp, params, pr)) for pr in t.T2.aff1
        )
        cert_bytes = len(t.T1.cert.wire(pp, params))
        sizes = {
            "pi_dl": pi_dl,
            "pi_aff": pi_aff,
            "cert": cert_bytes,
            "round1": result.wire_sizes.get("r1"),
            "round2": result.wire_sizes.get("r2"),
            "round3": result.wire_sizes.get("r3"),
        }
        sizes["transcript_total"] = (
            sizes["round1"] + sizes["round2"] + sizes["round3"]
        )
        report["sizes"] = sizes
        report["public_key"] = result.K.point_bytes().hex()
        trials = result.proof_trials
        report["proof_stats"] = {
            "repetitions": len(trials),
            "mean_trials": sum(trials) / len(trials) if trials else None,
            "honest_rejects": result.honest_rejects,
        }
        report["transcript"] = sdkg.transcript_export(env, sid, result)
        bit, reason = acc_sdkg_detail(
            env.oracle, params, pp, sid, "P2", "P1", result.transcript
        )
        checks = {"acceptance_predicate": bit == 1}
        if result.sigma_table:
            shares = sdkg.derive_all_shares_oracle(pp, result.sigma_table)
            checks["two_path"] = (
                (shares.k12 + shares.k2) % pp.p
                == (shares.k13 + shares.k3) % pp.p
                == shares.k
            )
            checks["key_matches_shares"] = shares.K == result.K
        report["invariants"] = checks
    report["elapsed_secs"] = time.monotonic() - t0
    if scan is not None:
        scan.harvest_env(env, "base[%s/%s]" % (profile, group))
        scan.add_artifact("base-report", report_json(report))
    return report


def _perturb_pair(pp):
    def fn(pair):
        py, pd = pair
        a, e, z = py.triples[0]
        bad = FischlinProof("dl", ((a, e, (z + 1) % pp.p),) + py.triples[1:])
        return (bad, pd)

    return fn


def _flip(data: bytes) -> bytes:
    return bytes([data[0] ^ 0x01]) + data[1:]


def tamper_cases(pp):
    """One live-run mutation and one transcript mutation per check; the
    transcript mutations violate exactly their target check."""
    live = {
        "C1": {"round1": {"d": _flip}},
        "C2": {"round1": {"sigma21": lambda v: (v + 1) % pp.p}},
        "C3": {"round2": {"aff1": _perturb_pair(pp)}},
        "C4": {"round3": {"aff2": _perturb_pair(pp)}},
        "C5": {"round1": {"h32": _flip}},
        "C6": {"round3": {"K_rec": lambda K: K + pp.G}},
    }

    def mut_c1(T):
        T.T1.d = _flip(T.T1.d)

    def mut_c2(T):
        # shift the handed-over evaluation while keeping the aggregate,
        # derived point, and recovered key consistent
        T.T1.sigma21 = (T.T1.sigma21 + 1) % pp.p
        T.T2.X1 = T.T2.X1 + pp.G
        T.T3.K_rec = T.T3.K_rec + 3 * pp.G

    def mut_c3(T):
        py, pd = T.T2.aff1
        a, e, z = py.triples[0]
        T.T2.aff1 = (
            FischlinProof("dl", ((a, e, (z + 1) % pp.p),) + py.triples[1:]),
            pd,
        )

    def mut_c4(T):
        py, pd = T.T3.aff2
        a, e, z = py.triples[0]
        T.T3.aff2 = (
            FischlinProof("dl", ((a, e, (z + 1) % pp.p),) + py.triples[1:]),
            pd,
        )

    def mut_c5(T):
        T.T1.h32 = _flip(T.T1.h32)

    def mut_c6(T):
        T.T3.K_rec = T.T3.K_rec + pp.G

    transcript = {"C1": mut_c1, "C2": mut_c2, "C3": mut_c3, "C4": mut_c4,
                  "C5": mut_c5, "C6": mut_c6}
    return live, transcript


def run_tamper_matrix(seed=0, profile="test", group="toy") -> dict:
    """Six single-check violations, each matched to a party abort."""
    env0 = build_env(seed, profile=profile, group=group)
    pp = env0.pp
    sid0 = env0.rng.child("sid").random_bytes(16)
    honest = BaseSession(env0, sid0).run()
    assert honest.outcome == "accepted"
    live, transcript_muts = tamper_cases(pp)

    report = {"scenario": "tamper", "seed": seed, "cases": {}, "ok": True}
    baseline_bit, baseline_reason = acc_sdkg_detail(
        env0.oracle, env0.params, pp, sid0, "P2", "P1", honest.transcript
    )
    report["honest_fixture"] = {"acc": baseline_bit, "reason": baseline_reason}
    report["ok"] &= baseline_bit == 1

    for check in ("C1", "C2", "C3", "C4", "C5", "C6"):
        # transcript-level: rebuild an honest run, then mutate one record
        env = build_env(seed + 1, profile=profile, group=group)
        sid = env.rng.child("sid").random_bytes(16)
        res = BaseSession(env, sid).run()
        T = res.transcript
        transcript_muts[check](T)
        parse_ok, checks = acc_sdkg_checks(
            env.oracle, env.params, pp, sid, "P2", "P1", T
        )
        exact = parse_ok and not checks[check] and all(
            v for c, v in checks.items() if c != check
        )
        bit, reason = acc_sdkg_detail(
            env.oracle, env.params, pp, sid, "P2", "P1", T
        )

        # live: a corrupted sender applies the matching mutation in-protocol
        env_live = build_env(seed + 2, profile=profile, group=group)
        sid_live = env_live.rng.child("sid").random_bytes(16)
        res_live = BaseSession(env_live, sid_live, mutations=live[check]).run()
        expected_abort = sdkg.ABORT_REASON_FOR_CHECK[check]
        case = {
            "acc": bit,
            "failed_check": reason,
            "exactly_target": exact,
            "abort_party": res_live.abort_party,
            "abort_reason": res_live.abort_reason,
            "abort_matches": res_live.abort_reason == expected_abort,
        }
        case["ok"] = (bit == 0 and reason == check and exact
                      and case["abort_matches"])
        report["cases"][check] = case
        report["ok"] &= case["ok"]
    return report


def run_registration(seed=0, n=5, profile="test", group="toy",
                     adversarial=True, scan=None) -> dict:
    """Honest sponsorship chain plus the four adversarial variants."""
    parties = ("P1", "P2") + tuple("P%d" % (i + 3) for i in range(n))
    env = build_env(seed, profile=profile, group=group, parties=parties)
    pp = env.pp
    sid = env.rng.child("sid").random_bytes(16)
    base = BaseSession(env, sid).run()
    assert base.outcome == "accepted"
    record = sdkg.base_record_from(env, sid, base)

    joins = []
    prev = "P2"
    for i in range(n):
        joiner = "P%d" % (i + 3)
        joins.append((joiner, prev))
        prev = joiner
    outcomes = sdkg.rdr_extend(env, record, joins)
    recovery_pubs = set()
    consistent = True
    for joiner, _ in joins:
        K3 = env.keyboxes[joiner].use(kb.slot_id(pp, sid, "k3"), "GetPub")
        if K3 is None:
            consistent = False
            continue
        recovery_pubs.add(K3.point_bytes())
        consistent &= record.K13 + K3 == record.K

    report = {
        "scenario": "registration",
        "seed": seed,
        "chain": [
            {"joiner": j, "sponsor": s, "ok": ok, "reason": reason}
            for j, s, ok, reason in outcomes
        ],
        "all_registered": all(ok for _, _, ok, _ in outcomes),
        "single_recovery_share": len(recovery_pubs) == 1,
        "shares_consistent_with_key": consistent,
    }
    report["ok"] = (report["all_registered"]
                    and report["single_recovery_share"]
                    and report["shares_consistent_with_key"])

    if adversarial:
        variants = {
            "ad_mismatch": ({"ad_mismatch": True}, "install"),
            "wrong_scalar": ({"wrong_scalar": 77}, "install"),
            "k_mismatch": ({"k_mismatch": True}, "key-mismatch"),
            "k13_mismatch": ({"k13_mismatch": True}, "recovery-point-mismatch"),
        }
        adv_report = {}
        for name, (tamper, expected) in variants.items():
            env_a = build_env(seed + 10, profile=profile, group=group)
            sid_a = env_a.rng.child("sid").random_bytes(16)
            base_a = BaseSession(env_a, sid_a).run()
            record_a = sdkg.base_record_from(env_a, sid_a, base_a)
            before = env_a.keyboxes["P3"].corrupt_snapshot()["slots"]
            ok, reason = sdkg.register_device(
                env_a, record_a, "P3", "P2", tamper=tamper
            )
            after = env_a.keyboxes["P3"].corrupt_snapshot()["slots"]
            adv_report[name] = {
                "denied": not ok,
                "reason": reason,
                "reason_expected": expected,
                "keybox_unchanged": before == after,
                "ok": (not ok) and reason == expected and before == after,
            }
            report["ok"] &= adv_report[name]["ok"]
        report["adversarial"] = adv_report
    if scan is not None:
        scan.harvest_env(env, "registration")
    return report


def run_one_shot_negatives(seed=0, group="toy") -> dict:
    """Sealed-handle and rollback behavior, both with the guard and with the
    continuity knob deliberately disabled (demonstrating share recovery)."""
    from . import sigma

    pp = make_group(group)
    rng = Drbg(seed)
    oracle = Oracle(seed=rng.child("oracle").randint_below(1 << 62))
    guarded = kb.KeyBox("G", pp, oracle, TEST_PARAMS, rng.child("g"))
    slot = kb.slot_id(pp, b"sid", "k12")
    guarded.load(slot, "g12", (2, 3, 4))
    K = guarded.use(slot, "GetPub")
    snap = guarded.export_sealed_state()
    handle, _ = guarded.use(slot, "FS.Start", (b"sid-A", K))
    first = guarded.use(slot, "FS.Prove", handle)
    second = guarded.use(slot, "FS.Prove", handle)
    rollback_refused = not guarded.import_sealed_state(snap)

    exposed = kb.KeyBox("E", pp, oracle, TEST_PARAMS, rng.child("e"),
                        allow_state_rollback=True, testing=True)
    exposed.load(slot, "g12", (2, 3, 4))
    K2 = exposed.use(slot, "GetPub")
    snap2 = exposed.export_sealed_state()
    h1, _ = exposed.use(slot, "FS.Start", (b"sid-A", K2))
    p1 = exposed.use(slot, "FS.Prove", h1)
    forced = exposed.import_sealed_state(snap2)
    h2, _ = exposed.use(slot, "FS.Start", (b"sid-B", K2))
    p2 = exposed.use(slot, "FS.Prove", h2)
    recovered = None
    if forced and p1 is not None and p2 is not None:
        for (a1, e1, z1), (a2, e2, z2) in zip(p1.triples, p2.triples):
            if a1 == a2 and e1 != e2:
                recovered = sigma.dl_extract(pp, a1, e1, z1, e2, z2)
                break
    expected = (2 + 3 + 4) * 3 % pp.p
    report = {
        "scenario": "one-shot",
        "seed": seed,
        "first_prove_ok": first is not None,
        "second_prove_rejected": second is None,
        "rollback_refused_by_guard": rollback_refused,
        "forced_rollback_accepted": forced,
        "share_recovered": recovered is not None,
        "recovered_matches": recovered is not None
        and recovered * pp.G == K2 and recovered == expected,
    }
    report["ok"] = all(
        report[k]
        for k in ("first_prove_ok", "second_prove_rejected",
                  "rollback_refused_by_guard", "forced_rollback_accepted",
                  "share_recovered", "recovered_matches")
    )
    return report


def run_equivocation_demo(seed=0, trials=100, group="toy") -> dict:
    """Craft equivocating certificate pairs with the toy trapdoor and run
    the reduction; refuses to run without trapdoor access."""
    pp = make_group(group, keep_trapdoor=True)
    if not pp.has_trapdoor:
        return {"scenario": "equivocation", "refused": True, "ok": False}
    params = FischlinParams(6, 3, 8, 8)  # extraction failure odds 2^-24
    rng = Drbg(seed)
    oracle = Oracle(seed=rng.child("oracle").randint_below(1 << 62))
    x = pp.trapdoor
    successes = 0
    for trial in range(trials):
        caller = "forger%d" % trial
        while True:
            m = 1 + rng.randint_below(pp.p - 1)
            r = 1 + rng.randint_below(pp.p - 1)
            m2 = (m - x) % pp.p
            r2 = (r + 1) % pp.p
            if (m2 != 0 and r != (-m) % pp.p and r2 != 0
                    and r2 != (-m2) % pp.p):
                break
        c1 = usv._build_cert(oracle, caller, params, pp, m, r, rng)
        c2 = usv._build_cert(oracle, caller, params, pp, m2, r2, rng)
        got = usv.equivocation_to_dl(oracle.log_of(caller), params, pp, c1, c2)
        if got == x:
            successes += 1
    report = {
        "scenario": "equivocation",
        "seed": seed,
        "trials": trials,
        "successes": successes,
        "ok": successes == trials,
    }
    return report


def run_beacon(seed=0, parties=3, withhold=(), grind=False,
               group="toy") -> dict:
    """Commit-reveal randomness from certificate openings.

    Commit broadcasts only the commitment point; reveal broadcasts the whole
    certificate, whose verified opening is the party's contribution.  A
    withheld or invalid reveal stalls the beacon; a post-commit swap is
    caught by the handle registry (duplicate commits invalidate the handle).
    """
    pids = tuple("B%d" % (i + 1) for i in range(parties))
    env = build_env(seed, profile="test", group=group, parties=pids)
    pp = env.pp
    sid = env.rng.child("sid").random_bytes(16)
    withhold = {pids[i] for i in withhold}
    certs, cids = {}, {}
    for pid in pids:
        cert = env.keyboxes[pid].use(b"", "USV.Cert")
        cid = env.rng.child("cid:" + pid).random_bytes(16)
        env.usv_table.commit(sid, cid, pid, "beacon", cert)
        env.net.pub_publish(
            sid, pid, encode((Label("beacon-commit"), PartyId(pid), cid,
                              cert.C), pp)
        )
        certs[pid], cids[pid] = cert, cid
    if grind:
        pid = pids[0]
        regrind = env.keyboxes[pid].use(b"", "USV.Cert")
        env.usv_table.commit(sid, cids[pid], pid, "beacon", regrind)
        certs[pid] = regrind

    contributions = {}
    flagged = []
    for pid in pids:
        if pid in withhold:
            continue
        cert = certs[pid]
        env.net.pub_publish(
            sid, pid,
            encode((Label("beacon-reveal"), PartyId(pid), cids[pid],
                    cert.wire(pp, env.params)), pp),
        )
        if env.usv_table.verify(sid, cids[pid], pid, "beacon", cert) != 1:
            flagged.append(pid)
            continue
        contributions[pid] = usv.open_point(
            env.oracle, "beacon", env.params, pp, cert
        )
    report = {"scenario": "beacon", "seed": seed, "parties": parties,
              "withheld": sorted(withhold), "flagged": flagged}
    if len(contributions) < parties:
        report["status"] = "stalled"
        report["commits"] = sorted(c.hex() for c in cids.values())
    else:
        total = pp.identity()
        for point in contributions.values():
            total = total + point
        value = env.oracle.query(
            "beacon", CTX_BEACON, encode((sid, total), pp)
        )
        report["status"] = "ok"
        report["value"] = value.hex()
    return report


def bench(seed=0, reps=(8, 16, 32), group="production") -> dict:
    """Prove/verify timings, trial histograms, and linear-in-r checks."""
    if group == "toy":
        group = "toy-wide"  # 13-bit challenges need the larger toy order
    pp = make_group(group)
    rng = Drbg(seed)
    oracle = Oracle(seed=rng.child("oracle").randint_below(1 << 62))
    rows = {}
    for r in reps:
        params = FischlinParams(13, 8, r, r)
        m = rng.randint_below(pp.p)
        stmt = DlStatement(m * pp.G, tag=(b"bench", Label("b")))
        prove_t, verify_t, trials, size = [], [], [], None
        proofs = []
        for _ in range(3):
            t0 = time.monotonic()
            proof = fischlin.prove(oracle, "bench", CTX_UC, params, pp, stmt,
                                   m, rng)
            prove_t.append(time.monotonic() - t0)
            if isinstance(proof, HonestReject):
                continue
            trials.extend(proof.trials)
            size = len(fischlin.pack_proof(pp, params, proof))
            proofs.append(proof)
        for proof in proofs * 2:
            t0 = time.monotonic()
            ok = fischlin.verify(oracle, "bench-v", CTX_UC, params, pp, stmt,
                                 proof)
            verify_t.append(time.monotonic() - t0)
            assert ok
        rows[r] = {
            "prove_secs": sum(prove_t) / len(prove_t),
            "verify_secs": sum(verify_t) / len(verify_t),
            "mean_trials": sum(trials) / len(trials),
            "samples": len(trials),
            "proof_bytes": size,
        }
    report = {"scenario": "bench", "seed": seed, "rows": rows, "ok": True}
    reps = sorted(rows)
    all_trials = []
    for a, b in zip(reps, reps[1:]):
        ratio = rows[b]["verify_secs"] / rows[a]["verify_secs"]
        scale = b / a
        rows[b]["verify_ratio_vs_r%d" % a] = ratio
        if rows[a]["verify_secs"] >= 0.002:
            # sub-millisecond verification (toy groups) is below the
            # wall-clock measurement floor; the ratio is asserted only
            # when the baseline is measurable
            report["ok"] &= scale * 0.75 <= ratio <= scale * 1.25
        report["ok"] &= rows[b]["proof_bytes"] == rows[a]["proof_bytes"] * scale
    for r in reps:
        all_trials.append(rows[r]["mean_trials"] * rows[r]["samples"])
        total = sum(rows[x]["samples"] for x in reps)
    report["aggregate_mean_trials"] = sum(all_trials) / total
    # few samples per row: check the aggregate against the expected 2^b
    report["ok"] &= 205 <= report["aggregate_mean_trials"] <= 307
    return report


# --- acceptance criteria ------------------------------------------------------

def criterion_1_sizes():
    report = run_base(profile="production", group="production",
                      seed=SEEDS["base"], scan=SCAN)
    if report["outcome"] != "accepted":
        return False, "base run aborted: %s" % report["abort"]
    s = report["sizes"]
    kib = 1024.0
    ok = (
        2.0 * kib <= s["pi_dl"] <= 2.3 * kib
        and 4.0 * kib <= s["pi_aff"] <= 4.6 * kib
        and 3.0 * kib <= s["cert"] <= 3.4 * kib
        and 11 * kib <= s["transcript_total"] <= 13.5 * kib
        and report["invariants"]["acceptance_predicate"]
    )
    detail = ("pi_dl=%.2f KiB pi_aff=%.2f KiB cert=%.2f KiB total=%.2f KiB"
              % (s["pi_dl"] / kib, s["pi_aff"] / kib, s["cert"] / kib,
                 s["transcript_total"] / kib))
    return ok, detail


def criterion_2_bounds():
    import math

    lg = fischlin.soundness_bound_log2(PRODUCTION_PARAMS, 0)
    ok = -195.4 <= lg <= -194.4
    for q in (1, 1024, 1 << 40):
        lq = fischlin.soundness_bound_log2(PRODUCTION_PARAMS, q)
        ok &= abs(lq - (math.log2(q + 1) + lg)) < 1e-9
    hr = math.log2(fischlin.honest_reject_bound(PRODUCTION_PARAMS))
    ok &= -41.5 <= hr <= -40.9
    return ok, "log2 soundness=%0.2f (+log2(Q+1)), log2 honest-reject=%0.2f" % (lg, hr)


def criterion_3_rarity():
    pp = make_group("toy-wide")
    rng = Drbg(SEEDS["rarity"])
    oracle = Oracle(seed=rng.child("oracle").randint_below(1 << 62))
    counts = []
    i = 0
    while len(counts) < 1000:
        m = rng.randint_below(pp.p)
        stmt = DlStatement(m * pp.G, tag=(b"rarity", Label("c3-%d" % i)))
        proof = fischlin.prove(oracle, "c3", CTX_UC, PRODUCTION_PARAMS, pp,
                               stmt, m, rng)
        i += 1
        if isinstance(proof, HonestReject):
            continue
        counts.extend(proof.trials)
    mean = sum(counts) / len(counts)
    return 230 <= mean <= 282, "mean trials %.1f over %d repetitions" % (
        mean, len(counts))


def criterion_4_extraction():
    pp = make_group("toy")
    rng = Drbg(SEEDS["extract"])
    oracle = Oracle(seed=rng.child("oracle").randint_below(1 << 62))
    extract_calls = [0]

    def counted_extract(*args, **kw):
        extract_calls[0] += 1
        return fischlin.extract(*args, **kw)

    exact = 0
    for i in range(1000):
        caller = "prover%d" % i
        m = rng.randint_below(pp.p)
        stmt = DlStatement(m * pp.G, tag=(b"c4", Label("x")))
        proof = fischlin.prove(oracle, caller, CTX_UC, TEST_PARAMS, pp, stmt,
                               m, rng)
        if isinstance(proof, HonestReject):
            return False, "unexpected honest reject at trial %d" % i
        got = counted_extract(oracle.log_of(caller), CTX_UC, TEST_PARAMS, pp,
                              stmt, proof)
        if got == m:
            exact += 1
    honest_calls = extract_calls[0]
    # simulator-generated proofs verify but are never extraction targets
    sim_ok = 0
    for i in range(100):
        stmt = DlStatement(rng.randint_below(pp.p) * pp.G,
                           tag=(b"c4sim%d" % i, Label("s")))
        proof = fischlin.simulate(oracle, CTX_UC, TEST_PARAMS, pp, stmt,
                                  rng.child("sim%d" % i))
        if proof is not None and fischlin.verify(
            oracle, "v", CTX_UC, TEST_PARAMS, pp, stmt, proof
        ):
            sim_ok += 1
    ok = exact == 1000 and extract_calls[0] == honest_calls == 1000 and sim_ok == 100
    return ok, ("%d/1000 exact extractions; %d simulated proofs verified, "
                "0 extraction attempts on them" % (exact, sim_ok))


def criterion_5_two_path():
    failures = 0
    for i in range(1000):
        env = build_env(SEEDS["two_path"] + i, profile="test", group="toy")
        sid = env.rng.child("sid").random_bytes(16)
        result = BaseSession(env, sid).run()
        if result.outcome != "accepted":
            failures += 1
            continue
        pp = env.pp
        shares = sdkg.derive_all_shares_oracle(pp, result.sigma_table)
        if not (
            (shares.k12 + shares.k2) % pp.p == shares.k
            and (shares.k13 + shares.k3) % pp.p == shares.k
            and shares.K == result.K
            and shares.K13 + shares.k3 * pp.G == shares.K
        ):
            failures += 1
    return failures == 0, "%d/1000 honest runs satisfied both paths" % (
        1000 - failures)


def criterion_6_bijection():
    pp = make_group("toy")
    table = {"s11": 2, "s21": 11, "s31": 4, "s12": 5, "s22": 15, "s32": 6,
             "s23": 7}
    ok = True
    for pad in ("s31", "s32"):
        keys = set()
        for v in range(pp.p):
            t = dict(table)
            t[pad] = v
            keys.add(sdkg.derive_all_shares_oracle(pp, t).K.v)
        ok &= len(keys) == pp.p
    return ok, "both pad sweeps produced %d distinct keys" % pp.p


def criterion_7_tamper():
    report = run_tamper_matrix(seed=SEEDS["tamper"])
    detail = ", ".join(
        "%s:%s" % (c, "ok" if case["ok"] else "FAIL")
        for c, case in report["cases"].items()
    )
    return report["ok"], detail


def criterion_8_one_shot():
    report = run_one_shot_negatives(seed=SEEDS["one_shot"])
    detail = ("second prove rejected=%s, guard refused rollback=%s, "
              "forced rollback recovered share=%s" % (
                  report["second_prove_rejected"],
                  report["rollback_refused_by_guard"],
                  report["recovered_matches"]))
    return report["ok"], detail


def criterion_9_registration():
    report = run_registration(seed=SEEDS["registration"], n=5, scan=SCAN)
    adv = report.get("adversarial", {})
    detail = "chain=%s, adversarial=[%s]" % (
        "ok" if report["all_registered"] else "FAIL",
        ", ".join("%s:%s" % (k, "ok" if v["ok"] else "FAIL")
                  for k, v in adv.items()),
    )
    return report["ok"], detail


def criterion_10_equivocation():
    report = run_equivocation_demo(seed=SEEDS["equivocation"], trials=100)
    refused = run_equivocation_demo(seed=1, trials=1, group="production")
    precondition_ok = False
    try:
        pp = make_group("toy")
        rng = Drbg(3)
        oracle = Oracle(seed=4)
        c = usv.cert(oracle, "p", TEST_PARAMS, pp, 9, rng)
        usv.equivocation_to_dl([], TEST_PARAMS, pp, c, c)
    except ValueError:
        precondition_ok = True
    ok = (report["ok"] and refused.get("refused") is True
          and precondition_ok)
    return ok, "%d/%d reductions recovered the trapdoor; production refused" % (
        report["successes"], report["trials"])


def criterion_11_oracle():
    oracle = Oracle(seed=SEEDS["oracle"])
    ok = not oracle.sim_program(CTX_S32, b"x", bytes(32))
    ok &= not oracle.sim_program(CTX_BEACON, b"x", bytes(32))
    oracle.query("adv", CTX_UC, b"taken")
    ok &= not oracle.sim_program(CTX_UC, b"taken", bytes(32))
    ok &= oracle.sim_program(CTX_UC, b"fresh", b"\x07" * 32)
    ok &= oracle.query("p", CTX_UC, b"fresh") == b"\x07" * 32
    before = oracle.query("p", CTX_DLEQ, b"cell")
    for i in range(200):
        oracle.query("p", CTX_S32, b"noise%d" % i)
        oracle.sim_program(CTX_UC, b"prog%d" % i, bytes(32))
    ok &= oracle.query("p", CTX_DLEQ, b"cell") == before
    ok &= oracle.query("p", CTX_UC, b"same-x") != oracle.query(
        "p", CTX_KEYBOX, b"same-x")
    return ok, "programming restricted; contexts isolated"


def criterion_12_no_export():
    # a fresh production scenario with sealing, proving, and snapshots, on
    # top of everything earlier criteria harvested into the registry
    env = build_env(SEEDS["scan"], profile="production", group="production")
    sid = env.rng.child("sid").random_bytes(16)
    result = BaseSession(env, sid).run()
    if result.outcome != "accepted":
        return False, "scan scenario base run aborted"
    record = sdkg.base_record_from(env, sid, result)
    ok, _reason = sdkg.register_device(env, record, "P3", "P2")
    if not ok:
        return False, "scan scenario registration failed"
    pp = env.pp
    slot = kb.slot_id(pp, sid, "k12")
    K12 = env.keyboxes["P1"].use(slot, "GetPub")
    handle, _ = env.keyboxes["P1"].use(slot, "FS.Start", (sid, K12))
    proof = env.keyboxes["P1"].use(slot, "FS.Prove", handle)
    SCAN.add_artifact("scan:linos-proof",
                      fischlin.pack_proof(pp, env.params, proof))
    SCAN.add_artifact("scan:k12-pub", K12.point_bytes())
    SCAN.harvest_env(env, "scan")
    hits = SCAN.violations()
    detail = "%d resident patterns x %d artifacts, %d hits" % (
        len(SCAN.patterns), len(SCAN.artifacts), len(hits))
    return not hits, detail


CRITERIA = (
    ("01 transcript sizes", criterion_1_sizes),
    ("02 soundness bounds", criterion_2_bounds),
    ("03 rarity-search statistics", criterion_3_rarity),
    ("04 straight-line extraction", criterion_4_extraction),
    ("05 two-path key consistency", criterion_5_two_path),
    ("06 latent-uniformity bijection", criterion_6_bijection),
    ("07 tamper matrix", criterion_7_tamper),
    ("08 one-shot / state continuity", criterion_8_one_shot),
    ("09 registration suite", criterion_9_registration),
    ("10 equivocation reduction", criterion_10_equivocation),
    ("11 oracle contract", criterion_11_oracle),
    ("12 no-export scan", criterion_12_no_export),
)


def run_acceptance(stream=None) -> list:
    """Run every acceptance criterion, print one line per criterion."""
    results = []
    for name, fn in CRITERIA:
        t0 = time.monotonic()
        try:
            passed, detail = fn()
        except Exception as exc:  # a crash is a failure, not an error
            passed, detail = False, "exception: %r" % exc
        elapsed = time.monotonic() - t0
        line = "criterion %s: %s (%s) [%.1fs]" % (
            name, "PASS" if passed else "FAIL", detail, elapsed)
        if stream is not None:
            print(line, file=stream)
        results.append({"criterion": name, "passed": passed,
                        "detail": detail, "elapsed_secs": elapsed})
    return results
