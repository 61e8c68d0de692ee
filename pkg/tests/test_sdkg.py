import pytest

from stardkg import keybox as kb
from stardkg import sdkg, usv
from stardkg.algebra import setup
from stardkg.fischlin import TEST_PARAMS
from stardkg.grocrp import Oracle
from stardkg.rng import Drbg
from stardkg.transport import Network, SeededScheduler
from stardkg.usv import UsvHandleTable

TOY = setup("toy", prime=101, trapdoor=7)


def make_env(seed, pp=TOY, params=TEST_PARAMS, parties=("P1", "P2", "P3"),
             testing=True):
    rng = Drbg(seed)
    oracle = Oracle(seed=rng.child("oracle").randint_below(1 << 62))
    net = Network(rng.child("net"))
    keyboxes = {}
    directory = {}
    for pid in parties:
        net.register_party(pid)
        box = kb.KeyBox(pid, pp, oracle, params, rng.child("kb:" + pid),
                        testing=testing)
        keyboxes[pid] = box
        directory[pid] = box.sealing_public_key()
    for box in keyboxes.values():
        box.set_directory(directory)
    table = UsvHandleTable(oracle, params, pp)
    return sdkg.SessionEnv(pp, oracle, params, net, table, rng, keyboxes,
                           testing=testing)


def run_honest(seed, pp=TOY, scheduler=None):
    env = make_env(seed, pp=pp)
    sid = env.rng.child("sid").random_bytes(16)
    session = sdkg.BaseSession(env, sid, scheduler=scheduler)
    result = session.run()
    return env, sid, session, result


def test_honest_base_run_accepts():
    env, sid, session, result = run_honest(1)
    assert result.outcome == "accepted"
    assert result.K is not None
    assert result.transcript is not None
    assert sdkg.acc_sdkg(env.oracle, env.params, env.pp, sid, "P2", "P1",
                         result.transcript) == 1


def test_published_key_matches_scalar_reconstruction():
    env, sid, session, result = run_honest(2)
    shares = sdkg.derive_all_shares_oracle(env.pp, result.sigma_table)
    assert shares.K == result.K
    assert (shares.k12 + shares.k2) % env.pp.p == shares.k
    assert (shares.k13 + shares.k3) % env.pp.p == shares.k
    assert shares.K13 + shares.k3 * env.pp.G == shares.K


def test_two_path_consistency_many_runs():
    for seed in range(40):
        env, sid, session, result = run_honest(100 + seed)
        assert result.outcome == "accepted"
        shares = sdkg.derive_all_shares_oracle(env.pp, result.sigma_table)
        p = env.pp.p
        assert (shares.k12 + shares.k2) % p == (shares.k13 + shares.k3) % p == shares.k
        assert shares.K == result.K


def test_keybox_pubs_reconstruct_key():
    env, sid, session, result = run_honest(3)
    pp = env.pp
    k12_pub = env.keyboxes["P1"].use(kb.slot_id(pp, sid, "k12"), "GetPub")
    k2_pub = env.keyboxes["P2"].use(kb.slot_id(pp, sid, "k2"), "GetPub")
    assert k12_pub + k2_pub == result.K


def test_adversarial_scheduling_still_accepts():
    env = make_env(4)
    sid = env.rng.child("sid").random_bytes(16)
    session = sdkg.BaseSession(
        env, sid, scheduler=SeededScheduler(env.rng.child("sched")))
    result = session.run()
    assert result.outcome == "accepted"


def test_shadow_state_matches_erasure_discipline():
    env, sid, session, result = run_honest(5)
    # both parties installed, so every share-deriving scalar is gone
    assert session.p1.retained == {}
    assert session.p2.retained == {}
    assert {"sigma11", "sigma13", "sigma21", "sigma31"} <= session.p1.erased
    assert {"sigma12", "sigma22", "sigma23", "sigma32"} <= session.p2.erased
    assert session.p1.state_blob() == session.p2.state_blob()  # both empty


def test_pre_install_shadow_sets():
    env = make_env(6)
    sid = env.rng.child("sid").random_bytes(16)
    session = sdkg.BaseSession(env, sid)
    # run the network without installing, by intercepting before install:
    p1 = sdkg.CenterParty(env, sid)
    p2 = sdkg.LeafParty(env, sid)
    env.net.set_handler("P1", lambda e: None)
    env.net.set_handler("P2", lambda e: None)
    env.net.init_channel(sid, "P2", "P1")
    env.net.init_channel(sid, "P1", "P2")
    r1 = p2.start()
    r2 = p1.on_round1(sdkg.encode_round1(env, sid, r1))
    r3 = p2.on_round2(sdkg.encode_round2(env, sid, r2))
    assert p1.on_round3(sdkg.encode_round3(env, sid, r3)) is True
    assert set(p1.retained) == {"sigma21", "sigma11", "sigma13", "sigma31"}
    assert set(p2.retained) == {"sigma12", "sigma22", "sigma23", "sigma32"}
    assert "sigma21" in p2.erased  # dropped right after round one was sent


def test_replayed_cid_aborts():
    env = make_env(7)
    sid = env.rng.child("sid").random_bytes(16)
    p1 = sdkg.CenterParty(env, sid)
    p2 = sdkg.LeafParty(env, sid)
    env.net.set_handler("P1", lambda e: None)
    env.net.set_handler("P2", lambda e: None)
    env.net.init_channel(sid, "P2", "P1")
    env.net.init_channel(sid, "P1", "P2")
    r1 = p2.start()
    payload = sdkg.encode_round1(env, sid, r1)
    p1.on_round1(payload)
    assert p1.aborted is None
    p1.on_round1(payload)
    assert p1.aborted == "freshness"


def test_ratio_minus_one_certificate_aborts():
    env = make_env(8)
    sid = env.rng.child("sid").random_bytes(16)

    def poison(cert):
        return usv.UsvCertificate(cert.C, env.pp.p - 1, cert.sum_point,
                                  cert.dleq_proof)

    session = sdkg.BaseSession(env, sid, mutations={"round1": {"cert": poison}})
    result = session.run()
    assert result.outcome == "aborted"
    assert result.abort_party == "P1"
    # the tampered tag breaks certificate verification before the ratio check
    assert result.abort_reason in ("usv-verify", "nu-minus-one")


def test_tamper_sigma21_aborts_with_linkage():
    env = make_env(9)
    sid = env.rng.child("sid").random_bytes(16)
    session = sdkg.BaseSession(
        env, sid, mutations={"round1": {"sigma21": lambda v: (v + 1) % 101}})
    result = session.run()
    assert result.abort_reason == "usv-linkage"


def test_derive_k13_example_and_honest_agreement():
    # M1 = 3G, B1 = 4G, X1 = 10G -> K13 = 14G - 10G = 4G
    assert sdkg.derive_k13(TOY, 3 * TOY.G, 4 * TOY.G, 10 * TOY.G) == 4 * TOY.G
    assert sdkg.derive_k13(TOY, TOY.identity(), TOY.identity(),
                           TOY.identity()).is_identity()
    for seed in range(20):
        env, sid, session, result = run_honest(300 + seed)
        shares = sdkg.derive_all_shares_oracle(env.pp, result.sigma_table)
        t2 = result.transcript.T2
        assert sdkg.derive_k13(env.pp, t2.M1, t2.B1, t2.X1) == shares.K13


def test_derive_all_shares_oracle_worked_example():
    table = {"s11": 2, "s21": 11, "s31": 4, "s12": 5, "s22": 15, "s32": 6,
             "s23": 7}
    shares = sdkg.derive_all_shares_oracle(TOY, table)
    assert shares.x1 == 17 and shares.x2 == 26
    assert shares.k == 100
    assert shares.k12 == 51 and shares.k2 == 49
    assert (shares.k12 + shares.k2) % 101 == 100
    assert shares.k3 == 18
    assert shares.k13 == 82
    # s13 implied by the linear polynomial: 2*s11 - s12 = -1 = 100
    assert (2 * 100 - shares.x1) % 101 == shares.k13


def test_all_zero_table_gives_identity_key():
    table = {k: 0 for k in ("s11", "s21", "s31", "s12", "s22", "s32", "s23")}
    shares = sdkg.derive_all_shares_oracle(TOY, table)
    assert shares.k == 0
    assert shares.K.is_identity()


def test_latent_uniformity_bijection():
    env, sid, session, result = run_honest(10)
    base = dict(result.sigma_table)
    keys = set()
    for v in range(101):
        t = dict(base, s31=v)
        keys.add(sdkg.derive_all_shares_oracle(TOY, t).K.v)
    assert len(keys) == 101
    keys = set()
    for v in range(101):
        t = dict(base, s32=v)
        keys.add(sdkg.derive_all_shares_oracle(TOY, t).K.v)
    assert len(keys) == 101


def test_finalize_consistency_oracle():
    env, sid, session, result = run_honest(11)
    tab = result.sigma_table
    shares = sdkg.derive_all_shares_oracle(env.pp, tab)
    out = sdkg.finalize_consistency(
        env.oracle, env.pp, sid, result.transcript,
        shares.x1, shares.x2, tab["s31"], tab["s32"],
    )
    assert out is not None
    assert out["k"] == shares.k
    assert out["k3"] == shares.k3
    assert out["sigma22"] == tab["s22"]
    assert out["sigma23"] == tab["s23"]
    assert out["K"] == result.K
    # inconsistent programmed values are refused
    assert sdkg.finalize_consistency(
        env.oracle, env.pp, sid, result.transcript,
        (shares.x1 + 1) % 101, shares.x2, tab["s31"], tab["s32"],
    ) is None


def test_acc_detail_on_honest_transcript():
    env, sid, session, result = run_honest(12)
    bit, reason = sdkg.acc_sdkg_detail(
        env.oracle, env.params, env.pp, sid, "P2", "P1", result.transcript)
    assert bit == 1 and reason is None


def test_registration_honest_chain():
    env = make_env(13, parties=("P1", "P2", "P3", "P4", "P5"))
    sid = env.rng.child("sid").random_bytes(16)
    result = sdkg.BaseSession(env, sid).run()
    assert result.outcome == "accepted"
    record = sdkg.base_record_from(env, sid, result)
    outcomes = sdkg.rdr_extend(
        env, record, [("P3", "P2"), ("P4", "P3"), ("P5", "P4")])
    assert all(ok for _, _, ok, _ in outcomes)
    pp = env.pp
    pubs = set()
    for pid in ("P3", "P4", "P5"):
        K3 = env.keyboxes[pid].use(kb.slot_id(pp, sid, "k3"), "GetPub")
        assert K3 is not None
        assert record.K13 + K3 == record.K
        pubs.add(K3.v)
    assert len(pubs) == 1  # every device holds the same recovery share


def test_registration_duplicate_and_bad_sponsor():
    env = make_env(14, parties=("P1", "P2", "P3", "P4"))
    sid = env.rng.child("sid").random_bytes(16)
    result = sdkg.BaseSession(env, sid).run()
    record = sdkg.base_record_from(env, sid, result)
    registered = set()
    ok, _ = sdkg.register_device(env, record, "P3", "P2", registered)
    assert ok
    ok, reason = sdkg.register_device(env, record, "P3", "P2", registered)
    assert not ok and reason == "duplicate-joiner"
    ok, reason = sdkg.register_device(env, record, "P4", "P9", registered)
    assert not ok and reason == "unauthorized-sponsor"
    ok, _ = sdkg.register_device(env, record, "P4", "P3", registered)
    assert ok


@pytest.mark.parametrize(
    "tamper,expected",
    [
        ({"ad_mismatch": True}, "install"),
        ({"wrong_scalar": 77}, "install"),
        ({"k_mismatch": True}, "key-mismatch"),
        ({"k13_mismatch": True}, "recovery-point-mismatch"),
    ],
)
def test_registration_adversarial_variants(tamper, expected):
    env = make_env(15, parties=("P1", "P2", "P3"))
    sid = env.rng.child("sid").random_bytes(16)
    result = sdkg.BaseSession(env, sid).run()
    record = sdkg.base_record_from(env, sid, result)
    before = env.keyboxes["P3"].corrupt_snapshot()["slots"]
    ok, reason = sdkg.register_device(env, record, "P3", "P2", tamper=tamper)
    assert not ok and reason == expected
    assert env.keyboxes["P3"].corrupt_snapshot()["slots"] == before


def test_registration_after_failure_still_possible():
    env = make_env(16, parties=("P1", "P2", "P3"))
    sid = env.rng.child("sid").random_bytes(16)
    result = sdkg.BaseSession(env, sid).run()
    record = sdkg.base_record_from(env, sid, result)
    ok, _ = sdkg.register_device(env, record, "P3", "P2",
                                 tamper={"k_mismatch": True})
    assert not ok
    ok, reason = sdkg.register_device(env, record, "P3", "P2")
    assert ok, reason


def test_derived_point_is_pad_commitment_on_honest_runs():
    # the point checked against the round-one digest equals the pad
    # commitment sigma32 * G on every honest run
    for seed in range(100):
        env, sid, session, result = run_honest(500 + seed)
        t = result.transcript
        M2 = usv.open_point(env.oracle, "t", env.params, env.pp, t.T1.cert)
        Y2 = M2 + 3 * t.T1.B2
        D2 = t.T3.X2 - t.T2.sigma12 * env.pp.G - Y2
        assert D2 == result.sigma_table["s32"] * env.pp.G


def test_key_agreement_across_views():
    env, sid, session, result = run_honest(17)
    shares = sdkg.derive_all_shares_oracle(env.pp, result.sigma_table)
    assert session.p1.public["K"] == session.p2.public["K"] == shares.K


def test_broadcast_key_reaches_passive_party():
    env = make_env(18)
    received = []

    def p3_handler(envlp):
        if envlp.kind == "pub":
            received.append(envlp.payload)

    env.net.set_handler("P3", p3_handler)
    sid = env.rng.child("sid").random_bytes(16)
    result = sdkg.BaseSession(env, sid).run()
    assert result.outcome == "accepted"
    assert len(received) == 1
    from stardkg.codec import decode

    kind, K = decode(received[0], env.pp)
    assert K == result.K


def test_recovery_path_reconstructs_key_after_registration():
    env = make_env(19)
    sid = env.rng.child("sid").random_bytes(16)
    result = sdkg.BaseSession(env, sid).run()
    record = sdkg.base_record_from(env, sid, result)
    ok, _ = sdkg.register_device(env, record, "P3", "P2")
    assert ok
    pp = env.pp
    k13_pub = env.keyboxes["P1"].use(kb.slot_id(pp, sid, "k13"), "GetPub")
    k3_pub = env.keyboxes["P3"].use(kb.slot_id(pp, sid, "k3"), "GetPub")
    assert k13_pub + k3_pub == result.K


def test_transcript_export_breakdown():
    env, sid, session, result = run_honest(20)
    out = sdkg.transcript_export(env, sid, result)
    assert out["complete"]
    assert bytes.fromhex(out["T1"])  # valid hex
    sizes = out["bytes"]
    assert sizes["total"] == sizes["T1"] + sizes["T2"] + sizes["T3"]
    assert sizes["pi_aff1"] == sizes["pi_aff2"]
