import math

import pytest

from stardkg import fischlin
from stardkg.algebra import setup
from stardkg.codec import U64, Label, encode
from stardkg.fischlin import (
    AffineStatement,
    DleqStatement,
    DlStatement,
    FischlinParams,
    HonestReject,
    PRODUCTION_PARAMS,
    TEST_PARAMS,
    ProverError,
    prove,
    prove_affine,
    simulate,
    soundness_bound_log2,
    verify,
    verify_affine,
)
from stardkg.grocrp import CTX_KEYBOX, CTX_UC, Oracle
from stardkg.rng import Drbg

TOY = setup("toy", prime=101, trapdoor=7)
TOY2 = setup("toy", prime=65537, trapdoor=7)  # large enough for 13-bit challenges
PROD = setup("production", beacon_seed=b"fischlin-test")


def _dl_instance(pp, rng, tag=()):
    m = rng.randint_below(pp.p)
    return DlStatement(m * pp.G, tag=tag), m


def test_hash_input_prefix_matches_naive_encoding():
    rng = Drbg(1)
    stmt, _ = _dl_instance(TOY, rng, tag=(b"sid0", Label("lbl")))
    avec = tuple(rng.randint_below(101) * TOY.G for _ in range(4))
    prefix, suffix = fischlin.hash_input_builder(TOY, stmt, avec)
    for i, e, z in ((0, 0, 0), (3, 15, 100), (1, 7, 42)):
        naive = encode((stmt.encodable(), avec, U64(i), U64(e), z), TOY)
        assert prefix + suffix(i, e, z) == naive


def test_prove_verify_round_trip_dl_both_groups():
    oracle = Oracle(seed=2)
    rng = Drbg(3)
    for pp in (TOY, PROD):
        for _ in range(100):
            stmt, m = _dl_instance(pp, rng, tag=(b"s", Label("x")))
            proof = prove(oracle, "p", CTX_UC, TEST_PARAMS, pp, stmt, m, rng)
            if isinstance(proof, HonestReject):
                continue
            assert len(proof.triples) == TEST_PARAMS.r
            assert verify(oracle, "v", CTX_UC, TEST_PARAMS, pp, stmt, proof)


def test_prove_verify_dleq_both_groups():
    oracle = Oracle(seed=4)
    rng = Drbg(5)
    for pp in (TOY, PROD):
        for _ in range(100):
            r = 1 + rng.randint_below(pp.p - 1)
            stmt = DleqStatement(r * pp.G, r * pp.H)
            proof = prove(oracle, "p", CTX_UC, TEST_PARAMS, pp, stmt, r, rng)
            if isinstance(proof, HonestReject):
                continue
            assert verify(oracle, "v", CTX_UC, TEST_PARAMS, pp, stmt, proof)


def test_witness_mismatch_raises():
    oracle = Oracle(seed=6)
    rng = Drbg(7)
    stmt, m = _dl_instance(TOY, rng)
    with pytest.raises(ProverError):
        prove(oracle, "p", CTX_UC, TEST_PARAMS, TOY, stmt, (m + 1) % 101, rng)


def test_production_proof_has_32_triples_and_verifies():
    oracle = Oracle(seed=8)
    rng = Drbg(9)
    stmt, m = _dl_instance(TOY2, rng, tag=(b"sid", Label("aff1.Y")))
    proof = prove(oracle, "p", CTX_UC, PRODUCTION_PARAMS, TOY2, stmt, m, rng)
    assert not isinstance(proof, HonestReject)
    assert len(proof.triples) == 32
    assert verify(oracle, "v", CTX_UC, PRODUCTION_PARAMS, TOY2, stmt, proof)


def test_tampered_response_fails():
    oracle = Oracle(seed=10)
    rng = Drbg(11)
    stmt, m = _dl_instance(TOY, rng)
    proof = prove(oracle, "p", CTX_UC, TEST_PARAMS, TOY, stmt, m, rng)
    a, e, z = proof.triples[0]
    bad = fischlin.FischlinProof("dl", ((a, e, (z + 1) % 101),) + proof.triples[1:])
    assert not verify(oracle, "v", CTX_UC, TEST_PARAMS, TOY, stmt, bad)


def test_permuted_triples_fail():
    # swapping repetitions permutes the commitment vector, so every rarity
    # hash input changes and the slack test collapses
    params = FischlinParams(13, 8, 8, 8)
    oracle = Oracle(seed=12)
    rng = Drbg(13)
    for _ in range(100):
        stmt, m = _dl_instance(TOY2, rng)
        proof = prove(oracle, "p", CTX_UC, params, TOY2, stmt, m, rng)
        if isinstance(proof, HonestReject):
            continue
        tr = list(proof.triples)
        tr[0], tr[1] = tr[1], tr[0]
        bad = fischlin.FischlinProof("dl", tuple(tr))
        assert not verify(oracle, "v", CTX_UC, params, TOY2, stmt, bad)


def test_context_separation():
    params = FischlinParams(13, 8, 8, 8)
    oracle = Oracle(seed=14)
    rng = Drbg(15)
    for _ in range(100):
        stmt, m = _dl_instance(TOY2, rng)
        proof = prove(oracle, "p", CTX_UC, params, TOY2, stmt, m, rng)
        if isinstance(proof, HonestReject):
            continue
        assert not verify(oracle, "v", CTX_KEYBOX, params, TOY2, stmt, proof)


def test_mean_trials_near_2_to_b():
    oracle = Oracle(seed=16)
    rng = Drbg(17)
    params = FischlinParams(13, 8, 16, 16)
    counts = []
    while len(counts) < 1000:
        stmt, m = _dl_instance(TOY2, rng)
        proof = prove(oracle, "p", CTX_UC, params, TOY2, stmt, m, rng)
        counts.extend(proof.trials)
    mean = sum(counts) / len(counts)
    assert 230 <= mean <= 282


def test_extract_from_honest_logs():
    oracle = Oracle(seed=18)
    rng = Drbg(19)
    ok = 0
    for i in range(500):
        caller = "prover%d" % i
        stmt, m = _dl_instance(TOY, rng)
        proof = prove(oracle, caller, CTX_UC, TEST_PARAMS, TOY, stmt, m, rng)
        if isinstance(proof, HonestReject):
            continue
        got = fischlin.extract(
            oracle.log_of(caller), CTX_UC, TEST_PARAMS, TOY, stmt, proof
        )
        if got == m:
            ok += 1
    assert ok >= 490  # every-rep-instant-hit proofs are unextractable (rare)


def test_extract_needs_two_challenges_per_repetition():
    oracle = Oracle(seed=20)
    rng = Drbg(21)
    stmt, m = _dl_instance(TOY, rng)
    proof = prove(oracle, "p", CTX_UC, TEST_PARAMS, TOY, stmt, m, rng)
    full = oracle.log_of("p", CTX_UC)
    # keep only the final query of each repetition: no challenge pairs remain
    last = {}
    prefix, _ = fischlin.hash_input_builder(
        TOY, stmt, tuple(a for a, _, _ in proof.triples)
    )
    for entry in full:
        data = entry.input
        if data.startswith(prefix):
            i = int.from_bytes(data[len(prefix) + 5 : len(prefix) + 13], "big")
            last[i] = entry
    assert fischlin.extract(list(last.values()), CTX_UC, TEST_PARAMS, TOY, stmt, proof) is None


def test_simulated_proof_verifies_and_is_never_extracted_from():
    oracle = Oracle(seed=22)
    rng = Drbg(23)
    # off-language: M has no known witness relation to the simulator
    stmt = DlStatement(55 * TOY.G, tag=(b"s", Label("sim")))
    proof = simulate(oracle, CTX_UC, TEST_PARAMS, TOY, stmt, rng)
    assert proof is not None
    assert verify(oracle, "v", CTX_UC, TEST_PARAMS, TOY, stmt, proof)


def test_simulate_fails_on_prequeried_point():
    oracle = Oracle(seed=24)
    rng = Drbg(25)
    stmt = DlStatement(5 * TOY.G)
    # replay the simulator's sampling to pre-query its first programmed cell
    probe = Drbg(25)
    sim_triples = []
    for _ in range(TEST_PARAMS.r):
        e = probe.randint_below(1 << TEST_PARAMS.t)
        a, e, z = fischlin._DlOps.simulate(TOY, stmt, e, probe)
        sim_triples.append((a, e, z))
    avec = tuple(a for a, _, _ in sim_triples)
    prefix, suffix = fischlin.hash_input_builder(TOY, stmt, avec)
    a0, e0, z0 = sim_triples[0]
    oracle.query("adv", CTX_UC, (prefix, suffix(0, e0, z0)))
    assert simulate(oracle, CTX_UC, TEST_PARAMS, TOY, stmt, rng) is None


def test_soundness_bound_values():
    lg = soundness_bound_log2(PRODUCTION_PARAMS, 0)
    assert abs((lg) - (-195.33)) < 0.5
    # binom(64, 32) has log2 about 60.7
    assert abs(math.log2(math.comb(64, 32)) - 60.67) < 0.1
    # slack 0, one repetition: bound (Q+1)/2^b
    p = FischlinParams(8, 4, 1, 0)
    assert fischlin.soundness_bound(p, 0) == pytest.approx(2.0 ** -4)
    assert fischlin.soundness_bound(p, 9) == pytest.approx(10 * 2.0 ** -4)


def test_honest_reject_bound_value():
    hr = fischlin.honest_reject_bound(PRODUCTION_PARAMS)
    assert abs(math.log2(hr) - (-41.2)) < 0.3


def test_pack_unpack_round_trip_and_size():
    oracle = Oracle(seed=26)
    rng = Drbg(27)
    m = rng.randint_below(PROD.p)
    stmt = DlStatement(m * PROD.G, tag=(b"sid", Label("aff1.Y")))
    proof = prove(oracle, "p", CTX_UC, PRODUCTION_PARAMS, PROD, stmt, m, rng)
    raw = fischlin.pack_proof(PROD, PRODUCTION_PARAMS, proof)
    assert len(raw) == 32 * (33 + 2 + 32)
    back = fischlin.unpack_proof(PROD, PRODUCTION_PARAMS, "dl", raw)
    assert back.triples == proof.triples


def test_affine_round_trip_and_toy_values():
    oracle = Oracle(seed=28)
    rng = Drbg(29)
    # X = 17G, gamma = 2, M = 3G, B = 4G, Delta = 6G -> Y = 11G, D = identity
    stmt = AffineStatement(17 * TOY.G, 2, 3 * TOY.G, 4 * TOY.G, 6 * TOY.G)
    Y, D = stmt.derived(TOY)
    assert Y == 11 * TOY.G
    assert D.is_identity()
    pair = prove_affine(
        oracle, "p", CTX_UC, TEST_PARAMS, TOY, stmt, b"sid", ("a.Y", "a.D"), 11, 0, Drbg(30)
    )
    assert not isinstance(pair, HonestReject)
    assert verify_affine(
        oracle, "v", CTX_UC, TEST_PARAMS, TOY, stmt, b"sid", ("a.Y", "a.D"), pair
    )
    # a broken sub-proof fails the pair
    py, pd = pair
    bad_triples = ((py.triples[0][0], py.triples[0][1], (py.triples[0][2] + 1) % 101),) + py.triples[1:]
    bad = (fischlin.FischlinProof("dl", bad_triples), pd)
    assert not verify_affine(
        oracle, "v", CTX_UC, TEST_PARAMS, TOY, stmt, b"sid", ("a.Y", "a.D"), bad
    )
