import math

import numpy as np
import pytest

from mlec.alphabet_codec import Alphabet, build_transform, identity_transform
from mlec.energy_model import EnergyParams, KsDependency, energy_two_level
from mlec.errors import ConfigMismatch, DegenerateAlphabet, DimensionMismatch
from mlec.noise_channel import EfficacyFamily, NoiseSpec
from mlec.pipeline_sim import (
    TRIAL_COLUMNS,
    AgentSpec,
    HopSpec,
    PipelineSpec,
    compare_with_model,
    mismatch_experiment,
    run_pipeline,
)

BINARY = Alphabet(("0", "1"))
LETTERS = Alphabet(("A", "B", "C", "D"))
PASS = identity_transform(BINARY)
EQ2 = build_transform(LETTERS, Alphabet(("a", "b")), 2, ["aa", "ab", "ba", "bb"])
LIN08 = EfficacyFamily("linear_saturating", z_max=0.8, scale=1.0)


def two_level(f=0.1, K_R=1.0, K_S=0.5, L_R=2.0, L_S=1.0, M=20_000, trials=10, seed=1, g=0.0):
    return PipelineSpec(
        (
            HopSpec(AgentSpec(PASS), NoiseSpec(f), K=K_R, L=L_R, efficacy=LIN08),
            HopSpec(AgentSpec(PASS), NoiseSpec(g), K=K_S, L=L_S),
        ),
        source_length=M,
        seed=seed,
        trials=trials,
    )


def model(f=0.1, L_R=2.0, L_S=1.0, b_S=0.5):
    return EnergyParams(f=f, L_R=L_R, L_S=L_S, z_family=LIN08, b_S=b_S)


def test_agent_roles():
    assert AgentSpec(EQ2).role == "distributor"
    assert AgentSpec(EQ2, "decode").role == "aggregator"
    assert AgentSpec(PASS).role == "one-to-one"
    with pytest.raises(ValueError):
        AgentSpec(PASS, "invert")


def test_agent_encode_decode_round_trip():
    msg = np.array([0, 1, 2, 3, 2])
    words, _ = AgentSpec(EQ2).apply(msg)
    np.testing.assert_array_equal(words, [0, 0, 0, 1, 1, 0, 1, 1, 1, 0])
    back, ties = AgentSpec(EQ2, "decode").apply(words)
    np.testing.assert_array_equal(back, msg)
    assert ties == 0


def test_decode_counts_ties():
    rep2 = build_transform(BINARY, BINARY, 2, ["00", "11"])
    out, ties = AgentSpec(rep2, "decode").apply(np.array([0, 1, 1, 0, 1, 1]))
    np.testing.assert_array_equal(out, [0, 0, 1])
    assert ties == 2


def test_pipeline_validation():
    with pytest.raises(DimensionMismatch):
        PipelineSpec((HopSpec(AgentSpec(EQ2)), HopSpec(AgentSpec(EQ2))), source_length=4, seed=0)
    with pytest.raises(DimensionMismatch):
        PipelineSpec((HopSpec(AgentSpec(EQ2, "decode")),), source_length=3, seed=0)
    one = Alphabet(("x",))
    with pytest.raises(DegenerateAlphabet):
        PipelineSpec((HopSpec(AgentSpec(identity_transform(one)), NoiseSpec(0.1)),), source_length=3, seed=0)
    with pytest.raises(DimensionMismatch):
        PipelineSpec((), source_length=3, seed=0)


def test_noiseless_chain():
    spec = PipelineSpec(
        (HopSpec(AgentSpec(EQ2), K=0.3), HopSpec(AgentSpec(EQ2, "decode"), K=0.7)),
        source_length=1000,
        seed=4,
        trials=3,
    )
    rep = run_pipeline(spec)
    assert rep.accuracy == 1.0
    assert [lv.residual for lv in rep.levels] == [0.0, 0.0]
    assert [lv.bits for lv in rep.levels] == [2000.0, 2000.0]
    assert rep.total_energy == 0.3 * 2000 + 0.7 * 2000


def test_single_hop_worked_fraction():
    spec = PipelineSpec(
        (HopSpec(AgentSpec(PASS), NoiseSpec(0.1), K=1.0, L=1.0, efficacy=LIN08),), source_length=100_000, seed=5
    )
    lv = run_pipeline(spec).levels[0]
    n = 100_000
    for value, p in ((lv.repaired_fraction, 0.08), (lv.residual, 0.02)):
        assert abs(value - p) < 3 * math.sqrt(p * (1 - p) / n)


def test_energy_ledger_and_csv_rows():
    rep = run_pipeline(two_level(trials=4))
    for lv in rep.levels:
        assert lv.energy == pytest.approx(lv.K * lv.bits + lv.L * lv.repaired)
        assert 0.0 <= lv.residual <= 1.0
    assert rep.total_energy == pytest.approx(sum(lv.energy_detect + lv.energy_repair for lv in rep.levels))
    rows = rep.csv_rows()
    assert len(rows) == 8 and len(rows[0]) == len(TRIAL_COLUMNS)
    assert [r[:2] for r in rows[:3]] == [(0, 1), (0, 2), (1, 1)]
    d = rep.to_dict()
    assert set(d) == {"levels", "summary"}


def test_reproducible_and_independent_of_threads(monkeypatch):
    a = run_pipeline(two_level(trials=6)).to_dict()
    b = run_pipeline(two_level(trials=6)).to_dict()
    monkeypatch.setenv("MLEC_THREADS", "3")
    c = run_pipeline(two_level(trials=6)).to_dict()
    assert a == b == c
    assert run_pipeline(two_level(trials=6, seed=2)).to_dict() != a


def test_trial_streams_do_not_depend_on_trial_count():
    few = run_pipeline(two_level(trials=2)).trial_rows
    many = run_pipeline(two_level(trials=5)).trial_rows
    assert many[: len(few)] == few


def test_raising_K_never_raises_residual():
    residuals = []
    for K in (0.0, 0.25, 0.5, 0.75, 1.0):
        spec = PipelineSpec(
            (HopSpec(AgentSpec(PASS), NoiseSpec(0.1), K=K, L=1.0, efficacy=LIN08),),
            source_length=2000,
            seed=8,
            trials=100,
        )
        residuals.append(run_pipeline(spec).levels[0].residual)
    assert all(a >= b for a, b in zip(residuals, residuals[1:]))


def test_errors_propagate_through_the_agent():
    spec = PipelineSpec(
        (
            HopSpec(AgentSpec(EQ2), NoiseSpec(0.2), efficacy=EfficacyFamily(z_max=0.0)),
            HopSpec(AgentSpec(EQ2, "decode")),
        ),
        source_length=5000,
        seed=3,
    )
    rep = run_pipeline(spec)
    # nothing is repaired at the first hop; the decoder turns bad letters into bad symbols
    assert rep.levels[0].residual == pytest.approx(0.2, abs=0.02)
    assert rep.levels[1].errors > 0 and rep.levels[1].residual == 0.0
    assert rep.accuracy == 1.0


def test_model_comparison_matches():
    rep = run_pipeline(two_level(M=100_000, trials=10))
    out = compare_with_model(rep, model())
    assert out["deviation"]["energy_rel"] < 0.01
    assert out["deviation"]["residual_R_sigmas"] < 3
    assert not out["flagged"]
    assert out["predicted"]["energy_normalized"] == pytest.approx(energy_two_level(model(), 1.0))


def test_model_comparison_no_noise_is_exact():
    rep = run_pipeline(two_level(f=0.0, trials=2))
    out = compare_with_model(rep, model(f=0.0))
    assert out["deviation"]["energy_repair_rel"] == 0.0
    assert out["deviation"]["energy_rel"] == 0.0


def test_model_comparison_flags_wrong_f():
    rep = run_pipeline(two_level(trials=5))
    assert compare_with_model(rep, model(f=0.2))["flagged"]


def test_model_comparison_structural_mismatch():
    rep = run_pipeline(two_level(trials=1))
    with pytest.raises(ConfigMismatch):
        compare_with_model(rep, model(L_R=3.0))
    with pytest.raises(ConfigMismatch):
        compare_with_model(rep, model(b_S=0.1))
    with pytest.raises(ConfigMismatch):
        compare_with_model(rep, EnergyParams(f=0.1, L_R=2, L_S=1, I_RS=0.5, z_family=LIN08, b_S=0.5))


def test_simulated_energy_order_follows_model():
    # alpha = 1/2: the S level sees half as many bits (aggregating rep-2 decode)
    rep2 = build_transform(BINARY, BINARY, 2, ["00", "11"])
    ks = KsDependency()
    energies = {}
    for K_R in (0.0, 1.0):
        spec = PipelineSpec(
            (
                HopSpec(AgentSpec(rep2), NoiseSpec(0.1), K=K_R, L=10.0, efficacy=LIN08),
                HopSpec(AgentSpec(PASS), K=0.2, L=10.0),
            ),
            source_length=20_000,
            seed=12,
            trials=5,
        )
        energies[K_R] = run_pipeline(spec).total_energy
    p = EnergyParams.with_alpha(0.5, f=0.1, L_R=10.0, L_S=10.0, z_family=LIN08, ks_model=ks, b_S=0.2)
    assert (energies[0.0] < energies[1.0]) == (energy_two_level(p, 0.0) < energy_two_level(p, 1.0))


def test_mismatch_examples():
    assert mismatch_experiment(EQ2, EQ2, 100, 0).exact_accuracy == 1.0
    swap = build_transform(LETTERS, EQ2.out_alphabet, 2, ["aa", "ba", "ab", "bb"])
    rep = mismatch_experiment(EQ2, swap, 10_000, 0)
    assert rep.exact_accuracy == 0.5
    assert rep.confusion == {"A": "A", "B": "C", "C": "B", "D": "D"}
    assert abs(rep.empirical_accuracy - 0.5) < 0.03
    derange = build_transform(LETTERS, EQ2.out_alphabet, 2, ["ab", "ba", "bb", "aa"])
    assert mismatch_experiment(EQ2, derange, 100, 0).exact_accuracy == 0.0
    with pytest.raises(DimensionMismatch):
        mismatch_experiment(EQ2, PASS, 10, 0)


def test_mismatch_accuracy_is_fixed_point_fraction():
    rng = np.random.default_rng(21)
    alph = Alphabet(tuple(f"s{i}" for i in range(16)))
    for _ in range(20):
        base = [tuple(w) for w in np.array(np.meshgrid(*[[0, 1]] * 4)).T.reshape(-1, 4)]
        from mlec.alphabet_codec import TransformMatrix

        enc = TransformMatrix(alph, BINARY, 4, tuple(base))
        perm = rng.permutation(16)
        dec = TransformMatrix(alph, BINARY, 4, tuple(base[i] for i in perm))
        expected = sum(enc.words[j] == dec.words[j] for j in range(16)) / 16
        assert mismatch_experiment(enc, dec, 10, 0).exact_accuracy == expected
