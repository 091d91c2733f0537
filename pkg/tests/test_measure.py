import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rql import measure as ms
from rql import observables as obs
from rql.evolve.state import SpinState

AQ = ms.AQUILA_READOUT


def _random_state(L, seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=2**L) + 1j * rng.normal(size=2**L)
    return psi / np.linalg.norm(psi)


def test_readout_model_validation():
    assert (AQ.p01, AQ.p10) == (0.01, 0.05)
    assert AQ.p00 == pytest.approx(0.99) and AQ.p11 == pytest.approx(0.95)
    with pytest.raises(ms.MeasurementError):
        ms.ReadoutModel(-0.1, 0.0)
    with pytest.raises(ms.SingularModelError):
        ms.confusion_matrix(ms.ReadoutModel(0.5, 0.5))


def test_sample_all_down_gives_zeros():
    rec = ms.sample_bitstrings(SpinState.all_down(5), 100, seed=1)
    assert rec.bits.shape == (100, 5)
    assert not rec.bits.any()
    assert rec.prep_ok.all()


def test_sample_ghz_fraction():
    n = 20_000
    rec = ms.sample_bitstrings(SpinState.ghz(6), n, seed=2)
    ones = rec.bits.all(axis=1).mean()
    zeros = (~rec.bits.any(axis=1)).mean()
    assert abs(ones - 0.5) < 3 * 0.5 / np.sqrt(n)
    assert ones + zeros == 1.0


def test_sample_bit_order_matches_state():
    rec = ms.sample_bitstrings(SpinState.basis([1, 0, 0, 1]), 3, seed=0)
    np.testing.assert_array_equal(rec.bits, [[1, 0, 0, 1]] * 3)


def test_sampled_magnetization_is_consistent():
    psi = _random_state(5, 7)
    n = 20_000
    rec = ms.sample_bitstrings(psi, n, seed=3)
    est = ms.shot_estimates(rec)
    var = obs.qfi_density(psi) / 5
    assert abs(est.magnetization - obs.magnetization(psi)) < 3 * np.sqrt(var / n) + 1e-12


def test_sampling_is_seeded():
    psi = _random_state(4, 1)
    a = ms.sample_bitstrings(psi, 50, seed=9, prep_failure=0.1)
    b = ms.sample_bitstrings(psi, 50, seed=9, prep_failure=0.1)
    np.testing.assert_array_equal(a.bits, b.bits)
    np.testing.assert_array_equal(a.prep_ok, b.prep_ok)
    with pytest.raises(ms.MeasurementError):
        ms.sample_bitstrings(psi, 0, seed=1)


def test_readout_identity_leaves_record():
    rec = ms.sample_bitstrings(_random_state(4, 2), 200, seed=4)
    out = ms.apply_readout_errors(rec, ms.IDENTITY_READOUT, seed=1)
    np.testing.assert_array_equal(out.bits, rec.bits)


@pytest.mark.parametrize("bit,p", [(0, 0.01), (1, 0.05)])
def test_readout_flip_rates(bit, p):
    n, L = 20_000, 10
    rec = ms.ShotRecord(np.full((n, L), bit, dtype=np.uint8))
    out = ms.apply_readout_errors(rec, AQ, seed=5)
    frac = (out.bits != bit).mean()
    assert abs(frac - p) < 3 * np.sqrt(p * (1 - p) / (n * L))


def test_postselect():
    rec = ms.ShotRecord(np.zeros((4, 2)), [True, False, True, True])
    kept, rate = ms.postselect(rec)
    assert kept.n_shots == 3 and rate == 0.75
    same, rate = ms.postselect(ms.ShotRecord(np.eye(3)))
    np.testing.assert_array_equal(same.bits, np.eye(3))
    assert rate == 1.0
    picked, _ = ms.postselect(ms.ShotRecord(np.eye(3)), lambda b: b[:, 0] == 0)
    np.testing.assert_array_equal(picked.bits, np.eye(3)[1:])
    with pytest.raises(ms.EmptyRecordError):
        ms.postselect(ms.ShotRecord(np.zeros((2, 2)), [False, False]))


def test_paper_like_retention():
    rates = []
    for s in range(50):
        rec = ms.sample_bitstrings(SpinState.all_down(4), 200, seed=s, prep_failure=0.0)
        rec.prep_ok = ~np.any(np.random.default_rng(s).random((200, 28)) < ms.PAPER_PREP_FAILURE, axis=1)
        rates.append(ms.postselect(rec)[1])
    assert np.mean(rates) * 200 == pytest.approx(200 * (1 - ms.PAPER_PREP_FAILURE) ** 28, abs=2)
    assert 155 < np.mean(rates) * 200 < 165


def test_prep_failure_flags_rate():
    rec = ms.sample_bitstrings(SpinState.all_down(8), 20_000, seed=6, prep_failure=0.05)
    assert rec.prep_ok.mean() == pytest.approx(0.95**8, abs=0.01)


def test_confusion_matrix_examples():
    np.testing.assert_array_equal(ms.confusion_matrix(ms.IDENTITY_READOUT).entries, np.eye(2))
    c2 = ms.confusion_matrix(AQ, 2).entries
    assert c2[0, 3] == pytest.approx(0.0025)
    assert c2[1, 0] == pytest.approx(0.01 * 0.99)
    assert c2[2, 0] == pytest.approx(0.01 * 0.99)
    c1 = ms.confusion_matrix(AQ).entries
    np.testing.assert_allclose(c2, np.kron(c1, c1), atol=1e-15)
    np.testing.assert_allclose(c2.sum(axis=0), 1.0, atol=1e-12)
    with pytest.raises(ms.MeasurementError):
        ms.ConfusionMatrix([[0.5, 0.5], [0.4, 0.5]])


def test_worked_all_down_example():
    assert ms.mitigate_magnetization(-0.98, AQ) == -1.0
    assert ms.mitigate_magnetization(0.90, AQ) == pytest.approx(1.0, abs=1e-15)
    assert ms.mitigate_correlator(0.9604, -1.0, AQ) == 1.0
    x, y, w = ms._xyw(AQ)
    assert (x, w, y) == pytest.approx((0.9604, 0.81, -0.882))


def test_identity_model_is_transparent():
    assert ms.mitigate_magnetization(0.3, ms.IDENTITY_READOUT) == pytest.approx(0.3)
    assert ms.mitigate_correlator(0.2, 0.3, ms.IDENTITY_READOUT) == pytest.approx(0.2)


def _pair_by_inversion(raw_single, raw_pair, model):
    """Mitigated ⟨z⟩ and ⟨zz⟩ of a pair from 2x2 and 4x4 inversion."""
    c1, c2 = ms.confusion_matrix(model, 1), ms.confusion_matrix(model, 2)
    m = ms.expectation_from_quasi(ms.mitigate_counts(raw_single, c1))
    g = ms.expectation_from_quasi(ms.mitigate_counts(raw_pair, c2))
    return m, g


def test_closed_forms_match_matrix_inversion():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(1000):
        model = ms.ReadoutModel(*rng.uniform(0, 0.2, 2))
        # a translation-invariant pair distribution: symmetric under swapping the two sites
        p = rng.dirichlet(np.ones(4))
        p[1] = p[2] = 0.5 * (p[1] + p[2])
        raw_pair = ms.confusion_matrix(model, 2).entries @ p
        raw_single = np.array([raw_pair[0] + raw_pair[1], raw_pair[2] + raw_pair[3]])
        raw_m = raw_single[1] - raw_single[0]
        raw_g = raw_pair[0] - raw_pair[1] - raw_pair[2] + raw_pair[3]
        m_inv, g_inv = _pair_by_inversion(raw_single, raw_pair, model)
        m_cf = ms.mitigate_magnetization(raw_m, model)
        g_cf = ms.mitigate_correlator(raw_g, m_cf, model)
        worst = max(worst, abs(m_cf - m_inv), abs(g_cf - g_inv))
    assert worst < 1e-12


def test_moment_mitigation_matches_pairwise_inversion():
    rng = np.random.default_rng(12)
    for _ in range(200):
        model = ms.ReadoutModel(*rng.uniform(0, 0.2, 2))
        p = rng.dirichlet(np.ones(4))
        raw = ms.confusion_matrix(model, 2).entries @ p
        z, zz = ms.moments_from_probabilities(raw)
        zt, zzt = ms.mitigate_moments(z, zz, model)
        ztrue, zztrue = ms.moments_from_probabilities(p)
        np.testing.assert_allclose(zt, ztrue, atol=1e-12)
        np.testing.assert_allclose(zzt, zztrue, atol=1e-12)


def test_counts_and_closed_form_agree():
    hist = np.array([613.0, 387.0])
    q = ms.mitigate_counts(hist, ms.confusion_matrix(AQ))
    raw_m = (hist[1] - hist[0]) / hist.sum()
    assert ms.expectation_from_quasi(q) == pytest.approx(ms.mitigate_magnetization(raw_m, AQ), abs=1e-12)
    np.testing.assert_allclose(ms.mitigate_counts(hist, ms.confusion_matrix(ms.IDENTITY_READOUT)), hist / 1000)


def test_counts_round_trip_all_down():
    n = 5000
    rec = ms.apply_readout_errors(ms.ShotRecord(np.zeros((n, 1))), AQ, seed=8)
    hist = np.bincount(rec.bits[:, 0], minlength=2)
    q = ms.mitigate_counts(hist, ms.confusion_matrix(AQ))
    sigma = np.sqrt(0.01 * 0.99 / n) / (1 - 0.06)
    assert abs(q[0] - 1) < 3 * sigma and abs(q[1]) < 3 * sigma


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10_000), st.floats(0, 0.2), st.floats(0, 0.2))
def test_channel_round_trip_recovers_truth(L, seed, p01, p10):
    psi = _random_state(L, seed)
    model = ms.ReadoutModel(p01, p10)
    probs = np.abs(psi) ** 2
    z, zz = ms.moments_from_probabilities(ms.readout_channel(probs, model))
    est = ms.estimates_from_moments(*ms.mitigate_moments(z, zz, model))
    assert est.magnetization == pytest.approx(obs.magnetization(psi), abs=1e-12)
    assert est.domain_wall == pytest.approx(obs.domain_wall_density(psi), abs=1e-12)
    np.testing.assert_allclose(est.correlators, obs.correlator_profile(psi), atol=1e-12)
    assert est.qfi_upper_bound == pytest.approx(obs.qfi_density(psi), abs=1e-11)


def test_readout_channel_is_stochastic():
    probs = np.abs(_random_state(4, 3)) ** 2
    out = ms.readout_channel(probs, AQ)
    assert out.sum() == pytest.approx(1.0) and np.all(out >= 0)
    np.testing.assert_allclose(ms.readout_channel(probs, ms.IDENTITY_READOUT), probs)


def test_mitigated_magnetization_is_unbiased():
    psi = _random_state(4, 5)
    truth = obs.magnetization(psi)
    ests = []
    for s in range(200):
        rec = ms.sample_bitstrings(psi, 200, seed=s)
        rec = ms.apply_readout_errors(rec, AQ, seed=10_000 + s)
        ests.append(ms.shot_estimates(rec, AQ).magnetization)
    ests = np.array(ests)
    assert abs(ests.mean() - truth) < 3 * ests.std(ddof=1) / np.sqrt(len(ests))


def test_overshoot_is_reported_not_clipped():
    rec = ms.ShotRecord(np.zeros((10, 3)))
    est = ms.shot_estimates(rec, AQ)
    assert est.magnetization < -1
    assert est.overshoot()


def test_csv_round_trip():
    rec = ms.sample_bitstrings(_random_state(5, 1), 30, seed=2, prep_failure=0.2)
    back = ms.ShotRecord.from_csv(rec.to_csv(include_prep=True))
    np.testing.assert_array_equal(back.bits, rec.bits)
    np.testing.assert_array_equal(back.prep_ok, rec.prep_ok)
    plain = ms.ShotRecord.from_csv(rec.to_csv())
    assert plain.prep_ok.all()
    assert rec.to_csv().splitlines()[0] == "site_0,site_1,site_2,site_3,site_4"


@pytest.mark.parametrize("text,line", [
    ("", 1),
    ("a,b\n0,1\n", 1),
    ("site_0,site_1\n0,1\n0\n", 3),
    ("site_0,site_1\n0,1\n1,2\n", 3),
    ("site_0,site_1\n", 1),
])
def test_csv_errors_carry_line_numbers(text, line):
    with pytest.raises(ms.ShotFormatError) as err:
        ms.ShotRecord.from_csv(text)
    assert err.value.line == line


def test_json_round_trip():
    rec = ms.sample_bitstrings(_random_state(3, 4), 12, seed=3, prep_failure=0.1)
    rec.metadata["source"] = "unit"
    back = ms.ShotRecord.from_json(rec.to_json())
    np.testing.assert_array_equal(back.bits, rec.bits)
    np.testing.assert_array_equal(back.prep_ok, rec.prep_ok)
    assert back.seed == 3 and back.metadata == {"source": "unit"}


def test_record_validation():
    with pytest.raises(ms.MeasurementError):
        ms.ShotRecord(np.array([[0, 2]]))
    with pytest.raises(ms.MeasurementError):
        ms.ShotRecord(np.zeros((2, 2)), [True])
