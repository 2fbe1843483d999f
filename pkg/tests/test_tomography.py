import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coherence_cycle.channels import (
    EXPERIMENTAL_LAMBDA,
    UnitaryGate,
    chi_of_unitary,
    depolarized_cnot,
    generalized_cnot,
    process_fidelity,
)
from coherence_cycle.measures import discord_rel_ent
from coherence_cycle.protocol import convert, prepare_pure
from coherence_cycle.qmat import DensityMatrix, random_unitary, state_fidelity
from coherence_cycle.tomography import (
    CountRecord,
    MeasurementSetting,
    TomographyConfig,
    chi_from_io,
    complete_settings,
    exact_records,
    linear_inversion,
    mle_fit,
    mle_state,
    probe_states,
    qpt,
    read_counts_csv,
    simulate_counts,
    write_counts_csv,
)

from conftest import bell_state, rand_state, seeds

ZERO = DensityMatrix.from_ket([1, 0])
PLUS = DensityMatrix.from_ket(np.array([1, 1]) / np.sqrt(2))
Z, X, Y = (MeasurementSetting.parse(s) for s in "ZXY")


def test_measurement_setting():
    s = MeasurementSetting.parse("XZ")
    assert s.label == "XZ" and s.n_qubits == 2
    p = s.projectors()
    assert p.shape == (4, 4, 4)
    np.testing.assert_allclose(p.sum(axis=0), np.eye(4), atol=1e-15)
    with pytest.raises(ValueError):
        MeasurementSetting.parse("XQ")
    with pytest.raises(ValueError):
        MeasurementSetting(())


def test_count_record_validation():
    with pytest.raises(ValueError):
        CountRecord(Z, (3, 3), 7)
    with pytest.raises(ValueError):
        CountRecord(Z, (3,), 3)
    with pytest.raises(ValueError):
        CountRecord(Z, (-1, 4), 3)


def test_config_validation():
    with pytest.raises(ValueError):
        TomographyConfig(shots_per_setting=0)
    with pytest.raises(ValueError):
        TomographyConfig(mle_tol=0)


def test_simulate_counts_examples():
    config = TomographyConfig(shots_per_setting=1000, seed=1)
    (rec,) = simulate_counts(ZERO, [Z], config)
    assert rec.counts == (1000, 0)
    config = TomographyConfig(shots_per_setting=10**6, seed=2)
    (rec,) = simulate_counts(DensityMatrix(np.eye(2) / 2), [Z], config)
    sigma = math.sqrt(10**6 * 0.25)
    assert abs(rec.counts[0] - 5 * 10**5) <= 3 * sigma
    (rec,) = simulate_counts(PLUS, [Y], config)
    assert abs(rec.counts[0] - 5 * 10**5) <= 3 * sigma
    with pytest.raises(ValueError):
        simulate_counts(DensityMatrix(np.eye(3) / 3), [Z], config)


def test_simulate_counts_deterministic_and_keyed():
    config = TomographyConfig(shots_per_setting=500, seed=9)
    rho = rand_state(3, (2, 2))
    settings_ = complete_settings(2)
    a = simulate_counts(rho, settings_, config)
    assert a == simulate_counts(rho, settings_, config)
    # each setting draws from its own stream, so a subset reproduces the same counts
    assert simulate_counts(rho, settings_[:3], config) == a[:3]
    assert simulate_counts(rho, settings_, config, stream=(1,)) != a


def test_linear_inversion_exact():
    rec = exact_records(ZERO, complete_settings(1))
    np.testing.assert_allclose(linear_inversion(rec), ZERO.matrix, atol=1e-12)
    rec = exact_records(bell_state(), complete_settings(2))
    np.testing.assert_allclose(linear_inversion(rec), bell_state().matrix, atol=1e-12)
    with pytest.raises(ValueError):
        linear_inversion(exact_records(ZERO, [Z, X]))


def test_linear_inversion_can_leave_psd_cone():
    # a pure state measured with finite counts usually lands just outside the cone
    config = TomographyConfig(shots_per_setting=200)
    mins = []
    for seed in range(20):
        config.seed = seed
        recs = simulate_counts(bell_state(), complete_settings(2), config)
        lin = linear_inversion(recs)
        assert np.trace(lin).real == pytest.approx(1.0)
        np.testing.assert_allclose(lin, lin.conj().T)
        mins.append(mle_fit(recs, config).linear_min_eigenvalue)
    assert min(mins) < 0


@pytest.mark.parametrize("n", [1, 2])
def test_mle_fixed_point_on_analytic_counts(n):
    rho = rand_state(40 + n, (2,) * n)
    est = mle_state(exact_records(rho, complete_settings(n), 1e4))
    assert est.dims == (2,) * n
    assert 1 - state_fidelity(est, rho) <= 1e-8


def test_mle_adversarial_counts_stay_valid():
    # every setting fires a single outcome: +1 on X, Y and Z at once is unphysical
    for n in (1, 2):
        recs = [CountRecord(s, (40,) + (0,) * (2**n - 1), 40) for s in complete_settings(n)]
        est = mle_state(recs)
        assert est.dims == (2,) * n
        assert np.linalg.eigvalsh(est.matrix).min() >= -1e-12
        assert np.trace(est.matrix).real == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from([1, 2]), st.sampled_from([20, 200, 5000]))
def test_mle_log_likelihood_monotone(seed, n, shots):
    config = TomographyConfig(shots_per_setting=shots, seed=seed % 1000)
    rho = rand_state(seed, (2,) * n, rank=1 if seed % 2 else None)
    fit = mle_fit(simulate_counts(rho, complete_settings(n), config), config)
    assert np.all(np.diff(fit.log_likelihoods) >= -1e-12)
    w = np.linalg.eigvalsh(fit.state.matrix)
    assert w.min() >= -1e-12


def test_mle_error_scales_with_shots():
    def median_error(shots):
        errs = []
        for seed in range(50):
            rho = rand_state(1000 + seed)
            config = TomographyConfig(shots_per_setting=shots, seed=seed)
            est = mle_state(simulate_counts(rho, complete_settings(1), config), config)
            errs.append(1 - state_fidelity(est, rho))
        return np.median(errs)

    ratio = median_error(2000) / median_error(4000)
    assert 2 / 1.5 <= ratio <= 2 * 1.5


def test_mle_discord_of_maximally_correlated_reconstruction():
    joint = convert(prepare_pure(23))
    config = TomographyConfig(seed=11)
    est = mle_state(simulate_counts(joint, complete_settings(2), config), config)
    assert abs(discord_rel_ent(est).value - discord_rel_ent(joint).value) <= 0.02


def test_chi_from_io_exact_inversion():
    chi = depolarized_cnot(0.6)
    from coherence_cycle.channels import apply_chi

    probes = probe_states()
    outputs = [apply_chi(p, chi).matrix for p in probes]
    np.testing.assert_allclose(chi_from_io([p.matrix for p in probes], outputs), chi.entries, atol=1e-12)


def test_qpt_analytic_examples():
    ideal = chi_of_unitary(generalized_cnot(2))
    assert process_fidelity(qpt(generalized_cnot(2), analytic=True), ideal) >= 1 - 1e-6
    ident = qpt(UnitaryGate(np.eye(4), (2, 2)), analytic=True).entries
    assert abs(ident[0, 0]) == pytest.approx(1.0, abs=1e-6)
    assert np.max(np.abs(ident - np.diag([1.0] + [0.0] * 15))) <= 1e-6


def test_qpt_round_trip_random_unitaries():
    rng = np.random.default_rng(77)
    for _ in range(20):
        u = UnitaryGate(random_unitary(4, rng), (2, 2))
        assert process_fidelity(qpt(u, analytic=True), chi_of_unitary(u)) >= 1 - 1e-6


def test_qpt_depolarized_cnot_fidelity():
    ideal = chi_of_unitary(generalized_cnot(2))
    est = qpt(depolarized_cnot(EXPERIMENTAL_LAMBDA), TomographyConfig(seed=3))
    assert abs(process_fidelity(est, ideal) - 0.885) <= 0.01


def test_qpt_parallel_matches_serial():
    config = TomographyConfig(shots_per_setting=300, seed=4)
    gate = depolarized_cnot(0.8)
    np.testing.assert_array_equal(qpt(gate, config).entries, qpt(gate, config, workers=2).entries)


def test_counts_csv_round_trip(tmp_path):
    config = TomographyConfig(shots_per_setting=123, seed=5)
    recs = simulate_counts(rand_state(6, (2, 2)), complete_settings(2), config)
    path = tmp_path / "counts.csv"
    write_counts_csv(recs, path)
    text = path.read_bytes()
    assert text.startswith(b"setting,outcome,count,shots\n") and b"\r" not in text
    assert text.count(b"\n") == 1 + 9 * 4
    back = read_counts_csv(path)
    assert [r.setting for r in back] == [r.setting for r in recs]
    assert [tuple(int(c) for c in r.counts) for r in back] == [r.counts for r in recs]
    analytic = exact_records(rand_state(7), complete_settings(1), 10.0)
    write_counts_csv(analytic, path)
    assert [r.counts for r in read_counts_csv(path)] == [r.counts for r in analytic]
