import numpy as np
import pytest

from phasemem.encoding import pattern_to_phases
from phasemem.energy import hopfield_energy
from phasemem.errors import ConfigurationError, DivergenceError, PreconditionError
from phasemem.stability import energy_hessian, find_fixed_point, perturbation_bound, predicted_shift

from conftest import STORED_PATTERNS, random_symmetric

PAIR = np.array([[0.0, 1.0], [1.0, 0.0]])


@pytest.mark.parametrize("pattern", STORED_PATTERNS)
def test_stored_pattern_is_immediate_minimum(two_pattern_k, pattern):
    rep = find_fixed_point(pattern_to_phases(pattern), two_pattern_k.k, pinned=[0, 1])
    assert rep.residual_norm < 1e-12
    assert rep.iterations == 0
    assert rep.is_minimum
    assert rep.lambda_min == pytest.approx(1.0)


def test_two_pair_matrix_has_extra_flat_mode(two_pattern_k):
    # the matrix couples 0-3 and 1-2 only; rotating one pair against the other costs nothing
    rep = find_fixed_point(pattern_to_phases(STORED_PATTERNS[0]), two_pattern_k.k)
    assert rep.residual_norm < 1e-12
    assert abs(rep.lambda_min) < 1e-12
    assert not rep.is_minimum


def test_zero_coupling_is_degenerate(rng):
    rep = find_fixed_point(rng.uniform(size=4), np.zeros((4, 4)))
    assert rep.residual_norm == 0
    assert np.all(rep.hessian == 0)
    assert not rep.is_minimum
    with pytest.raises(PreconditionError):
        perturbation_bound(rep, np.zeros(4))
    with pytest.raises(PreconditionError):
        predicted_shift(rep, np.zeros(4))


def test_pair_in_phase_lock():
    rep = find_fixed_point([0.3, -0.2], PAIR)
    assert rep.residual_norm < 1e-8
    assert abs(np.angle(np.exp(1j * (rep.phi_star[1] - rep.phi_star[0])))) < 1e-8
    assert rep.hessian.shape == (1, 1)
    assert rep.lambda_min == pytest.approx(2.0)


def test_pair_pinned_reference():
    rep = find_fixed_point([0.0, 0.4], PAIR, pinned=[0])
    assert rep.phi_star[0] == 0.0
    assert rep.lambda_min == pytest.approx(1.0)


def test_pair_predicted_shift():
    rep = find_fixed_point([0.0, 0.0], PAIR)
    shift = predicted_shift(rep, np.array([0.0, 0.1]))
    assert shift[0] == 0.0
    assert shift[1] == pytest.approx(0.05)
    np.testing.assert_array_equal(predicted_shift(rep, np.zeros(2)), 0.0)


def test_bound_arithmetic():
    rep = find_fixed_point([0.0, 0.0], PAIR)
    assert perturbation_bound(rep, np.zeros(2)) == 0.0
    assert perturbation_bound(rep, np.array([0.0, 0.1])) == pytest.approx(0.05)


def test_hessian_matches_finite_differences(rng):
    for n in (2, 4, 6):
        k = random_symmetric(n, rng)
        phi = rng.uniform(-np.pi, np.pi, n)
        h = 1e-4
        num = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                ei, ej = np.eye(n)[i] * h, np.eye(n)[j] * h
                num[i, j] = (hopfield_energy(phi + ei + ej, k) - hopfield_energy(phi + ei - ej, k)
                             - hopfield_energy(phi - ei + ej, k) + hopfield_energy(phi - ei - ej, k)) / (4 * h * h)
        assert np.max(np.abs(energy_hessian(phi, k) - num)) <= 1e-5


def test_reduced_hessian_symmetric_and_pd_at_minimum(rng):
    for _ in range(5):
        k = random_symmetric(5, rng)
        rep = find_fixed_point(rng.uniform(-np.pi, np.pi, 5), k)
        np.testing.assert_allclose(rep.hessian, rep.hessian.T, atol=1e-14)
        if rep.is_minimum:
            assert np.all(np.linalg.eigvalsh(rep.hessian) > 0)


def test_bound_holds_under_re_relaxation(two_pattern_k, rng):
    rep = find_fixed_point(pattern_to_phases(STORED_PATTERNS[0]), two_pattern_k.k, pinned=[0, 1])
    assert rep.lambda_min > 0
    for scale in (0.01, 0.05):
        for _ in range(5):
            d = rng.normal(size=4)
            d[[0, 1]] = 0
            d *= scale * rep.lambda_min / np.linalg.norm(d)
            new = find_fixed_point(rep.phi_star, two_pattern_k.k, d, tol=1e-12, pinned=[0, 1])
            assert rep.displacement(new.phi_star) <= 1.1 * perturbation_bound(rep, d)


def test_rotation_mode_ignores_common_frequency(rng):
    k = random_symmetric(4, rng) + 2 * (1 - np.eye(4))
    rep = find_fixed_point(np.zeros(4), k, tol=1e-12)
    shifted = find_fixed_point(np.zeros(4), k, np.full(4, 3.0), tol=1e-12)
    assert rep.displacement(shifted.phi_star) < 1e-10


def test_validation(two_pattern_k):
    with pytest.raises(ConfigurationError):
        find_fixed_point(np.zeros(4), two_pattern_k.k, tol=0)
    with pytest.raises(ConfigurationError):
        find_fixed_point(np.zeros(3), two_pattern_k.k)
    with pytest.raises(ConfigurationError):
        find_fixed_point(np.zeros(4), two_pattern_k.k, pinned=[0, 1, 2, 3])


def test_divergence_reports_residual():
    # frequency mismatch beyond the locking range: no fixed point exists
    with pytest.raises(DivergenceError) as info:
        find_fixed_point([0.0, 0.0], PAIR, [0.0, 5.0], max_iter=500)
    assert info.value.last_residual > 0


def test_report_serializes():
    rep = find_fixed_point([0.0, 0.0], PAIR)
    doc = rep.to_dict()
    assert doc["gauge"] == "rotation" and doc["is_minimum"] is True
    assert doc["hessian"] == [[pytest.approx(2.0)]]
