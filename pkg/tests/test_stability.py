"""Stability-analysis tests.

The growth-rate root is cross-checked with an independently coded Newton
iteration, the winding-number counter against polynomials with known root
sets, and the ring spectrum against dense eigensolves of the full transfer
matrix.
"""
import cmath
import math

import numpy as np
import pytest

from tanglesim import ComplianceNetwork
from tanglesim.stability import (
    ContourError,
    SpectralRegion,
    balanced_characteristic,
    check_sufficient_condition,
    compliance_matrix,
    count_roots,
    find_x0,
    growth_gap,
    mode_ratio,
    ring_eigenvalues,
    verify_unstable_mode,
    window_characteristic,
)


def _newton_x0():
    """Independent Newton solve of 1 + x/2 - e^(-x) - (x + x^2) e^x = 0."""
    x = 0.2
    for _ in range(60):
        ex = math.exp(x)
        g = 1.0 + 0.5 * x - math.exp(-x) - (x + x * x) * ex
        dg = 0.5 + math.exp(-x) - (1.0 + 3.0 * x + x * x) * ex
        x -= g / dg
    return x


# -- growth-rate root -------------------------------------------------------------

def test_growth_root_matches_newton_oracle():
    assert abs(find_x0() - _newton_x0()) < 1e-11


def test_growth_root_bracket_and_residual():
    x0 = find_x0()
    assert 0.17 < x0 < 0.19
    assert abs(growth_gap(x0)) < 1e-11
    assert growth_gap(x0 - 1e-3) > 0 > growth_gap(x0 + 1e-3)


def test_mode_ratio_value():
    x0 = _newton_x0()
    assert abs(mode_ratio(x0) - (0.5 - x0 * math.exp(x0))) == 0.0
    assert 0.28 < mode_ratio(x0) < 0.29


# -- unstable mode ----------------------------------------------------------------

@pytest.mark.parametrize("d", [2, 3, 5])
def test_unbalanced_mode_satisfies_linearized_relations(d):
    chk = verify_unstable_mode(d, delay=3.0)
    assert chk.residual < 1e-8
    assert abs(chk.z - find_x0() / 3.0) < 1e-15
    assert abs(chk.theta.sum()) < 1e-12


def test_mode_scales_with_delay():
    a = verify_unstable_mode(2, delay=1.0)
    b = verify_unstable_mode(2, delay=7.0)
    assert a.residual < 1e-8 and b.residual < 1e-8
    assert abs(a.z / b.z - 7.0) < 1e-9


def test_wrong_amplitude_ratio_breaks_the_mode():
    chk = verify_unstable_mode(2, delay=3.0, r_offset=1e-3)
    assert chk.residual > 1e-5


def test_mode_accepts_any_zero_sum_theta():
    chk = verify_unstable_mode(4, delay=2.0, theta=[3.0, -1.0, -1.0, -1.0])
    assert chk.residual < 1e-8
    assert np.abs(chk.theta).max() == 1.0  # normalized


def test_mode_theta_validation():
    with pytest.raises(ValueError):
        verify_unstable_mode(1, delay=1.0)
    with pytest.raises(ValueError):
        verify_unstable_mode(2, delay=1.0, theta=[1.0, 1.0])
    with pytest.raises(ValueError):
        verify_unstable_mode(2, delay=1.0, theta=[0.0, 0.0])
    with pytest.raises(ValueError):
        verify_unstable_mode(2, delay=0.0)


# -- winding-number counter ---------------------------------------------------------

def test_count_roots_simple_zero():
    region = SpectralRegion(0.0, 2.0, -1.0, 1.0)
    assert count_roots(lambda z: z - 1.0, region) == 1
    assert count_roots(lambda z: z - 5.0, region) == 0


def test_count_roots_with_multiplicity():
    region = SpectralRegion(0.0, 2.0, -1.0, 1.0)
    assert count_roots(lambda z: (z - 1.0) ** 2, region) == 2


def test_count_roots_complex_pair():
    region = SpectralRegion(-1.0, 1.0, -2.0, 2.0)
    assert count_roots(lambda z: z * z + 1.0, region) == 2


def test_count_is_additive_over_a_partition():
    f = lambda z: (z - (0.5 + 0.5j)) * (z - (2.0 + 1.0j))
    whole = SpectralRegion(0.0, 3.0, -2.0, 2.0)
    left = SpectralRegion(0.0, 1.0, -2.0, 2.0)
    right = SpectralRegion(1.0, 3.0, -2.0, 2.0)
    assert count_roots(f, whole) == 2
    assert count_roots(f, left) == 1
    assert count_roots(f, right) == 1


def test_count_stable_under_sampling_density():
    f = lambda z: (z - 0.3) * (z - 0.7 - 0.4j) * (z + 0.2 - 0.9j)
    for spp in (16, 64, 200):
        region = SpectralRegion(-1.0, 1.5, -1.5, 1.5, samples_per_side=spp)
        assert count_roots(f, region) == 3


def test_root_on_the_contour_is_refused():
    region = SpectralRegion(0.0, 1.0, -1.0, 1.0)
    with pytest.raises(ContourError):
        count_roots(lambda z: z - 0.5j, region)  # root on the left edge


def test_exponential_characteristic_with_known_root():
    # e^z - 2 has the single root log(2) in [0,1]x[-1,1] and spurious-free
    # repetitions at log(2) + 2 pi i k outside it
    region = SpectralRegion(0.0, 1.0, -1.0, 1.0)
    assert count_roots(lambda z: cmath.exp(z) - 2.0, region) == 1


def test_region_validation():
    with pytest.raises(ValueError):
        SpectralRegion(1.0, 1.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        SpectralRegion(0.0, 1.0, -1.0, 1.0, samples_per_side=1)


def test_aggregate_tip_characteristic_has_no_unstable_roots():
    # |1 + hz| >= 1 > |e^(-zh)|/2 on the closed right half plane, so the
    # balanced direction is always stable; spot-check one delay here (the
    # acceptance sweep covers more)
    f = balanced_characteristic(3.0)
    region = SpectralRegion(1e-6, 5.0, -60.0, 60.0, samples_per_side=400)
    assert count_roots(f, region) == 0


# -- compliance-network spectrum -------------------------------------------------------

def _two_node_net():
    return ComplianceNetwork.build(
        targets=[0.9, 0.8],
        baselines=[0.4, 0.3],
        cost_sens=[1.0, 2.0],
        ctrl_gain=[0.5, 1.0],
        coupling=[[0.0, 0.2], [0.3, 0.0]],
        lags=[[0.0, 1.5], [0.7, 0.0]],
        window=4.0,
    )


def test_compliance_matrix_entries_by_hand():
    net = _two_node_net()
    z = 0.3 + 0.2j
    m = compliance_matrix(z, net)
    assert m[0, 0] == 0.0
    want01 = 0.2 * cmath.exp(-z * 1.5) / (z + 1.0 * 0.5)
    want10 = 0.3 * cmath.exp(-z * 0.7) / (z + 2.0 * 1.0)
    assert abs(m[0, 1] - want01) < 1e-15
    assert abs(m[1, 0] - want10) < 1e-15


def test_compliance_matrix_pole_raises():
    net = _two_node_net()
    with pytest.raises(ZeroDivisionError):
        compliance_matrix(-0.5, net)  # z = -E_1 k_1


def test_ring_closed_form_matches_dense_eigensolve():
    net = ComplianceNetwork.ring(8, coupling=0.1, lag=1.0, window=5.0,
                                 target=0.9, baseline=0.5)
    for z in (0.0 + 0.0j, 0.4 + 2.0j, 1.3 - 0.8j):
        if abs(z + 1.0) < 1e-9:
            continue
        closed = np.sort_complex(ring_eigenvalues(z, 8, 0.1, 1.0, 1.0))
        dense = np.sort_complex(np.linalg.eigvals(compliance_matrix(z, net)))
        assert np.abs(np.sort(np.abs(closed)) - np.sort(np.abs(dense))).max() < 1e-10


def test_weakly_coupled_ring_passes_sufficient_condition():
    net = ComplianceNetwork.ring(8, coupling=0.1, lag=1.0, window=5.0,
                                 target=0.9, baseline=0.5)
    rep = check_sufficient_condition(net)
    assert rep.passed
    assert rep.ring_condition is True
    assert rep.threshold == 2.5
    # max |lambda| is attained at z = 0: 2 D / delta
    assert abs(rep.witness_modulus - 0.2) < 1e-9
    assert rep.margin == pytest.approx(2.3, abs=1e-9)
    assert rep.grid_shape == (41, 161)


def test_strongly_coupled_ring_fails_both_conditions():
    net = ComplianceNetwork.ring(8, coupling=2.0, lag=1.0, window=5.0,
                                 target=0.9, baseline=0.5)
    rep = check_sufficient_condition(net)
    assert not rep.passed
    assert rep.ring_condition is False
    assert rep.witness_modulus > rep.threshold


def test_window_characteristic_far_field_limit():
    # M(z) -> 0 as Re z grows, so G(z) -> det(-w I) = (-w)^n
    net = _two_node_net()
    g = window_characteristic(net)
    assert abs(g(50.0) - net.window**2) < 1e-6


def test_window_characteristic_no_unstable_roots_for_weak_ring():
    net = ComplianceNetwork.ring(6, coupling=0.1, lag=1.0, window=5.0,
                                 target=0.9, baseline=0.5)
    g = window_characteristic(net)
    region = SpectralRegion(1e-4, 3.0, -6.0, 6.0, samples_per_side=200)
    assert count_roots(g, region) == 0
