import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvfidelity.core import (
    NOISELESS,
    FidelityRangeError,
    InputState,
    NoiseSpec,
    ResourceFamily,
    ResourceSpec,
    _coefficient_arrays,
    coefficients,
    delta_for_family,
    fidelity_kernel,
    one_shot_fidelity,
)
from reference import printed_fidelity, printed_fidelity_ld, random_tuples, unit_gain_law

angles = st.floats(0, 2 * math.pi)
unit = st.floats(0, 1)


def test_delta_for_family_examples():
    assert delta_for_family("TMSV", 1.3) == 0.0
    assert delta_for_family("PS", 0.0) == 0.0
    assert delta_for_family("PA", 0.0) == pytest.approx(math.pi / 2, abs=1e-15)
    # arccos(cosh 1 / sqrt(cosh 2)) evaluated with mpmath at 30 digits
    assert delta_for_family("PS", 1.0) == pytest.approx(0.650880168023008, abs=1e-12)


@given(st.floats(0, 5))
def test_named_families_match_prescription(r):
    pa = ResourceSpec.photon_added(r)
    ps = ResourceSpec.photon_subtracted(r)
    root = math.sqrt(math.cosh(2 * r))
    assert abs(math.cos(pa.delta) - math.sinh(r) / root) < 1e-12
    assert abs(math.cos(ps.delta) - math.cosh(r) / root) < 1e-12
    assert 0 <= pa.delta <= math.pi / 2 and 0 <= ps.delta <= math.pi / 2
    assert ResourceSpec.tmsv(r).delta == 0.0


def test_resource_validation():
    with pytest.raises(ValueError):
        ResourceSpec.tmsv(-0.1)
    with pytest.raises(ValueError):
        ResourceSpec.tmsv(5.5)
    with pytest.raises(ValueError):
        ResourceSpec(ResourceFamily.CUSTOM_DELTA, 1.0)
    with pytest.raises(ValueError):
        ResourceSpec(ResourceFamily.CUSTOM_DELTA, 1.0, delta=2.0)
    with pytest.raises(ValueError):
        ResourceSpec(ResourceFamily.TMSV, 1.0, delta=0.3)
    assert ResourceSpec.photon_added(1.0).eta == pytest.approx(-math.pi)
    assert ResourceFamily.parse("photon-subtracted") is ResourceFamily.PHOTON_SUBTRACTED


def test_noise_spec():
    n = NoiseSpec(0.3, 0.6)
    assert n.T**2 + n.R**2 == pytest.approx(1.0, abs=1e-12)
    assert NOISELESS.is_noiseless and not n.is_noiseless
    with pytest.raises(ValueError):
        NoiseSpec(R=1.2)
    with pytest.raises(ValueError):
        NoiseSpec(tau=-1)


def test_coefficient_examples():
    c = coefficients(ResourceSpec.tmsv(0.0), InputState(), 0.0)
    assert (c.delta1, c.lambda1, c.lambda2) == (2.0, 4.0, 4.0)
    assert c.omega1sq == 0 and c.omega2sq == 0
    for r in (0.0, 0.7, 2.0):
        c = coefficients(ResourceSpec.tmsv(r), InputState(b=1.5, phi=0.4, eps=0.3), 1.0)
        assert c.delta1 == pytest.approx(4.0, rel=1e-14)
        assert c.omega1sq == 0 and c.omega2sq == 0
    c = coefficients(ResourceSpec.tmsv(1.0), InputState(b=1.0), 0.37)
    assert c.Gamma == 0.0 and c.gtilde == 0.37


def test_coefficients_reject_bad_gain():
    with pytest.raises(ValueError):
        coefficients(ResourceSpec.tmsv(1.0), InputState(), 1.5)
    with pytest.raises(ValueError):
        fidelity_kernel(1.0, 0.0, 0.0, 0.0, 0.0, float("nan"))


def test_one_shot_examples():
    coh = InputState(b=1.7, phi=2.1)
    assert one_shot_fidelity(ResourceSpec.tmsv(0.5), coh, 1.0) == pytest.approx(
        1 / (1 + math.exp(-1)), abs=1e-14)
    assert one_shot_fidelity(ResourceSpec.tmsv(0.5), coh, 1.0) == pytest.approx(0.731059, abs=1e-6)
    assert one_shot_fidelity(ResourceSpec.tmsv(0.0), InputState(), 0.0) == 1.0
    assert one_shot_fidelity(ResourceSpec.tmsv(0.0), coh, 1.0) == pytest.approx(0.5, abs=1e-15)


def test_unit_gain_law_dense():
    rng = np.random.default_rng(7)
    b = rng.uniform(0, 5, 100)
    phi = rng.uniform(0, 2 * math.pi, 100)
    for r in np.arange(0, 2.0001, 0.05):
        f = fidelity_kernel(r, 0.0, b, phi, 0.0, 1.0)
        assert np.max(np.abs(f - unit_gain_law(r))) < 1e-12


def test_noiseless_is_single_code_path():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        fam = rng.choice(["TMSV", "PA", "PS"])
        res = ResourceSpec(fam, rng.uniform(0, 2))
        s = InputState(rng.uniform(0, 3), rng.uniform(0, 6), rng.uniform(0, 1.5))
        g = rng.uniform()
        assert one_shot_fidelity(res, s, g, NoiseSpec(0.0, 0.0)) == one_shot_fidelity(res, s, g)


def test_matches_printed_form_noiseless():
    t = random_tuples(np.random.default_rng(11), 20000)
    assert np.max(np.abs(fidelity_kernel(**t) - printed_fidelity_ld(**t))) < 1e-14


def test_matches_printed_form_noisy():
    t = random_tuples(np.random.default_rng(12), 20000, noisy=True)
    assert np.max(np.abs(fidelity_kernel(**t) - printed_fidelity_ld(**t))) < 1e-14


def test_matches_extended_precision_spot_checks():
    rng = np.random.default_rng(5)
    t = random_tuples(rng, 50, noisy=True)
    for i in range(50):
        args = [t[k][i] for k in ("r", "delta", "b", "phi", "eps", "g", "tau", "R")]
        assert fidelity_kernel(*args) == pytest.approx(printed_fidelity(*args), abs=1e-15)


@settings(max_examples=200)
@given(st.floats(0, 2), st.floats(0, math.pi / 2), st.floats(0, 3), angles, st.floats(0, 1.5),
       unit, angles, angles)
def test_theta_independence(r, delta, b, phi, eps, g, t1, t2):
    res = ResourceSpec(ResourceFamily.CUSTOM_DELTA, r, delta=delta)
    assert one_shot_fidelity(res, InputState(b, phi, eps, t1), g) == one_shot_fidelity(
        res, InputState(b, phi, eps, t2), g)


@settings(max_examples=300)
@given(st.floats(0, 2), st.floats(0, math.pi / 2), st.floats(0, 3), angles, st.floats(0, 1.5),
       unit, st.floats(0, 2), unit)
def test_phi_reflections(r, delta, b, phi, eps, g, tau, R):
    f = lambda p: fidelity_kernel(r, delta, b, p, eps, g, tau, R)  # noqa: E731
    base = f(phi)
    assert abs(f(-phi) - base) < 1e-14
    assert abs(f(math.pi - phi) - base) < 1e-14


@settings(max_examples=300)
@given(st.floats(0, 3), st.floats(0, math.pi / 2), st.floats(0, 3), angles, st.floats(0, 2),
       unit, st.floats(0, 2), unit)
def test_range_and_signs(r, delta, b, phi, eps, g, tau, R):
    f = fidelity_kernel(r, delta, b, phi, eps, g, tau, R)
    assert 0.0 <= f <= 1.0
    d1, _, l1, l2, w1, w2, _, _ = _coefficient_arrays(r, b, phi, eps, g, tau, R)
    assert w1 <= 0 <= w2
    assert w1 / l1 - w2 / l2 <= 0


def test_positivity_bulk():
    rng = np.random.default_rng(99)
    n = 100_000
    r, tau, g = rng.uniform(0, 3, n), rng.uniform(0, 2, n), rng.uniform(0, 1, n)
    eps, R = rng.uniform(0, 2, n), rng.uniform(0, 1, n)
    b, phi = rng.uniform(0, 3, n), rng.uniform(0, 2 * math.pi, n)
    d1, _, l1, l2, w1, w2, _, _ = _coefficient_arrays(r, b, phi, eps, g, tau, R)
    assert np.all(d1 > 0) and np.all(l1 > 0) and np.all(l2 > 0)
    f = fidelity_kernel(r, rng.uniform(0, math.pi / 2, n), b, phi, eps, g, tau, R)
    assert np.all((f >= 0) & (f <= 1))


def test_clamp_and_range_error():
    from cvfidelity.core import _clamp

    assert _clamp(1.0 + 5e-10) == 1.0
    with pytest.raises(FidelityRangeError):
        _clamp(1.0 + 1e-6)
    with pytest.raises(FidelityRangeError):
        _clamp(np.array([0.5, -1e-3]))


def test_delta2_variant_is_available():
    # Lambda_2 from Delta_2 can go nonpositive; the toggle must then fail loudly
    res = ResourceSpec(ResourceFamily.TMSV, 1.0, lambda2_term="delta2")
    assert 0 <= one_shot_fidelity(res, InputState(b=0.5), 1.0) <= 1
    with pytest.raises(FidelityRangeError):
        one_shot_fidelity(res, InputState(), 0.0)


def test_input_state_angles_reduced():
    s = InputState(1.0, 7.0, 0.0, -1.0)
    assert 0 <= s.phi < 2 * math.pi and 0 <= s.theta < 2 * math.pi
    assert s.energy == 1.0
    with pytest.raises(ValueError):
        InputState(-1.0)
