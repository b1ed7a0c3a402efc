"""Discretized-bath integration: the Markov decay law derived, not assumed."""

import math

import numpy as np
import pytest

from vee_ww_sim import (
    DipolePair,
    FieldConstants,
    ModelParams,
    NonFiniteAmplitude,
    StepSizeTooLarge,
    UnphysicalRegion,
    angular_dipole_integral,
    build_bath,
    evolve_kernel,
    evolve_modes,
    fit_decay_rate,
    gamma_from_dipole,
    memory_kernel,
)

EIGHT_PI_THIRD = 8.0 * math.pi / 3.0


def small_bath(cutoff=25.0, n_modes=1024):
    return build_bath(1.0, omega=40.0 * cutoff, cutoff=cutoff, n_modes=n_modes)


# --- emission rate from the dipole ---------------------------------------

def test_gamma_frozen_value():
    # omega = 2.416e15 rad/s, |eta| = 2.537e-29 C m, SI constants
    assert gamma_from_dipole(2.416e15, 2.537e-29) == pytest.approx(
        38280146.999290983, rel=1e-12)


def test_gamma_scaling():
    g1 = gamma_from_dipole(1.0e15, 1.0e-29)
    assert gamma_from_dipole(2.0e15, 1.0e-29) == pytest.approx(8.0 * g1, rel=1e-14)
    assert gamma_from_dipole(1.0e15, 2.0e-29) == pytest.approx(4.0 * g1, rel=1e-14)
    assert gamma_from_dipole(1.0e15, 0.0) == 0.0


def test_gamma_natural_units():
    consts = FieldConstants.natural()
    assert gamma_from_dipole(2.0, 3.0, consts) == pytest.approx(8.0 * 9.0 / (3.0 * math.pi))
    with pytest.raises(ValueError):
        gamma_from_dipole(-1.0, 1.0)
    with pytest.raises(ValueError):
        FieldConstants(hbar=0.0, epsilon0=1.0, c=1.0)


# --- transition dipoles and angular geometry ------------------------------

def test_dipole_pair_structure():
    pair = DipolePair.perpendicular(eta=2.0)
    assert np.linalg.norm(pair.d1) == pytest.approx(2.0, rel=1e-14)
    assert np.vdot(pair.d1, pair.d2) == pytest.approx(0.0, abs=1e-14)
    diff = pair.difference
    # d1 - d2 = i sqrt(2) eta y_hat for the circular pair
    assert diff[0] == pytest.approx(0.0, abs=1e-14)
    assert diff[2] == pytest.approx(0.0, abs=1e-14)
    assert diff[1] == pytest.approx(2.0j * math.sqrt(2.0), abs=1e-14)
    assert np.vdot(diff, diff).real == pytest.approx(2.0 * 4.0, rel=1e-14)


def test_dipole_pair_validation():
    with pytest.raises(ValueError):
        DipolePair(np.array([1.0, 0, 0]), np.array([0.9, 0, 0]), eta=1.0)
    with pytest.raises(ValueError):
        DipolePair(np.array([1.0, 0, 0]), np.array([1.0, 0, 0]), eta=1.0)


def test_angular_integral_cartesian_axes():
    for axis in range(3):
        d = np.zeros(3)
        d[axis] = 1.0
        res = angular_dipole_integral(d)
        assert res.analytic == pytest.approx(EIGHT_PI_THIRD, rel=1e-15)
        assert res.quadrature == pytest.approx(res.analytic, rel=1e-10)


def test_angular_integral_difference_dipole():
    pair = DipolePair.perpendicular(eta=3.0)
    res = angular_dipole_integral(pair.difference)
    # |d1 - d2|^2 = 2 eta^2 doubles the single-dipole factor
    assert res.analytic == pytest.approx(EIGHT_PI_THIRD * 2.0 * 9.0, rel=1e-15)
    assert res.quadrature == pytest.approx(res.analytic, rel=1e-10)


def test_angular_integral_random_dipoles():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        d = rng.normal(size=3) + 1j * rng.normal(size=3)
        res = angular_dipole_integral(d)
        assert res.quadrature == pytest.approx(res.analytic, rel=1e-6)
    with pytest.raises(ValueError):
        angular_dipole_integral(np.zeros(3))


# --- bath construction -----------------------------------------------------

def test_build_bath_grid():
    bath = build_bath(1.0, omega=2000.0, cutoff=50.0, n_modes=4096)
    assert bath.n_modes == 4096
    assert len(bath.mode_freqs) == 4096
    spacing = np.diff(bath.mode_freqs)
    np.testing.assert_allclose(spacing, 100.0 / 4096, rtol=1e-12)
    # midpoint grid is symmetric about the carrier
    np.testing.assert_allclose(bath.mode_freqs + bath.mode_freqs[::-1], 2.0 * 2000.0,
                               rtol=1e-12)
    assert bath.golden_rule_rate() == pytest.approx(1.0, rel=1e-12)


def test_build_bath_validation():
    with pytest.raises(ValueError):
        build_bath(1.0, omega=2000.0, cutoff=50.0, n_modes=16)
    with pytest.raises(ValueError):
        build_bath(1.0, omega=2000.0, cutoff=10.0, n_modes=1024)  # cutoff < 20 gamma
    with pytest.raises(ValueError):
        build_bath(1.0, omega=100.0, cutoff=50.0, n_modes=1024)  # carrier too low
    with pytest.raises(ValueError, match="coarse"):
        build_bath(1.0, omega=2000.0, cutoff=30.0, n_modes=512)  # spacing > gamma/20


# --- memory kernel ---------------------------------------------------------

def test_kernel_at_zero_and_markov_area():
    bath = small_bath(cutoff=50.0, n_modes=4096)
    k0 = memory_kernel(bath, np.array([0.0]))[0]
    assert k0.imag == pytest.approx(0.0, abs=1e-12 * abs(k0))
    assert k0.real == pytest.approx(50.0 / math.pi, rel=1e-12)

    # the kernel integrates to gamma/2 once its initial burst has passed
    taus = np.linspace(0.0, 40.0 / 50.0, 4001)
    kern = memory_kernel(bath, taus)
    area = np.trapezoid(kern.real, taus)
    assert area == pytest.approx(0.5, rel=0.02)


# --- unitary evolution -----------------------------------------------------

def test_evolve_modes_norm_and_decay():
    bath = build_bath(1.0, omega=2000.0, cutoff=50.0, n_modes=2048)
    p = ModelParams(delta=0.0, gamma=1.0, epsilon=0.3)
    traj, extra = evolve_modes(bath, p, t_end=3.0, dt=0.002, postselect=False,
                               full_output=True)
    assert abs(extra["norm"][-1] - 1.0) <= 1e-6  # closed system stays normalized
    sel = traj.times >= 0.5
    ratio = traj.survival[sel] / np.exp(-traj.times[sel])
    assert np.max(np.abs(ratio - 1.0)) <= 0.02
    assert extra["final_state"].norm() == pytest.approx(1.0, abs=1e-6)


def test_evolve_modes_ignores_atom_when_unselected():
    bath = small_bath()
    a = evolve_modes(bath, ModelParams.natural(0.1, 0.2), t_end=1.0, dt=0.004,
                     postselect=False)
    b = evolve_modes(bath, ModelParams.natural(0.3, 1.1), t_end=1.0, dt=0.004,
                     postselect=False)
    # without post-selection the splitting never enters the equations of motion
    assert np.array_equal(a.alpha, b.alpha)


def test_evolve_modes_postselected_rate():
    bath = build_bath(1.0, omega=2000.0, cutoff=50.0, n_modes=2048)
    p = ModelParams.natural(0.01, 0.05)
    traj = evolve_modes(bath, p, t_end=3.75, dt=0.002, postselect=True)
    fitted = fit_decay_rate(traj, 0.625, 3.75)
    assert fitted == pytest.approx(0.8, rel=0.05)


def test_evolve_modes_guards():
    bath = small_bath()
    p = ModelParams.natural(0.1, 0.2)
    with pytest.raises(StepSizeTooLarge):
        evolve_modes(bath, p, t_end=1.0, dt=0.01)  # 0.1/cutoff = 0.004
    with pytest.raises(ValueError):
        evolve_modes(bath, p, t_end=11.0, dt=0.004)
    with pytest.raises(UnphysicalRegion):
        evolve_modes(bath, ModelParams.natural(0.1, 0.0), t_end=1.0, dt=0.004)


def test_evolve_modes_detects_blowup():
    bath = build_bath(1.0, omega=800.0, cutoff=20.0, n_modes=512)
    # eps ~ 1e-8 puts an enormous gain cot(eps) on the amplitude; the overflow
    # on the way up is expected, the guard must convert it into a typed error
    p = ModelParams.natural(0.4, 1e-8, strict=False)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(NonFiniteAmplitude):
            evolve_modes(bath, p, t_end=0.5, dt=0.002)


def test_short_time_quadratic_onset():
    # before the bath decorrelates, 1 - |alpha|^2 grows as (gamma cutoff / pi) t^2
    bath = build_bath(1.0, omega=800.0, cutoff=20.0, n_modes=512)
    p = ModelParams(delta=0.0, gamma=1.0, epsilon=0.3)
    dt = 0.002 / 20.0
    traj = evolve_modes(bath, p, t_end=0.08 / 20.0, dt=dt, postselect=False)
    sel = traj.times >= 0.01 / 20.0
    depletion = 1.0 - traj.survival[sel]
    slope = np.polyfit(np.log(traj.times[sel]), np.log(depletion), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.1)


def test_decay_error_shrinks_with_cutoff():
    # the fitted-rate bias falls like 1/cutoff at fixed mode density
    p = ModelParams(delta=0.0, gamma=1.0, epsilon=0.3)
    errs = []
    for cutoff, n_modes in ((25.0, 1024), (50.0, 2048)):
        bath = build_bath(1.0, omega=40.0 * cutoff, cutoff=cutoff, n_modes=n_modes)
        traj = evolve_modes(bath, p, t_end=3.0, dt=0.1 / cutoff, postselect=False)
        errs.append(abs(fit_decay_rate(traj, 0.5, 3.0) - 1.0))
    assert 0.35 <= errs[1] / errs[0] <= 0.65


def test_kernel_route_matches_mode_route():
    bath = build_bath(1.0, omega=1200.0, cutoff=30.0, n_modes=1280)
    p = ModelParams.natural(0.1, 0.3)
    kwargs = dict(t_end=3.0, dt=0.1 / 30.0, postselect=True)
    a = evolve_modes(bath, p, **kwargs)
    b = evolve_kernel(bath, p, **kwargs)
    assert np.max(np.abs(a.alpha - b.alpha)) <= 1e-3


def test_fit_decay_rate_window():
    bath = small_bath()
    p = ModelParams(delta=0.0, gamma=1.0, epsilon=0.3)
    traj = evolve_modes(bath, p, t_end=2.0, dt=0.004, postselect=False)
    with pytest.raises(ValueError):
        fit_decay_rate(traj, 1.99, 1.995)  # fewer than two samples inside
