"""Closed-form post-selected decay law.

Effective rate in two forms, amplitude evolution, survival probability, mean
scattering time, and curve generation over the post-selection angle. All
operations are pure functions of immutable inputs and are safe to call
concurrently. Computation is unit-agnostic; use :meth:`ModelParams.natural`
for the Gamma = 1 convention used throughout the tests and the CLI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import UnphysicalRegion

FORM_FULL_COT = "full-cot"
FORM_SMALL_EPSILON = "small-epsilon"

_HALF_PI = math.pi / 2


def _validate_form(form: str) -> str:
    if form not in (FORM_FULL_COT, FORM_SMALL_EPSILON):
        raise ValueError(f"unknown rate form {form!r}; expected {FORM_FULL_COT!r} or {FORM_SMALL_EPSILON!r}")
    return form


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the doublet and its post-selection.

    delta is the excited-state splitting, gamma the spontaneous decay rate,
    epsilon the post-selection angle. omega (the carrier, optional) is only
    needed by the discretized-bath engine; the level frequencies are derived
    as omega +- delta/2.

    The elastic regime requires delta/gamma < 1; with ``strict`` (the
    default) ratios >= 0.5 are refused as well. epsilon = 0 and delta = 0 are
    accepted because limit cases need them; cot-form scalar operations treat
    epsilon = 0 as unphysical on their own.
    """

    delta: float
    gamma: float
    epsilon: float
    omega: float | None = None
    strict: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma!r}")
        if not (math.isfinite(self.delta) and self.delta >= 0):
            raise ValueError(f"delta must be non-negative and finite, got {self.delta!r}")
        if not 0.0 <= self.epsilon <= _HALF_PI:
            raise ValueError(f"epsilon must lie in [0, pi/2], got {self.epsilon!r}")
        ratio = self.delta / self.gamma
        if ratio >= 1.0:
            raise ValueError(f"delta/gamma = {ratio:g} is outside the elastic regime (needs < 1)")
        if self.strict and ratio >= 0.5:
            raise ValueError(
                f"delta/gamma = {ratio:g} >= 0.5 refused under strict weakness; pass strict=False to allow"
            )
        if self.omega is not None and not self.omega > 0:
            raise ValueError(f"omega must be positive when given, got {self.omega!r}")

    @classmethod
    def natural(cls, delta_over_gamma: float, epsilon: float, omega: float | None = None,
                strict: bool = True) -> "ModelParams":
        """Parameters in natural units gamma = 1."""
        return cls(delta=delta_over_gamma, gamma=1.0, epsilon=epsilon, omega=omega, strict=strict)

    @property
    def ratio(self) -> float:
        return self.delta / self.gamma

    @property
    def omega_plus(self) -> float | None:
        return None if self.omega is None else self.omega + 0.5 * self.delta

    @property
    def omega_minus(self) -> float | None:
        return None if self.omega is None else self.omega - 0.5 * self.delta


@dataclass(frozen=True)
class ScatteringTime:
    """Mean scattering time tau = 1/effective_rate, with the form that produced it."""

    tau: float
    effective_rate: float
    form: str

    def __post_init__(self):
        _validate_form(self.form)
        if not self.effective_rate > 0:
            raise ValueError("ScatteringTime requires a positive effective rate")
        if self.tau != 1.0 / self.effective_rate:
            raise ValueError("tau must be exactly the inverse of effective_rate")


@dataclass(frozen=True, eq=False)
class AmplitudeTrajectory:
    """Amplitude alpha(t) on a strictly increasing time grid, with |alpha|^2."""

    times: np.ndarray
    alpha: np.ndarray
    survival: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        a = np.asarray(self.alpha, dtype=complex)
        s = np.asarray(self.survival, dtype=float)
        if not (t.ndim == a.ndim == s.ndim == 1 and t.size == a.size == s.size >= 1):
            raise ValueError("times, alpha and survival must be 1-d arrays of equal nonzero length")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        if np.max(np.abs(s - np.abs(a) ** 2)) > 1e-12:
            raise ValueError("survival must equal |alpha|^2 within 1e-12")
        for arr in (t, a, s):
            arr.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "survival", s)

    @classmethod
    def from_alpha(cls, times, alpha) -> "AmplitudeTrajectory":
        alpha = np.asarray(alpha, dtype=complex)
        return cls(times=np.asarray(times, dtype=float), alpha=alpha,
                   survival=np.abs(alpha) ** 2)

    def __len__(self) -> int:
        return self.times.size


@dataclass(frozen=True)
class TauCurveRow:
    """One curve point: angle, tau*Gamma (nan when unphysical), rate/Gamma, flag."""

    epsilon: float
    tau_gamma: float
    rate_over_gamma: float
    physical: bool


def effective_rate(params: ModelParams, form: str = FORM_SMALL_EPSILON) -> float:
    """Signed effective decay rate of the post-selected amplitude.

    full-cot: Gamma - Delta*cot(eps). small-epsilon: Gamma - Delta/eps.
    May return values <= 0 (including -inf at eps = 0); callers decide
    physicality. delta = 0 gives Gamma under either form.
    """
    _validate_form(form)
    if params.delta == 0.0:
        return params.gamma
    if params.epsilon == 0.0:
        return -math.inf
    if form == FORM_FULL_COT:
        term = params.delta * math.cos(params.epsilon) / math.sin(params.epsilon)
    else:
        term = params.delta / params.epsilon
    return params.gamma - term


def _unphysical(params: ModelParams, rate: float) -> UnphysicalRegion:
    threshold = params.delta / params.gamma
    return UnphysicalRegion(
        f"effective rate {rate:g} <= 0 at epsilon = {params.epsilon:g}: scattering into the "
        f"post-selected state does not occur at or below the divergence threshold "
        f"epsilon = delta/gamma = {threshold:g}"
    )


def alpha_of_t(t, params: ModelParams, form: str = FORM_SMALL_EPSILON,
               check_physical: bool = True):
    """Amplitude exp(-rate*t/2) from alpha(0) = 1; real in the rotating frame.

    Accepts a scalar or array t >= 0. With ``check_physical`` (default) a
    non-positive rate raises UnphysicalRegion whenever any t > 0 is requested;
    t = 0 always returns 1.
    """
    rate = effective_rate(params, form)
    tt = np.asarray(t, dtype=float)
    if np.any(tt < 0):
        raise ValueError("t must be non-negative")
    if check_physical and rate <= 0 and np.any(tt > 0):
        raise _unphysical(params, rate)
    out = np.exp(-0.5 * rate * tt)
    return float(out) if np.isscalar(t) or tt.ndim == 0 else out


def mean_scattering_time(params: ModelParams, form: str = FORM_SMALL_EPSILON) -> ScatteringTime:
    """First moment of the scattering-time density p(t) = rate*exp(-rate*t).

    p is the probability flux -d|alpha|^2/dt of the surviving amplitude, so
    tau = 1/rate and the unamplified baseline tau = 1/Gamma is recovered at
    eps = pi/2 under the full-cot form.
    """
    rate = effective_rate(params, form)
    if rate <= 0:
        raise _unphysical(params, rate)
    return ScatteringTime(tau=1.0 / rate, effective_rate=rate, form=form)


def tau_curve(delta_over_gamma: float, epsilon_grid: Sequence[float],
              form: str = FORM_SMALL_EPSILON) -> list[TauCurveRow]:
    """Mean scattering time across a grid of post-selection angles.

    Rows in the unphysical region are flagged (tau_gamma = nan) rather than
    raised, so a curve can straddle the divergence. Grid values must lie in
    (0, pi/2]; an empty grid is a domain error.
    """
    _validate_form(form)
    if not 0.0 < delta_over_gamma < 1.0:
        raise ValueError(f"delta_over_gamma must lie in (0, 1), got {delta_over_gamma!r}")
    grid = [float(e) for e in epsilon_grid]
    if not grid:
        raise ValueError("epsilon grid must not be empty")
    for e in grid:
        if not 0.0 < e <= _HALF_PI:
            raise ValueError(f"grid epsilon {e!r} outside (0, pi/2]")
    rows = []
    for e in grid:
        p = ModelParams(delta=delta_over_gamma, gamma=1.0, epsilon=e, strict=False)
        rate = effective_rate(p, form)
        physical = rate > 0
        rows.append(TauCurveRow(
            epsilon=e,
            tau_gamma=1.0 / rate if physical else math.nan,
            rate_over_gamma=rate,
            physical=physical,
        ))
    return rows


def markov_trajectory(params: ModelParams, form: str = FORM_SMALL_EPSILON,
                      dt: float | None = None, t_end: float | None = None) -> AmplitudeTrajectory:
    """Closed-form trajectory on a uniform grid.

    Defaults: dt = 0.01/rate and t_end = 10/rate.
    """
    st = mean_scattering_time(params, form)
    if dt is None:
        dt = 0.01 * st.tau
    if t_end is None:
        t_end = 10.0 * st.tau
    if not (dt > 0 and t_end >= dt):
        raise ValueError("need dt > 0 and t_end >= dt")
    n = int(round(t_end / dt))
    times = dt * np.arange(n + 1)
    return AmplitudeTrajectory.from_alpha(times, np.exp(-0.5 * st.effective_rate * times).astype(complex))
