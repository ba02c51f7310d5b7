"""Deterministic maps and flows for the homodyne feedback dynamics.

On the pure family psi = a|ee> + d|gg> with d = -sgn(a) sqrt(1 - a^2), the
measurement-plus-feedback step reduces to a one-parameter map; with
scheduled collective flips appended it becomes the flip map whose attractor
is the alternating Bell cycle.  This module provides those maps, their
continuous-time limits in the theta parameterization (a, d) =
(cos theta, -sin theta), the closed-form solutions used as analytic
references, and cobweb iteration helpers.

Note on the flip map's fixed cycle: at finite eps the amplitude flip map
alternates between +-1/sqrt(2 - eps) exactly (tan^2 theta* = 1 - eps), an
O(eps) offset from the Bell point +-1/sqrt(2).  The concurrence form of the
map has the Bell cycle C = 1 as an exact fixed point, which is why
convergence checks against +-1/sqrt(2) are run through concurrence_map.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "AmpPair",
    "ThetaState",
    "CobwebSeries",
    "mw_map_step",
    "mw_flip_map_step",
    "amp_map",
    "amp_flip_map",
    "concurrence_map",
    "theta_ode_step",
    "theta_flip_ode_step",
    "theta_of_t",
    "peak_time",
    "concurrence_noflip",
    "flip_population",
    "analytic_curves",
    "cobweb",
]


@dataclass(frozen=True)
class AmpPair:
    """Amplitude pair (a, d) of the family a|ee> + d|gg>, unit norm."""

    a: float
    d: float

    def __post_init__(self):
        norm2 = self.a * self.a + self.d * self.d
        if abs(norm2 - 1.0) > 1e-9:
            raise ValueError(f"(a, d) norm^2 = {norm2!r} is not 1 within 1e-9")

    @property
    def concurrence(self) -> float:
        return 2.0 * abs(self.a * self.d)


@dataclass(frozen=True)
class ThetaState:
    """Angle parameterization (a, d) = (cos theta, -sin theta)."""

    theta: float

    def __post_init__(self):
        if not (-1e-12 <= self.theta <= np.pi / 2 + 1e-12):
            raise ValueError("theta must lie in [0, pi/2]")

    @property
    def pair(self) -> AmpPair:
        return AmpPair(np.cos(self.theta), -np.sin(self.theta))


def _pair_update(a: float, d: float, eps: float) -> tuple[float, float]:
    if abs(a - d) < 1e-12:
        raise ZeroDivisionError("map is singular at a = d")
    an = a + eps * a * d / (a - d)
    dn = d - eps * a * a / (a - d)
    return an, dn


def mw_map_step(p: AmpPair, eps: float) -> AmpPair:
    """One no-flip feedback step of the (a, d) pair, renormalized.

    At a = 1 the increment to a vanishes identically (the map is degenerate
    at the initial condition; integration starts from the theta form).
    """
    an, dn = _pair_update(p.a, p.d, eps)
    norm = np.hypot(an, dn)
    return AmpPair(an / norm, dn / norm)


def mw_flip_map_step(p: AmpPair, eps: float) -> AmpPair:
    """One feedback step followed by the collective flip (a <-> d)."""
    an, dn = _pair_update(p.a, p.d, eps)
    norm = np.hypot(an, dn)
    return AmpPair(dn / norm, an / norm)


def _family_d(a: float) -> float:
    sign = 1.0 if a >= 0.0 else -1.0
    return -sign * np.sqrt(max(0.0, 1.0 - a * a))


def amp_map(a: float, eps: float) -> float:
    """One-dimensional no-flip map with d restored from the family."""
    d = _family_d(a)
    an, _ = _pair_update(a, d, eps)
    return an


def amp_flip_map(a: float, eps: float) -> float:
    """One-dimensional flip map; its exact 2-cycle alternates between
    +-1/sqrt(2 - eps)."""
    d = _family_d(a)
    _, dn = _pair_update(a, d, eps)
    return dn


def concurrence_map(c: float, eps: float, rising: bool) -> float:
    """One-step concurrence map C' = C(1 - eps) + 2 eps a^2 with
    a^2 = 1/2 +- sqrt(1 - C^2)/2 (rising selects the + branch, i.e.
    |a| > |d|).  The O(eps) map can overshoot the physical boundary by
    O(eps^2) near C = 1; the result is projected back into [0, 1].
    """
    if not (0.0 <= c <= 1.0):
        raise ValueError("concurrence must lie in [0, 1]")
    root = np.sqrt(max(0.0, 1.0 - c * c))
    a2 = 0.5 + 0.5 * root if rising else 0.5 - 0.5 * root
    return float(min(1.0, max(0.0, c * (1.0 - eps) + 2.0 * eps * a2)))


def _theta_rhs(theta: float, gamma: float) -> float:
    c, s = np.cos(theta), np.sin(theta)
    return gamma * c / (c + s)


def _theta_flip_rhs(theta: float, gamma: float) -> float:
    c, s = np.cos(theta), np.sin(theta)
    return 0.5 * gamma * (c - s) / (c + s)


def _rk4(rhs, theta: float, dt: float, gamma: float) -> float:
    k1 = rhs(theta, gamma)
    k2 = rhs(theta + 0.5 * dt * k1, gamma)
    k3 = rhs(theta + 0.5 * dt * k2, gamma)
    k4 = rhs(theta + dt * k3, gamma)
    return theta + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def theta_ode_step(state: ThetaState, dt: float, gamma: float = 1.0) -> ThetaState:
    """RK4 step of theta' = gamma cos(theta) / (cos(theta) + sin(theta)),
    the no-flip drift (regular at theta = 0, unlike the a-equation)."""
    return ThetaState(min(np.pi / 2, _rk4(_theta_rhs, state.theta, dt, gamma)))


def theta_flip_ode_step(state: ThetaState, dt: float, gamma: float = 1.0) -> ThetaState:
    """RK4 step of the averaged flip drift
    theta' = (gamma / 2)(cos - sin)/(cos + sin), whose fixed point is the
    Bell angle pi/4.  The rate follows from the two-step concurrence law
    C -> C(1 - 2 eps) + 2 eps over 2 dt; its solution satisfies
    cos(theta) - sin(theta) = exp(-gamma t / 2)."""
    return ThetaState(_rk4(_theta_flip_rhs, state.theta, dt, gamma))


def theta_of_t(t: float, gamma: float = 1.0) -> float:
    """Closed-form no-flip solution: the root of exp(-theta) cos(theta) =
    exp(-gamma t) on [0, pi/2], found by bisection (the left side is
    monotone decreasing on that bracket)."""
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    target = np.exp(-gamma * t)
    lo, hi = 0.0, np.pi / 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.exp(-mid) * np.cos(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def peak_time(gamma: float = 1.0) -> float:
    """Time at which the no-flip drift reaches the Bell angle pi/4:
    t_e = (pi/4 + ln sqrt(2)) / gamma ~= 1.13 / gamma."""
    return (np.pi / 4.0 + 0.5 * np.log(2.0)) / gamma


def concurrence_noflip(t, gamma: float = 1.0):
    """Concurrence sin(2 theta(t)) along the no-flip drift: rises to 1 at
    peak_time, decays beyond it."""
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.array([np.sin(2.0 * theta_of_t(tk, gamma)) for tk in ts])
    return out if np.ndim(t) else float(out[0])


def flip_population(t, gamma: float = 1.0):
    """|ee> population cos^2(theta) = 1/2 + sqrt(1 - (1 - e^(-gamma t))^2)/2
    along the averaged flip drift (equivalently cos - sin = e^(-gamma t/2))."""
    decay = 1.0 - np.exp(-gamma * np.asarray(t, dtype=float))
    return 0.5 + 0.5 * np.sqrt(np.maximum(0.0, 1.0 - decay * decay))


def analytic_curves(times, gamma: float = 1.0, eta: float = 1.0) -> dict[str, np.ndarray]:
    """Reference curves on a common time grid.

    c_ideal_flip: 1 - e^(-gamma t), the ideal flip-feedback concurrence.
    c_mw_noflip:  sin(2 theta(t)) along the no-flip drift.
    c_max_eta:    1 / ((1 - eta) e^(gamma t) + eta), the efficiency ceiling.
    c_pd_nofeedback:  2 eta e^(-gamma t)(1 - e^(-gamma t)), mean photon-counting
                      concurrence without feedback.
    c_hom_nofeedback: 2 (2 eta - 1) e^(-gamma t)(1 - e^(-gamma t)) clamped at 0;
                      homodyne generates no entanglement for eta <= 1/2.
    pop_flip:     |ee> population along the averaged flip drift.
    """
    ts = np.asarray(times, dtype=float)
    decay = np.exp(-gamma * ts)
    return {
        "c_ideal_flip": 1.0 - decay,
        "c_mw_noflip": concurrence_noflip(ts, gamma),
        "c_max_eta": 1.0 / ((1.0 - eta) / decay + eta),
        "c_pd_nofeedback": 2.0 * eta * decay * (1.0 - decay),
        "c_hom_nofeedback": np.maximum(0.0, 2.0 * (2.0 * eta - 1.0) * decay * (1.0 - decay)),
        "pop_flip": flip_population(ts, gamma),
    }


@dataclass(frozen=True)
class CobwebSeries:
    """Iterates of a 1-d map plus the polyline and curve data for plotting."""

    iterates: np.ndarray
    seg_x: np.ndarray
    seg_y: np.ndarray
    curve_x: np.ndarray
    curve_y: np.ndarray


def cobweb(map_fn, x0: float, n_iter: int, lo: float, hi: float, n_curve: int = 1000) -> CobwebSeries:
    """Iterate x -> map_fn(x) from x0 and build the cobweb polyline
    (x, x) -> (x, f(x)) -> (f(x), f(x)) -> ... over [lo, hi]."""
    xs = np.empty(n_iter + 1)
    xs[0] = x0
    for k in range(n_iter):
        xs[k + 1] = map_fn(xs[k])
    seg_x = np.empty(2 * n_iter + 1)
    seg_y = np.empty(2 * n_iter + 1)
    seg_x[0], seg_y[0] = xs[0], xs[0]
    for k in range(n_iter):
        seg_x[2 * k + 1], seg_y[2 * k + 1] = xs[k], xs[k + 1]
        seg_x[2 * k + 2], seg_y[2 * k + 2] = xs[k + 1], xs[k + 1]
    curve_x = np.linspace(lo, hi, n_curve)
    curve_y = np.array([map_fn(x) for x in curve_x])
    return CobwebSeries(xs, seg_x, seg_y, curve_x, curve_y)
