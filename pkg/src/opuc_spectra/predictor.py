"""Absolutely continuous spectrum predictions from transfer-matrix discriminants.

``L(z)`` is approximated by the maximum of ``|Delta_m(z)|`` over a tail window
of blocks.  Predicted sets are ``{L < 2}`` (lower) and ``{L <= 2}`` (upper);
closed-form predictions for step 1 and step 2 are provided for comparison.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .arcs import TWO_PI, ArcSet
from .errors import DomainError
from .sequences import periodic, rho_of
from .transfer import block_alphas, block_data, circle_points, products

BISECTION_STEPS = 60
TANGENCY_THRESHOLD = 1e-8


class PredictionWarning(UserWarning):
    """Finite-window or finite-grid uncertainty worth reporting."""


# ---------------------------------------------------------------------------
# L profile


def _window_max_abs_delta(spec, p, theta, window):
    m0, m1 = window
    z, zh = circle_points(theta)
    ms = np.arange(m0, m1 + 1)
    data = block_data(spec, ms, p, z, zh, derivative=False)
    return np.abs(data.delta)


@dataclass
class LProfile:
    theta: np.ndarray
    values: np.ndarray
    window: tuple
    drift: float = 0.0
    drifting: bool = False
    evaluator: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)


def compute_l(spec, p: int, theta, window, drift_tol: float = 1e-6) -> LProfile:
    """Finite-window surrogate for ``limsup_m |Delta_m(e^{i theta})|``."""
    m0, m1 = int(window[0]), int(window[1])
    if m1 - m0 < 10:
        raise DomainError("window must span at least 10 blocks")
    theta = np.asarray(theta, dtype=float)
    absd = _window_max_abs_delta(spec, p, theta, (m0, m1))
    values = absd.max(axis=0)
    half = absd[(m1 - m0) // 2 :].max(axis=0)
    drift = float(np.max(np.abs(values - half))) if values.size else 0.0
    drifting = drift > drift_tol
    if drifting:
        warnings.warn(
            f"L profile still drifting by {drift:.3g} between half and full window {window}",
            PredictionWarning,
            stacklevel=2,
        )

    def evaluator(th, _spec=spec, _p=p, _w=(m0, m1)):
        return _window_max_abs_delta(_spec, _p, np.atleast_1d(th), _w).max(axis=0)

    return LProfile(theta=theta, values=values, window=(m0, m1), drift=drift, drifting=drifting, evaluator=evaluator)


# ---------------------------------------------------------------------------
# Level-set extraction shared by predictFromL and periodicBands


def _bisect(func, x_in, x_out, inside):
    x_in = np.array(x_in, dtype=float)
    x_out = np.array(x_out, dtype=float)
    if x_in.size == 0:
        return x_in
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (x_in + x_out)
        ok = inside(func(mid))
        x_in = np.where(ok, mid, x_in)
        x_out = np.where(ok, x_out, mid)
    return 0.5 * (x_in + x_out)


def _level_arcs(theta, values, func, inside, warn_open_ends=True):
    """Closed arcs of ``inside(values)`` with bisection-refined endpoints.

    Returns a list of ``[lo, hi]`` in the grid's own (continuous) angle units.
    """
    mask = inside(values)
    n = len(theta)
    runs = []
    i = 0
    while i < n:
        if mask[i]:
            j = i
            while j + 1 < n and mask[j + 1]:
                j += 1
            runs.append([i, j])
            i = j + 1
        else:
            i += 1
    lo_in, lo_out, hi_in, hi_out = [], [], [], []
    lo_idx, hi_idx = [], []
    for k, (i, j) in enumerate(runs):
        if i > 0:
            lo_idx.append(k)
            lo_in.append(theta[i])
            lo_out.append(theta[i - 1])
        if j < n - 1:
            hi_idx.append(k)
            hi_in.append(theta[j])
            hi_out.append(theta[j + 1])
    los = [theta[i] for i, _ in runs]
    his = [theta[j] for _, j in runs]
    if func is not None:
        for k, x in zip(lo_idx, _bisect(func, lo_in, lo_out, inside)):
            los[k] = float(x)
        for k, x in zip(hi_idx, _bisect(func, hi_in, hi_out, inside)):
            his[k] = float(x)
    covers_circle = theta[-1] - theta[0] >= TWO_PI - 1e-12
    if warn_open_ends and not covers_circle and runs and (runs[0][0] == 0 or runs[-1][1] == n - 1):
        warnings.warn("an endpoint coincides with the grid boundary; reported at grid resolution",
                      PredictionWarning, stacklevel=3)
    return [[lo, hi] for lo, hi in zip(los, his)]


def _close_tangencies(arcs, upper: ArcSet, max_width: float):
    """Fill gaps narrower than ``max_width`` that lie inside ``upper`` (touch points of L = 2)."""
    if len(arcs) < 1:
        return ArcSet(())
    lower = ArcSet(tuple(map(tuple, arcs)))
    gaps = lower.complement()
    fill = [g for g in gaps.arcs if g[1] - g[0] <= max_width and ArcSet((g,)).is_subset(upper)]
    return lower.union(ArcSet(tuple(fill))) if fill else lower


def predict_from_l(profile: LProfile, tol_band: float = 1e-9, tangency_width: float | None = None):
    """Return ``(lower, upper)`` = closure of ``{L < 2}`` and ``{L <= 2}``, with tolerance ``tol_band``.

    Gaps of the lower set narrower than ``tangency_width`` (default four grid
    spacings) that lie inside the upper set are touch points of ``L = 2`` and
    are closed, matching the closure of the open set.
    """
    theta = profile.theta
    values = profile.values
    func = profile.evaluator
    upper_arcs = _level_arcs(theta, values, func, lambda v: v <= 2.0 + tol_band)
    lower_arcs = _level_arcs(theta, values, func, lambda v: v < 2.0 - tol_band, warn_open_ends=False)
    upper = ArcSet(tuple(map(tuple, upper_arcs)))
    if tangency_width is None:
        tangency_width = 4.0 * float(np.max(np.diff(theta))) if len(theta) > 1 else 0.0
    lower = _close_tangencies(lower_arcs, upper, tangency_width)
    return lower, upper


# ---------------------------------------------------------------------------
# Closed forms


def predict_p1(A: float) -> ArcSet:
    """``[2 arcsin A, 2 pi - 2 arcsin A]``; empty (with a warning) when ``A >= 1``."""
    if A < 0:
        raise DomainError("A must be nonnegative")
    if A >= 1.0:
        warnings.warn("limsup |alpha_n| = 1: no absolutely continuous spectrum (Rakhmanov)", PredictionWarning,
                      stacklevel=2)
        return ArcSet.empty()
    lo = 2.0 * math.asin(A)
    return ArcSet(((lo, TWO_PI - lo),))


def predict_p2(a_plus: float, a_minus: float) -> ArcSet:
    """Closure of ``{theta : -A_+ < cos theta < A_-}``."""
    lo_c = max(-a_plus, -1.0)
    hi_c = min(a_minus, 1.0)
    if lo_c >= hi_c:
        return ArcSet.empty()
    t_hi = math.acos(hi_c)  # smallest theta in the set
    t_lo = math.acos(lo_c)  # largest theta in the upper half
    return ArcSet(((t_hi, t_lo), (TWO_PI - t_lo, TWO_PI - t_hi)))


@dataclass(frozen=True)
class ClosedFormConstants:
    p: int
    values: dict
    drift: dict
    unstable: bool


def estimate_closed_form_constants(spec, p: int, window, drift_tol: float = 1e-6) -> ClosedFormConstants:
    """Window surrogates: ``A = limsup |alpha_n|`` (p=1); ``A_pm = liminf(rho rho' pm Re(a conj(a')))`` (p=2)."""
    m0, m1 = int(window[0]), int(window[1])
    ms = np.arange(m0, m1 + 1)
    mid = len(ms) // 2
    al = block_alphas(spec, ms, p)
    if p == 1:
        mod = np.abs(al[:, 0])
        values = {"A": float(mod.max())}
        drift = {"A": float(abs(mod.max() - mod[mid:].max()))}
    elif p == 2:
        a0, a1 = al[:, 0], al[:, 1]
        rr = rho_of(a0) * rho_of(a1)
        cross = (a0 * np.conj(a1)).real
        plus, minus = rr + cross, rr - cross
        values = {"Aplus": float(plus.min()), "Aminus": float(minus.min())}
        drift = {"Aplus": float(abs(plus.min() - plus[mid:].min())),
                 "Aminus": float(abs(minus.min() - minus[mid:].min()))}
    else:
        raise DomainError("closed-form constants exist only for p = 1 and p = 2")
    unstable = any(v > drift_tol for v in drift.values())
    if unstable:
        warnings.warn(f"constant estimates drift across the window: {drift}", PredictionWarning, stacklevel=2)
    return ClosedFormConstants(p=p, values=values, drift=drift, unstable=unstable)


# ---------------------------------------------------------------------------
# Periodic models


@dataclass
class PeriodicModel:
    gamma: tuple
    bands: ArcSet
    degenerate_edges: list
    grid_size: int

    @property
    def p(self) -> int:
        return len(self.gamma)

    def discriminant(self, theta, r=1.0) -> np.ndarray:
        """``Delta_e(r e^{i theta})`` on the branch ``z^{1/2} = sqrt(r) e^{i theta/2}``."""
        z, zh = circle_points(np.atleast_1d(theta), r)
        p00, _, _, p11 = products(np.asarray(self.gamma, complex)[None, :], z)
        return (p00[0] + p11[0]) * zh ** (-self.p)


def periodic_bands(gamma, n_grid: int | None = None) -> PeriodicModel:
    """Bands ``{|Delta_e| <= 2}`` of a periodic sequence, edges refined by bisection.

    Local maxima of ``|Delta_e|`` that come within ``1e-8`` of 2 without
    exceeding it are reported as degenerate (closed-gap) edges; maxima that
    exceed 2 between two in-band grid points open a gap narrower than the grid.
    """
    gamma = tuple(complex(g) for g in gamma)
    if not gamma or any(abs(g) >= 1 for g in gamma):
        raise DomainError("period coefficients must lie in the open unit disk")
    p = len(gamma)
    model = PeriodicModel(gamma=gamma, bands=ArcSet.empty(), degenerate_edges=[], grid_size=0)
    n_grid = n_grid or max(4096, 1024 * p)
    theta = np.linspace(0.0, TWO_PI, n_grid + 1)
    absd = lambda th: np.abs(model.discriminant(th))
    vals = absd(theta)
    inside = lambda v: v <= 2.0
    arcs = _level_arcs(theta, vals, absd, inside, warn_open_ends=False)

    # hidden gaps / tangencies at interior local maxima of |Delta_e| within bands
    degenerate = []
    extra_cuts = []
    interior = np.flatnonzero((vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:]) & (vals[1:-1] <= 2.0)
                              & (vals[1:-1] > 2.0 - 1e-3)) + 1
    for i in interior:
        res = minimize_scalar(lambda t: -absd(np.array([t]))[0], bounds=(theta[i - 1], theta[i + 1]),
                              method="bounded", options={"xatol": 1e-14})
        tmax, vmax = float(res.x), float(-res.fun)
        if abs(vmax - 2.0) < TANGENCY_THRESHOLD:
            degenerate.append(math.fmod(tmax, TWO_PI))
        elif vmax > 2.0:
            left = _bisect(absd, [theta[i - 1]], [tmax], inside)[0]
            right = _bisect(absd, [theta[i + 1]], [tmax], inside)[0]
            extra_cuts.append((float(left), float(right)))
    # endpoints of the [0, 2 pi] grid: check a touch at theta = 0
    if vals[0] <= 2.0 and vals[0] > 2.0 - 1e-3 and vals[1] <= vals[0] and vals[-2] <= vals[-1]:
        if abs(vals[0] - 2.0) < TANGENCY_THRESHOLD:
            degenerate.append(0.0)
    bands = ArcSet(tuple(map(tuple, arcs)))
    for left, right in extra_cuts:
        bands = bands.intersect(ArcSet(((right, left + TWO_PI),)))
    model.bands = bands
    model.degenerate_edges = sorted(degenerate)
    model.grid_size = n_grid
    return model


@dataclass(frozen=True)
class TorusCheck:
    converges: bool
    sup_gap: list
    windows: list


def torus_convergence_check(spec, model: PeriodicModel, p: int, windows, theta=None, tol: float = 1e-2) -> TorusCheck:
    """Sup over the grid and each block window of ``|Delta_m - Delta_e|``.

    ``converges`` requires the gaps to be nonincreasing across the schedule and
    the last one to be below ``tol``.
    """
    if model.p != p:
        raise DomainError(f"model has period {model.p}, requested p = {p}")
    if theta is None:
        theta = np.linspace(0.0, TWO_PI, 721)
    theta = np.asarray(theta, dtype=float)
    ref = model.discriminant(theta)
    z, zh = circle_points(theta)
    gaps = []
    for m0, m1 in windows:
        data = block_data(spec, np.arange(int(m0), int(m1) + 1), p, z, zh, derivative=False)
        gaps.append(float(np.max(np.abs(data.delta - ref[None, :]))))
    monotone = all(b <= a + 1e-14 for a, b in zip(gaps, gaps[1:]))
    return TorusCheck(converges=bool(monotone and gaps[-1] < tol), sup_gap=gaps,
                      windows=[[int(a), int(b)] for a, b in windows])


def periodic_sequence_of(model: PeriodicModel):
    return periodic(model.gamma)
