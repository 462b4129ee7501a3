"""Uniform diagonalization of the conjugated transfer blocks.

On an arc where every tail block is strictly in band, the eigenvalue
``lambda_m`` of ``tilde Phi_m`` is selected by the sign ``s`` of
``Im(z Delta_m')``; eigenframes ``U_m`` are built from ``(lambda - d, c)``
columns and the perturbations ``W_m = U_m^{-1} U_{m+1} - I`` measure how
fast consecutive frames drift apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arcs import ArcSet
from .errors import DiagnosticError, OutOfBandError, RegionError
from .transfer import BranchTracker, TildeBlock, block_alphas, block_data, circle_points


def lambda_plus_minus(delta):
    """Roots ``(Delta +- i sqrt(4 - Delta^2)) / 2`` of ``lambda^2 - Delta lambda + 1``.

    Principal square root; ``|Delta| >= 2`` is rejected since ``4 - Delta^2``
    would then sit on the branch cut.
    """
    delta = np.asarray(delta, dtype=complex)
    if np.any(~(np.abs(delta) < 2.0)):
        raise OutOfBandError("lambda_pm requires |Delta| < 2")
    root = np.sqrt(4.0 - delta * delta)
    lam_p = 0.5 * (delta + 1j * root)
    lam_m = 0.5 * (delta - 1j * root)
    if lam_p.ndim == 0:
        return complex(lam_p), complex(lam_m)
    return lam_p, lam_m


def select_lambda(delta, s: int):
    lam_p, lam_m = lambda_plus_minus(delta)
    return (lam_p, lam_m) if s > 0 else (lam_m, lam_p)


# ---------------------------------------------------------------------------
# Sign constants


@dataclass(frozen=True)
class SignConstants:
    s: int
    t: int
    m0: int
    margin_c: float
    epsilon: float
    arc: ArcSet
    window: tuple = (0, 0)

    @property
    def arc_bounds(self):
        return self.arc.arcs[0]

    def branch(self, p: int) -> BranchTracker:
        """The square-root branch used on this arc: arguments in ``[lo, lo + 2 pi)``."""
        return BranchTracker(p, anchor=self.arc_bounds[0])


def _margins(data, s, t):
    """Pointwise minimum of the four margin quantities (nonpositive means a violation)."""
    return np.minimum.reduce([
        2.0 - np.abs(data.delta),
        s * data.z_delta_prime.imag,
        t * data.c.imag,
        1.0 / np.maximum(np.abs(data.c), 1e-300),
    ])


def detect_sign_constants(spec, p: int, arc: ArcSet, theta=None, m_window=(0, 400), epsilon: float = 0.05,
                          confirm: int = 200, n_radii: int = 5, min_epsilon: float = 1e-4) -> SignConstants:
    """Exhibit ``m0, s, t, epsilon, C`` such that, for all blocks in ``[m0, m_window[1]]``
    and all grid points of the annulus ``{r e^{i theta}: theta in arc, r in [1 - epsilon, 1]}``::

        |Delta_m| <= 2 - C,   s Im(z Delta_m') >= C,   C <= t Im c_m <= |c_m| <= 1/C.

    ``m0`` is the first block after which the signs are constant on the arc;
    at least ``confirm`` blocks must follow it.  ``epsilon`` is halved until
    the annulus conditions hold.  Detected ``s`` and ``t`` must agree.
    """
    if len(arc) != 1:
        raise RegionError("sign constants are defined on a single closed arc")
    if theta is None:
        theta = arc.grid(101)
    theta = np.asarray(theta, dtype=float)
    w0, w1 = int(m_window[0]), int(m_window[1])
    ms = np.arange(w0, w1 + 1)
    z, zh = circle_points(theta)
    data = block_data(spec, ms, p, z, zh)

    in_band = np.all(np.abs(data.delta) < 2.0, axis=1)
    sgn_s = np.sign(data.z_delta_prime.imag)
    sgn_t = np.sign(data.c.imag)
    s_const = np.all(sgn_s == sgn_s[:, :1], axis=1) & (sgn_s[:, 0] != 0)
    t_const = np.all(sgn_t == sgn_t[:, :1], axis=1) & (sgn_t[:, 0] != 0)
    s_fin, t_fin = int(sgn_s[-1, 0]), int(sgn_t[-1, 0])
    good = in_band & s_const & t_const & (sgn_s[:, 0] == s_fin) & (sgn_t[:, 0] == t_fin)
    bad = np.flatnonzero(~good)
    if bad.size and bad[-1] + 1 >= len(ms):
        raise RegionError(
            "in-band and sign conditions fail on the arc at the end of the window "
            "(arc may reach |Delta| = 2, or the window starts too early)"
        )
    m0 = int(ms[bad[-1] + 1]) if bad.size else w0
    if w1 - m0 + 1 < min(confirm, len(ms)):
        raise RegionError(f"signs stabilize only at block {m0}; fewer than {confirm} confirming blocks follow")
    if s_fin == 0 or t_fin == 0:
        raise RegionError("degenerate sign on the arc")

    tail = ms[ms >= m0]
    eps = float(epsilon)
    while eps >= min_epsilon:
        radii = np.linspace(1.0 - eps, 1.0, n_radii)
        margin = math.inf
        for r in radii:
            zr, zhr = circle_points(theta, r)
            margin = min(margin, float(_margins(block_data(spec, tail, p, zr, zhr), s_fin, t_fin).min()))
        if margin > 0:
            break
        eps /= 2.0
    else:
        raise RegionError("annulus conditions fail for every strip depth down to min_epsilon")
    if s_fin != t_fin:
        raise DiagnosticError(f"detected s = {s_fin} but t = {t_fin}; a.c. density would be negative")
    return SignConstants(s=s_fin, t=t_fin, m0=m0, margin_c=margin, epsilon=eps, arc=arc, window=(w0, w1))


# ---------------------------------------------------------------------------
# Eigenframes


@dataclass(frozen=True)
class EigenFrame:
    lam: complex
    lam_inv: complex
    U: np.ndarray
    Uinv: np.ndarray
    det_u: complex


def _frame_arrays(a, b, c, d, delta, s):
    lam, lam_inv = select_lambda(delta, s)
    u00, u01 = lam - d, lam_inv - d
    det_u = (lam - lam_inv) * c
    U = np.stack([np.stack([u00, u01], -1), np.stack([c, c], -1)], -2)
    Uinv = np.stack([np.stack([c, d - lam_inv], -1), np.stack([-c, lam - d], -1)], -2) / np.asarray(det_u)[..., None, None]
    return lam, lam_inv, U, Uinv, det_u


def eigen_frame(tilde: TildeBlock, sc: SignConstants) -> EigenFrame:
    """Frame with ``U = [[lambda - d, 1/lambda - d], [c, c]]`` and ``lambda = lambda_s(Delta)``.

    The margin preconditions are checked at half strength so that points
    between the validation grid nodes are accepted.
    """
    delta = np.asarray(tilde.delta)
    c = np.asarray(tilde.c)
    if np.any(np.abs(delta) > 2.0 - 0.5 * sc.margin_c) or np.any(np.abs(c) < 0.5 * sc.margin_c):
        raise RegionError("eigenframe preconditions violated (|Delta| too close to 2 or c too small)")
    lam, lam_inv, U, Uinv, det_u = _frame_arrays(tilde.a, tilde.b, tilde.c, tilde.d, delta, sc.s)
    return EigenFrame(lam=lam, lam_inv=lam_inv, U=U, Uinv=Uinv, det_u=det_u)


def reconstruction_residual(tilde: TildeBlock, frame: EigenFrame):
    """``||U diag(lambda, 1/lambda) U^{-1} - tilde Phi|| / ||tilde Phi||`` (Frobenius)."""
    lam = np.asarray(frame.lam)
    lam_inv = np.asarray(frame.lam_inv)
    U = frame.U
    Lam_Uinv = frame.Uinv * np.stack([lam, lam_inv], -1)[..., :, None]
    rec = U @ Lam_Uinv
    T = np.stack([np.stack([np.asarray(tilde.a), np.asarray(tilde.b)], -1),
                  np.stack([np.asarray(tilde.c), np.asarray(tilde.d)], -1)], -2)
    return np.linalg.norm(rec - T, axis=(-2, -1)) / np.linalg.norm(T, axis=(-2, -1))


def spectral_norm_2x2(W):
    """Largest singular value of (..., 2, 2) matrices in closed form."""
    W = np.asarray(W)
    fro2 = np.sum(np.abs(W) ** 2, axis=(-2, -1))
    det = np.abs(W[..., 0, 0] * W[..., 1, 1] - W[..., 0, 1] * W[..., 1, 0])
    disc = np.sqrt(np.maximum(fro2 * fro2 - 4.0 * det * det, 0.0))
    return np.sqrt(0.5 * (fro2 + disc))


@dataclass(frozen=True)
class PerturbationMatrix:
    W: np.ndarray
    norm: float
    ratio: float | None = None

    @property
    def e(self):
        return self.W[..., 0, 0]

    @property
    def f(self):
        return self.W[..., 0, 1]

    @property
    def g(self):
        return self.W[..., 1, 0]

    @property
    def h(self):
        return self.W[..., 1, 1]


def perturbation_matrix(frame_m: EigenFrame, frame_m1: EigenFrame, coefficient_variation: float | None = None):
    """``W_m = U_m^{-1} U_{m+1} - I``; ``ratio = ||W_m|| / sum_k |alpha_{(m+1)p+k} - alpha_{mp+k}|``."""
    W = frame_m.Uinv @ frame_m1.U - np.eye(2)
    norm = spectral_norm_2x2(W)
    ratio = None
    if coefficient_variation is not None and coefficient_variation > 0:
        ratio = norm / coefficient_variation
    return PerturbationMatrix(W=W, norm=norm, ratio=ratio)


@dataclass
class FrameSeries:
    """Frames for consecutive blocks at a set of spectral points; arrays (nm, nz[, 2, 2])."""

    ms: np.ndarray
    lam: np.ndarray
    lam_inv: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    U: np.ndarray
    Uinv: np.ndarray

    def perturbations(self) -> np.ndarray:
        return self.Uinv[:-1] @ self.U[1:] - np.eye(2)


def frame_series(spec, ms, p: int, theta, r, s: int) -> FrameSeries:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    z, zh = circle_points(theta, r)
    data = block_data(spec, ms, p, z, zh, derivative=False)
    lam, lam_inv, U, Uinv, _ = _frame_arrays(data.a, data.b, data.c, data.d, data.delta, s)
    return FrameSeries(np.asarray(ms), lam, lam_inv, data.a, data.b, data.c, data.d, U, Uinv)


def perturbation_norms(spec, p: int, theta, sc: SignConstants, ms, r=1.0):
    """``||W_m||`` for consecutive blocks in ``ms`` (shape (len(ms)-1, nz)) and the coefficient variations."""
    ms = np.asarray(ms)
    series = frame_series(spec, ms, p, theta, r, sc.s)
    norms = spectral_norm_2x2(series.perturbations())
    al = block_alphas(spec, ms, p)
    variation = np.abs(al[1:] - al[:-1]).sum(axis=1)
    return norms, variation


# ---------------------------------------------------------------------------
# Bounded sums of relative increments


@dataclass(frozen=True)
class IncrementSums:
    value: complex  # sum over the requested [k, l]
    max_modulus: float  # over all sub-ranges of the sequence
    argmax: tuple
    bound_constant: float  # smallest C with 1/C <= Im eps <= |eps| <= C
    square_variation: float


def relative_increment_sums(eps, k: int | None = None, l: int | None = None, bound: float | None = None):
    """Sums ``sum_{n=k}^{l} (eps_{n+1} - eps_n) / eps_n``, and their max modulus over all ``k <= l``.

    ``eps`` must stay in the upper half-plane away from 0 and infinity;
    ``bound`` (if given) is the constant ``C`` of ``1/C <= Im eps_n <= |eps_n| <= C``.
    """
    eps = np.asarray(eps, dtype=complex)
    if eps.size < 2:
        raise DiagnosticError("need at least two terms")
    bad = np.flatnonzero(~(eps.imag > 0))
    if bad.size:
        raise DiagnosticError(f"Im eps_n must be positive; fails at n = {int(bad[0])}")
    c_eff = float(max(1.0 / eps.imag.min(), np.abs(eps).max()))
    if bound is not None:
        viol = np.flatnonzero((eps.imag < 1.0 / bound) | (np.abs(eps) > bound))
        if viol.size:
            raise DiagnosticError(f"1/C <= Im eps <= |eps| <= C fails at n = {int(viol[0])}")
    terms = np.diff(eps) / eps[:-1]
    prefix = np.concatenate([[0.0], np.cumsum(terms)])
    n = len(terms)
    k = 0 if k is None else int(k)
    l = n - 1 if l is None else int(l)
    if not (0 <= k <= l < n):
        raise DiagnosticError(f"range [{k}, {l}] outside 0..{n - 1}")
    value = complex(prefix[l + 1] - prefix[k])
    # sum over [i, j] is prefix[j+1] - prefix[i]; max over i < j+1 is the diameter of the prefix set
    diff = np.abs(prefix[None, :] - prefix[:, None])
    diff = np.triu(diff, 1)
    flat = int(np.argmax(diff))
    i, j = divmod(flat, diff.shape[1])
    return IncrementSums(value=value, max_modulus=float(diff[i, j]), argmax=(int(i), int(j) - 1),
                         bound_constant=c_eff, square_variation=float(np.sum(np.abs(np.diff(eps)) ** 2)))
