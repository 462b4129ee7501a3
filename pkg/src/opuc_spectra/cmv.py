"""Brute-force oracle: finite CMV truncations and smoothed spectral densities.

A truncation of size ``n`` uses ``alpha_0 .. alpha_{n-2}`` and a unimodular
boundary coefficient ``beta`` in place of ``alpha_{n-1}``; the result is
unitary with a pure point spectral measure.  Averaging over equispaced
``beta`` and smoothing with a positive kernel gives a density estimate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .approximants import DensityProfile
from .arcs import ArcSet
from .errors import DomainError, NumericInstability
from .sequences import rho_of
from .szego import natural_tail, radial_density

TWO_PI = 2.0 * math.pi


class ResolutionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class FiniteCMV:
    n: int
    alphas: np.ndarray
    beta: complex
    matrix: np.ndarray

    def unitarity_residual(self) -> float:
        C = self.matrix
        return float(np.linalg.norm(C.conj().T @ C - np.eye(self.n), 2))

    def bandwidth_residual(self) -> float:
        """Largest entry outside the five central diagonals."""
        i, j = np.indices(self.matrix.shape)
        outside = np.abs(i - j) > 2
        return float(np.abs(self.matrix[outside]).max()) if outside.any() else 0.0


def _theta_blocks(coeffs, n, start):
    """Block-diagonal matrix of Theta(alpha_j) = [[conj a, rho], [rho, -a]] on rows (j, j+1), j = start, start+2, ..."""
    out = np.zeros((n, n), complex)
    if start == 1:
        out[0, 0] = 1.0
    for j in range(start, n, 2):
        a = coeffs[j]
        if j + 1 < n:
            r = rho_of(a)
            out[j : j + 2, j : j + 2] = [[np.conj(a), r], [r, -a]]
        else:
            out[j, j] = np.conj(a)
    return out


def build_cmv(spec, n: int, beta: complex = 1.0) -> FiniteCMV:
    """``C = L M`` with ``L = Theta_0 + Theta_2 + ...`` and ``M = 1 + Theta_1 + Theta_3 + ...``."""
    if n < 2:
        raise DomainError("CMV truncation needs n >= 2")
    beta = complex(beta)
    if abs(abs(beta) - 1.0) > 1e-12:
        raise DomainError("boundary coefficient must be unimodular")
    coeffs = np.empty(n, complex)
    coeffs[: n - 1] = spec.alphas(np.arange(n - 1))
    coeffs[n - 1] = beta
    L = _theta_blocks(coeffs, n, 0)
    M = _theta_blocks(coeffs, n, 1)
    return FiniteCMV(n=n, alphas=coeffs[: n - 1].copy(), beta=beta, matrix=L @ M)


@dataclass(frozen=True)
class SpectralSample:
    eigenvalues: np.ndarray
    weights: np.ndarray

    @property
    def theta(self):
        return np.mod(np.angle(self.eigenvalues), TWO_PI)

    def to_rows(self):
        order = np.argsort(self.theta)
        return [(float(t), float(w)) for t, w in zip(self.theta[order], self.weights[order])]


def _schur_solve(C):
    try:
        T, Z = scipy.linalg.schur(C, output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericInstability(f"Schur decomposition failed: {exc}") from exc
    # a normal matrix has diagonal Schur form, so the columns of Z are eigenvectors
    return np.diag(T).copy(), Z


def _hermitian_solve(C, phase=0.5, cluster_gap=1e-7):
    """Eigenvectors of the banded Hermitian part ``Re(e^{-i phase} C)``; they diagonalize C too.

    Near-degenerate eigenvalues of the Hermitian part (pairs symmetric about
    ``phase``) are separated by diagonalizing C on their joint eigenspace.
    """
    n = C.shape[0]
    H = 0.5 * (np.exp(-1j * phase) * C + np.exp(1j * phase) * C.conj().T)
    ab = np.zeros((3, n), complex)
    for k in range(min(3, n)):
        ab[k, : n - k] = np.diagonal(H, -k)
    h, V = scipy.linalg.eig_banded(ab, lower=True)
    CV = C @ V
    ev = np.einsum("ij,ij->j", V.conj(), CV)
    breaks = np.flatnonzero(np.diff(h) > cluster_gap)
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks + 1, [n]])
    for i0, i1 in zip(starts, ends):
        if i1 - i0 > 1:
            block = V[:, i0:i1].conj().T @ CV[:, i0:i1]
            lam, Q = np.linalg.eig(block)
            Q, _ = np.linalg.qr(Q)
            V[:, i0:i1] = V[:, i0:i1] @ Q
            ev[i0:i1] = np.einsum("ij,ij->j", V[:, i0:i1].conj(), C @ V[:, i0:i1])
    return ev, V


def spectral_measure(cmv: FiniteCMV, solver: str = "hermitian") -> SpectralSample:
    """Eigenvalues and first-component weights of the truncation.

    ``hermitian`` uses the banded Hermitian part and checks the eigenpair
    residuals, falling back to a complex Schur decomposition if they exceed
    1e-9; ``schur`` always uses the Schur decomposition.
    """
    C = cmv.matrix
    if solver == "hermitian":
        ev, V = _hermitian_solve(C)
        resid = float(np.max(np.linalg.norm(C @ V - V * ev, axis=0))) if len(ev) else 0.0
        if resid > 1e-9:
            ev, V = _schur_solve(C)
    elif solver == "schur":
        ev, V = _schur_solve(C)
    else:
        raise DomainError(f"unknown eigensolver {solver!r}")
    weights = np.abs(V[0, :]) ** 2
    return SpectralSample(eigenvalues=ev, weights=weights)


def jackson_kernel(x, order: int):
    """Jackson kernel of order M, normalized to mean 1 over the circle: ``3/(M(2M^2+1)) (sin(Mx/2)/sin(x/2))^4``."""
    M = int(order)
    x = np.asarray(x, dtype=float)
    half = 0.5 * np.mod(x + math.pi, TWO_PI) - 0.5 * math.pi  # x/2 reduced to [-pi/2, pi/2)
    s = np.sin(half)
    small = np.abs(s) < 1e-8
    ratio = np.where(small, M, np.sin(M * half) / np.where(small, 1.0, s))
    return 3.0 / (M * (2.0 * M * M + 1.0)) * ratio**4


def phase_averaged_sample(spec, n: int, phases: int):
    thetas, weights = [], []
    for k in range(phases):
        beta = np.exp(1j * TWO_PI * (k + 0.5) / phases)
        ss = spectral_measure(build_cmv(spec, n, beta))
        thetas.append(ss.theta)
        weights.append(ss.weights / phases)
    return np.concatenate(thetas), np.concatenate(weights)


def density_estimate(spec, theta, method: str = "boundary-phase-average", *, n: int = 512, phases: int = 64,
                     kernel_order: int | None = None, r: float = 1.0 - 1e-6, tail=None, arc: ArcSet | None = None,
                     richardson: bool = True) -> DensityProfile:
    """Density of the spectral measure relative to ``dtheta / 2 pi``.

    ``boundary-phase-average`` smooths the ``beta``-averaged truncation
    measures with a Jackson kernel (default order ``n // 8``);
    ``caratheodory-radial`` returns ``Re F`` near the boundary.
    """
    theta = np.asarray(theta, dtype=float)
    if arc is None:
        arc = ArcSet(((float(theta.min()), float(theta.max())),)) if theta.size else ArcSet.empty()
    if method == "boundary-phase-average":
        if n < 2 or phases < 1:
            raise DomainError("need n >= 2 and at least one phase")
        order = kernel_order or max(2, n // 8)
        if n * phases / order < 10:
            warnings.warn("fewer than 10 eigenvalue samples per kernel width; density under-resolved",
                          ResolutionWarning, stacklevel=2)
        th, wt = phase_averaged_sample(spec, n, phases)
        w = np.zeros_like(theta)
        for start in range(0, len(th), 4096):
            sl = slice(start, start + 4096)
            w += jackson_kernel(theta[:, None] - th[None, sl], order) @ wt[sl]
        return DensityProfile(arc=arc, theta=theta, w=w, N=None, method=method,
                              flags={"n": n, "phases": phases, "kernelOrder": order})
    if method == "caratheodory-radial":
        if not (0.0 < r < 1.0):
            raise DomainError("radius must lie in (0, 1)")
        w = radial_density(spec, theta, tail if tail is not None else natural_tail(spec), r=r, richardson=richardson)
        return DensityProfile(arc=arc, theta=theta, w=w, N=None, method=method, flags={"r": r})
    raise DomainError(f"unknown density method {method!r}")


def compare_densities(a: DensityProfile, b: DensityProfile, arc: ArcSet | None = None) -> dict:
    """Sup and L^1 (``dtheta / 2 pi``) differences on the common part of both grids, resampling ``b`` onto ``a``."""
    ta, tb = np.asarray(a.theta), np.asarray(b.theta)
    lo = max(ta.min(), tb.min())
    hi = min(ta.max(), tb.max())
    if arc is not None:
        sel = np.array([arc.contains(t, 1e-12) for t in ta])
    else:
        sel = np.ones(len(ta), bool)
    sel &= (ta >= lo - 1e-12) & (ta <= hi + 1e-12)
    if hi < lo or sel.sum() < 1:
        raise DomainError("density profiles do not overlap")
    order = np.argsort(tb)
    t = ta[sel]
    wa = np.asarray(a.w)[sel]
    wb = np.interp(t, tb[order], np.asarray(b.w)[order])
    diff = np.abs(wa - wb)
    if len(t) > 1:
        l1 = float(np.trapezoid(diff, t)) / TWO_PI
        ref = float(np.trapezoid(np.abs(wb), t)) / TWO_PI
    else:
        l1 = ref = 0.0
    return {"supError": float(diff.max()), "l1Error": l1, "relL1Error": l1 / ref if ref > 0 else 0.0}
