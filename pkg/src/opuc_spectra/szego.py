"""One-step Szego matrices, orthogonal polynomials and Schur/Caratheodory functions."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateResult, DomainError
from .sequences import VerblunskyCoefficient, rho_of


def _alpha_value(alpha) -> complex:
    return alpha.alpha if isinstance(alpha, VerblunskyCoefficient) else complex(alpha)


def one_step_matrix(alpha, z) -> np.ndarray:
    """``A(alpha, z) = (1/rho) [[z, -conj(alpha)], [-alpha z, 1]]``."""
    a = _alpha_value(alpha)
    if z == 0:
        raise DomainError("z must be nonzero")
    rho = float(rho_of(a))
    return np.array([[z, -np.conj(a)], [-a * z, 1.0]], dtype=complex) / rho


def szego_polynomials(spec, z, n: int):
    """Return ``(phi_n, phi*_n, psi_n, psi*_n)`` at ``z`` (scalar or array).

    Second-kind polynomials use the same recursion with every coefficient negated.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("z must be nonzero")
    alphas = spec.alphas(np.arange(n)) if n else np.zeros(0, dtype=complex)
    rhos = rho_of(alphas)
    phi = np.ones_like(z)
    phis = np.ones_like(z)
    psi = np.ones_like(z)
    psis = np.ones_like(z)
    for a, r in zip(alphas, rhos):
        ac = np.conj(a)
        phi, phis = (z * phi - ac * phis) / r, (-a * z * phi + phis) / r
        psi, psis = (z * psi + ac * psis) / r, (a * z * psi + psis) / r
    return phi, phis, psi, psis


# ---------------------------------------------------------------------------
# Schur algorithm


@dataclass(frozen=True)
class Truncate:
    """Tail f_M = 0 at depth M; ``depth=None`` picks M from the contraction bound."""

    depth: int | None = None
    tol: float = 1e-15


@dataclass(frozen=True)
class PeriodicTail:
    """Coefficients from index ``start`` on repeat ``period``; f_start is the attracting fixed point."""

    start: int
    period: tuple

    def __post_init__(self):
        object.__setattr__(self, "period", tuple(complex(g) for g in self.period))
        if not self.period:
            raise DomainError("periodic tail needs at least one coefficient")


MAX_DEPTH = 1 << 20


def natural_tail(spec):
    """Exact tail for sequences that are eventually periodic by construction, else a truncation."""
    kind = getattr(spec, "kind", None)
    if kind in ("constant", "p-periodic"):
        return PeriodicTail(0, tuple(spec.alphas(np.arange(spec.period))))
    if kind == "explicit-list":
        start = max(0, len(spec.params["values"]) - spec.offset)
        return PeriodicTail(start, (spec(start),))
    if hasattr(spec, "schur_tail"):
        return spec.schur_tail()
    return Truncate()


def adaptive_depth(zmax: float, tol: float) -> int:
    """Smallest M with |z|^M * 2/(1-|z|) <= tol, from the contraction estimate."""
    if zmax == 0:
        return 1
    return max(1, int(math.ceil(math.log(tol * (1.0 - zmax)) / math.log(zmax))))


def _backward(alphas, z, f):
    # f_n = (alpha_n + z f_{n+1}) / (1 + conj(alpha_n) z f_{n+1})
    for a in alphas[::-1]:
        zf = z * f
        f = (a + zf) / (1.0 + np.conj(a) * zf)
    return f


def periodic_fixed_point(period, z):
    """Attracting fixed point (the root in the open disk) of one period of the Schur recursion."""
    z = np.asarray(z, dtype=complex)
    # Mobius matrix of f_{n+1} -> f_n is [[z, a], [conj(a) z, 1]]; compose over the period.
    m00 = np.ones_like(z)
    m01 = np.zeros_like(z)
    m10 = np.zeros_like(z)
    m11 = np.ones_like(z)
    for a in period:
        # right-multiply by the map for the next coefficient
        n00 = m00 * z + m01 * np.conj(a) * z
        n01 = m00 * a + m01
        n10 = m10 * z + m11 * np.conj(a) * z
        n11 = m10 * a + m11
        m00, m01, m10, m11 = n00, n01, n10, n11
    # fixed points of (m00 f + m01) / (m10 f + m11):  m10 f^2 + (m11 - m00) f - m01 = 0
    qa, qb, qc = m10, m11 - m00, -m01
    disc = np.sqrt(qb * qb - 4.0 * qa * qc)
    sign = np.where((np.conj(qb) * disc).real >= 0, 1.0, -1.0)
    q = -0.5 * (qb + sign * disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(qa != 0, q / qa, np.inf)
        r2 = np.where(q != 0, qc / q, 0.0)
    in1 = np.abs(r1) < 1.0
    in2 = np.abs(r2) < 1.0
    if np.any(in1 == in2):
        raise DegenerateResult(
            "periodic Schur fixed point is not unique in the disk (closed-gap / boundary condition)"
        )
    return np.where(in1, r1, r2)


def schur_function(spec, z, tail=None):
    """Evaluate the Schur function of ``spec`` by the backward continued fraction."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) >= 1.0):
        raise DomainError("Schur function requires |z| < 1")
    if tail is None:
        tail = natural_tail(spec)
    if isinstance(tail, Truncate):
        depth = tail.depth
        if depth is None:
            depth = adaptive_depth(float(np.max(np.abs(z))) if z.size else 0.0, tail.tol)
            if depth > MAX_DEPTH:
                warnings.warn(f"truncation depth {depth} capped at {MAX_DEPTH}; Schur values near the "
                              "circle are approximate", RuntimeWarning, stacklevel=2)
                depth = MAX_DEPTH
        f = np.zeros_like(z)
        return _backward(spec.alphas(np.arange(depth)), z, f)
    if isinstance(tail, PeriodicTail):
        f = periodic_fixed_point(tail.period, z)
        head = spec.alphas(np.arange(tail.start)) if tail.start else np.zeros(0, dtype=complex)
        return _backward(head, z, f)
    raise DomainError(f"unsupported tail specification {tail!r}")


def caratheodory_function(spec, z, tail=None):
    """``F = (1 + z f) / (1 - z f)``; ``Re F > 0`` and ``F(0) = 1``."""
    z = np.asarray(z, dtype=complex)
    zf = z * schur_function(spec, z, tail)
    return (1.0 + zf) / (1.0 - zf)


def radial_density(spec, theta, tail=None, r: float = 1.0 - 1e-6, richardson: bool = True):
    """Boundary density ``lim_{r->1} Re F(r e^{i theta})``.

    With ``richardson`` the values at radii ``r`` and ``2r - 1`` are combined
    linearly in ``1 - r``, cancelling the first-order radial error.
    """
    theta = np.asarray(theta, dtype=float)
    e = np.exp(1j * theta)
    f1 = caratheodory_function(spec, r * e, tail).real
    if not richardson:
        return f1
    f2 = caratheodory_function(spec, (2.0 * r - 1.0) * e, tail).real
    return 2.0 * f1 - f2
