"""p-step transfer matrices, discriminants and the conjugated blocks.

Vectorized routines work on an array of block indices ``ms`` and an array of
spectral points ``z`` together with a chosen square root ``zh`` of ``z``; they
return arrays of shape ``(len(ms), len(z))``.  The scalar dataclass API on top
(`transfer_block`, `discriminant`, `tilde_block`) mirrors the single-block view.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BranchError, DomainError
from .sequences import rho_of

TWO_PI = 2.0 * math.pi
J = np.diag([1.0, -1.0]).astype(complex)
M_CONJ = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)

# blocks per vectorized chunk; keeps (chunk, nz) temporaries small
_CHUNK = 256


@dataclass(frozen=True)
class BranchTracker:
    """Fixes the branch of ``z^{1/2}`` (hence of ``z^{p/2}``).

    Arguments are taken in ``[anchor, anchor + 2 pi)``.  For ordered paths the
    argument is unwrapped from the first sample, so the branch is continuous
    along the path; consecutive samples more than pi apart in angle raise
    :class:`BranchError`.  For even p the result does not depend on the branch.
    """

    p: int
    anchor: float = 0.0

    def arguments(self, z, ordered: bool = False) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if np.any(z == 0):
            raise DomainError("z must be nonzero")
        arg = np.mod(np.angle(z) - self.anchor, TWO_PI) + self.anchor
        if ordered and arg.size > 1:
            flat = arg.reshape(-1)
            steps = np.diff(np.angle(z.reshape(-1)))
            steps = np.mod(steps + math.pi, TWO_PI) - math.pi
            if np.any(np.abs(steps) >= math.pi - 1e-12):
                k = int(np.flatnonzero(np.abs(steps) >= math.pi - 1e-12)[0])
                raise BranchError(f"path jumps by >= pi between samples {k} and {k + 1}")
            arg = (flat[0] + np.concatenate([[0.0], np.cumsum(steps)])).reshape(arg.shape)
        return arg

    def sqrt(self, z, ordered: bool = False) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return np.sqrt(np.abs(z)) * np.exp(0.5j * self.arguments(z, ordered))

    def half_power(self, z, ordered: bool = False) -> np.ndarray:
        """``z^{p/2}`` on this branch."""
        return self.sqrt(z, ordered) ** self.p


def circle_points(theta, r=1.0):
    """``z = r e^{i theta}`` and the branch ``sqrt(r) e^{i theta/2}`` continuous in theta."""
    theta = np.asarray(theta, dtype=float)
    r = np.asarray(r, dtype=float)
    return r * np.exp(1j * theta), np.sqrt(r) * np.exp(0.5j * theta)


def block_alphas(spec, ms, p: int) -> np.ndarray:
    """Coefficients ``alpha_{mp} .. alpha_{mp+p-1}`` for each block index, shape (len(ms), p)."""
    ms = np.atleast_1d(np.asarray(ms, dtype=np.int64))
    idx = ms[:, None] * p + np.arange(p)[None, :]
    return spec.alphas(idx)


def products(alphas, z, derivative: bool = False):
    """Right-to-left products of one-step matrices.

    ``alphas`` has shape (nm, p); ``z`` has shape (nz,).  Returns the four
    entries of ``Phi`` (each (nm, nz)) and, with ``derivative``, the entries of
    ``dPhi/dz`` accumulated by the product rule.
    """
    alphas = np.asarray(alphas, dtype=complex)
    z = np.asarray(z, dtype=complex)[None, :]
    nm, p = alphas.shape
    shape = (nm, z.shape[1])
    p00 = np.ones(shape, complex)
    p01 = np.zeros(shape, complex)
    p10 = np.zeros(shape, complex)
    p11 = np.ones(shape, complex)
    if derivative:
        d00 = np.zeros(shape, complex)
        d01 = np.zeros(shape, complex)
        d10 = np.zeros(shape, complex)
        d11 = np.zeros(shape, complex)
    for k in range(p):
        a = alphas[:, k : k + 1]
        ac = np.conj(a)
        inv_rho = 1.0 / rho_of(a)
        if derivative:
            # d/dz A = (1/rho) [[1, 0], [-a, 0]]
            n00 = (p00 + z * d00 - ac * d10) * inv_rho
            n01 = (p01 + z * d01 - ac * d11) * inv_rho
            n10 = (-a * p00 - a * z * d00 + d10) * inv_rho
            n11 = (-a * p01 - a * z * d01 + d11) * inv_rho
            d00, d01, d10, d11 = n00, n01, n10, n11
        q00 = (z * p00 - ac * p10) * inv_rho
        q01 = (z * p01 - ac * p11) * inv_rho
        q10 = (-a * z * p00 + p10) * inv_rho
        q11 = (-a * z * p01 + p11) * inv_rho
        p00, p01, p10, p11 = q00, q01, q10, q11
    if derivative:
        return (p00, p01, p10, p11), (d00, d01, d10, d11)
    return p00, p01, p10, p11


@dataclass
class BlockData:
    """Per-(block, z) quantities, arrays of shape (nm, nz)."""

    delta: np.ndarray
    dtheta: np.ndarray | None  # i z Delta'(z); equals dDelta/dtheta on the circle
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    @property
    def z_delta_prime(self):
        return -1j * self.dtheta


def block_data(spec, ms, p: int, z, zh, derivative: bool = True) -> BlockData:
    """Delta_m, i z Delta_m' and the conjugated entries (a, b, c, d) for all ``ms`` x ``z``."""
    ms = np.atleast_1d(np.asarray(ms, dtype=np.int64))
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    zh = np.atleast_1d(np.asarray(zh, dtype=complex))
    pieces = []
    for start in range(0, len(ms), _CHUNK):
        sub = ms[start : start + _CHUNK]
        alphas = block_alphas(spec, sub, p)
        pieces.append(_entries_from_alphas(alphas, z, zh, p, derivative))
    if not pieces:
        empty = np.zeros((0, len(z)), complex)
        return BlockData(empty, empty if derivative else None, empty, empty, empty, empty)
    cat = lambda name: np.concatenate([getattr(x, name) for x in pieces], axis=0)
    return BlockData(
        delta=cat("delta"),
        dtheta=cat("dtheta") if derivative else None,
        a=cat("a"),
        b=cat("b"),
        c=cat("c"),
        d=cat("d"),
    )


def _entries_from_alphas(alphas, z, zh, p, derivative):
    scale = zh[None, :] ** (-p)
    if derivative:
        (p00, p01, p10, p11), (d00, d01, d10, d11) = products(alphas, z, derivative=True)
    else:
        p00, p01, p10, p11 = products(alphas, z)
    tr = p00 + p11
    delta = scale * tr
    dtheta = None
    if derivative:
        # i z Delta' = i z [ -(p/2) z^{-p/2-1} tr + z^{-p/2} tr' ] = i z^{-p/2} (z tr' - (p/2) tr)
        dtheta = 1j * scale * (z[None, :] * (d00 + d11) - 0.5 * p * tr)
    a = 0.5 * scale * (p00 + p01 + p10 + p11)
    b = 0.5 * scale * (p00 - p01 + p10 - p11)
    c = 0.5 * scale * (p00 + p01 - p10 - p11)
    d = 0.5 * scale * (p00 - p01 - p10 + p11)
    return BlockData(delta, dtheta, a, b, c, d)


# ---------------------------------------------------------------------------
# Single-block API


@dataclass(frozen=True)
class TransferBlock:
    m: int
    p: int
    z: complex
    phi: np.ndarray


@dataclass(frozen=True)
class TildeBlock:
    a: complex
    b: complex
    c: complex
    d: complex
    delta: complex
    delta_prime: complex | None = None

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)


def transfer_block(spec, m: int, p: int, z) -> TransferBlock:
    if z == 0:
        raise DomainError("z must be nonzero")
    if p < 1 or m < 0:
        raise DomainError("need p >= 1 and m >= 0")
    p00, p01, p10, p11 = products(block_alphas(spec, [m], p), np.array([z]))
    phi = np.array([[p00[0, 0], p01[0, 0]], [p10[0, 0], p11[0, 0]]])
    return TransferBlock(m=m, p=p, z=complex(z), phi=phi)


def _check_branch(block, branch):
    if branch.p != block.p:
        raise DomainError(f"branch is for p={branch.p}, block has p={block.p}")


def discriminant(block: TransferBlock, branch: BranchTracker | None = None) -> complex:
    branch = branch or BranchTracker(block.p)
    _check_branch(block, branch)
    scale = complex(branch.half_power(block.z))
    return complex(np.trace(block.phi)) / scale


def discriminant_derivative(spec, m: int, p: int, z, branch: BranchTracker | None = None) -> complex:
    """Exact ``Delta_m'(z)`` from the product rule (no finite differences)."""
    branch = branch or BranchTracker(p)
    zh = complex(branch.sqrt(z))
    (p00, _, _, p11), (d00, _, _, d11) = products(block_alphas(spec, [m], p), np.array([z]), True)
    tr = complex(p00[0, 0] + p11[0, 0])
    dtr = complex(d00[0, 0] + d11[0, 0])
    return zh ** (-p) * (dtr - 0.5 * p * tr / z)


def tilde_block(block: TransferBlock, branch: BranchTracker | None = None, delta_prime=None) -> TildeBlock:
    branch = branch or BranchTracker(block.p)
    _check_branch(block, branch)
    scale = complex(branch.half_power(block.z))
    t = M_CONJ @ block.phi @ M_CONJ / scale
    return TildeBlock(a=t[0, 0], b=t[0, 1], c=t[1, 0], d=t[1, 1], delta=complex(t[0, 0] + t[1, 1]),
                      delta_prime=delta_prime)


# ---------------------------------------------------------------------------
# Diagnostics


def structure_report(spec, m: int, p: int, z_samples, branch: BranchTracker | None = None) -> dict:
    """Residuals of the determinant, symplectic and reality identities per sample.

    Reality and symplectic residuals are reported for every sample but only
    asserted (``max`` fields) over samples on the unit circle.
    """
    branch = branch or BranchTracker(p)
    z = np.atleast_1d(np.asarray(z_samples, dtype=complex))
    zh = branch.sqrt(z)
    p00, p01, p10, p11 = products(block_alphas(spec, [m], p), z)
    p00, p01, p10, p11 = p00[0], p01[0], p10[0], p11[0]
    data = _entries_from_alphas(block_alphas(spec, [m], p), z, zh, p, derivative=True)
    delta, dth = data.delta[0], data.dtheta[0]
    a, b, c, d = data.a[0], data.b[0], data.c[0], data.d[0]
    norm_phi = np.sqrt(np.abs(p00) ** 2 + np.abs(p01) ** 2 + np.abs(p10) ** 2 + np.abs(p11) ** 2)
    norm_t = np.sqrt(np.abs(a) ** 2 + np.abs(b) ** 2 + np.abs(c) ** 2 + np.abs(d) ** 2)
    det_res = np.abs(p00 * p11 - p01 * p10 - z**p) / np.maximum(norm_phi**2, np.abs(z) ** p)
    tdet_res = np.abs(a * d - b * c - 1.0) / np.maximum(norm_t**2, 1.0)
    trace_res = np.abs(a + d - delta) / (1.0 + norm_t)
    # Phi^* J Phi - J
    s00 = np.abs(p00) ** 2 - np.abs(p10) ** 2 - 1.0
    s01 = np.conj(p00) * p01 - np.conj(p10) * p11
    s11 = np.abs(p01) ** 2 - np.abs(p11) ** 2 + 1.0
    sympl_res = np.sqrt(np.abs(s00) ** 2 + 2 * np.abs(s01) ** 2 + np.abs(s11) ** 2) / np.maximum(norm_phi**2, 1.0)
    scale = 1.0 + norm_t
    reality_res = np.max(
        np.stack([np.abs(a.imag), np.abs(b.real), np.abs(c.real), np.abs(d.imag), np.abs(delta.imag)]), axis=0
    ) / scale
    deriv_res = np.abs(dth.imag) / (1.0 + np.abs(dth))
    on_circle = np.abs(np.abs(z) - 1.0) < 1e-14
    circ = lambda arr: float(arr[on_circle].max()) if np.any(on_circle) else 0.0
    return {
        "m": int(m),
        "p": int(p),
        "samples": [
            {
                "z": [float(zz.real), float(zz.imag)],
                "onCircle": bool(oc),
                "det": float(r1),
                "tildeDet": float(r2),
                "trace": float(r3),
                "symplectic": float(r4),
                "reality": float(r5),
                "derivativeReality": float(r6),
            }
            for zz, oc, r1, r2, r3, r4, r5, r6 in zip(
                z, on_circle, det_res, tdet_res, trace_res, sympl_res, reality_res, deriv_res
            )
        ],
        "max": {
            "det": float(det_res.max()),
            "tildeDet": float(tdet_res.max()),
            "trace": float(trace_res.max()),
            "symplectic": circ(sympl_res),
            "reality": circ(reality_res),
            "derivativeReality": circ(deriv_res),
        },
    }


def lipschitz_estimate(spec, p: int, ms, theta, r=1.0) -> np.ndarray:
    """Per-block max of |Delta_m(z_{j+1}) - Delta_m(z_j)| / |z_{j+1} - z_j| along an ordered grid."""
    z, zh = circle_points(theta, r)
    data = block_data(spec, ms, p, z, zh, derivative=False)
    dz = np.abs(np.diff(z))
    return np.max(np.abs(np.diff(data.delta, axis=1)) / dz[None, :], axis=1)


def block_variation_ratio(spec, p: int, ms, z, zh=None) -> np.ndarray:
    """|Delta_{m+1}(z) - Delta_m(z)| divided by sum_k |alpha_{(m+1)p+k} - alpha_{mp+k}|, per m."""
    ms = np.atleast_1d(np.asarray(ms, dtype=np.int64))
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if zh is None:
        zh = BranchTracker(p).sqrt(z)
    both = np.concatenate([ms, ms + 1])
    data = block_data(spec, both, p, z, zh, derivative=False)
    lhs = np.abs(data.delta[len(ms):] - data.delta[: len(ms)]).max(axis=1)
    al = block_alphas(spec, both, p)
    var = np.abs(al[len(ms):] - al[: len(ms)]).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(var > 0, lhs / np.where(var > 0, var, 1.0), 0.0)
