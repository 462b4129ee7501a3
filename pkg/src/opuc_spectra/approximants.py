"""Eventually periodic approximants, their Weyl solutions and a.c. densities.

The approximant of cutoff ``N`` keeps blocks ``0..N-1`` of the base sequence
and repeats block ``N`` forever.  Its Weyl solution is seeded at block ``N``
by the eigenvector of the periodic tail and propagated back to ``n = 0``;
its a.c. density on a validated arc is
``w^N = -i c_N Im(lambda_N) / |(u_0)_2|^2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .arcs import ArcSet
from .diagonalization import SignConstants, _frame_arrays, detect_sign_constants, spectral_norm_2x2
from .errors import BudgetError, DiagnosticError, NumericInstability
from .szego import PeriodicTail, radial_density
from .transfer import BranchTracker, block_data, circle_points

CLIP_FLOOR = 1e-300
WEIGHTS = ("1", "1-cos", "1-cos2")


class EntropyWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ApproximantSpec:
    base: object
    N: int
    p: int

    def __post_init__(self):
        if self.N < 0 or self.p < 1:
            raise ValueError("approximant needs N >= 0 and p >= 1")

    def alphas(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        cut = self.N * self.p
        mapped = np.where(n < cut, n, cut + (n - cut) % self.p) if n.size else n
        return self.base.alphas(mapped)

    def __call__(self, n: int) -> complex:
        return complex(self.alphas(np.array([n]))[0])

    @property
    def tail_period(self):
        return tuple(self.base.alphas(self.N * self.p + np.arange(self.p)))

    def schur_tail(self) -> PeriodicTail:
        """Exact periodic tail for the Schur algorithm: coefficients from ``N p`` repeat block ``N``."""
        return PeriodicTail(start=self.N * self.p, period=self.tail_period)


def approximant_spec(base, N: int, p: int) -> ApproximantSpec:
    return ApproximantSpec(base, int(N), int(p))


# ---------------------------------------------------------------------------
# Weyl solutions


def _points(approx, z=None, theta=None, r=None, sc: SignConstants | None = None):
    """Resolve spectral points to ``(theta, r)`` on the arc's square-root branch."""
    if theta is not None:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        r = np.ones_like(theta) if r is None else np.broadcast_to(np.asarray(r, dtype=float), theta.shape).copy()
        return theta, r
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    anchor = sc.arc_bounds[0] if sc is not None else 0.0
    return BranchTracker(approx.p, anchor).arguments(z), np.abs(z)


def _blocks(approx, theta, r):
    z, zh = circle_points(theta, r)
    return z, block_data(approx, np.arange(approx.N + 1), approx.p, z, zh, derivative=False)


@dataclass
class WeylSolutionTrace:
    """Weyl solution ``u_n``, n = 0..N, at each spectral point: ``u`` has shape (N+1, nz, 2)."""

    z: np.ndarray
    theta: np.ndarray
    N: int
    u: np.ndarray
    seed: np.ndarray
    lam_N: np.ndarray
    c_N: np.ndarray
    roundtrip_residual: float
    wronskian_drift: float

    @property
    def u0(self):
        return self.u[0]

    @property
    def wronskian(self):
        return 2.0 * np.real(self.u[..., 0] * np.conj(self.u[..., 1]))

    @property
    def caratheodory(self):
        """``(u_0)_1 / (u_0)_2``: the Caratheodory function of the approximant."""
        return self.u0[:, 0] / self.u0[:, 1]


def _backward_solve(data, lam_N):
    nb, nz = data.a.shape
    N = nb - 1
    u = np.empty((N + 1, nz, 2), complex)
    u[N, :, 0] = lam_N - data.d[N]
    u[N, :, 1] = data.c[N]
    for n in range(N - 1, -1, -1):
        # det = 1, so the inverse of (a, b; c, d) is the adjugate (d, -b; -c, a)
        x, y = u[n + 1, :, 0], u[n + 1, :, 1]
        u[n, :, 0] = data.d[n] * x - data.b[n] * y
        u[n, :, 1] = -data.c[n] * x + data.a[n] * y
    return u


def weyl_solution(approx: ApproximantSpec, z=None, sc: SignConstants | None = None, *, theta=None, r=None,
                  check: bool = True) -> WeylSolutionTrace:
    """Backward solve from the tail eigenvector ``(lambda_N - d_N, c_N)``.

    ``z`` may be a scalar or array; alternatively give ``theta`` (and ``r``)
    directly, which fixes the square-root branch by continuity in theta.
    """
    if sc is None:
        raise DiagnosticError("weyl_solution needs validated sign constants")
    theta, r = _points(approx, z, theta, r, sc)
    zz, data = _blocks(approx, theta, r)
    lam_N = _frame_arrays(data.a[-1], data.b[-1], data.c[-1], data.d[-1], data.delta[-1], sc.s)[0]
    u = _backward_solve(data, lam_N)
    if not np.all(np.isfinite(u)):
        raise NumericInstability("Weyl solution overflowed")
    if np.any(np.abs(u[0, :, 1]) < 1e-300):
        raise NumericInstability("(u_0)_2 vanishes; the point lies outside the validated region")
    roundtrip = 0.0
    drift = 0.0
    if check:
        v = u[0].copy()
        for n in range(approx.N):
            v = np.stack([data.a[n] * v[:, 0] + data.b[n] * v[:, 1], data.c[n] * v[:, 0] + data.d[n] * v[:, 1]], -1)
        scale = np.linalg.norm(u[approx.N], axis=-1)
        roundtrip = float(np.max(np.linalg.norm(v - u[approx.N], axis=-1) / scale)) if scale.size else 0.0
        on_circle = np.abs(r - 1.0) < 1e-14
        if np.any(on_circle):
            wr = 2.0 * np.real(u[..., 0] * np.conj(u[..., 1]))[:, on_circle]
            ref = np.max(np.abs(u[:, on_circle, 0]) * np.abs(u[:, on_circle, 1]), axis=0) * 2.0
            drift = float(np.max(np.abs(wr - wr[-1:]) / ref))
    return WeylSolutionTrace(z=zz, theta=theta, N=approx.N, u=u, seed=u[approx.N], lam_N=lam_N, c_N=data.c[-1],
                             roundtrip_residual=roundtrip, wronskian_drift=drift)


# ---------------------------------------------------------------------------
# Densities and entropy


@dataclass
class DensityProfile:
    arc: ArcSet
    theta: np.ndarray
    w: np.ndarray
    N: int | None = None
    method: str = "weyl"
    flags: dict = field(default_factory=dict)


def ac_density(approx: ApproximantSpec, theta, sc: SignConstants, imag_tol: float = 1e-9) -> DensityProfile:
    """``w^N(theta)`` on a grid inside the validated arc."""
    theta = np.asarray(theta, dtype=float)
    trace = weyl_solution(approx, sc=sc, theta=theta, check=False)
    num = -1j * trace.c_N * trace.lam_N.imag
    w = num / np.abs(trace.u0[:, 1]) ** 2
    resid = float(np.max(np.abs(w.imag) / np.maximum(np.abs(w), 1.0))) if w.size else 0.0
    if resid > imag_tol:
        raise DiagnosticError(f"density formula has imaginary residue {resid:.3g}")
    w = w.real
    if np.any(w < -1e-9):
        k = int(np.argmin(w))
        raise DiagnosticError(f"negative density {w[k]:.3g} at theta = {theta[k]:.6f} (s != t or invalid region)")
    return DensityProfile(arc=sc.arc, theta=theta, w=np.maximum(w, 0.0), N=approx.N, method="weyl",
                          flags={"imagResidue": resid})


def oracle_density(approx: ApproximantSpec, theta, r: float = 1.0 - 1e-6, richardson: bool = True):
    """Radial boundary value of ``Re F^N`` using the exact periodic tail of the approximant."""
    return radial_density(approx, theta, approx.schur_tail(), r=r, richardson=richardson)


def _weight(name, theta):
    if name == "1":
        return np.ones_like(theta)
    if name == "1-cos":
        return 1.0 - np.cos(theta)
    if name == "1-cos2":
        return 1.0 - np.cos(theta) ** 2
    raise ValueError(f"unknown weight {name!r}; expected one of {WEIGHTS}")


@dataclass(frozen=True)
class EntropyReport:
    weight: str
    arc: ArcSet
    N: int | None
    value: float
    clipped_fraction: float

    def to_json(self) -> dict:
        return {"weight": self.weight, "arc": self.arc.to_json()["arcs"], "N": self.N, "value": self.value,
                "clippedFraction": self.clipped_fraction}


def entropy_integral(profile: DensityProfile, weight: str = "1") -> EntropyReport:
    """Trapezoid rule for ``int weight(theta) log w(theta) dtheta / 2 pi`` over the profile grid."""
    theta = np.asarray(profile.theta, dtype=float)
    w = np.asarray(profile.w, dtype=float)
    clipped = w <= CLIP_FLOOR
    frac = float(clipped.mean()) if w.size else 0.0
    if frac > 0.05:
        warnings.warn(f"{100 * frac:.1f}% of density values clipped at {CLIP_FLOOR:g}; entropy integral unreliable",
                      EntropyWarning, stacklevel=2)
    integrand = _weight(weight, theta) * np.log(np.maximum(w, CLIP_FLOOR))
    value = float(np.trapezoid(integrand, theta)) / (2.0 * math.pi)
    return EntropyReport(weight=weight, arc=profile.arc, N=profile.N, value=value, clipped_fraction=frac)


# ---------------------------------------------------------------------------
# Product representation


@dataclass
class ProductDiagnostics:
    """Per-point product diagnostics; per-n arrays have shape (N, nz)."""

    theta: np.ndarray
    r: np.ndarray
    kappa: np.ndarray
    e: np.ndarray
    f: np.ndarray
    g: np.ndarray
    h: np.ndarray
    phi: np.ndarray
    nu: np.ndarray
    log_prod: np.ndarray  # log of prod lambda_n^{-1} (1 + e_n), complex
    f_N: np.ndarray
    log_u02: np.ndarray  # log |(u_0)_2| from the product route
    w_norm_sq_partial: np.ndarray
    product_residual: float
    normalized_residual: float


def _log_vec(v):
    """Normalize a (nz, 2) vector array, returning the unit vectors and log of the norms."""
    nrm = np.linalg.norm(v, axis=-1)
    return v / nrm[:, None], np.log(nrm)


def product_diagnostics(approx: ApproximantSpec, z=None, sc: SignConstants | None = None, *, theta=None, r=None,
                        tol: float = 1e-6) -> ProductDiagnostics:
    """Three routes to ``U_0^{-1} u_0``: backward solve, the product of ``Lambda^{-1}(I + W)``, and the
    normalized two-component recursion with the diagonal product kept in log space."""
    if sc is None:
        raise DiagnosticError("product_diagnostics needs validated sign constants")
    theta, r = _points(approx, z, theta, r, sc)
    _, data = _blocks(approx, theta, r)
    N = approx.N
    lam, lam_inv, U, Uinv, _ = _frame_arrays(data.a, data.b, data.c, data.d, data.delta, sc.s)
    W = Uinv[:-1] @ U[1:] - np.eye(2)
    e, f, g, h = W[..., 0, 0], W[..., 0, 1], W[..., 1, 0], W[..., 1, 1]
    kappa = lam_inv[:N]
    nz = len(theta)

    # route 1: backward solve, renormalized every step
    u = np.zeros((nz, 2), complex)
    u[:, 0] = lam[N] - data.d[N]
    u[:, 1] = data.c[N]
    u, log1 = _log_vec(u)
    for n in range(N - 1, -1, -1):
        x, y = u[:, 0], u[:, 1]
        u = np.stack([data.d[n] * x - data.b[n] * y, -data.c[n] * x + data.a[n] * y], -1)
        u, ls = _log_vec(u)
        log1 = log1 + ls
    v1 = np.einsum("zij,zj->zi", Uinv[0], u)

    # route 2: product Lambda_0^{-1}(I + W_0) ... applied to (1, 0)
    v = np.zeros((nz, 2), complex)
    v[:, 0] = 1.0
    log2 = np.zeros(nz)
    for n in range(N - 1, -1, -1):
        v = v + np.einsum("zij,zj->zi", W[n], v)
        v = v * np.stack([lam_inv[n], lam[n]], -1)
        v, ls = _log_vec(v)
        log2 = log2 + ls

    # route 3: normalized components with the product of lambda^{-1}(1 + e) in log space
    phi = np.ones(nz, complex)
    nu = np.zeros(nz, complex)
    log_prod = np.zeros(nz, complex)
    for n in range(N - 1, -1, -1):
        one_e = 1.0 + e[n]
        phi, nu = phi + f[n] * nu / one_e, (g[n] * phi + (1.0 + h[n]) * nu) / (one_e * kappa[n] ** 2)
        log_prod = log_prod + np.log(kappa[n] * one_e)

    def rel(xa, la, xb, lb):
        # compare xa e^{la} with xb e^{lb} relative to the larger
        ref = np.maximum(la, lb)
        da = xa * np.exp(la - ref)[:, None]
        db = xb * np.exp(lb - ref)[:, None]
        return float(np.max(np.linalg.norm(da - db, axis=-1) / np.maximum(np.linalg.norm(da, axis=-1), 1e-300)))

    res_product = rel(v1, log1, v, log2) if nz else 0.0
    v3 = np.stack([phi, nu], -1)
    v3n, l3 = _log_vec(v3)
    res_norm = rel(v1, log1, v3n, l3 + log_prod.real) if nz else 0.0
    # the phase of prod must match as well
    if nz:
        v3c = v3n * np.exp(1j * log_prod.imag)[:, None]
        res_norm = rel(v1, log1, v3c, l3 + log_prod.real)
    if max(res_product, res_norm) > tol:
        raise NumericInstability(
            f"product identities fail (residuals {res_product:.3g}, {res_norm:.3g}); N too large for double precision"
        )
    s_ = phi + nu
    f_N = -np.log(np.abs(s_))
    log_u02 = np.log(np.abs(data.c[0])) + log_prod.real - f_N
    partial = np.cumsum(spectral_norm_2x2(W) ** 2, axis=0) if N else np.zeros((0, nz))
    return ProductDiagnostics(theta=theta, r=r, kappa=kappa, e=e, f=f, g=g, h=h, phi=phi, nu=nu, log_prod=log_prod,
                              f_N=f_N, log_u02=log_u02, w_norm_sq_partial=partial, product_residual=res_product,
                              normalized_residual=res_norm)


@dataclass
class WeylBoundReport:
    Ns: list
    log_w_minus_2f: list  # max over the arc grid, per N
    f_plus_integral: list  # int_I f_N^+ dtheta / 2 pi, per N
    inner_min: list  # min over inner-annulus points of f_N (1 - |z|), per N
    max_log_w_minus_2f: float
    max_f_plus_integral: float
    min_inner: float

    def to_json(self) -> dict:
        return {"N": list(self.Ns), "maxLogWMinus2f": self.log_w_minus_2f, "fPlusIntegral": self.f_plus_integral,
                "innerMin": self.inner_min, "constants": {"logWMinus2f": self.max_log_w_minus_2f,
                                                          "fPlusIntegral": self.max_f_plus_integral,
                                                          "innerMin": self.min_inner}}


def weyl_bound_report(base, p: int, Ns, sc: SignConstants, theta=None, radii=None) -> WeylBoundReport:
    """Empirical constants for ``|log w^N - 2 f_N|``, ``int_I f_N^+`` and ``f_N (1 - |z|)`` inside the annulus."""
    if theta is None:
        theta = sc.arc.grid(201)
    theta = np.asarray(theta, dtype=float)
    if radii is None:
        radii = 1.0 - sc.epsilon * np.array([0.25, 0.5, 1.0])
    out_lw, out_fp, out_in = [], [], []
    for N in Ns:
        approx = approximant_spec(base, N, p)
        diag = product_diagnostics(approx, sc=sc, theta=theta)
        w = ac_density(approx, theta, sc).w
        out_lw.append(float(np.max(np.abs(np.log(w) - 2.0 * diag.f_N))))
        out_fp.append(float(np.trapezoid(np.maximum(diag.f_N, 0.0), theta)) / (2.0 * math.pi))
        inner = math.inf
        for rad in radii:
            d_in = product_diagnostics(approx, sc=sc, theta=theta, r=rad)
            inner = min(inner, float(np.min(d_in.f_N * (1.0 - rad))))
        out_in.append(inner)
    return WeylBoundReport(Ns=list(Ns), log_w_minus_2f=out_lw, f_plus_integral=out_fp, inner_min=out_in,
                           max_log_w_minus_2f=max(out_lw), max_f_plus_integral=max(out_fp), min_inner=min(out_in))


# ---------------------------------------------------------------------------
# Coefficient stripping


@dataclass(frozen=True)
class StrippingChoice:
    k: int
    tail_sum: float
    window: int
    extrapolated: float


def _tail_extrapolation(sq, start):
    """Power-law estimate of ``sum_{m > window} ||W_m||^2`` fitted to the second half of the window."""
    n = len(sq)
    if n < 16:
        return 0.0
    m = np.arange(n // 2, n) + start + 1.0
    vals = sq[n // 2 :]
    if vals.max() <= 1e-24:
        return 0.0  # frames agree to rounding: nothing to extrapolate
    if np.any(vals <= 0):
        return math.inf
    slope, icpt = np.polyfit(np.log(m), np.log(vals), 1)
    beta = -slope
    if beta <= 1.0:
        return math.inf
    M = n + start
    return float(math.exp(icpt) * M ** (1.0 - beta) / (beta - 1.0))


def choose_stripping_offset(spec, p: int, arc: ArcSet, delta: float, n_theta: int = 33, window: int = 1 << 17,
                            sc: SignConstants | None = None) -> StrippingChoice:
    """Smallest multiple ``k`` of p with ``sup_theta sum_{n >= k/p} ||W_n||^2 < delta``.

    Tail sums are measured over ``window`` blocks and completed by a power-law
    extrapolation beyond the window; ``k`` may use at most half the window.
    """
    if sc is None:
        sc = detect_sign_constants(spec, p, arc, m_window=(0, min(window, 2000)))
    theta = arc.grid(n_theta, interior=0.0)
    z, zh = circle_points(theta)
    ms = np.arange(sc.m0, sc.m0 + window + 1)
    data = block_data(spec, ms, p, z, zh, derivative=False)
    _, _, U, Uinv, _ = _frame_arrays(data.a, data.b, data.c, data.d, data.delta, sc.s)
    sq = spectral_norm_2x2(Uinv[:-1] @ U[1:] - np.eye(2)) ** 2  # (window, nz)
    extra = np.array([_tail_extrapolation(sq[:, j], sc.m0) for j in range(sq.shape[1])])
    tails = np.cumsum(sq[::-1], axis=0)[::-1] + extra  # tails[j] = sum_{m >= m0 + j}
    sup_tail = tails.max(axis=1)
    ok = np.flatnonzero(sup_tail < delta)
    if not ok.size or ok[0] > window // 2:
        best = float(sup_tail[min(window // 2, len(sup_tail) - 1)])
        raise BudgetError(f"tail sum stays above {delta:g} within the exploration budget (reached {best:.4g})")
    j = int(ok[0])
    return StrippingChoice(k=(sc.m0 + j) * p, tail_sum=float(sup_tail[j]), window=window,
                           extrapolated=float(extra.max()))
