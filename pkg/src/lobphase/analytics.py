"""Deterministic computation of the phase-transition prices and best-quote densities.

Three independent routes are provided and cross-checked by the test suite:
a closed form for uniform arrivals (via the Lambert-W fixed point), a shooting
method on an equivalent first-order ODE system for general arrival laws, and
the per-bin occupation-measure balance equations.

The ODE system integrates u = F_a * w_b and v = cumulative bid mass of w_b,
where w_b is the density ratio of the best-bid location against the bid
arrival law:

    u' = -(f_a / (1 - F_b)) * v,   v' = (f_b / F_a) * u,
    u(kappa_b) = 1, v(kappa_b) = 0,

and kappa_b is the unique level at which u vanishes exactly at
kappa_a = Q_a(1 - F_b(kappa_b)); v(kappa_a) = 1 comes out as a free
normalization check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.integrate import solve_ivp

from .dist import ArrivalSpec, BinPartition

__all__ = [
    "VarpiSolution",
    "BinnedPi",
    "ShootingError",
    "SingularCoefficientError",
    "lambert_w_of_inv_e",
    "kappa_uniform_exact",
    "varpi_uniform_exact",
    "integrate_varpi",
    "shoot_kappa",
    "solve_binned_pi",
    "lower_bound_3bin",
    "finiteness_lower_bound",
]


class ShootingError(RuntimeError):
    """No usable sign change (or several) while bracketing the threshold."""


class SingularCoefficientError(RuntimeError):
    """ODE coefficient degenerates inside the integration interval."""


def lambert_w_of_inv_e(tol: float = 1e-15, max_iter: int = 60) -> float:
    """The unique w > 0 with w * e^w = e^{-1}, by safeguarded Newton from 0.25."""
    target = math.exp(-1.0)
    lo, hi = 0.0, 1.0  # g is increasing on [0, 1] and brackets the target
    w = 0.25
    for _ in range(max_iter):
        g = w * math.exp(w) - target
        if g > 0:
            hi = w
        else:
            lo = w
        step = g / ((1.0 + w) * math.exp(w))
        w_new = w - step
        if not lo < w_new < hi:
            w_new = 0.5 * (lo + hi)
        if abs(w_new - w) < tol * max(1.0, abs(w)):
            w = w_new
            break
        w = w_new
    return w


def kappa_uniform_exact() -> tuple[float, float]:
    """Exact thresholds for uniform arrivals on [0, 1]: (w/(w+1), 1 - w/(w+1))."""
    w = lambert_w_of_inv_e()
    kappa = w / (w + 1.0)
    return kappa, 1.0 - kappa


def varpi_uniform_exact(x) -> float | np.ndarray:
    """Closed-form best-bid density ratio for uniform arrivals.

    w_b(x) = (1 - kappa) * (1/x + log((1-x)/x)) on [kappa, 1-kappa]; the
    endpoints give 1/kappa and 0.
    """
    kappa, kappa_a = kappa_uniform_exact()
    arr = np.asarray(x, dtype=float)
    if np.any((arr < kappa - 1e-12) | (arr > kappa_a + 1e-12)):
        raise ValueError(f"argument outside [{kappa:.6f}, {kappa_a:.6f}]")
    arr = np.clip(arr, kappa, kappa_a)
    val = (1.0 - kappa) * (1.0 / arr + np.log((1.0 - arr) / arr))
    return float(val) if np.ndim(x) == 0 else val


def _check_coefficients(spec: ArrivalSpec, lo: float, hi: float, n_probe: int = 513):
    xs = np.linspace(lo, hi, n_probe)[1:-1]
    fa = np.asarray(spec.ask_dist.density(xs), dtype=float)
    fb_cdf = np.asarray(spec.bid_dist.cdf(xs), dtype=float)
    bad = np.where((fa <= 0) | (fb_cdf >= 1.0 - 1e-12))[0]
    if bad.size:
        x = xs[bad[0]]
        raise SingularCoefficientError(
            f"coefficient singular near x={x:.6g} (f_a={fa[bad[0]]:.3g}, "
            f"F_b={fb_cdf[bad[0]]:.6g})")


def integrate_varpi(spec: ArrivalSpec, kappa_b: float, grid_n: int = 1000,
                    rtol: float = 1e-10, atol: float = 1e-12,
                    check: bool = True):
    """Integrate (u, v) from kappa_b to kappa_a(kappa_b); returns paths and u_end.

    Smooth laws go through an adaptive high-order Runge-Kutta integrator;
    tabulated CDFs have kinked coefficients, so those step segment-by-segment
    with a fixed-step classical RK4 between table knots.
    """
    fb_level = float(spec.bid_dist.cdf(kappa_b))
    if not 0.0 < fb_level < 0.5:
        raise ValueError(f"F_b(kappa_b)={fb_level:.4g} outside (0, 1/2)")
    kappa_a = float(spec.ask_dist.quantile(1.0 - fb_level))
    if not kappa_a > kappa_b:
        raise ValueError("implied upper threshold does not exceed kappa_b")
    if check:
        _check_coefficients(spec, kappa_b, kappa_a)

    f_a, f_b = spec.ask_dist.density, spec.bid_dist.density
    F_a, F_b = spec.ask_dist.cdf, spec.bid_dist.cdf

    def rhs(x, y):
        u, v = y
        du = -float(f_a(x)) / (1.0 - float(F_b(x))) * v
        dv = float(f_b(x)) / float(F_a(x)) * u
        return (du, dv)

    grid = np.linspace(kappa_b, kappa_a, grid_n)
    if spec.bid_dist.kind == "cdf_table" or spec.ask_dist.kind == "cdf_table":
        u_path, v_path = _integrate_fixed(rhs, spec, kappa_b, kappa_a, grid)
    else:
        sol = solve_ivp(rhs, (kappa_b, kappa_a), (1.0, 0.0), method="DOP853",
                        rtol=rtol, atol=atol, t_eval=grid, dense_output=False)
        if not sol.success:
            raise SingularCoefficientError(f"integration failed: {sol.message}")
        u_path, v_path = sol.y[0], sol.y[1]
    return grid, u_path, v_path, float(u_path[-1])


def _integrate_fixed(rhs, spec: ArrivalSpec, lo: float, hi: float,
                     grid: np.ndarray, steps_per_cell: int = 8):
    """Classical RK4 on the union of table knots and output grid points."""
    mesh = np.unique(np.concatenate([grid, np.linspace(lo, hi, 4 * grid.size)]))
    u = np.empty(mesh.size)
    v = np.empty(mesh.size)
    u[0], v[0] = 1.0, 0.0
    for i in range(mesh.size - 1):
        x0, x1 = mesh[i], mesh[i + 1]
        h = (x1 - x0) / steps_per_cell
        uu, vv, x = u[i], v[i], x0
        for _ in range(steps_per_cell):
            k1 = rhs(x, (uu, vv))
            k2 = rhs(x + h / 2, (uu + h / 2 * k1[0], vv + h / 2 * k1[1]))
            k3 = rhs(x + h / 2, (uu + h / 2 * k2[0], vv + h / 2 * k2[1]))
            k4 = rhs(x + h, (uu + h * k3[0], vv + h * k3[1]))
            uu += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            vv += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            x += h
        u[i + 1], v[i + 1] = uu, vv
    sel = np.searchsorted(mesh, grid)
    return u[sel], v[sel]


@dataclass(frozen=True)
class VarpiSolution:
    """Thresholds plus best-quote density ratios on a grid between them."""

    kappa_b: float
    kappa_a: float
    grid: np.ndarray
    varpi_b: np.ndarray
    varpi_a: np.ndarray
    mass_b: float
    mass_a: float
    u_end: float
    v_end: float
    n_scan_brackets: int = 1


def shoot_kappa(spec: ArrivalSpec, tol: float = 1e-10, grid_n: int = 1000,
                fb_lower: float | None = None, n_scan: int = 64) -> VarpiSolution:
    """Locate the bid threshold by shooting on u_end and reconstruct both densities.

    Scans `n_scan` candidate levels for a sign change of u_end (verifying the
    bracket is unique rather than assuming it), then bisects until
    |u_end| <= tol.
    """
    if fb_lower is None:
        fb_lower = finiteness_lower_bound(spec)
        if fb_lower is None or fb_lower <= 0:
            raise ShootingError(
                "no positive finiteness certificate found for this spec; "
                "pass fb_lower explicitly to override")
    lo_level = max(1e-4, 0.9 * fb_lower)
    levels = np.linspace(lo_level, 0.5 - 1e-4, n_scan)
    kappas = np.asarray(spec.bid_dist.quantile(levels), dtype=float)
    # keep only candidates whose implied upper threshold stays above them
    uppers = np.asarray(spec.ask_dist.quantile(1.0 - levels), dtype=float)
    valid = uppers > kappas + 1e-12
    if not np.any(valid):
        raise ShootingError("no candidate level admits a threshold pair")
    levels, kappas = levels[valid], kappas[valid]

    def u_end_at(kb: float, rtol: float) -> float:
        return integrate_varpi(spec, kb, grid_n=64, rtol=rtol, atol=1e-12,
                               check=False)[3]

    _check_coefficients(spec, float(kappas[0]),
                        float(spec.ask_dist.quantile(1.0 - levels[0])))
    signs = np.array([u_end_at(k, 1e-6) for k in kappas])
    flips = np.where(np.sign(signs[:-1]) * np.sign(signs[1:]) < 0)[0]
    if flips.size == 0:
        raise ShootingError("no sign change of u_end in the scan window; "
                            "no finite threshold located")
    if flips.size > 1:
        brackets = [(float(kappas[i]), float(kappas[i + 1])) for i in flips]
        raise ShootingError(f"ambiguous shooting: {flips.size} sign changes "
                            f"in brackets {brackets}")

    lo, hi = float(kappas[flips[0]]), float(kappas[flips[0] + 1])
    f_lo = u_end_at(lo, 1e-10)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = u_end_at(mid, 1e-10)
        if abs(f_mid) <= tol or hi - lo < 1e-15:
            lo = hi = mid
            break
        if f_lo * f_mid < 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    kappa_b = 0.5 * (lo + hi)

    grid, u, v, u_end = integrate_varpi(spec, kappa_b, grid_n=grid_n)
    kappa_a = float(grid[-1])
    Fa = np.asarray(spec.ask_dist.cdf(grid), dtype=float)
    Fb = np.asarray(spec.bid_dist.cdf(grid), dtype=float)
    varpi_b = u / Fa
    one_minus_Fb = np.maximum(1.0 - Fb, 1e-300)
    varpi_a = v / one_minus_Fb
    fb_pdf = np.asarray(spec.bid_dist.density(grid), dtype=float)
    fa_pdf = np.asarray(spec.ask_dist.density(grid), dtype=float)
    mass_b = float(np.trapezoid(varpi_b * fb_pdf, grid))
    mass_a = float(np.trapezoid(varpi_a * fa_pdf, grid))
    return VarpiSolution(kappa_b=kappa_b, kappa_a=kappa_a, grid=grid,
                         varpi_b=varpi_b, varpi_a=varpi_a,
                         mass_b=mass_b, mass_a=mass_a,
                         u_end=u_end, v_end=float(v[-1]))


@dataclass(frozen=True)
class BinnedPi:
    """Per-bin occupation measures solving the arrival/departure balance system."""

    k_b: int
    k_a: int
    pi_b: np.ndarray
    pi_a: np.ndarray
    Fb_kappa: float
    residual: float


def solve_binned_pi(spec: ArrivalSpec, partition: BinPartition, k_b: int, k_a: int,
                    Fb_kappa: float, norm_weight: float = 100.0) -> BinnedPi:
    """Solve the per-bin balance equations on the support [k_b, k_a].

    For each interior bin, arrivals balance departures; the two threshold
    bins absorb the unfulfilled mass, and both measures are closed by total
    mass one.  The stacked system is linear but nearly singular, and its
    near-null direction loads on the threshold bins, where the theory forces
    the measures to vanish anyway; a threshold mass taken from the continuum
    solution (off by O(1/N) from the binned book's own) would be amplified
    catastrophically by a plain solve.  Nonnegativity-constrained least
    squares pins that direction instead.  The returned residual is the
    largest violation among the balance rows; it reflects the input's
    O(1/N) inconsistency, not solver error.
    """
    if not 0 <= k_b < k_a < partition.n_bins:
        raise ValueError(f"need 0 <= k_b < k_a < n_bins, got ({k_b}, {k_a})")
    from scipy.optimize import lsq_linear

    b = partition.masses(spec.bid_dist)
    a = partition.masses(spec.ask_dist)
    edges = partition.edges
    rhs_b = Fb_kappa - float(spec.bid_dist.cdf(edges[k_b]))
    rhs_a = float(spec.ask_dist.cdf(edges[k_a + 1])) - (1.0 - Fb_kappa)
    n = partition.n_bins
    m = k_a - k_b + 1

    # cumulative arrival masses entering the departure rates
    A_le = np.cumsum(a)
    B_ge = np.cumsum(b[::-1])[::-1]

    # unknowns z = [pi_b(k_b..k_a), pi_a(k_b..k_a)]
    M = np.zeros((2 * m, 2 * m))
    rhs = np.zeros(2 * m)
    row = 0
    for k in range(k_b, k_a):       # bid balance, threshold bin included
        i = k - k_b
        M[row, i] = A_le[k]
        M[row, m:m + i + 1] = b[k]  # b(k) * sum_{l <= k} pi_a(l)
        rhs[row] = b[k] - (rhs_b if k == k_b else 0.0)
        row += 1
    for k in range(k_b + 1, k_a + 1):   # ask balance, threshold bin included
        i = k - k_b
        M[row, m + i] = B_ge[k]
        M[row, i:m] = a[k]          # a(k) * sum_{l >= k} pi_b(l)
        rhs[row] = a[k] - (rhs_a if k == k_a else 0.0)
        row += 1
    M[row, :m] = norm_weight        # heavy weight keeps total mass pinned
    rhs[row] = norm_weight
    M[row + 1, m:] = norm_weight
    rhs[row + 1] = norm_weight

    sol = lsq_linear(M, rhs, bounds=(0.0, np.inf))
    z = sol.x
    pi_b = np.zeros(n)
    pi_a = np.zeros(n)
    pi_b[k_b:k_a + 1] = z[:m]
    pi_a[k_b:k_a + 1] = z[m:]

    if abs(pi_b.sum() - 1.0) > 1e-3 or abs(pi_a.sum() - 1.0) > 1e-3:
        raise RuntimeError(
            f"balance system infeasible: masses {pi_b.sum():.4f}, {pi_a.sum():.4f}")
    residual = float(np.max(np.abs((M @ z - rhs)[:-2])))
    return BinnedPi(k_b=k_b, k_a=k_a, pi_b=pi_b, pi_a=pi_a, Fb_kappa=Fb_kappa,
                    residual=residual)


def _as_fraction(x) -> Fraction:
    # Floats are read as the decimal literal they print as, so that e.g. 0.4
    # means 2/5 and bound arithmetic stays exact.
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


def lower_bound_3bin(X, Y) -> Fraction:
    """Exact lower bound (2X(1-X) - (1-Y)) / ((1-X) + (Y-X)) on the bid-threshold mass.

    A positive value certifies that the thresholds are finite.  Computed in
    exact rational arithmetic; see _as_fraction for how floats are read.
    """
    Xf, Yf = _as_fraction(X), _as_fraction(Y)
    if not 0 < Xf < Yf < 1:
        raise ValueError(f"need 0 < X < Y < 1, got X={X}, Y={Y}")
    num = 2 * Xf * (1 - Xf) - (1 - Yf)
    den = (1 - Xf) + (Yf - Xf)
    return num / den


def finiteness_lower_bound(spec: ArrivalSpec, n_grid: int = 199,
                           pairing_tol: float = 1e-6) -> float | None:
    """Best 3-bin certificate over a grid of cut pairs, or None if none applies.

    Scans levels X = F_b(x), solving y from F_b(x) = 1 - F_a(y) and keeping
    pairs that also satisfy the mirrored condition F_b(y) = 1 - F_a(x).
    """
    best = None
    for X in np.linspace(0.02, 0.49, n_grid):
        x = float(spec.bid_dist.quantile(X))
        y = float(spec.ask_dist.quantile(1.0 - X))
        if not x < y:
            continue
        Yb = float(spec.bid_dist.cdf(y))
        if abs(Yb - (1.0 - float(spec.ask_dist.cdf(x)))) > pairing_tol:
            continue
        if not X < Yb < 1.0:
            continue
        val = float(lower_bound_3bin(float(X), Yb))
        if best is None or val > best:
            best = val
    return best
