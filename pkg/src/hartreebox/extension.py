"""Canonical extension of a trace to the weighted half-space and the
structural checks attached to it.

The extension of h is diagonal in frequency: per lattice mode,
u-hat(x, xi) = h-hat(xi) * Phi(c x) with c = sqrt(m^2 + 4 pi^2 |xi|^2).
Everything here evaluates that representation on a graded x-mesh
x_j = x_max (j/K_x)^3 (dense near the degenerate boundary) and then checks
it against independent discretizations: graded-quadrature energy vs. the
spectral quadratic form, finite-difference Neumann traces vs. the fractional
multiplier, and the sup-norm decay law in x.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DiagnosticError, DomainError, NumericError, \
    VerificationError
from .profile import BesselProfile, eval_profile, small_s_energy_integral
from .spectral import Grid, TraceField, sobolev_form, spectral_weights


@dataclass(frozen=True)
class ExtensionField:
    """Field u(x, y) sampled on x_nodes x grid; weight_exponent = 1-2 sigma."""

    grid: Grid
    x_nodes: np.ndarray
    values: np.ndarray
    weight_exponent: float

    def __post_init__(self):
        x = np.asarray(self.x_nodes, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or np.any(np.diff(x) <= 0) or x[0] < 0:
            raise DomainError("x_nodes must be increasing and nonnegative")
        if v.shape != (x.size,) + self.grid.shape:
            raise DomainError("values shape does not match x_nodes x grid")
        if not np.all(np.isfinite(v)):
            raise NumericError("extension field contains non-finite values")
        object.__setattr__(self, "x_nodes", x)
        object.__setattr__(self, "values", v)

    @property
    def sigma(self) -> float:
        return 0.5 * (1.0 - self.weight_exponent)


def graded_nodes(x_max: float, K_x: int) -> np.ndarray:
    """x_j = x_max (j/K_x)^3, j = 0..K_x; cubic grading toward x = 0."""
    return x_max * (np.arange(K_x + 1) / K_x) ** 3


def lift(h: TraceField, profile: BesselProfile, m: float,
         x_max: float | None = None, K_x: int = 400) -> ExtensionField:
    """Extend the trace h into x > 0 mode by mode."""
    if m <= 0:
        raise DomainError("m must be positive")
    if x_max is None:
        x_max = 10.0 / m
    if x_max < 10.0 / m:
        raise DomainError("x_max must be at least 10/m")
    if K_x < 8:
        raise DomainError("K_x too small")
    grid = h.grid
    c = np.sqrt(grid.multiplier(m, 1.0))
    hhat = np.fft.fftn(h.values)
    x = graded_nodes(x_max, K_x)
    # Phi on the outer product of x-nodes and mode rates, in one evaluation
    phi = eval_profile(profile, np.multiply.outer(x, c))[0]
    coeffs = phi * hhat[np.newaxis, ...]
    values = np.fft.ifftn(coeffs, axes=tuple(range(1, grid.dim + 1))).real
    return ExtensionField(grid=grid, x_nodes=x, values=values,
                          weight_exponent=1.0 - 2.0 * profile.sigma)


def energy_identity_check(h: TraceField, ext: ExtensionField,
                          profile: BesselProfile, m: float,
                          rtol: float = 0.01) -> float:
    """Weighted extension energy vs. the spectral quadratic form.

    The left side integrates (|grad u|^2 + m^2 u^2) x^(1-2 sigma) with
    finite differences in x and spectral derivatives in y on the graded
    mesh; the analytic series for Phi supplies the [0, x_1] head where the
    weight is singular.  The right side is sobolev_form(h).  Returns the
    relative discrepancy and asserts it is below rtol.
    """
    sigma = profile.sigma
    grid = ext.grid
    x = ext.x_nodes
    axes = tuple(range(1, grid.dim + 1))
    dxi = grid.box_volume / grid.n ** (2 * grid.dim)

    # y-part per x-node, spectrally: sum (m^2 + 4 pi^2 xi^2)|u-hat|^2 dxi
    coeffs = np.fft.fftn(ext.values, axes=axes)
    mult = grid.multiplier(m, 1.0)
    y_part = np.sum(np.abs(coeffs) ** 2 * mult[np.newaxis, ...],
                    axis=axes) * dxi

    # x-part by second-order finite differences on the nonuniform mesh
    du = np.gradient(ext.values, x, axis=0)
    x_part = np.sum(du ** 2, axis=axes) * grid.cell_volume

    # x = 0 is excluded: the weight is singular or zero there and the
    # [0, x_1] head is handled analytically below
    integrand = (y_part[1:] + x_part[1:]) * x[1:] ** (1.0 - 2.0 * sigma)
    body = np.trapezoid(integrand, x[1:])

    # analytic head on [0, x_1] per mode, via the series of Phi
    c = np.sqrt(grid.multiplier(m, 1.0))
    weights = spectral_weights(h)
    c1s = profile.d_sigma / (2.0 * sigma)
    head = float(np.sum(weights * c ** (2.0 * sigma)
                        * small_s_energy_integral(c * x[1], sigma, c1s)))

    lhs = body + head
    rhs = sobolev_form(h, sigma, m, profile)
    if not np.isfinite(lhs):
        raise NumericError("extension energy quadrature is non-finite")
    if rhs == 0.0:
        return 0.0
    err = abs(lhs - rhs) / rhs
    if err >= rtol:
        raise VerificationError(
            f"extension energy identity off by {err:.2%} (allowed {rtol:.0%})")
    return err


def _effective_abscissa(x1: float, x2: float, sigma: float) -> float:
    """Abscissa at which a two-point slope of x^(2 sigma) is exact."""
    if abs(sigma - 0.5) < 1e-12:
        return 0.5 * (x1 + x2)
    val = (x2 ** (2 * sigma) - x1 ** (2 * sigma)) / (2 * sigma * (x2 - x1))
    return val ** (1.0 / (2 * sigma - 1.0))


def dtn_check(h: TraceField, ext: ExtensionField, profile: BesselProfile,
              m: float, rtol: float = 0.02, mass_floor: float = 1e-6
              ) -> float:
    """Neumann trace -x^(1-2 sigma) du/dx at x -> 0 vs. the multiplier.

    Per retained mode the finite-difference estimate (with power-adapted
    abscissae and one Richardson step at order 2-2 sigma) must match
    d_sigma c^(2 sigma) h-hat within rtol.  Returns the worst relative
    error over modes carrying at least mass_floor of the spectral mass.
    """
    sigma = profile.sigma
    grid = ext.grid
    x = ext.x_nodes
    if x.size < 4 or x[0] != 0.0:
        raise DomainError("extension mesh must start at 0 with >= 4 nodes")
    axes = tuple(range(1, grid.dim + 1))

    weights = spectral_weights(h)
    total = float(np.sum(weights))
    if total == 0.0:
        return 0.0
    mask = weights >= mass_floor * total

    hhat = np.fft.fftn(h.values)[mask]
    c = np.sqrt(grid.multiplier(m, 1.0))[mask]
    target = profile.d_sigma * c ** (2.0 * sigma) * hhat

    # mode coefficients at the four smallest positive nodes
    coeffs = np.fft.fftn(ext.values[:5], axes=axes)[:, mask]
    ests, xeffs = [], []
    for j in range(1, 4):
        x1, x2 = x[j], x[j + 1]
        xe = _effective_abscissa(x1, x2, sigma)
        slope = (coeffs[j + 1] - coeffs[j]) / (x2 - x1)
        ests.append(-xe ** (1.0 - 2.0 * sigma) * slope)
        xeffs.append(xe)

    # the estimates approach the limit at order 2-2 sigma, so successive
    # increments should shrink; growing increments that also flip direction
    # mean the grading is too coarse for the boundary layer
    d1 = np.abs(ests[1] - ests[0])
    d2 = np.abs(ests[2] - ests[1])
    flip = np.real((ests[1] - ests[0]) * np.conj(ests[2] - ests[1])) < 0
    scale = np.abs(target) + 1e-300
    noisy = (d1 < 1e-9 * scale) | (d2 < 1e-9 * scale)
    if np.any(flip & (d2 > d1) & ~noisy):
        raise DiagnosticError("Neumann-trace extrapolation non-monotone; "
                              "use a denser x-grading (larger K_x)")

    p = 2.0 - 2.0 * sigma
    r1, r2 = xeffs[0] ** p, xeffs[1] ** p
    extrap = ests[0] + (ests[0] - ests[1]) * r1 / (r2 - r1)
    err = float(np.max(np.abs(extrap - target) / np.abs(target)))
    if err >= rtol:
        raise VerificationError(
            f"Neumann trace off by {err:.2%} (allowed {rtol:.0%})")
    return err


@dataclass(frozen=True)
class DecayFitReport:
    rate: float
    poly_exp: float
    residual: float
    window: tuple
    envelope_const: float


def decay_fit(ext: ExtensionField, h_norm: float, m: float,
              rate_rtol: float = 0.05, residual_tol: float = 0.05
              ) -> DecayFitReport:
    """Fit sup_y |u(x, .)| ~ C x^p e^(-r x) on the window [2/m, x_max].

    Asserts r >= m (1 - rate_rtol) and reports the envelope constant
    C_env = max of sup / (h_norm x^((2 sigma - 1)/2) e^(-m x)) over the
    window, which makes the decay-law envelope hold on the window by
    construction.
    """
    sigma = ext.sigma
    x = ext.x_nodes
    sup = np.max(np.abs(ext.values),
                 axis=tuple(range(1, ext.values.ndim)))
    if np.all(sup == 0.0):
        return DecayFitReport(rate=m, poly_exp=sigma - 0.5, residual=0.0,
                              window=(2.0 / m, float(x[-1])),
                              envelope_const=0.0)

    lo, hi = 2.0 / m, float(x[-1])
    sel = (x >= lo) & (x <= hi) & (sup > 0.0)
    if np.any((x >= lo) & (x <= hi) & (sup == 0.0)):
        hi = float(np.max(x[sel])) if np.any(sel) else lo
        sel = (x >= lo) & (x <= hi) & (sup > 0.0)
        warnings.warn("field underflows inside the decay window; "
                      f"shrinking to [{lo:.3g}, {hi:.3g}]")
    if np.count_nonzero(sel) < 8:
        raise DomainError("too few usable nodes in the decay window")

    xs, ys = x[sel], np.log(sup[sel])
    design = np.column_stack([np.ones_like(xs), np.log(xs), -xs])
    coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
    fitted = design @ coef
    residual = float(np.sqrt(np.mean((ys - fitted) ** 2))
                     / max(np.sqrt(np.mean(ys ** 2)), 1e-300))
    rate, poly_exp = float(coef[2]), float(coef[1])

    env = sup[sel] / (h_norm * xs ** (sigma - 0.5) * np.exp(-m * xs))
    report = DecayFitReport(rate=rate, poly_exp=poly_exp, residual=residual,
                            window=(lo, hi),
                            envelope_const=float(np.max(env)))
    if rate < m * (1.0 - rate_rtol):
        raise VerificationError(
            f"fitted decay rate {rate:.4f} below {1 - rate_rtol:.2f} m = "
            f"{m * (1 - rate_rtol):.4f}")
    if residual >= residual_tol:
        raise VerificationError(
            f"decay fit residual {residual:.2%} (allowed {residual_tol:.0%})")
    return report


def trace_inequality_check(h: TraceField, profile: BesselProfile,
                           sigma: float) -> float:
    """Slack of |h|_2^2 <= (1/kappa) ||u||_sigma^2 at m = 1 (nonnegative
    because the multiplier (1 + 4 pi^2 |xi|^2)^sigma is >= 1)."""
    norm_sq = sobolev_form(h, sigma, 1.0, profile)
    slack = norm_sq / profile.kappa - h.norm_l2() ** 2
    if slack < -1e-12 * max(norm_sq, 1.0):
        raise VerificationError(f"trace inequality violated: slack={slack:.3e}")
    return float(slack)


# ---------------------------------------------------------------------------
# Report CSVs

def decay_report_to_csv(ext: ExtensionField, report: DecayFitReport,
                        h_norm: float, m: float, path) -> None:
    sigma = ext.sigma
    x = ext.x_nodes
    sup = np.max(np.abs(ext.values), axis=tuple(range(1, ext.values.ndim)))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "sup_abs", "envelope"])
        for xi, s in zip(x[1:], sup[1:]):
            env = (report.envelope_const * h_norm
                   * xi ** (sigma - 0.5) * np.exp(-m * xi))
            w.writerow([repr(float(xi)), repr(float(s)), repr(float(env))])


def dtn_report_to_csv(h: TraceField, ext: ExtensionField,
                      profile: BesselProfile, m: float, path,
                      mass_floor: float = 1e-6) -> None:
    """Per-mode table of the extrapolated Neumann trace vs. its target."""
    sigma = profile.sigma
    grid = ext.grid
    x = ext.x_nodes
    axes = tuple(range(1, grid.dim + 1))
    weights = spectral_weights(h)
    total = float(np.sum(weights)) or 1.0
    mask = weights >= mass_floor * total
    hhat = np.fft.fftn(h.values)[mask]
    c = np.sqrt(grid.multiplier(m, 1.0))[mask]
    target = profile.d_sigma * c ** (2.0 * sigma) * hhat
    coeffs = np.fft.fftn(ext.values[:5], axes=axes)[:, mask]
    ests, xeffs = [], []
    for j in range(1, 3):
        xe = _effective_abscissa(x[j], x[j + 1], sigma)
        slope = (coeffs[j + 1] - coeffs[j]) / (x[j + 1] - x[j])
        ests.append(-xe ** (1.0 - 2.0 * sigma) * slope)
        xeffs.append(xe)
    p = 2.0 - 2.0 * sigma
    r1, r2 = xeffs[0] ** p, xeffs[1] ** p
    extrap = ests[0] + (ests[0] - ests[1]) * r1 / (r2 - r1)
    xi_sq = grid.xi_sq[mask]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["xi_abs", "estimate_re", "estimate_im",
                    "target_re", "target_im", "rel_error"])
        for q, e, t in zip(np.sqrt(xi_sq), extrap, target):
            w.writerow([repr(float(q)), repr(float(e.real)),
                        repr(float(e.imag)), repr(float(t.real)),
                        repr(float(t.imag)),
                        repr(float(abs(e - t) / abs(t)))])
