"""Model data: nonlinearity, potential, interaction kernel, and the energy.

The variational problem lives on the boundary trace h = u(0, .): the
canonical extension is optimal for the quadratic part, so the energy

    I(h) = 1/2 ( kappa * <(m^2 - Lap)^sigma h, h> + int V h^2 )
           - 1/2 int (W * F(h)) F(h)

is computed entirely on the N-dimensional periodic box.  The nonlinearity f
vanishes on t < 0, so negativity is handled through f, never by clipping the
field itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import BracketError, DiagnosticError, DomainError, NumericError
from .profile import BesselProfile
from .spectral import Grid, TraceField, convolve, sobolev_form


# ---------------------------------------------------------------------------
# Nonlinearity

@dataclass(frozen=True)
class NonlinearitySpec:
    """Superlinear source term f and its primitive F; f = 0 on t < 0.

    Kinds:
      log_linear  -- f(t) = t ln(1+t); theta bounds its polynomial growth.
      pure_power  -- f(t) = t^(theta-1).
      user_table  -- f sampled on a positive grid, interpolated log-log;
                     F by cumulative trapezoid.
    """

    kind: str = "log_linear"
    theta: float = 2.5
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("log_linear", "pure_power", "user_table"):
            raise DomainError(f"unknown nonlinearity kind {self.kind!r}")
        if self.theta <= 2.0:
            raise DomainError("theta must exceed 2")
        if self.kind == "user_table":
            t = np.asarray(self.table, dtype=float)
            if t.ndim != 2 or t.shape[1] != 2 or t.shape[0] < 4:
                raise DomainError("user_table needs >= 4 rows of (t, f(t))")
            if np.any(t[:, 0] <= 0) or np.any(np.diff(t[:, 0]) <= 0):
                raise DomainError("user_table abscissae must be positive "
                                  "and increasing")
            if np.any(t[:, 1] < 0):
                raise DomainError("user_table values must be nonnegative")
            object.__setattr__(self, "table", t)


def f_eval(spec: NonlinearitySpec, t):
    """f(t), vectorized; zero on t < 0."""
    t = np.asarray(t, dtype=float)
    pos = np.maximum(t, 0.0)
    if spec.kind == "log_linear":
        out = pos * np.log1p(pos)
    elif spec.kind == "pure_power":
        out = pos ** (spec.theta - 1.0)
    else:
        out = _table_f(spec, pos)
    return out if out.ndim else float(out)


def F_eval(spec: NonlinearitySpec, t):
    """F(t) = int_0^t f, the exact primitive; zero on t < 0.

    log_linear: integrating t ln(1+t) by parts gives
    F(t) = (t^2-1)/2 ln(1+t) - t^2/4 + t/2 (cross-checked against
    quadrature in the tests).
    """
    t = np.asarray(t, dtype=float)
    pos = np.maximum(t, 0.0)
    if spec.kind == "log_linear":
        out = 0.5 * (pos ** 2 - 1.0) * np.log1p(pos) - 0.25 * pos ** 2 \
            + 0.5 * pos
    elif spec.kind == "pure_power":
        out = pos ** spec.theta / spec.theta
    else:
        out = _table_F(spec, pos)
    return out if out.ndim else float(out)


def _table_f(spec: NonlinearitySpec, pos: np.ndarray) -> np.ndarray:
    tt, ff = spec.table[:, 0], spec.table[:, 1]
    out = np.interp(pos, tt, ff, left=0.0)
    # extend past the table with the last local power law
    hi = pos > tt[-1]
    if np.any(hi):
        p = np.log(ff[-1] / max(ff[-2], 1e-300)) / np.log(tt[-1] / tt[-2])
        out = np.where(hi, ff[-1] * (pos / tt[-1]) ** p, out)
    return out


def _table_F(spec: NonlinearitySpec, pos: np.ndarray) -> np.ndarray:
    tt, ff = spec.table[:, 0], spec.table[:, 1]
    nodes = np.concatenate([[0.0], tt])
    vals = np.concatenate([[0.0], ff])
    cum = np.concatenate([[0.0], np.cumsum(np.diff(nodes)
                                           * 0.5 * (vals[1:] + vals[:-1]))])
    out = np.interp(pos, nodes, cum)
    hi = pos > tt[-1]
    if np.any(hi):
        p = np.log(ff[-1] / max(ff[-2], 1e-300)) / np.log(tt[-1] / tt[-2])
        tail = ff[-1] * tt[-1] / (p + 1.0) * ((pos / tt[-1]) ** (p + 1.0)
                                              - 1.0)
        out = np.where(hi, cum[-1] + tail, out)
    return out


# ---------------------------------------------------------------------------
# Potential and kernel

@dataclass(frozen=True)
class PotentialSpec:
    """V(y) = V_inf - A exp(-|y|^2 / w^2): constant background minus a well."""

    V_inf: float = 1.0
    A: float = 0.0
    w: float = 1.0

    def __post_init__(self):
        if self.V_inf <= 0:
            raise DomainError("V_inf must be positive")
        if self.A < 0:
            raise DomainError("well depth A must be nonnegative")
        if self.w <= 0:
            raise DomainError("well width w must be positive")

    def sample(self, grid: Grid) -> np.ndarray:
        return self.V_inf - self.A * np.exp(-grid.radius_sq / self.w ** 2)


@dataclass(frozen=True)
class KernelSpec:
    """W = W1 + W2 >= 0, radial.

    W1 is a truncated power core a * max(|y|, rho)^(-mu) * 1_{|y| <= R_c}
    with the singularity capped at one cell width rho (the grid cannot
    represent it, and only the L^r membership of the core enters the
    estimates).  W2 = b exp(-|y|^2 / w2^2) is the bounded part.  Distances
    are minimal-image so the kernel is genuinely radial on the torus, and
    sampling is in displacement coordinates (zero shift at index 0), the
    convention FFT convolution expects.
    """

    a: float = 0.0
    mu: float = 0.5
    R_c: float = 1.0
    b: float = 1.0
    w2: float = 1.0

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise DomainError("kernel amplitudes must be nonnegative")
        if self.a == 0 and self.b == 0:
            raise DomainError("kernel is identically zero")
        if self.mu < 0:
            raise DomainError("kernel exponent mu must be nonnegative")
        if self.R_c <= 0 or self.w2 <= 0:
            raise DomainError("kernel ranges must be positive")

    def sample(self, grid: Grid) -> np.ndarray:
        r = grid.displacement_radius
        out = self.b * np.exp(-r ** 2 / self.w2 ** 2)
        if self.a > 0:
            rho = 2.0 * grid.L / grid.n
            out = out + np.where(r <= self.R_c,
                                 self.a * np.maximum(r, rho) ** -self.mu,
                                 0.0)
        return out


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-8
    max_iter: int = 2000
    step: float = 1.0

    def __post_init__(self):
        if self.tol <= 0 or self.step <= 0 or self.max_iter < 1:
            raise DomainError("solver settings must be positive")


# ---------------------------------------------------------------------------
# Full parameter set

@dataclass(frozen=True)
class ModelParams:
    sigma: float
    m: float
    dim: int
    L: float
    n: int
    theta: float = 2.5
    nonlinearity: NonlinearitySpec | None = None
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    kernel: KernelSpec = field(default_factory=KernelSpec)
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        if not 0.0 < self.sigma < 1.0:
            raise DomainError("sigma out of (0,1)")
        if self.m <= 0:
            raise DomainError("m must be positive")
        if self.nonlinearity is None:
            object.__setattr__(self, "nonlinearity",
                               NonlinearitySpec(theta=self.theta))
        if abs(self.nonlinearity.theta - self.theta) > 1e-12:
            raise DomainError("theta disagrees with nonlinearity spec")
        self._check_theta_window()
        self._check_kernel_integrability()
        _ = self.grid  # validates dim, L, n

    def _check_theta_window(self):
        """Enforce max{2, N/(N-2 sigma)} < theta < 2N/(N-2 sigma).

        The window only constrains theta from above when N > 2 sigma; for
        N <= 2 sigma the critical exponent is infinite and any theta > 2
        is admissible.
        """
        N, s, th = self.dim, self.sigma, self.theta
        if th <= 2.0:
            raise DomainError("theta must exceed 2")
        if N > 2.0 * s:
            lo = max(2.0, N / (N - 2.0 * s))
            hi = 2.0 * N / (N - 2.0 * s)
            if not lo < th < hi:
                raise DomainError(
                    f"theta={th} outside the admissible window "
                    f"({lo:.6g}, {hi:.6g}) for N={N}, sigma={s}")

    def _check_kernel_integrability(self):
        """Power-core exponent must keep W1 in L^r with mu*r < N for some
        r > N/(N(2-theta) + 2 sigma theta)."""
        if self.kernel.a == 0:
            return
        bound = self.dim * (2.0 - self.theta) + 2.0 * self.sigma * self.theta
        if bound <= 0:
            raise DomainError(
                "power-core kernel inadmissible: N(2-theta) + 2 sigma theta "
                f"= {bound:.6g} <= 0")
        if self.kernel.mu >= min(self.dim, bound):
            raise DomainError(
                f"kernel exponent mu={self.kernel.mu} too large; need "
                f"mu < min(N, N(2-theta)+2 sigma theta) = "
                f"{min(self.dim, bound):.6g}")

    @cached_property
    def grid(self) -> Grid:
        return Grid(self.dim, self.L, self.n)

    @cached_property
    def potential_values(self) -> np.ndarray:
        return self.potential.sample(self.grid)

    @cached_property
    def kernel_values(self) -> np.ndarray:
        return self.kernel.sample(self.grid)

    @cached_property
    def kernel_field(self) -> TraceField:
        return TraceField(self.grid, self.kernel_values)

    @property
    def v0(self) -> float:
        """Configured coercivity offset: a fraction of the well depth,
        scaled to sit strictly under min{1, m^2} kappa at kappa ~ 1."""
        frac = min(self.potential.A / self.potential.V_inf, 1.0)
        return 0.9 * min(1.0, self.m ** 2) * frac

    def validate(self, profile: BesselProfile) -> None:
        """Coercivity checks that need the extension constant kappa."""
        if abs(profile.sigma - self.sigma) > 1e-12:
            raise DomainError(f"profile built for sigma={profile.sigma}, "
                              f"params use sigma={self.sigma}")
        v0 = self.v0 * profile.kappa
        if v0 >= min(1.0, self.m ** 2) * profile.kappa:
            raise DomainError("V0 must stay below min{1,m^2} kappa")
        if float(np.min(self.potential_values)) + v0 < 0.0:
            raise DomainError("potential violates the coercivity bound "
                              "min V + V0 >= 0")


# ---------------------------------------------------------------------------
# Energy, first variation, Nehari projection

@dataclass(frozen=True)
class EnergyReport:
    quad: float
    interaction: float
    total: float


def _check_finite(value: float, component: str) -> float:
    if not np.isfinite(value):
        raise NumericError(f"non-finite value in {component}")
    return float(value)


def quadratic_form(u: TraceField, params: ModelParams,
                   profile: BesselProfile) -> float:
    """Q(u) = kappa * sum multiplier |hat u|^2 dxi + int V u^2."""
    form = sobolev_form(u, params.sigma, params.m, profile)
    pot = u.grid.cell_volume * np.sum(params.potential_values
                                      * u.values ** 2)
    return _check_finite(form + pot, "quadratic form")


def interaction(u: TraceField, params: ModelParams) -> float:
    """Psi(u) = 1/2 int (W * F(u)) F(u)."""
    Fu = TraceField(u.grid, F_eval(params.nonlinearity, u.values))
    conv = convolve(params.kernel_field, Fu)
    val = 0.5 * conv.inner(Fu)
    return _check_finite(val, "interaction")


def interaction_pairing(u: TraceField, params: ModelParams) -> float:
    """<Psi'(u), u> = int (W * F(u)) f(u) u."""
    Fu = TraceField(u.grid, F_eval(params.nonlinearity, u.values))
    conv = convolve(params.kernel_field, Fu)
    fu = f_eval(params.nonlinearity, u.values)
    val = u.grid.cell_volume * np.sum(conv.values * fu * u.values)
    return _check_finite(val, "interaction pairing")


def energy(u: TraceField, params: ModelParams,
           profile: BesselProfile) -> EnergyReport:
    """I(u) = Q(u)/2 - Psi(u), componentwise."""
    if u.grid != params.grid:
        raise DomainError("field grid does not match params grid")
    quad = 0.5 * quadratic_form(u, params, profile)
    psi = interaction(u, params)
    return EnergyReport(quad=quad, interaction=psi, total=quad - psi)


def gradient(u: TraceField, params: ModelParams,
             profile: BesselProfile) -> TraceField:
    """L^2 representation of I'(u):
    kappa (m^2 - Lap)^sigma u + V u - (W * F(u)) f(u)."""
    if u.grid != params.grid:
        raise DomainError("field grid does not match params grid")
    mult = u.grid.multiplier(params.m, params.sigma)
    lin = profile.kappa * np.fft.ifftn(mult * np.fft.fftn(u.values)).real
    Fu = TraceField(u.grid, F_eval(params.nonlinearity, u.values))
    conv = convolve(params.kernel_field, Fu)
    fu = f_eval(params.nonlinearity, u.values)
    vals = lin + params.potential_values * u.values - conv.values * fu
    if not np.all(np.isfinite(vals)):
        raise NumericError("non-finite value in gradient")
    return TraceField(u.grid, vals)


def nehari_phi(t: float, u: TraceField, params: ModelParams,
               quad: float) -> float:
    """phi(t) = <I'(tu), tu>/t = t*Q(u) - (1/t) <Psi'(tu), tu>."""
    return t * quad - interaction_pairing(t * u, params) / t


def nehari_scale(u: TraceField, params: ModelParams,
                 profile: BesselProfile) -> float:
    """Unique t > 0 with I'(t u) orthogonal to the ray, i.e. phi(t) = 0."""
    if not np.any(u.values > 0.0):
        raise DomainError("Nehari projection undefined: field has no "
                          "positive part")
    quad = quadratic_form(u, params, profile)

    nl = params.nonlinearity
    if nl.kind == "pure_power":
        # I(tu) = t^2 Q/2 - t^(2 theta) Psi(u): the stationary t in closed form
        psi = interaction(u, params)
        if psi <= 0:
            raise BracketError("interaction vanishes on this ray")
        return float((quad / (2.0 * nl.theta * psi))
                     ** (1.0 / (2.0 * nl.theta - 2.0)))

    # bracket: phi > 0 for small t (superlinearity), < 0 for large t (AR)
    t_grid = np.logspace(-6, 6, 49)
    phi_prev, t_prev = None, None
    bracket = None
    for t in t_grid:
        val = nehari_phi(t, u, params, quad)
        if phi_prev is not None and phi_prev > 0.0 >= val:
            bracket = (t_prev, t)
            break
        phi_prev, t_prev = val, t
    if bracket is None:
        raise BracketError("no sign change of the Nehari function on "
                           "[1e-6, 1e6]")

    from scipy.optimize import brentq
    t_u = brentq(lambda t: nehari_phi(t, u, params, quad),
                 bracket[0], bracket[1], xtol=1e-300, rtol=8.9e-16)
    # Newton polish; the residual |<I'(tu), tu>| is measured against the
    # quadratic scale of the projected field, t^2 Q.  Keep only improving
    # steps: near the root the finite-difference slope sits at the noise
    # floor of the interaction sum.
    best_t, best_val = t_u, abs(nehari_phi(t_u, u, params, quad))
    for _ in range(3):
        val = nehari_phi(t_u, u, params, quad)
        if abs(val) < 1e-12 * t_u * quad:
            break
        h = 1e-7 * t_u
        dval = (nehari_phi(t_u + h, u, params, quad)
                - nehari_phi(t_u - h, u, params, quad)) / (2.0 * h)
        if dval == 0.0:
            break
        t_u -= val / dval
        cand = abs(nehari_phi(t_u, u, params, quad))
        if cand < best_val:
            best_t, best_val = t_u, cand
    if best_val >= 1e-10 * best_t * quad:
        raise DiagnosticError("Nehari root residual exceeds 1e-10 of the "
                              "quadratic scale")
    return float(best_t)
