"""Nonlinearity hypotheses, energy functional, and Nehari projection."""

import numpy as np
import pytest
from scipy.integrate import quad as quadrature

from hartreebox.errors import DomainError
from hartreebox.model import (KernelSpec, ModelParams, NonlinearitySpec,
                              PotentialSpec, SolverSettings, F_eval, energy,
                              f_eval, gradient, interaction,
                              interaction_pairing, nehari_scale,
                              quadratic_form)
from hartreebox.spectral import TraceField

LOG_LINEAR = NonlinearitySpec("log_linear", 2.5)
PURE_POWER = NonlinearitySpec("pure_power", 2.5)


def small_params(**kw):
    defaults = dict(sigma=0.5, m=1.0, dim=1, L=10.0, n=64, theta=2.5,
                    potential=PotentialSpec(V_inf=1.0, A=0.3, w=2.0),
                    kernel=KernelSpec(a=0.0, b=1.0, w2=2.0))
    defaults.update(kw)
    return ModelParams(**defaults)


def bump(params, rng=None, width=1.0):
    g = params.grid
    vals = np.exp(-g.axis ** 2 / width ** 2)
    if rng is not None:
        vals = vals * (1.0 + 0.1 * rng.standard_normal(g.n))
    return TraceField(g, vals)


# ---------------------------------------------------------------------------
# f and F

@pytest.mark.parametrize("spec", [LOG_LINEAR, PURE_POWER])
def test_primitive_matches_quadrature(spec):
    for t in (0.05, 0.3, 1.0, 3.7, 10.0):
        ref, _ = quadrature(lambda s: f_eval(spec, s), 0.0, t,
                            epsabs=1e-12, epsrel=1e-12)
        assert abs(F_eval(spec, t) - ref) < 1e-8


def test_f_vanishes_at_zero_and_below():
    assert f_eval(LOG_LINEAR, 0.0) == 0.0
    assert f_eval(LOG_LINEAR, -1.0) == 0.0
    assert F_eval(LOG_LINEAR, -2.5) == 0.0
    t = np.array([-3.0, -0.1, 0.0, 0.5])
    assert np.all(f_eval(PURE_POWER, t)[:3] == 0.0)


@pytest.mark.parametrize("spec", [LOG_LINEAR, PURE_POWER])
def test_superlinear_limit_at_zero(spec):
    # (f1): f(t)/t -> 0, ratio decreasing below 1e-2
    ratios = [f_eval(spec, t) / t for t in (1e-3, 1e-4, 1e-5)]
    assert ratios[0] > ratios[1] > ratios[2]
    assert ratios[2] < 1e-2


@pytest.mark.parametrize("spec", [LOG_LINEAR, PURE_POWER])
def test_quotient_increasing(spec):
    # (f3): f(t)/t strictly increasing on t > 0
    t = np.logspace(-4, 3, 200)
    q = f_eval(spec, t) / t
    assert np.all(np.diff(q) > 0)


@pytest.mark.parametrize("spec", [LOG_LINEAR, PURE_POWER])
def test_ambrosetti_rabinowitz(spec):
    t = np.logspace(-4, 3, 200)
    assert np.all(2.0 * F_eval(spec, t) <= t * f_eval(spec, t) + 1e-14)


def test_growth_bound_constant_exists():
    # (boundf): |f(t)| <= xi t + C_xi t^(theta-1) with a finite fitted C_xi
    xi = 0.1
    t = np.logspace(-6, 3, 300)
    excess = np.maximum(f_eval(LOG_LINEAR, t) - xi * t, 0.0)
    C = float(np.max(excess / t ** (LOG_LINEAR.theta - 1.0)))
    assert np.isfinite(C) and C > 0
    assert np.all(f_eval(LOG_LINEAR, t)
                  <= xi * t + C * t ** (LOG_LINEAR.theta - 1.0) + 1e-14)


def test_user_table_tracks_samples():
    t = np.logspace(-3, 1, 2000)
    table = np.column_stack([t, f_eval(LOG_LINEAR, t)])
    spec = NonlinearitySpec("user_table", 2.5, table=table)
    probe = np.array([0.01, 0.1, 1.0, 5.0])
    assert np.allclose(f_eval(spec, probe), f_eval(LOG_LINEAR, probe),
                       rtol=1e-3)
    ref = F_eval(LOG_LINEAR, 1.0)
    assert abs(F_eval(spec, 1.0) - ref) < 1e-2 * ref


def test_nonlinearity_validation():
    with pytest.raises(DomainError):
        NonlinearitySpec("cubic")
    with pytest.raises(DomainError):
        NonlinearitySpec("log_linear", theta=2.0)
    with pytest.raises(DomainError):
        NonlinearitySpec("user_table", 2.5, table=np.ones((2, 2)))


# ---------------------------------------------------------------------------
# Parameter validation

def test_theta_window_enforced():
    # N=3, sigma=0.7: window is (max(2, 1.875), 3.75)
    with pytest.raises(DomainError, match="window"):
        ModelParams(sigma=0.7, m=1.0, dim=3, L=5.0, n=8, theta=4.0,
                    nonlinearity=NonlinearitySpec("log_linear", 4.0))
    ModelParams(sigma=0.7, m=1.0, dim=3, L=5.0, n=8, theta=2.5)


def test_theta_window_open_when_subcritical():
    # N <= 2 sigma: any theta > 2 admissible
    ModelParams(sigma=0.5, m=1.0, dim=1, L=5.0, n=8, theta=7.0,
                nonlinearity=NonlinearitySpec("log_linear", 7.0))


def test_kernel_exponent_bound():
    with pytest.raises(DomainError, match="mu"):
        ModelParams(sigma=0.5, m=1.0, dim=2, L=5.0, n=8, theta=2.5,
                    kernel=KernelSpec(a=1.0, mu=1.8))
    ModelParams(sigma=0.5, m=1.0, dim=2, L=5.0, n=8, theta=2.5,
                kernel=KernelSpec(a=1.0, mu=1.2))


def test_spec_validation():
    with pytest.raises(DomainError):
        PotentialSpec(V_inf=0.0)
    with pytest.raises(DomainError):
        PotentialSpec(A=-0.1)
    with pytest.raises(DomainError):
        KernelSpec(a=0.0, b=0.0)
    with pytest.raises(DomainError):
        SolverSettings(tol=0.0)


def test_coercivity_validation(profile_half):
    small_params().validate(profile_half)
    deep = small_params(potential=PotentialSpec(V_inf=1.0, A=0.3, w=2.0))
    deep.validate(profile_half)
    with pytest.raises(DomainError, match="sigma"):
        small_params(sigma=0.3).validate(profile_half)


def test_kernel_is_radial_and_nonnegative():
    params = small_params(kernel=KernelSpec(a=0.5, mu=0.4, R_c=2.0,
                                            b=1.0, w2=2.0))
    vals = params.kernel_values
    assert np.all(vals >= 0)
    # displacement symmetry: W(d) = W(-d)
    assert np.allclose(vals[1:], vals[1:][::-1])


# ---------------------------------------------------------------------------
# Energy and gradient

def test_energy_components(profile_half, rng):
    params = small_params()
    u = bump(params, rng)
    rep = energy(u, params, profile_half)
    assert rep.total == rep.quad - rep.interaction
    assert rep.quad > 0 and rep.interaction > 0


def test_energy_zero_field(profile_half):
    params = small_params()
    z = TraceField(params.grid, np.zeros(params.n))
    rep = energy(z, params, profile_half)
    assert rep.total == 0.0 and rep.quad == 0.0 and rep.interaction == 0.0


def test_interaction_homogeneity_pure_power(profile_half, rng):
    params = small_params(nonlinearity=PURE_POWER)
    u = bump(params, rng)
    base = interaction(u, params)
    for t in (0.5, 2.0, 3.0):
        got = interaction(t * u, params)
        assert abs(got - t ** 5 * base) < 1e-12 * t ** 5 * base


def test_quadratic_part_coercive(profile_half, rng):
    params = small_params()
    for _ in range(10):
        u = TraceField(params.grid, rng.standard_normal(params.n))
        assert quadratic_form(u, params, profile_half) \
            > 0.5 * profile_half.kappa * u.norm_l2() ** 2


def test_gradient_matches_directional_derivative(profile_half, rng):
    params = small_params()
    u = bump(params, rng)
    v = TraceField(params.grid, rng.standard_normal(params.n))
    eps = 1e-5
    fd = (energy(u + eps * v, params, profile_half).total
          - energy(u - eps * v, params, profile_half).total) / (2 * eps)
    pair = gradient(u, params, profile_half).inner(v)
    assert abs(pair - fd) < 1e-5 * abs(fd)


def test_gradient_zero_field(profile_half):
    params = small_params()
    z = TraceField(params.grid, np.zeros(params.n))
    assert np.all(gradient(z, params, profile_half).values == 0.0)


# ---------------------------------------------------------------------------
# Nehari projection

def test_nehari_fixed_point_and_scaling(profile_half, rng):
    params = small_params()
    u = bump(params, rng)
    t_u = nehari_scale(u, params, profile_half)
    assert t_u > 0
    assert abs(nehari_scale(t_u * u, params, profile_half) - 1.0) < 1e-8
    for c in (0.5, 2.0):
        got = nehari_scale(c * u, params, profile_half)
        assert abs(got - t_u / c) < 1e-8 * t_u / c


def test_nehari_pure_power_closed_form(profile_half, rng):
    params = small_params(nonlinearity=PURE_POWER)
    u = bump(params, rng)
    theta = 2.5
    want = (quadratic_form(u, params, profile_half)
            / (2 * theta * interaction(u, params))) ** (1 / (2 * theta - 2))
    assert abs(nehari_scale(u, params, profile_half) - want) < 1e-12 * want


def test_nehari_projected_field_is_critical(profile_half, rng):
    params = small_params()
    u = bump(params, rng)
    w = nehari_scale(u, params, profile_half) * u
    pair = abs(gradient(w, params, profile_half).inner(w))
    assert pair < 1e-10 * quadratic_form(w, params, profile_half)


def test_nehari_requires_positive_part(profile_half, rng):
    params = small_params()
    neg = TraceField(params.grid, -np.abs(rng.standard_normal(params.n)))
    with pytest.raises(DomainError, match="Nehari projection undefined"):
        nehari_scale(neg, params, profile_half)


def test_interaction_quartic_growth(profile_half, rng):
    # Psi(t2 u)/Psi(t1 u) >= (t2/t1)^4 for t2 > t1 >= 1
    params = small_params()
    u = bump(params, rng)
    for t1, t2 in ((1.0, 2.0), (1.5, 4.0), (2.0, 9.0)):
        ratio = interaction(t2 * u, params) / interaction(t1 * u, params)
        assert ratio >= (t2 / t1) ** 4


def test_mountain_pass_geometry(profile_half, rng):
    # along each ray, I(tu) is positive for small t and negative for large t
    params = small_params()
    for _ in range(20):
        u = TraceField(params.grid,
                       np.abs(rng.standard_normal(params.n))
                       * np.exp(-params.grid.axis ** 2 / 4.0))
        ts = np.logspace(-2, 4, 64)
        vals = np.array([energy(t * u, params, profile_half).total
                         for t in ts])
        assert vals[0] > 0
        assert vals[-1] < 0


def test_pairing_consistency(profile_half, rng):
    # <Psi'(u), u> computed directly agrees with a finite difference of Psi
    params = small_params()
    u = bump(params, rng)
    eps = 1e-6
    fd = (interaction((1 + eps) * u, params)
          - interaction((1 - eps) * u, params)) / (2 * eps)
    assert abs(interaction_pairing(u, params) - fd) < 1e-6 * abs(fd)
