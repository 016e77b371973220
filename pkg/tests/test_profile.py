"""Profile ODE solution against closed forms and an independent oracle."""

import numpy as np
import pytest
from scipy.special import gamma, kv

from hartreebox.errors import DomainError
from hartreebox.profile import (build_profile, eval_profile, ode_residual,
                                profile_from_csv, profile_to_csv)

from conftest import SIGMAS


def bessel_oracle(sigma, s):
    """Closed form of the profile in terms of the modified Bessel K."""
    s = np.asarray(s, dtype=float)
    return (2.0 / gamma(sigma)) * (s / 2.0) ** sigma * kv(sigma, s)


def test_half_is_exponential(profile_half):
    s = np.linspace(0.0, 10.0, 2001)
    phi, dphi = eval_profile(profile_half, s)
    assert np.max(np.abs(phi - np.exp(-s))) < 1e-8
    assert np.max(np.abs(dphi + np.exp(-s))) < 1e-6


def test_half_kappa_is_one(profile_half):
    assert abs(profile_half.kappa - 1.0) < 1e-6


@pytest.mark.parametrize("sigma", SIGMAS)
def test_matches_bessel_oracle(profiles, sigma):
    p = profiles[sigma]
    s = np.concatenate([np.logspace(-6, -1, 30), np.linspace(0.2, 35.0, 300)])
    phi, _ = eval_profile(p, s)
    assert np.max(np.abs(phi - bessel_oracle(sigma, s))) < 1e-8


@pytest.mark.parametrize("sigma", SIGMAS)
def test_constants_match_gamma_formulas(profiles, sigma):
    p = profiles[sigma]
    c1_exact = gamma(1.0 - sigma) / (sigma * gamma(sigma) * 4.0 ** sigma)
    c2_exact = np.sqrt(np.pi) * 2.0 ** (0.5 - sigma) / gamma(sigma)
    assert abs(p.c1 - c1_exact) / c1_exact < 1e-2
    assert abs(p.c2 - c2_exact) / c2_exact < 1e-2
    assert abs(p.d_sigma - 2.0 * sigma * c1_exact) / p.d_sigma < 1e-6


@pytest.mark.parametrize("sigma", SIGMAS)
def test_kappa_equals_d_sigma(profiles, sigma):
    # multiply the ODE by Phi s^(1-2 sigma) and integrate by parts: the
    # energy integral collapses to the boundary flux, which is d_sigma
    p = profiles[sigma]
    assert abs(p.kappa - p.d_sigma) < 1e-6 * p.kappa


@pytest.mark.parametrize("sigma", SIGMAS)
def test_ode_residual(profiles, sigma):
    assert np.max(ode_residual(profiles[sigma])) < 1e-6


def test_kappa_stable_under_refinement():
    k1 = build_profile(0.37, M=1500).kappa
    k2 = build_profile(0.37, M=3000).kappa
    assert abs(k1 - k2) < 1e-8 * k1


def test_boundary_values(profile_half):
    phi0, dphi0 = eval_profile(profile_half, 0.0)
    assert phi0 == 1.0
    assert abs(dphi0 + 1.0) < 1e-10


def test_far_field_asymptote(profiles):
    p = profiles[0.3]
    s = np.array([p.s_max * 1.5, p.s_max * 2.0])
    phi, _ = eval_profile(p, s)
    env = p.c2 * s ** ((2 * p.sigma - 1) / 2) * np.exp(-s)
    assert np.allclose(phi, env, rtol=1e-12)


def test_negative_argument_rejected(profile_half):
    with pytest.raises(DomainError):
        eval_profile(profile_half, -0.1)


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.7])
def test_sigma_domain(bad):
    with pytest.raises(DomainError, match="sigma out of"):
        build_profile(bad)


def test_build_validation():
    with pytest.raises(DomainError):
        build_profile(0.5, s_max=5.0)
    with pytest.raises(DomainError):
        build_profile(0.5, M=100)


def test_csv_roundtrip(tmp_path, profiles):
    p = profiles[0.7]
    path = tmp_path / "profile.csv"
    profile_to_csv(p, path)
    q = profile_from_csv(path)
    assert q.sigma == p.sigma
    assert q.kappa == p.kappa
    assert np.array_equal(q.nodes, p.nodes)
    assert np.array_equal(q.phi, p.phi)


def test_csv_rejects_garbage(tmp_path):
    path = tmp_path / "junk.csv"
    path.write_text("not,a,profile\n1,2,3\n")
    with pytest.raises(Exception):
        profile_from_csv(path)
