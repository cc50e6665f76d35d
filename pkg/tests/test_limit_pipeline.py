import numpy as np
import pytest

from fano_continuity.continuity_path import ContinuityPath, VolumeForm, build_volume_form
from fano_continuity.errors import ClassMismatch, InconsistentG, MassMismatch
from fano_continuity.limit_pipeline import (build_limit, calabi_residual, compute_G,
                                            fiber_calabi_solve, fiber_ricci_potential,
                                            solve_limit_equation, twisted_identity_residual)
from fano_continuity.radial_geometry import FiberMetric, fiber_restriction, reference_potential


def fs_fiber(product, n=128):
    return fiber_restriction(reference_potential(product, npoints=n))


def test_round_fiber_is_fixed_point(product):
    fm = fs_fiber(product)
    rho, area = fiber_ricci_potential(fm)
    assert abs(area - 4 * np.pi) < 1e-10
    assert np.abs(rho).max() < 1e-10
    u = fiber_calabi_solve(fm, rho)
    assert np.abs(u).max() < 1e-10


@pytest.mark.parametrize("amp", [0.1, 0.4])
def test_perturbed_fiber_calabi(product, amp):
    fm = fs_fiber(product)
    m = fm.mesh
    g = amp * np.cos(np.pi * m.nodes) ** 2
    dens = fm.density + m.lap(g)
    pert = FiberMetric(m, dens)
    rho, _ = fiber_ricci_potential(pert)
    assert np.abs(rho).max() > 1e-3
    u = fiber_calabi_solve(pert, rho)
    assert calabi_residual(pert, dens + m.lap(u)) < 1e-6


def test_wrong_area_and_mass(product):
    fm = fs_fiber(product)
    with pytest.raises(ClassMismatch):
        fiber_ricci_potential(FiberMetric(fm.mesh, 1.1 * fm.density))
    with pytest.raises(MassMismatch):
        fiber_calabi_solve(fm, np.full(fm.mesh.npoints, 0.01))


@pytest.mark.parametrize("lam", [0.5, 2.0, 3.0])
def test_G_scales_with_gauge(hirzebruch, lam):
    u0 = reference_potential(hirzebruch, npoints=128)
    vol = build_volume_form(hirzebruch, u0=u0)
    base = build_limit(hirzebruch, u0, vol)
    scaled = build_limit(hirzebruch, u0, vol.rescaled(lam))
    assert abs(scaled.G_value / base.G_value - lam) < 1e-10
    # psi absorbs the gauge: e^psi G is fixed
    assert abs(scaled.psi_value + np.log(lam) - base.psi_value) < 1e-10


def test_hirzebruch_default_limit(hirzebruch):
    path = ContinuityPath(hirzebruch, npoints=128)
    lim = build_limit(hirzebruch, path.u0, path.volume)
    assert abs(lim.G_value - 0.25) < 1e-10
    assert abs(lim.psi_value - np.log(4)) < 1e-10
    assert abs(lim.Y - 1.0) < 1e-10


def test_product_twisted_identity(product):
    path = ContinuityPath(product, npoints=128)
    lim = build_limit(product, path.u0, path.volume)
    assert twisted_identity_residual(product, lim) < 1e-9


def test_inconsistent_G(hirzebruch):
    u0 = reference_potential(hirzebruch, npoints=128)
    vol = build_volume_form(hirzebruch, u0=u0)
    bent = VolumeForm(vol.mesh, vol.log_density + 0.1 * u0.mesh.nodes, vol.gauge, 0.0)
    with pytest.raises(InconsistentG):
        compute_G(hirzebruch, bent, u0, fiber_restriction(u0).density)


def test_limit_equation_constant_solution(hirzebruch):
    psi, omega_Y = solve_limit_equation(hirzebruch, 0.5, npoints=64)
    assert np.allclose(psi, np.log(2.0), atol=1e-12)
    assert np.allclose(omega_Y.density, hirzebruch.kappa, atol=1e-12)
