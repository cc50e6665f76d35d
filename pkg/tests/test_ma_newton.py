import numpy as np
import pytest

from fano_continuity.errors import MaxIterations, NonAdmissible
from fano_continuity.ma_newton import (MeanZero, ReducedMAProblem, continuation_step,
                                       newton_solve, residual)
from fano_continuity.mesh import build_mesh
from fano_continuity.radial_geometry import reference_potential


def curve_problem(n=128, c=1.0, amp=0.3):
    m = build_mesh(n)
    dens = np.full(n, 2.0)
    target = dens * np.exp(amp * np.cos(np.pi * m.nodes))
    return ReducedMAProblem(m, dens, np.log(target), c)


def test_c_zero_needs_normalization():
    m = build_mesh(32)
    with pytest.raises(ValueError):
        ReducedMAProblem(m, np.ones(32), np.zeros(32), 0.0)


def test_newton_quadratic_convergence():
    p = curve_problem()
    phi, rep = newton_solve(p, np.zeros(p.mesh.npoints), tol=1e-12)
    assert rep.converged and rep.iterations <= 8
    assert np.abs(residual(p, phi)).max() <= 1e-12
    assert np.allclose(rep.shift + rep.osc, phi)


def test_mean_zero_normalization():
    m = build_mesh(128)
    dens = np.full(128, 2.0)
    h = 0.2 * np.cos(np.pi * m.nodes)
    h -= np.log(m.integrate(np.exp(h) * dens) / m.integrate(dens))
    w = m.weights * dens
    p = ReducedMAProblem(m, dens, np.log(dens) + h, 0.0, normalization=MeanZero(w / w.sum()))
    phi, rep = newton_solve(p, np.zeros(128), tol=1e-12)
    assert rep.converged
    assert abs(w @ phi) < 1e-12


def test_surface_problem_and_warm_start(hirzebruch):
    u = reference_potential(hirzebruch, npoints=128)
    log_rhs = np.log(u.base * u.density) + 0.1 * np.sin(np.pi * u.mesh.nodes)
    p = ReducedMAProblem.from_potential(u, log_rhs, 1.5)
    phi, rep = newton_solve(p, np.zeros(128))
    assert rep.converged
    p2 = p.with_log_rhs(log_rhs + 0.01)
    _, warm = continuation_step(phi, p2, compare_cold=True)
    assert warm.converged
    assert warm.warm_start_gain is None or warm.warm_start_gain >= 0


def test_max_iterations():
    p = curve_problem(amp=1.0)
    with pytest.raises(MaxIterations):
        newton_solve(p, np.zeros(p.mesh.npoints), tol=1e-14, max_iter=1)


def test_nonadmissible_start():
    p = curve_problem()
    bad = -10.0 * np.sin(np.pi * p.mesh.nodes) ** 2
    with pytest.raises(NonAdmissible):
        residual(p, 10 * bad)
