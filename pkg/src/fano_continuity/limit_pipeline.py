"""The collapsed limit: fiberwise Ricci potential and Calabi solve, G, and psi.

Every fiber of both models is the same CP^1 by symmetry, so the fiber
problems are solved once on the fiber mesh.  The base equation
(chi + i ddbar psi) = e^psi G chi lives on CP^1 with its own a = 1 mesh.
"""
from dataclasses import dataclass
from math import log, pi

import numpy as np
import scipy.linalg as sla

from .errors import ClassMismatch, InconsistentG, MassMismatch, NonAdmissible
from .ma_newton import MeanZero, ReducedMAProblem, newton_solve
from .mesh import build_mesh
from .radial_geometry import FiberMetric, RadialPotential, fiber_restriction

AREA_TOL = 1e-8
MASS_TOL = 1e-10


@dataclass
class LimitData:
    rho: np.ndarray
    u_fiber: np.ndarray
    omega_bar: RadialPotential
    G_value: float
    psi: np.ndarray
    omega_Y: FiberMetric
    V0: float
    lp_report: dict = None

    @property
    def Y(self):
        """omega_Y = Y omega_FS; a constant for the symmetric models."""
        return float(self.omega_Y.average(self.omega_Y.density))

    @property
    def psi_value(self):
        return float(np.mean(self.psi))

    def as_dict(self):
        return {"rho": self.rho.tolist(), "u_fiber": self.u_fiber.tolist(),
                "omega_bar_base": self.omega_bar.base.tolist(),
                "omega_bar_density": self.omega_bar.density.tolist(),
                "G": self.G_value, "psi": self.psi.tolist(),
                "omega_Y_density": self.omega_Y.density.tolist(), "Y": self.Y,
                "V0": self.V0, "lp_report": self.lp_report}


def fiber_ricci_density(mesh, density):
    """Reduced density of Ric for the fiber metric density * i d rho ^ dbar rho."""
    return 2.0 * mesh.a - mesh.lap(np.log(density))


def _solve_singular(mesh, rhs, weights):
    # lap_op has the constants as kernel; border with a mean-zero row and a
    # multiplier column that absorbs the (tiny) incompatibility of rhs
    n = mesh.npoints
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = mesh.lap_op.toarray()
    A[:n, n] = 1.0
    A[n, :n] = weights
    sol = sla.solve(A, np.concatenate([rhs, [0.0]]))
    return sol[:n], sol[n]


def fiber_ricci_potential(fiber_metric):
    """rho with Ric(omega_0y) - omega_0y = i ddbar rho and int e^rho = int 1."""
    m = fiber_metric.mesh
    dens = fiber_metric.density
    area = fiber_metric.area
    if not np.all(dens > 0):
        raise NonAdmissible("fiber metric is not positive")
    if abs(area - 4 * pi) > AREA_TOL * 4 * pi:
        raise ClassMismatch(f"fiber area {area:.12g} is not 4 pi")
    source = fiber_ricci_density(m, dens) - dens
    rho, _ = _solve_singular(m, source, m.weights)
    rho = rho + log(m.integrate(dens) / m.integrate(np.exp(rho) * dens))
    return rho, float(area)


def fiber_calabi_solve(fiber_metric, rho, tol=1e-12, max_iter=50):
    """u with omega_0y + i ddbar u = e^rho omega_0y and zero mean."""
    m = fiber_metric.mesh
    dens = fiber_metric.density
    mass, emass = m.integrate(dens), m.integrate(np.exp(rho) * dens)
    if abs(emass - mass) > MASS_TOL * mass:
        raise MassMismatch(f"int e^rho = {emass:.12g} but int 1 = {mass:.12g}")
    w = m.weights * dens
    p = ReducedMAProblem(m, dens, np.log(dens) + rho, 0.0, normalization=MeanZero(w / w.sum()))
    u, _ = newton_solve(p, np.zeros(m.npoints), tol, max_iter)
    return u


def calabi_residual(fiber_metric, omega_bar_density):
    """sup |Ric(omega_bar) - omega_0| / omega_0 on the fiber."""
    m = fiber_metric.mesh
    ric = fiber_ricci_density(m, omega_bar_density)
    return float(np.abs(ric / fiber_metric.density - 1.0).max())


def compute_G(spec, volume, omega_bar, fiber_density, tol=1e-8, eps=1.0):
    """G = Omega / (2 omega_bar ^ f*chi), cross-checked by the pushforward formula."""
    m = omega_bar.mesh
    a, kappa = m.a, spec.kappa
    pointwise = np.exp(volume.log_density) / (2.0 * kappa * a * omega_bar.density)
    pushed = m.integrate(np.exp(volume.log_density)) / (2.0 * a * kappa * m.integrate(fiber_density))
    G = float(m.integrate(pointwise * fiber_density) / m.integrate(fiber_density))
    spread = float(np.abs(pointwise - G).max())
    if spread > tol * abs(G) or abs(pushed - G) > tol * abs(G):
        raise InconsistentG(f"G varies by {spread:.3e} along the fiber; pushforward gives "
                            f"{pushed:.12g} vs {G:.12g}")
    base_area = 2 * pi * kappa
    report = {"delta": float(pointwise.min()), "eps": eps,
              "lp_norm": float((abs(G) ** (1 + eps) * base_area) ** (1 / (1 + eps))),
              "pushforward": float(pushed), "fiber_spread": spread}
    return G, report


def solve_limit_equation(spec, G, npoints=256, tol=1e-12, max_iter=50):
    """psi with chi + i ddbar psi = e^psi G chi on the base, chi = kappa omega_FS."""
    bm = build_mesh(npoints, 1.0)
    G = np.broadcast_to(np.asarray(G, dtype=float), (npoints,))
    if not np.all(G > 0):
        raise NonAdmissible("G must be positive")
    chi = np.full(npoints, float(spec.kappa))
    p = ReducedMAProblem(bm, chi, np.log(chi) + np.log(G), 1.0)
    psi, _ = newton_solve(p, -np.log(G), tol, max_iter)
    dens = chi + bm.lap(psi)
    if not np.all(dens > 0):
        raise NonAdmissible("omega_Y is not positive")
    return psi, FiberMetric(bm, dens)


def twisted_identity_residual(spec, limit):
    """sup |Ric(omega_Y) - (base part of omega_0 - omega_Y)| / omega_FS (product model)."""
    bm = limit.omega_Y.mesh
    ric = fiber_ricci_density(bm, limit.omega_Y.density)
    return float(np.abs(ric - (spec.base_coeff0 - limit.omega_Y.density)).max())


def build_limit(spec, u0, volume, npoints_base=None):
    fm = fiber_restriction(u0)
    rho, V0 = fiber_ricci_potential(fm)
    u = fiber_calabi_solve(fm, rho)
    omega_bar = u0.perturb(u)
    G, report = compute_G(spec, volume, omega_bar, fm.density)
    report["calabi_residual"] = calabi_residual(fm, omega_bar.density)
    psi, omega_Y = solve_limit_equation(spec, G, npoints_base or u0.mesh.npoints)
    return LimitData(rho, u, omega_bar, G, psi, omega_Y, V0, report)
