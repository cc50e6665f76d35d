"""Damped Newton solver for the reduced scalar Monge-Ampère equations.

Every equation we solve has the form

    F(phi) = [log B(phi)] + log Phi(phi) - log_rhs - c_exp * phi = 0

nodewise, where Phi(phi) = Phi_ref + lap(phi) is the reduced fiber (or
base) density and, on the Hirzebruch total space, B(phi) = B_ref + phi' is
the base eigenvalue.  The bracketed term is present only for the 2-D total
space ("surface" problems); the fiber Calabi problem and the base limiting
equation are 1-D ("curve" problems).
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import LineSearchStall, MaxIterations, NonAdmissible, NonAdmissibleBasin
from .mesh import BandedSystem, Mesh, solve_banded

SURFACE = "surface"
CURVE = "curve"


@dataclass(frozen=True)
class MeanZero:
    weights: np.ndarray
    value: float = 0.0


@dataclass(frozen=True)
class FixedValue:
    node: int
    value: float = 0.0


@dataclass(frozen=True)
class ReducedMAProblem:
    mesh: Mesh
    density_ref: np.ndarray
    log_rhs: np.ndarray
    c_exp: float
    base_ref: Optional[np.ndarray] = None
    coupled: bool = False
    normalization: Optional[object] = None

    def __post_init__(self):
        if not np.isfinite(self.c_exp):
            raise ValueError("c_exp must be finite")
        if self.c_exp == 0 and self.normalization is None:
            raise ValueError("c_exp = 0 needs a normalization")
        if not np.all(np.isfinite(self.log_rhs)):
            raise ValueError("log_rhs must be finite")

    @property
    def kind(self):
        return CURVE if self.base_ref is None else SURFACE

    @classmethod
    def from_potential(cls, u_ref, log_rhs, c_exp, kind=SURFACE, normalization=None):
        log_rhs = np.broadcast_to(np.asarray(log_rhs, dtype=float), u_ref.density.shape).copy()
        base = u_ref.base.copy() if kind == SURFACE else None
        return cls(u_ref.mesh, u_ref.density.copy(), log_rhs, float(c_exp), base,
                   kind == SURFACE and u_ref.coupled, normalization)

    def with_log_rhs(self, log_rhs):
        return ReducedMAProblem(self.mesh, self.density_ref, np.asarray(log_rhs, dtype=float),
                                self.c_exp, self.base_ref, self.coupled, self.normalization)

    def fields(self, phi):
        """(B, Phi) of the perturbed metric; B is None for curve problems."""
        m = self.mesh
        dens = self.density_ref + m.lap(phi)
        if self.base_ref is None:
            return None, dens
        base = self.base_ref + m.drho(phi) if self.coupled else self.base_ref
        return base, dens

    def admissible(self, phi):
        base, dens = self.fields(phi)
        ok = np.all(dens > 0) and np.all(np.isfinite(dens))
        if base is not None:
            ok = ok and np.all(base > 0)
        return bool(ok)

    def jacobian(self, phi):
        m = self.mesh
        base, dens = self.fields(phi)
        J = sp.diags(1.0 / dens) @ m.lap_op
        if self.coupled:
            J = J + sp.diags(m.chain[0] / base) @ m.d1_op
        if self.c_exp:
            J = J - self.c_exp * sp.identity(m.npoints)
        return sp.csr_matrix(J)


@dataclass
class NewtonReport:
    iterations: int = 0
    residual_sup: float = np.inf
    damping_history: list = field(default_factory=list)
    converged: bool = False
    warm_start_gain: Optional[int] = None
    shift: float = 0.0
    osc: Optional[np.ndarray] = None

    def as_dict(self):
        return {"iterations": self.iterations, "residual_sup": self.residual_sup,
                "damping_history": list(self.damping_history), "converged": self.converged}


def residual(p, phi, shift=0.0):
    """F at the potential shift + phi (the derivative terms only see phi)."""
    base, dens = p.fields(phi)
    bad = np.nonzero(~(dens > 0))[0]
    if base is not None and bad.size == 0:
        bad = np.nonzero(~(base > 0))[0]
    if bad.size:
        raise NonAdmissible(f"perturbed metric degenerates at node {bad[0]}", int(bad[0]))
    F = np.log(dens) - p.log_rhs - p.c_exp * (shift + phi)
    if base is not None:
        F = F + np.log(base)
    return F


def _constraint(p, phi):
    norm = p.normalization
    if isinstance(norm, MeanZero):
        return np.asarray(norm.weights, dtype=float), norm.value
    if isinstance(norm, FixedValue):
        row = np.zeros(p.mesh.npoints)
        row[norm.node] = 1.0
        return row, norm.value
    raise ValueError(f"unsupported normalization {norm!r}")


def _newton_step(p, phi, F):
    J = p.jacobian(phi)
    if p.c_exp != 0:
        return solve_banded(BandedSystem.from_matrix(J, -F))
    # bordered system: J has the constants as null space; the extra unknown
    # is a Lagrange multiplier on the constant mode of the residual
    row, _ = _constraint(p, phi)
    n = p.mesh.npoints
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = J.toarray()
    A[:n, n] = 1.0
    A[n, :n] = row
    rhs = np.concatenate([-F, [0.0]])
    return sla.solve(A, rhs)[:n]


def _enforce(p, shift, osc):
    if p.c_exp != 0 or p.normalization is None:
        return shift
    row, target = _constraint(p, osc)
    # adding a constant leaves F unchanged; pin the normalization exactly
    return (target - row @ osc) / row.sum()


def _split(phi0):
    # the potential is kept as a constant plus an oscillating part: at late
    # times the oscillation is exponentially small and must not be rounded
    # against the constant
    if isinstance(phi0, tuple):
        shift, osc = phi0
        return float(shift), np.array(osc, dtype=float)
    phi0 = np.array(phi0, dtype=float)
    shift = float(np.median(phi0))
    return shift, phi0 - shift


def newton_solve(p, phi0, tol=1e-10, max_iter=50, min_damping=2.0**-20, polish=0):
    """Damped Newton; phi0 is an array or a (shift, osc) pair.

    polish > 0 takes up to that many extra full steps after convergence,
    kept only while they lower the residual (drives it to the roundoff floor).
    """
    shift, osc = _split(phi0)
    shift = _enforce(p, shift, osc)
    if not p.admissible(osc):
        raise NonAdmissible("initial guess is not admissible")
    F = residual(p, osc, shift)
    r = float(np.abs(F).max())
    report = NewtonReport(residual_sup=r)
    while r > tol:
        if report.iterations >= max_iter:
            raise MaxIterations(f"no convergence in {max_iter} iterations (residual {r:.3e})")
        step = _newton_step(p, osc, F)
        dshift = float(np.median(step))
        dosc = step - dshift
        alpha, seen_admissible = 1.0, False
        while True:
            t_osc = osc + alpha * dosc
            t_shift = _enforce(p, shift + alpha * dshift, t_osc)
            if p.admissible(t_osc):
                seen_admissible = True
                F_trial = residual(p, t_osc, t_shift)
                r_trial = float(np.abs(F_trial).max())
                if r_trial <= (1.0 - 1e-4 * alpha) * r:
                    break
            alpha *= 0.5
            if alpha < min_damping:
                if not seen_admissible:
                    raise NonAdmissibleBasin("every damped step leaves the admissible cone")
                raise LineSearchStall(f"damping fell below {min_damping:g} at residual {r:.3e}")
        shift, osc, F, r = t_shift, t_osc, F_trial, r_trial
        report.iterations += 1
        report.damping_history.append(alpha)
        report.residual_sup = r
    report.converged = True
    for _ in range(polish):
        step = _newton_step(p, osc, F)
        dshift = float(np.median(step))
        t_osc = osc + (step - dshift)
        t_shift = _enforce(p, shift + dshift, t_osc)
        if not p.admissible(t_osc):
            break
        F_trial = residual(p, t_osc, t_shift)
        r_trial = float(np.abs(F_trial).max())
        if r_trial >= r:
            break
        shift, osc, F, r = t_shift, t_osc, F_trial, r_trial
        report.residual_sup = r
    report.shift, report.osc = shift, osc
    return shift + osc, report


def continuation_step(prev, p_next, tol=1e-10, max_iter=50, compare_cold=False, polish=0):
    """Warm-started solve; optionally records the iteration gain over phi = 0."""
    phi, report = newton_solve(p_next, prev, tol, max_iter, polish=polish)
    if compare_cold:
        try:
            _, cold = newton_solve(p_next, np.zeros(p_next.mesh.npoints), tol, max_iter)
            report.warm_start_gain = cold.iterations - report.iterations
        except Exception:
            report.warm_start_gain = None
    return phi, report
