"""The continuity path omega(t) = omega_0 - (1 - e^{-t}) Ric(omega(t)).

With the reference forms omega_t = e^{-t} omega_0 + (1 - e^{-t}) f*chi and
omega(t) = omega_t + i ddbar phi(t), the path is the scalar equation

    omega(t)^2 = e^{-t} e^{phi / (1 - e^{-t})} Omega,

which in reduced variables reads log(2 a B Phi) - log(Omega/mu) = -t + c phi.
"""
from dataclasses import dataclass
from math import exp, log, pi

import numpy as np

from .errors import (ClassMismatch, FanoContinuityError, NonAdmissible,
                     SmoothnessCheckFailed, StepRefinementExhausted)
from .ma_newton import (CURVE, MeanZero, NewtonReport, ReducedMAProblem,
                        continuation_step, newton_solve)
from .mesh import BandedSystem, solve_banded
from .radial_geometry import (FiberMetric, RadialPotential, positivity_check,
                              reference_potential, ricci_profile)

T_MIN = 0.1


def reparametrize(t_geometric):
    """Geometric time s in [0, 1) of omega = omega_0 - s Ric to t = -log(1 - s)."""
    if not 0.0 <= t_geometric < 1.0:
        raise ValueError(f"geometric time {t_geometric} outside [0, 1)")
    return -np.log1p(-t_geometric)


def standard_schedule(t_start=0.1, t_end=12.0, fine=0.05, coarse=0.25, switch=1.0):
    """Step `fine` below t = switch and `coarse` after it, rounded to 1e-10."""
    early = np.arange(t_start, min(switch, t_end) - 1e-9, fine)
    late = np.arange(max(switch, t_start), t_end + 1e-9, coarse)
    ts = np.unique(np.round(np.concatenate([early, late]), 10))
    if ts[-1] < t_end - 1e-9:
        ts = np.append(ts, t_end)
    return [float(t) for t in ts]


def default_schedule():
    return standard_schedule()


def reference_form(spec, t, u0=None, mesh=None, npoints=256):
    """Potential of omega_t = e^{-t} omega_0 + (1 - e^{-t}) f*chi."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if u0 is None:
        u0 = reference_potential(spec, mesh, npoints)
    ut = u0.combine(exp(-t), -np.expm1(-t) * spec.kappa)
    if not positivity_check(ut).admissible:
        raise NonAdmissible(f"omega_t leaves the Kähler cone at t={t}")
    return ut


@dataclass(frozen=True)
class VolumeForm:
    """Omega through its log density h = log(Omega / mu) on the mesh."""
    mesh: object
    log_density: np.ndarray
    gauge: float
    identity_residual: float

    def density(self):
        return np.exp(self.log_density)

    def euclidean_log_density(self):
        """log of Omega against the Euclidean volume of C^2 (Hirzebruch chart)."""
        m = self.mesh
        x = m.nodes
        return self.log_density + np.log(2 * x * (1 - x)) - 2 * m.rho

    def total(self):
        """Total Omega volume of X."""
        return (2 * pi) ** 2 / self.mesh.a ** 2 * self.mesh.integrate(self.density())

    def rescaled(self, lam):
        return VolumeForm(self.mesh, self.log_density + log(lam), self.gauge * lam,
                          self.identity_residual)


def build_volume_form(spec, gauge=None, u0=None, mesh=None, npoints=256, check_tol=1e-6):
    """Omega with i ddbar log Omega = f*chi - omega_0, up to the constant `gauge`."""
    if gauge is None:
        gauge = spec.omega_gauge
    if gauge <= 0:
        raise ValueError("gauge must be positive")
    if u0 is None:
        u0 = reference_potential(spec, mesh, npoints)
    m = u0.mesh
    x = m.nodes
    ell = spec.b0 + spec.a
    h = log(gauge) + ell * m.rho - u0.values - np.log(x * (1 - x))
    if not np.all(np.isfinite(h)):
        raise SmoothnessCheckFailed("non-finite volume density")
    # a smooth h has node-to-node jumps of order 1/N at the ends; a log
    # singularity produces an O(1) slope against log x
    for i0, i1 in ((0, 1), (-1, -2)):
        xa, xb = (x[i0], x[i1]) if i0 == 0 else (1 - x[i0], 1 - x[i1])
        slope = (h[i1] - h[i0]) / log(xb / xa)
        if abs(slope) > 0.05:
            raise SmoothnessCheckFailed(
                f"Omega/mu degenerates at x={'0' if i0 == 0 else '1'} (log slope {slope:.3f})")
    # i ddbar log Omega = f*chi - omega_0 reduces to h' + a(1-2x) + u0' = const
    g = m.drho(h) + m.a * (1 - 2 * x) + u0.d1
    target = spec.kappa + 2.0 if spec.coupled else ell
    res = float(np.abs(g - target).max())
    if res > check_tol:
        raise SmoothnessCheckFailed(f"ddbar identity residual {res:.2e}")
    return VolumeForm(m, h, float(gauge), res)


@dataclass
class PathState:
    t: float
    phi: np.ndarray
    phi_dot: np.ndarray
    omega_profile: RadialPotential
    report: NewtonReport

    @property
    def parts(self):
        """phi as (constant, oscillation); the oscillation is not rounded."""
        return self.report.shift, self.report.osc

    @property
    def base(self):
        return self.omega_profile.base

    @property
    def density(self):
        return self.omega_profile.density


class ContinuityPath:
    """Assembles the path equation for one model, initial metric and Omega."""

    def __init__(self, spec, npoints=256, u0=None, volume=None, tol=1e-10, max_iter=50,
                 polish=0):
        if spec.class_defect() > 1e-12:
            raise ClassMismatch(
                f"[omega_0] - 2 pi c_1(X) is not f*[kappa omega_FS] (defect {spec.class_defect():.3g})")
        self.spec = spec
        self.u0 = u0 if u0 is not None else reference_potential(spec, spec.make_mesh(npoints))
        self.mesh = self.u0.mesh
        self.volume = volume if volume is not None else build_volume_form(spec, u0=self.u0)
        self.tol = tol
        self.max_iter = max_iter
        self.polish = polish

    def with_volume(self, volume):
        return ContinuityPath(self.spec, u0=self.u0, volume=volume, tol=self.tol,
                              max_iter=self.max_iter, polish=self.polish)

    def reference(self, t):
        return reference_form(self.spec, t, self.u0)

    def coefficient(self, t):
        return -1.0 / np.expm1(-t)

    def problem(self, t):
        if t <= 0:
            raise ValueError("the path equation needs t > 0")
        ut = self.reference(t)
        log_rhs = self.volume.log_density - t - log(2.0 * self.mesh.a)
        return ReducedMAProblem.from_potential(ut, log_rhs, self.coefficient(t))

    def residual_at(self, t, phi):
        from .ma_newton import residual
        return residual(self.problem(t), phi)

    def phi_dot(self, t, phi, problem=None, shift=0.0):
        """d phi / dt from the t-derivative of the path equation at shift + phi."""
        p = problem or self.problem(t)
        base, dens = p.fields(phi)
        e = exp(-t)
        dbase = -e * (self.u0.base - self.spec.kappa)
        ddens = -e * self.u0.density
        cdot = -e / (1.0 - e) ** 2
        dRdt = dbase / base + ddens / dens + 1.0 - cdot * (shift + phi)
        return solve_banded(BandedSystem.from_matrix(p.jacobian(phi), -dRdt))

    def solve_at(self, t, warm_start=None):
        p = self.problem(t)
        phi0 = np.zeros(self.mesh.npoints) if warm_start is None else warm_start
        phi, report = continuation_step(phi0, p, self.tol, self.max_iter, polish=self.polish)
        shift, osc = report.shift, report.osc
        return PathState(t, phi, self.phi_dot(t, osc, p, shift),
                         self.reference(t).perturb(osc), report)

    def march(self, schedule, sink=None, warm_start=None, max_halvings=10, warm_t=None):
        """Solve along the schedule, warm-starting each step from the last.

        warm_start/warm_t resume from a persisted state; a failed step is
        retried by halving the interval up to `max_halvings` times.
        """
        schedule = [float(t) for t in schedule]
        if any(b <= a for a, b in zip(schedule, schedule[1:])):
            raise ValueError("schedule must be strictly increasing")
        if schedule and schedule[0] < T_MIN - 1e-12:
            raise ValueError(f"schedule must start at t >= {T_MIN}")
        states = []
        phi, t_prev = warm_start, warm_t
        for t in schedule:
            state = self._reach(t_prev, t, phi, max_halvings)
            states.append(state)
            if sink is not None:
                sink(state)
            phi, t_prev = state.parts, t
        return states

    def _reach(self, t_prev, t, phi, max_halvings):
        try:
            return self.solve_at(t, phi)
        except FanoContinuityError as exc:
            if t_prev is None:
                raise
            last = exc
        for halving in range(1, max_halvings + 1):
            sub = np.linspace(t_prev, t, 2 ** halving + 1)[1:]
            try:
                cur = phi
                for s in sub:
                    state = self.solve_at(float(s), cur)
                    cur = state.parts
                return state
            except FanoContinuityError as exc:
                last = exc
        raise StepRefinementExhausted(f"could not reach t={t}: {last}")


def solve_at(path, t, warm_start=None):
    return path.solve_at(t, warm_start)


def march(path, schedule, sink=None):
    return path.march(schedule, sink)


def ricci_eigenvalues(profile):
    """Eigenvalues of Ric(omega) relative to omega in the base and fiber directions."""
    ric = ricci_profile(profile)
    return ric.base / profile.base, ric.density / profile.density


def ricci_bound_check(state):
    """min eigenvalue of Ric(omega(t)) + 2 omega(t) relative to omega(t)."""
    lb, lf = ricci_eigenvalues(state.omega_profile)
    return float(min(lb.min(), lf.min()) + 2.0)


# normalized path on the base CP^1

@dataclass
class AubinState:
    t: float
    phi: np.ndarray
    density: np.ndarray
    report: NewtonReport
    ke_residual: float


def rescale_to_anticanonical(metric):
    """Scale a CP^1 metric into 2 pi c_1(CP^1) (area 4 pi)."""
    return FiberMetric(metric.mesh, metric.density * (4 * pi / metric.area))


def _curve_potential(mesh, density):
    return RadialPotential(mesh, np.zeros(mesh.npoints), np.zeros(mesh.npoints),
                           np.asarray(density, dtype=float), 0.0, 2.0, base_coeff=1.0)


def ke_residual(mesh, density):
    """sup |Ric(omega) - omega| / omega for a metric on CP^1."""
    ric = ricci_profile(_curve_potential(mesh, density))
    return float(np.abs(ric.density / density - 1.0).max())


def aubin_restart(base_metric, schedule, tol=1e-12, max_iter=50):
    """Ric(omega) = omega_0/t + (1 - 1/t) omega on CP^1 for t in the schedule.

    Writing omega = omega_0 + i ddbar phi and Ric(omega_0) - omega_0 = i ddbar h0
    with the exponential normalization, the path is
    log(omega/omega_0) = h0 - (1 - 1/t) phi.
    """
    from .limit_pipeline import fiber_ricci_potential

    schedule = [float(t) for t in schedule]
    if not schedule or min(schedule) < 1.0:
        raise ValueError("schedule must lie in [1, inf)")
    m = base_metric.mesh
    if abs(base_metric.area - 4 * pi) > 1e-9 * 4 * pi:
        raise ClassMismatch("base metric is not in 2 pi c_1(CP^1); rescale first")
    dens0 = base_metric.density
    h0, _ = fiber_ricci_potential(base_metric)
    w = m.weights * dens0
    states = []
    phi = np.zeros(m.npoints)
    for t in schedule:
        c = 1.0 / t - 1.0
        norm = MeanZero(w / w.sum()) if c == 0 else None
        p = ReducedMAProblem(m, dens0, np.log(dens0) + h0, c, normalization=norm)
        phi, report = newton_solve(p, phi, tol, max_iter)
        dens = dens0 + m.lap(phi)
        states.append(AubinState(t, phi, dens, report, ke_residual(m, dens)))
    return states
