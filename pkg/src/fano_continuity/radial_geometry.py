"""Cohomogeneity-one Kähler metrics on the two model fibrations.

Both models are CP^1-bundles over CP^1 and every metric we handle is
invariant under a group acting with one-dimensional orbit space.  A metric
is stored through a radial potential u(rho) on the compact coordinate
x = e^{a rho}/(1 + e^{a rho}):

* Hirzebruch H_a, seen as (C^2 \\ 0)/Z_a compactified, rho = log|z|^2.
  omega = u'(rho) f*omega_FS + u''(rho) i d rho ^ dbar rho, so the base
  eigenvalue (against f*omega_FS) is B = u' and the fiber density is u''.
* CP^1 x CP^1, rho = log|w|^2 on the fiber factor.  The base coefficient B
  is a constant and u is the fiber potential only.

Writing u'' = a x (1 - x) * Phi, the "reduced density" Phi is smooth and
positive up to x = 0 and x = 1; all solvers work with (B, Phi).  In these
units omega^2 = 2 a B Phi * mu with the smooth reference volume
mu = x(1-x) f*omega_FS ^ i d rho ^ dbar rho.

omega_FS is normalized by Ric(omega_FS) = 2 omega_FS, area 2 pi.
"""
from dataclasses import dataclass, replace
from math import pi
from typing import Callable, Optional

import numpy as np

from .errors import (DerivativeNoise, InvalidModel, NonAdmissible,
                     QuadratureDivergence)
from .mesh import Mesh, build_mesh

HIRZEBRUCH = "hirzebruch"
PRODUCT = "product"


@dataclass(frozen=True)
class ModelSpec:
    """Fibration model and the class data of the initial metric.

    For Hirzebruch H_a, [b0, binf] is the moment interval of omega_0 (areas
    of the zero and infinity sections over 2 pi).  For the product it is the
    moment interval of the fiber factor; the base coefficient of omega_0 is
    then kappa + 2 (so that [omega_0] - 2 pi c_1 = f*[kappa omega_FS]).
    """
    model: str = HIRZEBRUCH
    a: int = 1
    b0: float = 2.0
    binf: float = 4.0
    kappa: float = 1.0
    omega_gauge: float = 1.0
    n: int = 2
    k: int = 1
    T: float = 1.0

    def __post_init__(self):
        if self.model not in (HIRZEBRUCH, PRODUCT):
            raise InvalidModel(f"unknown model {self.model!r}")
        if int(self.a) != self.a or self.a < 1:
            raise InvalidModel("a must be an integer >= 1")
        if self.model == PRODUCT and self.a != 1:
            raise InvalidModel("the product model uses a = 1")
        if not self.b0 < self.binf:
            raise InvalidModel(f"need b0 < binf, got {self.b0} >= {self.binf}")
        if self.kappa <= 0:
            raise InvalidModel("kappa must be positive")
        if self.omega_gauge <= 0:
            raise InvalidModel("omega_gauge must be positive")
        if self.n - self.k != 1:
            raise InvalidModel("only CP^1 fibers (n - k = 1) are supported")
        if self.model == HIRZEBRUCH and self.b0 <= 0:
            raise InvalidModel("b0 must be positive for a Kähler class on H_a")

    @classmethod
    def hirzebruch(cls, a=1, kappa=1.0, omega_gauge=1.0):
        """The H_a class collapsing exactly at T = 1 onto kappa omega_FS."""
        b0 = kappa + 2.0 - a
        return cls(HIRZEBRUCH, a, b0, b0 + 2.0 * a, kappa, omega_gauge)

    @classmethod
    def product(cls, kappa=1.0, omega_gauge=4.0, b0=0.0):
        return cls(PRODUCT, 1, b0, b0 + 2.0, kappa, omega_gauge)

    @property
    def coupled(self):
        return self.model == HIRZEBRUCH

    @property
    def base_coeff0(self):
        """Base coefficient of omega_0 (product model only)."""
        return self.kappa + 2.0

    def ricci_endpoints(self):
        """Moment endpoints of 2 pi c_1(X) (base coefficient for the product)."""
        if self.coupled:
            return 2.0 - self.a, 2.0 + self.a
        return 0.0, 2.0

    def class_defect(self):
        """Distance of [omega_0] - 2 pi c_1 from a pulled-back base class.

        Zero iff the fiber class dies exactly at T = 1 and the limiting class
        is f*[kappa omega_FS].
        """
        if self.coupled:
            r0, r1 = self.ricci_endpoints()
            return max(abs(self.b0 - r0 - self.kappa), abs(self.binf - r1 - self.kappa))
        return abs(self.binf - self.b0 - 2.0)

    def make_mesh(self, npoints):
        return build_mesh(npoints, self.a)


@dataclass(frozen=True)
class RadialPotential:
    """Radial potential sampled on a mesh.

    values: u at the nodes; d1: u'(rho); density: Phi = u''/(a x(1-x)).
    base_coeff is None for the Hirzebruch ansatz (B = u') and the constant
    base coefficient for the product model.  `exact`, when present, maps an
    array of rho to (u, u', u'') in closed form.
    """
    mesh: Mesh
    values: np.ndarray
    d1: np.ndarray
    density: np.ndarray
    tau0: float
    tauinf: float
    base_coeff: Optional[float] = None
    exact: Optional[Callable] = None

    @property
    def d2(self):
        return self.mesh.chain[0] * self.density

    @property
    def coupled(self):
        return self.base_coeff is None

    @property
    def base(self):
        if self.coupled:
            return self.d1
        return np.full(self.mesh.npoints, float(self.base_coeff))

    def perturb(self, phi):
        """u + phi for a smooth grid function phi(x)."""
        m = self.mesh
        return replace(self, values=self.values + phi, d1=self.d1 + m.drho(phi),
                       density=self.density + m.lap(phi), exact=None)

    def combine(self, scale, kappa_shift=0.0):
        """scale * u + kappa_shift * (pulled-back base potential)."""
        ex = None
        if self.exact is not None:
            def ex(rho, _e=self.exact):
                u, u1, u2 = _e(rho)
                return scale * u + kappa_shift * rho, scale * u1 + kappa_shift, scale * u2
        if self.coupled:
            return replace(self, values=scale * self.values + kappa_shift * self.mesh.rho,
                           d1=scale * self.d1 + kappa_shift, density=scale * self.density,
                           tau0=scale * self.tau0 + kappa_shift,
                           tauinf=scale * self.tauinf + kappa_shift, exact=ex)
        return replace(self, values=scale * self.values, d1=scale * self.d1,
                       density=scale * self.density, tau0=scale * self.tau0,
                       tauinf=scale * self.tauinf,
                       base_coeff=scale * self.base_coeff + kappa_shift, exact=None)

    def derivs_at(self, rho):
        """(u', u'') at arbitrary rho, exact when available."""
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        if self.exact is not None:
            _, u1, u2 = self.exact(rho)
            return u1, u2
        a = self.mesh.a
        x = 1.0 / (1.0 + np.exp(-a * rho))
        u1 = self.mesh.interpolate_many(self.d1, x)
        u2 = a * x * (1.0 - x) * self.mesh.interpolate_many(self.density, x)
        return u1, u2


@dataclass(frozen=True)
class MomentProfile:
    tau0: float
    tauinf: float
    tau: np.ndarray
    phi: np.ndarray
    slope0: float
    slopeinf: float


@dataclass(frozen=True)
class KahlerData:
    fiber_area: float
    zero_section_area: float
    infinity_section_area: float
    total_volume: float


@dataclass(frozen=True)
class FiberMetric:
    """A metric on one CP^1 fiber: density * i d rho ^ dbar rho mod Z_a."""
    mesh: Mesh
    density: np.ndarray

    @property
    def a(self):
        return self.mesh.a

    def integrate(self, g):
        """Integral of g against the fiber area form."""
        return 2.0 * pi / self.a * self.mesh.integrate(np.asarray(g) * self.density)

    @property
    def area(self):
        return self.integrate(np.ones(self.mesh.npoints))

    def average(self, g):
        return self.integrate(g) / self.area


@dataclass(frozen=True)
class AdmissibilityReport:
    min_d1: float
    min_d2: float
    min_density: float
    slope0: float
    slopeinf: float
    tau0: float
    tauinf: float
    admissible: bool


def _reference_exact(a, b0, binf):
    def ex(rho):
        rho = np.asarray(rho, dtype=float)
        x = 1.0 / (1.0 + np.exp(-a * rho))
        u = b0 * rho + (binf - b0) / a * np.logaddexp(0.0, a * rho)
        return u, b0 + (binf - b0) * x, (binf - b0) * a * x * (1.0 - x)
    return ex


def reference_potential(spec, mesh=None, npoints=256):
    """u = b0 rho + ((binf - b0)/a) log(1 + e^{a rho}) on the mesh."""
    if mesh is None:
        mesh = spec.make_mesh(npoints)
    x = mesh.nodes
    a, b0, binf = spec.a, spec.b0, spec.binf
    values = b0 * mesh.rho - (binf - b0) / a * np.log1p(-x)
    base = None if spec.coupled else spec.base_coeff0
    return RadialPotential(mesh, values, b0 + (binf - b0) * x,
                           np.full(mesh.npoints, binf - b0), b0, binf, base,
                           _reference_exact(a, b0, binf))


def potential_from_function(spec, mesh, g, amplitude=1.0):
    """Reference potential plus amplitude * g(x) (a smooth function of x)."""
    return reference_potential(spec, mesh).perturb(amplitude * g(mesh.nodes))


def potential_from_values(mesh, values, base_coeff=None):
    """Wrap arbitrary grid data u(x) as a potential (derivatives by the mesh)."""
    values = np.asarray(values, dtype=float)
    d1 = mesh.drho(values)
    return RadialPotential(mesh, values, d1, mesh.lap(values),
                           _end_value(mesh, d1, 0), _end_value(mesh, d1, 1), base_coeff)


def _end_value(mesh, f, side):
    # quartic extrapolation of grid data to x = 0 or x = 1
    xs = mesh.nodes[:5] if side == 0 else mesh.nodes[-5:]
    fs = f[:5] if side == 0 else f[-5:]
    x = float(side)
    val = 0.0
    for m in range(5):
        others = np.delete(xs, m)
        val += fs[m] * np.prod((x - others) / (xs[m] - others))
    return float(val)


def moment_profile(u):
    """The profile phi(tau) = u''(rho) with tau = u'(rho)."""
    m = u.mesh
    x = m.nodes
    # d phi / d tau = d log u'' / d rho
    dlog = m.a * (1.0 - 2.0 * x) + m.chain[0] * m.diff(np.log(u.density))
    return MomentProfile(u.tau0, u.tauinf, u.d1.copy(), u.d2,
                         _end_value(m, dlog, 0), _end_value(m, dlog, 1))


def _check_admissible(u1, u2):
    bad = np.nonzero((u1 <= 0) | (u2 <= 0))[0]
    if bad.size:
        raise NonAdmissible(f"u' or u'' non-positive at index {bad[0]}", int(bad[0]))


def metric_components(u, z):
    """Complex Hessian g_{i jbar} at z in C^2 \\ 0.

    Hirzebruch ansatz: g = e^{-rho} u' delta_ij + e^{-2 rho} zbar_i z_j (u'' - u').
    Product model: z = (y, w) with base coordinate y and fiber coordinate w.
    """
    z = np.asarray(z, dtype=complex)
    if u.coupled:
        r2 = float(np.vdot(z, z).real)
        if r2 == 0.0:
            raise NonAdmissible("z = 0")
        rho = np.log(r2)
        u1, u2 = (float(v[0]) for v in u.derivs_at(rho))
        _check_admissible(np.array([u1]), np.array([u2]))
        return np.exp(-rho) * u1 * np.eye(2) + np.exp(-2 * rho) * np.outer(z.conj(), z) * (u2 - u1)
    y, w = z
    rho = np.log(abs(w) ** 2)
    _, u2 = (float(v[0]) for v in u.derivs_at(rho))
    _check_admissible(np.array([u.base_coeff]), np.array([u2]))
    return np.diag([u.base_coeff / (1 + abs(y) ** 2) ** 2, u2 / abs(w) ** 2]).astype(complex)


def det_metric(u):
    """Determinant of the complex Hessian at the nodes (radial slice)."""
    _check_admissible(u.base, u.d2)
    if u.coupled:
        return np.exp(-2 * u.mesh.rho) * u.d1 * u.d2
    return u.base_coeff * u.d2 * np.exp(-u.mesh.rho)


def ricci_profile(u, noise_floor=1e-10):
    """Ricci potential r with Ric(omega_u) = i ddbar r, as a RadialPotential.

    Hirzebruch: r = 2 rho - log u' - log u''.  Product: the fiber potential
    rho - log u'' with base coefficient 2.
    """
    m = u.mesh
    x = m.nodes
    if u.density.min() <= noise_floor * np.abs(u.density).max():
        raise DerivativeNoise("moment density below the resolvable threshold")
    _check_admissible(u.base, u.d2)
    s = m.chain[0]
    if u.coupled:
        values = 2 * m.rho - np.log(u.d1) - np.log(u.d2)
        r1 = 2.0 - m.a * (1 - 2 * x) - s * (m.diff(np.log(u.d1)) + m.diff(np.log(u.density)))
        ends = (2.0 - m.a, 2.0 + m.a)
        base = None
    else:
        values = m.rho - np.log(u.d2)
        r1 = 1.0 - m.a * (1 - 2 * x) - s * m.diff(np.log(u.density))
        ends = (1.0 - m.a, 1.0 + m.a)
        base = 2.0
    return RadialPotential(m, values, r1, m.diff(r1), ends[0], ends[1], base)


def class_pairings(u, spec=None):
    m = u.mesh
    dens = u.density
    if not np.all(np.isfinite(dens)) or not np.all(np.isfinite(u.d1)):
        raise QuadratureDivergence("non-finite integrand")
    edge = max(np.abs(dens[:3]).max(), np.abs(dens[-3:]).max())
    if edge > 1e6 * max(np.median(np.abs(dens)), 1e-300):
        raise QuadratureDivergence("fiber density fails the boundary-decay check")
    a = m.a
    fiber = 2 * pi / a * m.integrate(dens)
    if u.coupled:
        s0, s1 = 2 * pi * u.tau0, 2 * pi * u.tauinf
        # omega^2/2 = B u'' over the orbit space, B = u'
        vol = (2 * pi) ** 2 / a * m.integrate(u.d1 * dens)
    else:
        s0 = s1 = 2 * pi * u.base_coeff
        vol = (2 * pi) ** 2 * u.base_coeff * m.integrate(dens)
    return KahlerData(fiber, s0, s1, vol)


def fiber_restriction(u, spec=None):
    """omega restricted to a fiber; the same for every base point by symmetry."""
    _check_admissible(np.ones(1), u.density)
    return FiberMetric(u.mesh, u.density.copy())


def positivity_check(u):
    m = u.mesh
    prof = None
    try:
        prof = moment_profile(u) if u.density.min() > 0 else None
    except FloatingPointError:
        prof = None
    ok = bool(u.base.min() > 0 and u.density.min() > 0 and u.tau0 < u.tauinf
              and np.all(np.isfinite(u.density)))
    if u.coupled:
        ok = ok and u.tau0 > 0 and u.d1.min() > 0
    return AdmissibilityReport(float(u.d1.min()), float(u.d2.min()), float(u.density.min()),
                               prof.slope0 if prof else float("nan"),
                               prof.slopeinf if prof else float("nan"),
                               float(u.tau0), float(u.tauinf), ok)
