"""Measurements of the a priori estimates and convergence statements along the path.

All quantities are evaluated at the mesh nodes.  For the symmetric models
every fiber is the same and every point of the base is equivalent, so the
nodes already realize all suprema and infima.
"""
from dataclasses import astuple, dataclass, fields
from math import pi

import numpy as np

from .errors import HypothesisFailed, InsufficientData, PreconditionViolated

CSV_FIELDS = ("t,sup_phi,inf_phi,vol_ratio_min,vol_ratio_max,tr_chi_sup,fiber_osc_scaled,"
              "trace_equiv_low,trace_equiv_high,l1_phi_minus_psi,c0_phi_minus_psi,phi_dot_sup,"
              "tr_omegaY_minus_k,fiber_c1_norm,fiber_c0_dist,global_c0_dist,fiber_diam,"
              "base_diam,newton_iters,residual").split(",")


@dataclass(frozen=True)
class DiagnosticsRow:
    t: float
    sup_phi: float
    inf_phi: float
    vol_ratio_min: float
    vol_ratio_max: float
    tr_chi_sup: float
    fiber_osc_scaled: float
    trace_equiv_low: float
    trace_equiv_high: float
    l1_phi_minus_psi: float
    c0_phi_minus_psi: float
    phi_dot_sup: float
    tr_omegaY_minus_k: float
    fiber_c1_norm: float
    fiber_c0_dist: float
    global_c0_dist: float
    fiber_diam: float
    base_diam: float
    newton_iters: int
    residual: float

    def values(self):
        return astuple(self)

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def check(self):
        vals = np.array(self.values(), dtype=float)
        return bool(np.all(np.isfinite(vals)) and self.sup_phi >= self.inf_phi
                    and self.trace_equiv_low <= 1.0 + 1e-12 <= self.trace_equiv_high + 2e-12)


_GL_THETA, _GL_W = np.polynomial.legendre.leggauss(64)


def fiber_diameter(mesh, density):
    """Length of a meridian of the fiber metric, pole to pole."""
    theta = 0.5 * pi * (_GL_THETA + 1.0)
    x = np.sin(0.5 * theta) ** 2
    vals = mesh.interpolate_many(density, x)
    return float(0.5 * pi * _GL_W @ np.sqrt(np.maximum(vals, 0.0) / (2.0 * mesh.a)))


def base_diameter(base):
    """Diameter of the base sphere B omega_FS, maximized over the fiber."""
    return float(pi * np.sqrt(np.max(base) / 2.0))


def matrix_closeness(A, eps):
    """Hilbert-Schmidt norm of A - I for A with tr A <= N + eps and det A >= 1 - eps."""
    A = np.asarray(A)
    n = A.shape[0]
    if A.shape != (n, n) or not np.allclose(A, A.conj().T, rtol=0, atol=1e-12):
        raise PreconditionViolated("A must be a square Hermitian matrix")
    ev = np.linalg.eigvalsh(A)
    slack = 1e-12 * max(1.0, n)
    if ev.min() <= 0:
        raise PreconditionViolated("A is not positive definite")
    if ev.sum() > n + eps + slack:
        raise PreconditionViolated(f"tr A = {ev.sum():.6g} exceeds N + eps")
    if np.prod(ev) < 1 - eps - slack:
        raise PreconditionViolated(f"det A = {np.prod(ev):.6g} below 1 - eps")
    return float(np.linalg.norm(A - np.eye(n)))


def hat_comparison(state, limit, path):
    """omega(t) against e^{-t} omega_bar_0 + (1 - e^{-t}) f*omega_Y at every node.

    Returns (sup of ||A - I||_HS, sup entrywise distance, sup sqrt(eps)), where
    A = diag(B / B_hat, Phi / Phi_hat) and eps is the smallest admissible value
    of the trace/determinant premise.
    """
    e = np.exp(-state.t)
    b_hat = e * limit.omega_bar.base + (1 - e) * limit.Y
    d_hat = e * limit.omega_bar.density
    lb, lf = state.base / b_hat, state.density / d_hat
    hs, ent, root = 0.0, 0.0, 0.0
    for p, q in zip(lb, lf):
        eps = max(p + q - 2.0, 1.0 - p * q, 0.0)
        hs = max(hs, matrix_closeness(np.diag([p, q]), eps))
        ent = max(ent, abs(p - 1), abs(q - 1))
        root = max(root, np.sqrt(eps))
    return hs, ent, root


def local_P(state, limit, path):
    """P = e^{phi/(1 - e^{-t}) - psi} Y / B - 1 on the fiber.

    Equal to e^t Phi / Phi_bar - 1 by the path equation, so it has zero mean
    against omega_bar_0 on every fiber.
    """
    c = path.coefficient(state.t)
    shift, osc = state.parts
    return np.exp(c * (shift + osc) - limit.psi_value) * limit.Y / state.base - 1.0


def measure(state, limit, path):
    m = path.mesh
    x = m.nodes
    t, e = state.t, np.exp(-state.t)
    u0 = path.u0
    shift, osc = state.parts
    phi = shift + osc
    base, dens = state.base, state.density
    ref = path.reference(t)
    h = path.volume.log_density

    vol = 2 * m.a * base * dens / np.exp(h - t)
    w0 = m.weights * u0.density
    osc_mean = w0 @ osc / w0.sum()
    # the constant shift cancels in phi - psi only up to rounding of psi
    diff = (shift - limit.psi_value) + osc
    eh = m.weights * np.exp(h)
    lb, lf = base / ref.base, dens / ref.density
    g = dens / (e * u0.density)
    grad = np.sqrt(2 * m.a * x * (1 - x) * m.diff(g) ** 2 / u0.density)
    Y = limit.Y
    glob = np.sqrt(((base - Y) / u0.base) ** 2 + (dens / u0.density) ** 2)
    tr_Y = (Y / base - 1.0)
    return DiagnosticsRow(
        t=float(t), sup_phi=float(phi.max()), inf_phi=float(phi.min()),
        vol_ratio_min=float(vol.min()), vol_ratio_max=float(vol.max()),
        tr_chi_sup=float((path.spec.kappa / base).max()),
        fiber_osc_scaled=float(np.abs(osc - osc_mean).max() / e),
        trace_equiv_low=float(min(lb.min(), lf.min())),
        trace_equiv_high=float(max(lb.max(), lf.max())),
        l1_phi_minus_psi=float(eh @ np.abs(diff) / eh.sum()),
        c0_phi_minus_psi=float(np.abs(diff).max()),
        phi_dot_sup=float(np.abs(state.phi_dot).max()),
        tr_omegaY_minus_k=float(tr_Y[np.argmax(np.abs(tr_Y))]),
        fiber_c1_norm=float(np.abs(g).max() + grad.max()),
        fiber_c0_dist=float((np.abs(dens / e - limit.omega_bar.density) / u0.density).max()),
        global_c0_dist=float(glob.max()),
        fiber_diam=fiber_diameter(m, dens),
        base_diam=base_diameter(base),
        newton_iters=int(state.report.iterations),
        residual=float(state.report.residual_sup))


def mean_zero_decay_check(P, grad_bound, mean_zero, upper_G, n=2, tol=1e-8):
    """Check sup |P| <= C G^{1/(2n+1)} on a time series and fit C.

    P: list of (t, values) on the fiber nodes; grad_bound: (list of sup |grad P|,
    bound A); mean_zero: list of fiber integrals of P; upper_G: list of G(t).
    """
    ts = np.array([t for t, _ in P], dtype=float)
    sups = np.array([np.abs(v).max() for _, v in P])
    tops = np.array([np.max(v) for _, v in P])
    grads, A = grad_bound
    G = np.asarray(upper_G, dtype=float)
    if len(G) != len(ts) or len(grads) != len(ts) or len(mean_zero) != len(ts):
        raise HypothesisFailed("series lengths differ")
    if np.any(np.asarray(grads) > A):
        raise HypothesisFailed(f"(a) gradient bound A={A} violated")
    scale = max(1.0, sups.max())
    if np.any(np.abs(mean_zero) > tol * scale):
        raise HypothesisFailed("(b) P does not have zero fiber mean")
    if np.any(G < 0) or np.any(tops > G + tol * scale):
        raise HypothesisFailed("(c) sup P exceeds G(t)")
    if len(G) > 1 and not G[-1] < G[0] and G.max() > 0:
        raise HypothesisFailed("(c) G(t) does not tend to zero")
    power = 1.0 / (2 * n + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(sups > 0, sups / G ** power, 0.0)
    C = float(np.max(ratio)) if ratio.size else 0.0
    return {"passes": bool(np.isfinite(C)), "C": C, "exponent": power,
            "t": ts.tolist(), "sup_P": sups.tolist()}


def fit_decay(series, t_min=2.0):
    """Fit value ~ C e^{-rate t} and value ~ C t^{-rate}; return the better fit."""
    pts = [(float(t), abs(float(v))) for t, v in series if t >= t_min]
    if len(pts) < 8:
        raise InsufficientData(f"need at least 8 samples with t >= {t_min}, got {len(pts)}")
    t = np.array([p[0] for p in pts])
    v = np.array([p[1] for p in pts])
    if np.all(v == 0):
        return float("inf"), 0.0, {"model": "zero", "r2": 1.0, "decaying": True}
    floor = v[v > 0].min() if np.any(v > 0) else 1e-300
    y = np.log(np.maximum(v, floor))
    best = None
    for model, s in (("exponential", t), ("power", np.log(t))):
        X = np.vstack([np.ones_like(s), -s]).T
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        ss = float(((y - X @ coef) ** 2).sum())
        tot = float(((y - y.mean()) ** 2).sum())
        r2 = 1.0 - ss / tot if tot > 0 else 1.0
        if best is None or r2 > best[2]["r2"] + 1e-12:
            best = (float(coef[1]), float(np.exp(coef[0])), {"model": model, "r2": r2})
    rate, const, q = best
    q["decaying"] = bool(rate > 1e-6 and v[-1] < v[0])
    return rate, const, q


def asymptotic_rate(series, tail=8):
    """log-slope of the last `tail` samples (exponential model)."""
    t = np.array([p[0] for p in series[-tail:]], dtype=float)
    v = np.abs(np.array([p[1] for p in series[-tail:]], dtype=float))
    return float(-np.polyfit(t, np.log(v), 1)[0])


def monotone_decreasing(values, jitter=0.05):
    v = np.abs(np.asarray(values, dtype=float))
    return bool(np.all(v[1:] <= (1.0 + jitter) * v[:-1]))
