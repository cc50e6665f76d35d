"""Cell-centered grids on the compactified radial coordinate x in (0, 1).

The radial variable rho on the total space and the compact coordinate are
related by x = e^{a rho} / (1 + e^{a rho}), so both degenerate ends of the
cohomogeneity-one metrics sit at finite x.  All differential operators are
4th-order finite differences (5-point central, 6-point one-sided near the
ends) stored as sparse matrices with a banded profile.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lapack


class InvalidSize(ValueError):
    pass


class OutOfRange(ValueError):
    pass


class SingularMatrix(np.linalg.LinAlgError):
    def __init__(self, index, msg=None):
        self.index = index
        super().__init__(msg or f"singular matrix at pivot {index}")


def fd_weights(offsets, order):
    """Finite-difference weights for the `order`-th derivative on unit spacing."""
    offsets = np.asarray(offsets, dtype=float)
    m = len(offsets)
    V = np.vander(offsets, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    return np.linalg.solve(V, rhs)


def _stencil_matrix(n, h, order):
    rows, cols, vals = [], [], []
    for i in range(n):
        if i < 2:
            idx = np.arange(0, 6)
        elif i > n - 3:
            idx = np.arange(n - 6, n)
        else:
            idx = np.arange(i - 2, i + 3)
        w = fd_weights(idx - i, order) / h**order
        rows.extend([i] * len(idx))
        cols.extend(idx)
        vals.extend(w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _conservative_weights(lap):
    # left null vector of the discrete degenerate operator, normalized to
    # unit mass: w @ (lap @ f) == 0 for every f, a discrete divergence theorem
    A = lap.toarray().T
    A[-1] = 1.0
    rhs = np.zeros(A.shape[0])
    rhs[-1] = 1.0
    return np.linalg.solve(A, rhs)


@dataclass(frozen=True)
class Mesh:
    npoints: int
    a: float = 1.0
    nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.npoints) != self.npoints or self.npoints < 16:
            raise InvalidSize(f"npoints must be an integer >= 16, got {self.npoints}")
        if self.a <= 0:
            raise InvalidSize("a must be positive")
        x = (np.arange(self.npoints) + 0.5) / self.npoints
        x.setflags(write=False)
        object.__setattr__(self, "nodes", x)

    @property
    def h(self):
        return 1.0 / self.npoints

    @cached_property
    def weights(self):
        """Quadrature weights on (0, 1), 4th order and conservative for lap_op."""
        w = _conservative_weights(self.lap_op)
        w.setflags(write=False)
        return w

    @cached_property
    def d1_op(self):
        return _stencil_matrix(self.npoints, self.h, 1)

    @cached_property
    def d2_op(self):
        return _stencil_matrix(self.npoints, self.h, 2)

    @cached_property
    def rho(self):
        x = self.nodes
        return np.log(x / (1.0 - x)) / self.a

    @cached_property
    def chain(self):
        """(dx/drho, d^2x/drho^2) at the nodes."""
        x = self.nodes
        s = self.a * x * (1.0 - x)
        return s, self.a * s * (1.0 - 2.0 * x)

    @cached_property
    def lap_op(self):
        """Degenerate fiber operator f -> d/dx (a x(1-x) f_x).

        For a radial function f(rho), d^2 f / drho^2 = a x(1-x) * lap_op f,
        i.e. this is the change of the reduced moment density under
        f -> potential + f.
        """
        x = self.nodes
        return self.a * (sp.diags((1.0 - 2.0 * x)) @ self.d1_op
                         + sp.diags(x * (1.0 - x)) @ self.d2_op)

    def lap(self, f):
        # constants are annihilated exactly; subtracting one first keeps the
        # roundoff proportional to the oscillation of f, not its size
        f = np.asarray(f, dtype=float)
        return self.lap_op @ (f - np.median(f))

    def diff(self, f):
        return self.d1_op @ f

    def diff2(self, f):
        return self.d2_op @ f

    def drho(self, f):
        f = np.asarray(f, dtype=float)
        return self.chain[0] * (self.d1_op @ (f - np.median(f)))

    def integrate(self, f):
        return float(self.weights @ f)

    def interpolate(self, f, x):
        """Local quartic (5-node Lagrange) interpolation of grid data."""
        if not 0.0 < x < 1.0:
            raise OutOfRange(f"query {x} outside (0, 1)")
        n = self.npoints
        j = int(np.clip(np.floor(x * n - 0.5) - 1, 0, n - 5))
        idx = np.arange(j, j + 5)
        hit = np.nonzero(np.abs(self.nodes[idx] - x) < 1e-15)[0]
        if hit.size:
            return float(f[idx[hit[0]]])
        xs = self.nodes[idx]
        val = 0.0
        for m in range(5):
            others = np.delete(xs, m)
            val += f[idx[m]] * np.prod((x - others) / (xs[m] - others))
        return float(val)

    def interpolate_many(self, f, xq):
        return np.array([self.interpolate(f, float(q)) for q in np.atleast_1d(xq)])


def build_mesh(npoints, a=1.0):
    return Mesh(npoints, float(a))


@dataclass
class BandedSystem:
    """A matrix in LAPACK band storage (ab[u + i - j, j] = A[i, j])."""
    lower: int
    upper: int
    ab: np.ndarray
    rhs: np.ndarray

    @property
    def bandwidth(self):
        return self.lower + self.upper + 1

    @classmethod
    def from_matrix(cls, A, rhs, lower=None, upper=None):
        A = sp.csr_matrix(A)
        coo = A.tocoo()
        off = coo.col - coo.row
        if upper is None:
            upper = int(max(off.max(initial=0), 0))
        if lower is None:
            lower = int(max(-off.min(initial=0), 0))
        n = A.shape[0]
        ab = np.zeros((lower + upper + 1, n))
        ab[upper + coo.row - coo.col, coo.col] = coo.data
        return cls(lower, upper, ab, np.asarray(rhs, dtype=float))

    def matvec(self, v):
        n = self.ab.shape[1]
        out = np.zeros(n)
        for d in range(-self.lower, self.upper + 1):
            row = self.ab[self.upper - d]
            if d >= 0:
                out[: n - d] += row[d:] * v[d:]
            else:
                out[-d:] += row[: n + d] * v[: n + d]
        return out


def solve_banded(sys):
    """Solve a banded system with LAPACK gbsv (partial pivoting)."""
    l, u, n = sys.lower, sys.upper, sys.ab.shape[1]
    # a structurally zero row is reported before factorization
    for i in range(n):
        lo, hi = max(0, i - l), min(n, i + u + 1)
        cols = np.arange(lo, hi)
        if not np.any(sys.ab[u + i - cols, cols]):
            raise SingularMatrix(i, f"zero row {i}")
    work = np.zeros((2 * l + u + 1, n))
    work[l:] = sys.ab
    _, _, x, info = lapack.dgbsv(l, u, work, np.array(sys.rhs, dtype=float))
    if info > 0:
        raise SingularMatrix(info - 1)
    if info < 0:
        raise ValueError(f"illegal argument {-info} to dgbsv")
    return x
