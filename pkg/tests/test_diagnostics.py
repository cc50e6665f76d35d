import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fano_continuity.continuity_path import ContinuityPath
from fano_continuity.diagnostics import (CSV_FIELDS, DiagnosticsRow, fiber_diameter, fit_decay,
                                         local_P, matrix_closeness, mean_zero_decay_check,
                                         measure, monotone_decreasing)
from fano_continuity.errors import HypothesisFailed, InsufficientData, PreconditionViolated
from fano_continuity.limit_pipeline import build_limit
from fano_continuity.radial_geometry import fiber_restriction, reference_potential


def test_csv_header_matches_row():
    assert tuple(CSV_FIELDS) == tuple(DiagnosticsRow.__dataclass_fields__)


def test_matrix_closeness_identity_and_preconditions():
    assert matrix_closeness(np.eye(3), 0.0) == 0.0
    with pytest.raises(PreconditionViolated):
        matrix_closeness(np.diag([2.0, 1.0]), 0.1)
    with pytest.raises(PreconditionViolated):
        matrix_closeness(np.array([[1.0, 0.5], [0.0, 1.0]]), 1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-4, 0.3))
def test_matrix_closeness_sqrt_scaling(s):
    A = np.diag([1 + s, 1 - s])
    eps = 1 - np.prod(np.diag(A))
    norm = matrix_closeness(A, eps)
    assert norm <= 2.0 * np.sqrt(2 * eps)


def test_fit_decay_exponential_and_power():
    t = np.linspace(2, 12, 30)
    rate, C, q = fit_decay(list(zip(t, 3 * np.exp(-0.7 * t))))
    assert q["model"] == "exponential" and abs(rate - 0.7) < 1e-10 and abs(C - 3) < 1e-8
    rate, C, q = fit_decay(list(zip(t, 2 * t ** -1.5)))
    assert q["model"] == "power" and abs(rate - 1.5) < 1e-10
    _, _, q = fit_decay(list(zip(t, np.zeros_like(t))))
    assert q["model"] == "zero"
    with pytest.raises(InsufficientData):
        fit_decay([(3.0, 1.0)] * 4)
    rate, _, q = fit_decay(list(zip(t, np.exp(0.1 * t))))
    assert not q["decaying"]


def test_mean_zero_decay_check():
    t = np.linspace(1, 10, 10)
    x = np.linspace(-1, 1, 21)
    G = np.exp(-t)
    P = [(s, g * x) for s, g in zip(t, G)]
    out = mean_zero_decay_check(P, (list(G), 1.0), [0.0] * 10, list(G))
    assert out["passes"] and out["exponent"] == pytest.approx(0.2)
    assert out["C"] <= 1.0
    with pytest.raises(HypothesisFailed):
        mean_zero_decay_check(P, (list(G), 1e-3), [0.0] * 10, list(G))
    with pytest.raises(HypothesisFailed):
        mean_zero_decay_check(P, (list(G), 1.0), [0.1] * 10, list(G))
    with pytest.raises(HypothesisFailed):
        mean_zero_decay_check(P, (list(G), 1.0), [0.0] * 10, list(0.5 * G))


def test_monotone():
    assert monotone_decreasing([3, 2, 2.05, 1])
    assert not monotone_decreasing([1, 2])


def test_round_fiber_diameter(product):
    u = reference_potential(product, npoints=128)
    # FS with area 4 pi is the unit sphere: meridian length pi
    assert abs(fiber_diameter(u.mesh, fiber_restriction(u).density) - np.pi) < 1e-10


def test_measure_row_and_P_mean_zero(hirzebruch):
    path = ContinuityPath(hirzebruch, npoints=128)
    lim = build_limit(hirzebruch, path.u0, path.volume)
    state = path.march([0.1, 0.5, 1.0, 2.0])[-1]
    row = measure(state, lim, path)
    assert row.check()
    P = local_P(state, lim, path)
    w = path.mesh.weights * lim.omega_bar.density
    assert abs(w @ P) < 1e-8 * np.abs(P).max()
