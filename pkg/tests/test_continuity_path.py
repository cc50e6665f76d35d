import numpy as np
import pytest

from fano_continuity.continuity_path import (ContinuityPath, aubin_restart, build_volume_form,
                                             default_schedule, reparametrize,
                                             rescale_to_anticanonical, ricci_bound_check,
                                             standard_schedule)
from fano_continuity.errors import ClassMismatch, SmoothnessCheckFailed
from fano_continuity.harness_cli import product_oracle
from fano_continuity.radial_geometry import FiberMetric, ModelSpec, reference_potential


def test_reparametrize():
    assert reparametrize(0.0) == 0.0
    assert abs(reparametrize(1 - np.exp(-2.0)) - 2.0) < 1e-12
    with pytest.raises(ValueError):
        reparametrize(1.0)


def test_schedules():
    s = default_schedule()
    assert s[0] == 0.1 and s[-1] == 12.0
    assert np.all(np.diff(s) > 0)
    assert abs(s[1] - s[0] - 0.05) < 1e-12 and abs(s[-1] - s[-2] - 0.25) < 1e-12
    assert standard_schedule(0.1, 1.3)[-1] == 1.3


def test_inconsistent_class_rejected():
    with pytest.raises(ClassMismatch):
        ContinuityPath(ModelSpec(b0=1.0, binf=3.0), npoints=64)


def test_volume_form_identity(hirzebruch):
    vol = build_volume_form(hirzebruch, npoints=128)
    assert vol.identity_residual < 1e-8
    assert abs(vol.rescaled(2.0).total() - 2 * vol.total()) < 1e-10 * vol.total()


def test_volume_form_detects_log_singularity(hirzebruch):
    # ell shifted by one makes Omega/mu behave like x^{1} at the zero section
    bad = ModelSpec("hirzebruch", 1, 3.0, 5.0, 2.0)
    u = reference_potential(hirzebruch, npoints=128)
    with pytest.raises(SmoothnessCheckFailed):
        build_volume_form(bad, u0=u)


@pytest.mark.parametrize("gauge", [4.0, 8.0, 1.0])
def test_product_oracle(gauge):
    spec = ModelSpec.product(omega_gauge=gauge)
    path = ContinuityPath(spec, npoints=64)
    states = path.march([0.1, 0.5, 1.0, 3.0])
    for s in states:
        assert np.abs(s.phi - product_oracle(spec, s.t)).max() < 1e-9


def test_phi_dot_matches_finite_difference(hirzebruch):
    path = ContinuityPath(hirzebruch, npoints=64, tol=1e-12)
    t, dt = 1.0, 1e-4
    lo, mid, hi = path.march([t - dt, t, t + dt])
    fd = (hi.phi - lo.phi) / (2 * dt)
    assert np.abs(mid.phi_dot - fd).max() < 1e-6


def test_hirzebruch_short_march_and_ricci_bound(hirzebruch):
    path = ContinuityPath(hirzebruch, npoints=64)
    seen = []
    states = path.march(standard_schedule(0.1, 2.0), sink=seen.append)
    assert len(seen) == len(states)
    assert all(s.report.converged for s in states)
    assert min(ricci_bound_check(s) for s in states) > 0


def test_resume_from_parts_matches_cold(hirzebruch):
    path = ContinuityPath(hirzebruch, npoints=64)
    full = path.march([0.1, 0.2, 0.3, 0.4])
    tail = path.march([0.3, 0.4], warm_start=full[1].parts, warm_t=0.2)
    assert np.abs(tail[-1].phi - full[-1].phi).max() < 1e-9


def test_aubin_requires_anticanonical_area(product):
    u = reference_potential(product, npoints=64)
    small = FiberMetric(u.mesh, 0.5 * u.density)
    with pytest.raises(ClassMismatch):
        aubin_restart(small, [1.0])
    fixed = rescale_to_anticanonical(small)
    st = aubin_restart(fixed, [1.0, 5.0])
    assert st[-1].ke_residual < 1e-9
