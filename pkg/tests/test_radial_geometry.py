import numpy as np
import pytest

from fano_continuity.errors import InvalidModel, NonAdmissible
from fano_continuity.radial_geometry import (ModelSpec, _end_value, class_pairings, det_metric,
                                             metric_components, positivity_check,
                                             potential_from_function, reference_potential,
                                             ricci_profile)


def test_invalid_models():
    with pytest.raises(InvalidModel):
        ModelSpec(b0=3.0, binf=2.0)
    with pytest.raises(InvalidModel):
        ModelSpec("product", a=2, b0=0, binf=2)
    with pytest.raises(InvalidModel):
        ModelSpec("torus")


def test_class_defect():
    assert ModelSpec.hirzebruch(a=1).class_defect() == 0
    assert ModelSpec.hirzebruch(a=2, kappa=3.0).class_defect() == 0
    assert ModelSpec(b0=1.0, binf=3.0).class_defect() > 0
    assert ModelSpec.product().class_defect() == 0


def test_reference_potential_matches_closed_form(hirzebruch):
    u = reference_potential(hirzebruch, npoints=128)
    ex, e1, e2 = u.exact(u.mesh.rho)
    assert np.allclose(u.values, ex, atol=1e-12)
    assert np.allclose(u.d1, e1, atol=1e-12)
    assert np.allclose(u.d2, e2, atol=1e-12)
    assert positivity_check(u).admissible


def test_pairings_give_section_areas(hirzebruch):
    u = reference_potential(hirzebruch, npoints=128)
    kd = class_pairings(u)
    a, b0, binf = hirzebruch.a, hirzebruch.b0, hirzebruch.binf
    assert abs(kd.fiber_area - 2 * np.pi * (binf - b0) / a) < 1e-10
    assert abs(kd.zero_section_area - 2 * np.pi * b0) < 1e-12
    # omega^2/2 volume of H_a: (2 pi)^2 (binf^2 - b0^2) / (2a)
    assert abs(kd.total_volume - (2 * np.pi) ** 2 * (binf ** 2 - b0 ** 2) / (2 * a)) < 1e-8


def test_metric_components_hermitian_positive(hirzebruch, rng):
    u = reference_potential(hirzebruch, npoints=128)
    for _ in range(5):
        z = rng.normal(size=2) + 1j * rng.normal(size=2)
        g = metric_components(u, z)
        assert np.allclose(g, g.conj().T)
        assert np.linalg.eigvalsh(g).min() > 0
    with pytest.raises(NonAdmissible):
        metric_components(u, [0, 0])


def test_ricci_potential_lies_in_anticanonical_class():
    # Ric has moment endpoints 2 - a and 2 + a whatever the metric
    spec = ModelSpec(b0=1.0, binf=3.0)
    u = reference_potential(spec, npoints=128)
    assert np.all(det_metric(u) > 0)
    r = ricci_profile(u)
    assert abs(r.tau0 - 1.0) < 1e-12 and abs(r.tauinf - 3.0) < 1e-12
    assert abs(_end_value(u.mesh, r.d1, 0) - 1.0) < 1e-6
    assert abs(_end_value(u.mesh, r.d1, 1) - 3.0) < 1e-6


def test_perturbation_changes_metric_not_class(hirzebruch):
    u = reference_potential(hirzebruch, npoints=128)
    up = potential_from_function(hirzebruch, u.mesh, lambda x: np.sin(np.pi * x) ** 2, 0.1)
    a, b = class_pairings(u), class_pairings(up)
    assert abs(a.fiber_area - b.fiber_area) < 1e-8
    assert np.abs(up.density - u.density).max() > 1e-2
