import math

import numpy as np
import pytest

from discretize import ball_radial_problem, catenoid_radial_problem
from errors import AssemblyError, EigenspaceMatchError, SpectrumTooShortError, ValidationError
from index_forms import (CoordinateProfile, IndexReport, area_index_form, ball_coordinates, ball_gram,
                         ball_index_report, catenoid_coordinates, catenoid_index_report, energy_form, energy_index,
                         extremality_certificate, inertia, morse_index, radial_index_form, rotation_null_check,
                         spectral_index, spectral_index_report, tangency_basis)
from spaceform import cs, sn
from surfaces import BallChart, find_critical_catenoid, varphi

BALL_RADII = {"spherical": 0.7, "hyperbolic": 1.1}


@pytest.fixture(scope="module")
def hyperbolic_catenoid():
    return find_critical_catenoid("hyperbolic", 1.0)


@pytest.fixture(scope="module", params=[("hyperbolic", 1.0), ("spherical", 0.6)])
def catenoid_report(request):
    kind, r = request.param
    return catenoid_index_report(find_critical_catenoid(kind, r))


def test_identity_has_no_index():
    assert morse_index(np.eye(5)) == (0, 0)


def test_inertia_is_congruence_invariant():
    rng = np.random.default_rng(3)
    Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    A = Q @ np.diag([-3.0, -1.0, 2.0, 5.0, 7.0, 0.5]) @ Q.T
    P = np.eye(6) + 0.1 * rng.standard_normal((6, 6))
    assert inertia(A).index == 2
    assert inertia(P.T @ A @ P).index == 2


def test_inertia_rejects_asymmetric_matrix():
    with pytest.raises(ValidationError):
        inertia(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_positive_potential_and_boundary_give_no_index():
    problem = ball_radial_problem("spherical", 2, 0.7, 80)
    form = radial_index_form(problem, 0, -np.ones(problem.nodes.size), -1.0)
    assert morse_index(form) == (0, 0)


def test_missing_potential_is_rejected():
    problem = ball_radial_problem("spherical", 2, 0.7, 80)
    with pytest.raises(ValidationError):
        radial_index_form(problem, 0, None, 1.0)
    with pytest.raises(ValidationError):
        radial_index_form(problem, 0, np.ones(3), 1.0)


@pytest.mark.parametrize("kind,expected", [("spherical", 2.0), ("hyperbolic", -2.0)])
def test_ball_potential_is_curvature_times_dimension(kind, expected):
    form = area_index_form(BallChart(kind, 2, 3, BALL_RADII[kind]), 0, 40)
    assert np.all(form.potential == expected)


@pytest.mark.parametrize("kind", ["spherical", "hyperbolic"])
@pytest.mark.parametrize("k,n", [(2, 3), (2, 4), (3, 4)])
def test_ball_morse_index(kind, k, n):
    report = ball_index_report(kind, k, n, BALL_RADII[kind])
    assert report.ind == n - k
    assert report.nullity_estimate == k * (n - k)
    assert report.details["spectral_gap"] >= 1e-6
    assert report.ind_S == 1
    checks = report.inequality_checks
    assert checks["lower_bound"] is None
    assert checks["energy_bound"] is None
    if k == 2:
        assert checks["upper_bound"] is True
    else:
        assert checks["upper_bound"] is None


@pytest.mark.parametrize("kind", ["spherical", "hyperbolic"])
def test_ball_gram_is_indefinite(kind):
    gram = ball_gram(BallChart(kind, 2, 3, BALL_RADII[kind]))
    assert gram["determinant"] == pytest.approx(gram["reference_determinant"], rel=1e-3)
    assert gram["determinant"] < 0
    assert not gram["negative_definite"]


def test_catenoid_radial_mode_is_unstable(hyperbolic_catenoid):
    index, _ = morse_index(area_index_form(hyperbolic_catenoid, 0))
    assert index >= 1


def test_catenoid_area_index(catenoid_report):
    assert catenoid_report.ind == 4
    assert catenoid_report.nullity_estimate >= 1
    truncation = catenoid_report.details["truncation"]
    assert truncation["higher_modes_zero"]
    assert truncation["monotone"]


def test_catenoid_spectral_and_energy_index(catenoid_report):
    assert catenoid_report.ind_S == 1
    checks = catenoid_report.inequality_checks
    assert checks["lower_bound"] and checks["upper_bound"]
    # Ind − dim𝓜 ≤ Ind_E ≤ Ind
    assert catenoid_report.ind - 1 <= catenoid_report.ind_E <= catenoid_report.ind
    assert checks["energy_bound"] == (catenoid_report.ind_E <= 3)


def test_spherical_catenoid_energy_index():
    report = catenoid_index_report(find_critical_catenoid("spherical", 0.6), mmax=3)
    assert report.ind_E == 3
    assert report.passed


def test_energy_index_does_not_depend_on_resolution(hyperbolic_catenoid):
    counts = {elements: energy_index(hyperbolic_catenoid, mmax=3, elements=elements) for elements in (160, 320, 640)}
    assert len(set(counts.values())) == 1, counts


def test_mass_normalized_inertia_ignores_mesh_scale():
    values = np.array([-0.08, 1e-6, 0.5, 4.0])
    for h in (1e-2, 1e-3, 1e-4):
        A = h * np.diag(values)
        M = h * np.eye(4)
        result = inertia(A, mass=M)
        assert (result.index, result.nullity) == (1, 1)
        assert result.below == pytest.approx(-0.08)


def test_inertia_rejects_indefinite_mass():
    with pytest.raises(AssemblyError):
        inertia(np.eye(2), mass=np.diag([1.0, -1.0]))


def test_catenoid_report_serializes(catenoid_report):
    payload = catenoid_report.to_dict()
    assert payload["n"] == 3
    assert payload["dim_moduli"] == 1
    assert payload["tolerances"]["gap_tol_rel"] > 0
    assert payload["tolerances"]["gap_tol_mass"] > 0
    assert len(payload["details"]["area_modes"]) == 7


def test_tangency_basis_satisfies_constraints(hyperbolic_catenoid):
    family = hyperbolic_catenoid.family
    nodes = catenoid_radial_problem(family, hyperbolic_catenoid.s0, 40).nodes
    Z = tangency_basis(hyperbolic_catenoid, nodes)
    n = nodes.size
    assert Z.shape == (4 * n, 4 * n - n - 2)
    x = Z @ np.random.default_rng(0).standard_normal(Z.shape[1])
    f0, f1, frho = x[:n], x[n:2 * n], x[2 * n:3 * n]
    d = family.radius_derivatives(nodes)
    phi = varphi(family, nodes)
    tangency = family.c * d["A"] * cs(family.kind, phi) * f0 + d["A"] * sn(family.kind, phi) * f1 + d["B"] * frho
    assert np.max(np.abs(tangency)) < 1e-12
    assert abs(f0[0]) < 1e-12 and abs(f0[-1]) < 1e-12


def test_energy_form_multiplicity(hyperbolic_catenoid):
    assert energy_form(hyperbolic_catenoid, 0, 40).multiplicity == 1
    assert energy_form(hyperbolic_catenoid, 2, 40).multiplicity == 2


def test_rotation_field_is_null(hyperbolic_catenoid):
    check = rotation_null_check(hyperbolic_catenoid)
    assert check["ratio"] <= 1e-6
    assert check["passed"]
    assert check["discrete_ratio"] < 1e-3


def test_spectral_index_counts_strictly_below():
    sigmas = [-1.0, 0.5, 2.0, 3.0]
    assert spectral_index(sigmas, 2.0) == 2
    assert spectral_index(sigmas, -2.0) == 0
    report = spectral_index_report(sigmas, 2.0)
    assert report["boundary_cases"] == [2]


def test_spectral_index_needs_long_enough_spectrum():
    with pytest.raises(SpectrumTooShortError):
        spectral_index([-1.0, 0.5], 2.0)


def test_inequality_checks_report_violations():
    report = IndexReport(label="fixture", ind=2, ind_S=1, ind_E=5, nullity_estimate=0, n=3, dim_moduli=1,
                         lower_bound_applies=True)
    assert report.inequality_checks == {"energy_bound": False, "lower_bound": False, "upper_bound": True}
    assert not report.passed


def test_catenoid_extremality_certificate(hyperbolic_catenoid):
    problem, profiles = catenoid_coordinates(hyperbolic_catenoid)
    report = extremality_certificate(problem, profiles, "hyperbolic", 1.0)
    assert report["residual_metric"] <= 1e-5
    assert report["residual_sum"] <= 1e-5
    assert report["residual_gradient"] <= 1e-5
    assert report["residual_eigen_relation"] <= 1e-5
    assert report["residual_boundary"] <= 1e-5
    assert [item["mode"] for item in report["matched"]] == [0, 0, 1, 1]
    assert report["passed"]


@pytest.mark.parametrize("kind", ["spherical", "hyperbolic"])
def test_ball_extremality_certificate(kind):
    r = BALL_RADII[kind]
    problem, profiles = ball_coordinates(kind, r)
    report = extremality_certificate(problem, profiles, kind, r)
    assert report["residual_metric"] <= 1e-7
    assert report["residual_sum"] <= 1e-7
    assert report["passed"]


def test_perturbed_coordinates_fail_certificate():
    r = BALL_RADII["spherical"]
    problem, profiles = ball_coordinates("spherical", r, scale=1.1)
    report = extremality_certificate(problem, profiles, "spherical", r)
    assert report["residual_sum"] > 1e-2
    assert not report["checks"]["sum_of_squares"]
    assert not report["passed"]


def test_non_eigenfunction_is_not_matched():
    r = BALL_RADII["spherical"]
    problem, profiles = ball_coordinates("spherical", r, elements=400)

    def quadratic(t):
        t = np.asarray(t, dtype=float)
        return t * t, 2 * t, 2 * np.ones_like(t)

    profiles[0] = CoordinateProfile("v0", 0, "one", quadratic)
    with pytest.raises(EigenspaceMatchError):
        extremality_certificate(problem, profiles, "spherical", r)
