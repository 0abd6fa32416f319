import math

import numpy as np
import pytest

from discretize import assemble_radial, assemble_tri, ball_radial_problem, catenoid_radial_problem, mesh_annulus, mesh_disk
from errors import NormalizationError, SpectrumTooShortError, ValidationError
from functionals import (FunctionalKind, bound_checks, boundary_layer, collar_family, conformal_derivative,
                         continuity_check, converse_identity, degeneration_experiment, degeneration_mesh,
                         functional_of_forms, omega, omega_floor, omega_nonnegativity_sweep, perturbation_derivative,
                         sample_mesh, sample_radial, table_to_csv, theta)
from robin_solver import SpectralResult, radial_spectrum, steklov_alpha_spectrum
from surfaces import find_critical_catenoid


def anisotropic_disk(level=2):
    mesh = mesh_disk(level)
    metric = np.broadcast_to(np.diag([1.0, 1.5]), (mesh.n_vertices, 2, 2)).copy()
    return mesh.with_metric(metric)


def smooth_tensor(mesh):
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    h = np.zeros((mesh.n_vertices, 2, 2))
    h[:, 0, 0] = 0.5 * x + 0.2
    h[:, 0, 1] = h[:, 1, 0] = 0.15 * y
    h[:, 1, 1] = 0.5 * x * y - 0.1
    return h


def test_value_reconstructs_from_parts():
    value = omega([0.3, 1.2, 1.2], area=2.5, boundary_length=4.0, r=0.9)
    assert value.value == pytest.approx(value.recompute(), rel=1e-14)
    expected = (-0.3 * math.cosh(0.9) ** 2 + 1.2 * math.sinh(0.9) ** 2) * 4.0 + 5.0
    assert value.value == pytest.approx(expected, rel=1e-14)
    assert value.to_dict()["parts"]["sigmak"] == 1.2


def test_radius_ranges_and_short_spectrum():
    with pytest.raises(ValidationError):
        theta([0.1, 0.2], 1.0, 1.0, r=1.6)
    with pytest.raises(ValidationError):
        omega([0.1, 0.2], 1.0, 1.0, r=0.0)
    with pytest.raises(SpectrumTooShortError):
        theta([0.1, 0.2], 1.0, 1.0, r=0.5, k=2)


def test_theta_small_radius_limit():
    sigmas = [-0.4, 1.3]
    value = theta(sigmas, 3.0, 2.0, r=1e-8).value
    assert value == pytest.approx(-0.4 * 2.0 + 6.0, abs=1e-12)


def test_catenoid_omega_is_twice_area():
    solution = find_critical_catenoid("hyperbolic", 1.0)
    problem = catenoid_radial_problem(solution.family, solution.s0, 2000)
    spectrum = radial_spectrum(problem, -2.0, 2, 2)
    base = assemble_radial(problem, 0)
    value = omega(spectrum, base.area, base.boundary_length, 1.0, 1)
    assert value.parts["sigma0"] == pytest.approx(math.tanh(1.0), abs=1e-5)
    assert value.parts["sigmak"] == pytest.approx(1 / math.tanh(1.0), abs=1e-5)
    assert value.value == pytest.approx(2 * base.area, rel=1e-6)


def test_collar_family_basics():
    mesh = mesh_disk(3)
    identity = collar_family(mesh, 1.0, 0.25)
    np.testing.assert_allclose(identity.conformal, 1.0)
    base = assemble_tri(mesh)
    areas = []
    for epsilon in (0.5, 0.25):
        forms = assemble_tri(collar_family(mesh, 3.0, epsilon))
        assert forms.boundary_length == pytest.approx(base.boundary_length, rel=1e-14)
        areas.append(forms.area)
    assert areas[0] < areas[1] < 3.0 * base.area


def test_collar_family_requires_resolution():
    with pytest.raises(ValidationError) as info:
        collar_family(mesh_disk(2), 2.0, 0.1)
    assert info.value.code == "MESH_TOO_COARSE"


def test_theta_below_ladder_on_annulus():
    epsilons = (0.2, 0.1, 0.05, 0.025)
    table = degeneration_experiment("theta-below", r=0.5, k=1, epsilons=epsilons)
    assert list(table.columns) == ["epsilon", "delta", "sigma0", "sigmak", "value", "flag"]
    assert list(table["epsilon"]) == list(epsilons)
    assert (table["flag"] == "ok").all()
    values = table["value"].to_numpy()
    assert np.all(np.diff(values) < 0)
    spread = abs(values[0] - values[1])
    assert values[-1] < values[0] - 10 * spread


def test_degeneration_mesh_resolves_narrowest_collar():
    mesh = degeneration_mesh("theta-below", (0.2, 0.1, 0.05, 0.025))
    assert mesh.boundary_components == 2
    assert mesh.label == "annulus-l4"
    assert 2 * boundary_layer(mesh) <= 0.025
    assert degeneration_mesh("omega-above", (0.01,), delta=0.125).label == "disk-l4"
    assert degeneration_mesh("steklov-limit", (0.25,), level=2).label == "disk-l2"


def test_degeneration_mesh_rejects_unresolvable_collar():
    with pytest.raises(ValidationError) as info:
        degeneration_mesh("steklov-limit", (1e-4,))
    assert info.value.code == "MESH_TOO_COARSE"


def test_omega_above_ladder():
    table = degeneration_experiment("omega-above", mesh_disk(4), r=1.0, k=1, delta=0.125)
    values = table["value"].to_numpy()
    assert np.all(np.diff(values) > 0)
    assert (table["delta"] == 0.125).all()
    assert table_to_csv(table).splitlines()[0] == "epsilon,delta,sigma0,sigmak,value,flag"


def test_steklov_limit_halves_error():
    table = degeneration_experiment("steklov-limit", mesh_disk(5), k=1, epsilons=(0.25, 0.125, 0.0625))
    gaps = table["value"].to_numpy()
    ratios = gaps[:-1] / gaps[1:]
    assert np.all((ratios >= 1.5) & (ratios <= 2.5))


def test_omega_floor_trend():
    table = omega_floor(lengths=(2.0, 4.0, 8.0, 16.0))
    values = table["value"].to_numpy()
    assert np.all(values >= 0)
    assert np.all(np.diff(values) < 0)
    assert table["sigmak"].iloc[-1] == pytest.approx(2 / 16.0, rel=5e-2)


def test_omega_nonnegative_on_random_metrics():
    sweep = omega_nonnegativity_sweep(mesh_annulus(0.5, 1.0, 1), count=100, seed=0)
    assert len(sweep) == 100
    assert (sweep["omega"] >= 0).all()
    assert (sweep["sigma0"] <= sweep["area_bound"] * (1 + 1e-12)).all()


def test_continuity_along_conformal_path():
    report = continuity_check(mesh_disk(3))
    assert report["passed"], report["ratios"]


def test_bound_checks():
    cap = sample_radial(ball_radial_problem("spherical", 2, 0.7, 2000), genus=0, boundaries=1)
    disk = sample_mesh(mesh_disk(4))
    report = bound_checks([cap, disk], r=0.7)
    assert report["passed"], report
    cap_row = report["samples"][0]
    assert cap_row["theta"] == pytest.approx(4 * math.pi * (1 - math.cos(0.7)), rel=1e-4)
    assert report["samples"][1]["steklov_product"] == pytest.approx(2 * math.pi, rel=1e-2)
    assert report["sigma_k_envelope"] > 0


def test_perturbation_derivative_zero_and_linear():
    mesh = anisotropic_disk(2)
    spectrum = steklov_alpha_spectrum(assemble_tri(mesh), -2.0, 2)
    zero = np.zeros((mesh.n_vertices, 2, 2))
    assert perturbation_derivative("omega", spectrum, zero, 1.0) == 0.0
    h1 = smooth_tensor(mesh)
    h2 = np.broadcast_to(np.array([[0.3, -0.1], [-0.1, 0.7]]), h1.shape).copy()
    combined = perturbation_derivative("omega", spectrum, 2.0 * h1 - 0.5 * h2, 1.0)
    separate = (2.0 * perturbation_derivative("omega", spectrum, h1, 1.0)
                - 0.5 * perturbation_derivative("omega", spectrum, h2, 1.0))
    assert combined == pytest.approx(separate, abs=1e-12 * max(1.0, abs(separate)))


@pytest.mark.parametrize("kind", ["omega", "theta"])
def test_perturbation_matches_central_difference(kind):
    mesh = anisotropic_disk(2)
    h = smooth_tensor(mesh)
    functional = FunctionalKind(kind)
    spectrum = steklov_alpha_spectrum(assemble_tri(mesh), functional.alpha, 3)
    # σ₀、σ₁ 单重
    assert np.all(np.diff(spectrum.sigmas) > 1e-3)
    derivative = perturbation_derivative(kind, spectrum, h, 1.0)
    t = 1e-4
    plus = functional_of_forms(functional, assemble_tri(mesh.with_metric(mesh.metric + t * h)), 1.0).value
    minus = functional_of_forms(functional, assemble_tri(mesh.with_metric(mesh.metric - t * h)), 1.0).value
    assert derivative == pytest.approx((plus - minus) / (2 * t), rel=1e-4)


def test_conformal_derivative_is_trace_direction():
    mesh = anisotropic_disk(2)
    spectrum = steklov_alpha_spectrum(assemble_tri(mesh), -2.0, 2)
    w = 1.0 - np.sum(mesh.vertices ** 2, axis=1)
    assert conformal_derivative("omega", spectrum, w, 1.0) == pytest.approx(
        perturbation_derivative("omega", spectrum, w[:, None, None] * mesh.metric, 1.0), rel=1e-14)


def test_perturbation_requires_normalized_eigenfunctions():
    mesh = anisotropic_disk(2)
    spectrum = steklov_alpha_spectrum(assemble_tri(mesh), -2.0, 2)
    scaled = SpectralResult(alpha=spectrum.alpha, sigmas=spectrum.sigmas, eigenvectors=2.0 * spectrum.eigenvectors,
                            boundary_traces=spectrum.boundary_traces, forms=spectrum.forms)
    with pytest.raises(NormalizationError):
        perturbation_derivative("omega", scaled, smooth_tensor(mesh), 1.0)


@pytest.mark.parametrize("kind,r", [("hyperbolic", 1.0), ("spherical", 0.6)])
def test_converse_identity_on_critical_catenoid(kind, r):
    report = converse_identity(find_critical_catenoid(kind, r))
    assert abs(report["sum"]) <= 1e-6 * max(1.0, report["scale"])
    assert report["scale"] > 1e-3
