import math

import numpy as np
import pytest
from scipy.integrate import quad

from discretize import (RadialProblem, TriMesh, assemble_radial, assemble_tri, ball_radial_problem,
                        catenoid_radial_problem, euler_characteristic, harmonic_multiplicity, mesh_annulus,
                        mesh_ball_cap, mesh_disk, mesh_topology, read_mesh, uniform_nodes, validate_mesh,
                        weighted_mass, write_mesh)
from errors import AssemblyError, ValidationError
from spaceform import SpaceKind
from surfaces import CatenoidFamily


def flat_problem(elements=20):
    return RadialProblem(uniform_nodes(0.0, 1.0, elements), np.ones_like,
                         lambda t, m: m * m * np.ones_like(t), boundary=(True, True), orbit=1.0)


def test_flat_interval_textbook_matrices():
    forms = assemble_radial(flat_problem(20), 0)
    h = 1.0 / 20
    K = forms.K.toarray()
    M = forms.M.toarray()
    assert K[5, 5] == pytest.approx(2 / h)
    assert K[5, 6] == pytest.approx(-1 / h)
    assert K[0, 0] == pytest.approx(1 / h)
    assert M[5, 5] == pytest.approx(4 * h / 6)
    assert M[5, 6] == pytest.approx(h / 6)
    assert forms.area == pytest.approx(1.0, abs=1e-14)
    assert forms.boundary_length == pytest.approx(2.0, abs=1e-14)


def test_radial_requires_sixteen_elements():
    with pytest.raises(ValidationError):
        flat_problem(8)


def test_ball_constants_have_zero_energy():
    forms = assemble_radial(ball_radial_problem("spherical", 2, 0.7, 200), 0)
    ones = np.ones(forms.n_dofs)
    assert abs(ones @ forms.K @ ones) < 1e-12
    assert forms.area == pytest.approx(2 * math.pi * (1 - math.cos(0.7)), rel=1e-6)
    assert forms.boundary_length == pytest.approx(2 * math.pi * math.sin(0.7), rel=1e-14)


def test_ball_ode_residual_converges():
    r = 0.7
    errors = []
    for elements in (100, 200, 400):
        forms = assemble_radial(ball_radial_problem("spherical", 2, r, elements), 0)
        u = np.cos(forms.coords)
        residual = (forms.K - 2 * forms.M) @ u - (-math.tan(r)) * (forms.Bd @ u)
        errors.append(np.max(np.abs(residual)))
    assert errors[0] / errors[1] > 3.0
    assert errors[1] / errors[2] > 3.0


def test_galerkin_rayleigh_quotient_order_two():
    r = 0.7
    errors = []
    for elements in (100, 200):
        forms = assemble_radial(ball_radial_problem("spherical", 2, r, elements), 1)
        u = np.sin(forms.coords)
        quotient = u @ ((forms.K - 2 * forms.M) @ u) / (u @ (forms.Bd @ u))
        errors.append(abs(quotient - 1 / math.tan(r)))
    assert 3.0 < errors[0] / errors[1] < 5.0


def test_pole_dirichlet_for_higher_modes():
    problem = ball_radial_problem("hyperbolic", 3, 1.1, 64)
    assert assemble_radial(problem, 0).n_dofs == 65
    forms = assemble_radial(problem, 1)
    assert forms.n_dofs == 64
    assert forms.coords[0] > 0
    np.testing.assert_array_equal(forms.boundary_dofs, [63])


def test_catenoid_area_converges():
    family = CatenoidFamily(SpaceKind.HYPERBOLIC, 1.0)
    s0 = 0.9
    exact = 2 * math.pi * quad(lambda s: math.sqrt(math.cosh(2 * s) - 0.5), -s0, s0, epsabs=1e-14)[0]
    forms = assemble_radial(catenoid_radial_problem(family, s0, 400), 0)
    assert forms.area == pytest.approx(exact, rel=1e-6)
    np.testing.assert_array_equal(forms.boundary_dofs, [0, 400])


def test_interior_vanishing_weight_rejected():
    problem = RadialProblem(uniform_nodes(-0.7, 0.7, 32), lambda t: np.abs(np.sin(t)),
                            lambda t, m: m * m / np.sin(t) ** 2)
    with pytest.raises(AssemblyError):
        assemble_radial(problem, 0)


def test_weighted_mass_with_unit_potential_is_mass():
    problem = ball_radial_problem("spherical", 2, 0.7, 64)
    forms = assemble_radial(problem, 1)
    P = weighted_mass(problem, np.ones(65), 1)
    np.testing.assert_allclose(P.toarray(), forms.M.toarray(), rtol=1e-13, atol=1e-16)


def test_harmonic_multiplicity():
    assert harmonic_multiplicity(2, 0) == 1
    assert harmonic_multiplicity(2, 3) == 2
    assert harmonic_multiplicity(3, 1) == 3
    assert harmonic_multiplicity(3, 2) == 5


def test_disk_mesh_topology():
    mesh = mesh_disk(0)
    assert len(mesh.triangles) == 8
    assert euler_characteristic(mesh) == 1
    fine = mesh_disk(4)
    assert fine.n_vertices == 1089
    assert len(fine.boundary_edges) == 128
    assert euler_characteristic(fine) == 1
    assert mesh_topology(fine) == (0, 1)
    radius = np.linalg.norm(fine.vertices[fine.boundary_vertices], axis=1)
    np.testing.assert_allclose(radius, 1.0, atol=1e-15)


def test_annulus_mesh_topology():
    for level in (0, 1, 2):
        mesh = mesh_annulus(0.5, 1.0, level)
        assert euler_characteristic(mesh) == 0
        assert len(mesh.boundary_edges) == 32 * 2 ** level
        assert mesh_topology(mesh) == (0, 2)
        validate_mesh(mesh)


def test_disk_boundary_edges_double():
    counts = [len(mesh_disk(level).boundary_edges) for level in range(4)]
    assert counts == [8, 16, 32, 64]


def test_stiffness_kills_constants():
    forms = assemble_tri(mesh_disk(3))
    np.testing.assert_allclose(np.asarray(forms.K.sum(axis=1)).ravel(), 0.0, atol=1e-12)
    assert forms.area == pytest.approx(math.pi, rel=2e-2)
    assert forms.boundary_length == pytest.approx(2 * math.pi, rel=1e-2)


def test_constant_conformal_factor_scaling():
    mesh = mesh_annulus(0.5, 1.0, 1)
    base = assemble_tri(mesh)
    scaled = assemble_tri(mesh.with_conformal(np.full(mesh.n_vertices, 3.0)))
    np.testing.assert_allclose(scaled.K.toarray(), base.K.toarray(), atol=0)
    np.testing.assert_allclose(scaled.M.toarray(), 3.0 * base.M.toarray(), rtol=1e-14)
    np.testing.assert_allclose(scaled.Bd.toarray(), math.sqrt(3.0) * base.Bd.toarray(), rtol=1e-14)


def test_collar_area_matches_exact_integration():
    mesh = mesh_annulus(0.5, 1.0, 2)
    radius = np.linalg.norm(mesh.vertices, axis=1)
    distance = np.minimum(radius - 0.5, 1.0 - radius)
    factor = np.where(distance >= 0.1, 4.0, np.where(distance <= 0.05, 1.0, 1.0 + 3.0 * (distance - 0.05) / 0.05))
    forms = assemble_tri(mesh.with_conformal(factor))
    X = mesh.vertices[mesh.triangles]
    tri_area = 0.5 * np.abs(np.cross(X[:, 1] - X[:, 0], X[:, 2] - X[:, 0]))
    expected = np.sum(tri_area * factor[mesh.triangles].mean(axis=1))
    assert forms.area == pytest.approx(expected, rel=1e-12)


def test_mass_positive_definite_and_boundary_rank():
    forms = assemble_tri(mesh_annulus(0.5, 1.0, 0))
    assert np.linalg.eigvalsh(forms.M.toarray()).min() > 0
    boundary_eigs = np.linalg.eigvalsh(forms.Bd.toarray())
    assert np.sum(boundary_eigs > 1e-12) == len(forms.boundary_dofs)


def test_inverted_triangle_reports_index():
    mesh = mesh_disk(1)
    triangles = mesh.triangles.copy()
    triangles[5] = triangles[5][::-1]
    with pytest.raises(AssemblyError) as info:
        assemble_tri(TriMesh(mesh.vertices, triangles, mesh.boundary_edges))
    assert info.value.details["triangle"] == 5


def test_ball_cap_mesh_geometry():
    forms = assemble_tri(mesh_ball_cap("spherical", 0.7, 4))
    assert forms.area == pytest.approx(2 * math.pi * (1 - math.cos(0.7)), rel=5e-3)
    assert forms.boundary_length == pytest.approx(2 * math.pi * math.sin(0.7), rel=5e-3)


def test_mesh_text_format():
    mesh = mesh_annulus(0.5, 1.0, 0)
    mesh = mesh.with_conformal(np.linspace(1.0, 2.0, mesh.n_vertices))
    text = write_mesh(mesh)
    assert text.splitlines()[0] == f"{mesh.n_vertices} 32 {len(mesh.triangles)}"
    loaded = read_mesh(text)
    assert (loaded.genus, loaded.boundary_components) == (0, 2)
    np.testing.assert_array_equal(loaded.vertices, mesh.vertices)
    np.testing.assert_array_equal(loaded.conformal, mesh.conformal)
    assert write_mesh(loaded) == text


def test_mesh_text_format_errors():
    with pytest.raises(ValidationError):
        read_mesh("3 0 1\n0 0\n1 0\n")
    bad = mesh_disk(0)
    edges = np.vstack([bad.boundary_edges, [[0, 1]]])
    with pytest.raises(ValidationError):
        validate_mesh(TriMesh(bad.vertices, bad.triangles, edges))
