import math

import numpy as np
import pytest
from scipy.integrate import quad

from discretize import assemble_radial, catenoid_radial_problem
from errors import DomainError, ValidationError
from radial_ode import (ball_ode, catenoid_ode, closed_form_difference, closed_form_h, gauss_2f1, mu_value,
                        ode_residual, second_solution, second_solution_derivatives, sigma_one_sectors,
                        singularity_check, verification_report, wronskian_check)
from robin_solver import steklov_alpha_spectrum
from surfaces import find_critical_catenoid


@pytest.fixture(scope="module")
def hyperbolic_catenoid():
    return find_critical_catenoid("hyperbolic", 1.0)


def test_gauss_2f1_examples():
    assert gauss_2f1(0.3, 0.7, 1.1, 0.0) == 1.0
    assert gauss_2f1(1, 1, 2, 0.5) == pytest.approx(2 * math.log(2), abs=1e-14)
    assert gauss_2f1(0.5, 1.3, 1.3, 0.3) == pytest.approx(0.7 ** -0.5, abs=1e-14)


def test_gauss_2f1_negative_argument():
    # −ln(1−x)/x 对 x<0 同样成立
    for x in (-0.4, -1.0, -3.5):
        assert gauss_2f1(1, 1, 2, x) == pytest.approx(-math.log(1 - x) / x, rel=1e-13)
    assert gauss_2f1(0.5, 2.0, 2.0, -2.0) == pytest.approx(3.0 ** -0.5, rel=1e-13)


def test_gauss_2f1_contiguous_relation():
    rng = np.random.default_rng(5)
    for _ in range(50):
        a, b = rng.uniform(-2.0, 2.0, 2)
        c = rng.uniform(0.3, 3.0)
        x = rng.uniform(-0.9, 0.6)
        value = (c * (1 - x) * gauss_2f1(a, b, c, x) - c * gauss_2f1(a - 1, b, c, x)
                 + (c - b) * x * gauss_2f1(a, b, c + 1, x))
        assert abs(value) <= 1e-12


def test_gauss_2f1_terminating_and_degenerate():
    # b = −1 时级数为多项式，即便 c = −2
    assert gauss_2f1(2.0, -1.0, -2.0, 0.3) == pytest.approx(1 + 2.0 * -1.0 / -2.0 * 0.3, abs=1e-15)
    with pytest.raises(ValidationError) as info:
        gauss_2f1(1.5, -1.0, 0.0, 0.3)
    assert info.value.code == "DEGENERATE_PARAMETER"
    with pytest.raises(DomainError):
        gauss_2f1(1, 1, 2, 1.0)


def test_explicit_ball_solutions():
    t = np.linspace(0.05, 1.5, 60)
    ode = ball_ode("spherical", 3, 0)
    assert ode_residual(ode, ode.first_solutions[0][1], t) <= 1e-12
    ode = ball_ode("hyperbolic", 3, 1)
    assert ode_residual(ode, ode.first_solutions[0][1], t) <= 1e-12
    ode = ball_ode("spherical", 4, 1)
    assert ode_residual(ode, ode.first_solutions[0][1], t) <= 1e-12


def test_catenoid_first_solutions(hyperbolic_catenoid):
    family = hyperbolic_catenoid.family
    s = np.linspace(-hyperbolic_catenoid.s0, hyperbolic_catenoid.s0, 15)
    ode0 = catenoid_ode(family, 0, hyperbolic_catenoid.s0)
    for _, solution in ode0.first_solutions:
        assert ode_residual(ode0, solution, s) <= 1e-8
    ode1 = catenoid_ode(family, 1, hyperbolic_catenoid.s0)
    assert ode_residual(ode1, ode1.first_solutions[0][1], s) <= 1e-8


def test_catenoid_second_solution(hyperbolic_catenoid):
    family = hyperbolic_catenoid.family
    ode = catenoid_ode(family, 1, hyperbolic_catenoid.s0)
    for s in np.linspace(0.05, hyperbolic_catenoid.s0, 6):
        y, dy, ddy = second_solution_derivatives(ode, s)
        assert abs(ddy + ode.p(s) * dy + ode.q(s) * y) <= 1e-8
        integral, _ = quad(lambda t: (family.a * math.cosh(2 * t) - 0.5) ** -1.5, 0, s, epsabs=1e-14, epsrel=1e-13)
        assert y == pytest.approx(math.sqrt(family.a * math.cosh(2 * s) - 0.5) * integral, rel=1e-10)
    assert wronskian_check(ode, 0.4) > 1e-10


def test_hyperbolic_k2_matches_log_formula():
    ode = ball_ode("hyperbolic", 2, 0)
    samples = [0.3, 0.8, 1.7]
    # y − cosh t·(1/cosh t + log tanh(t/2)) 是 cosh t 的常数倍
    offsets = [(second_solution(ode, t) - math.cosh(t) * (1 / math.cosh(t) + math.log(math.tanh(t / 2))))
               / math.cosh(t) for t in samples]
    assert max(offsets) - min(offsets) <= 1e-9


@pytest.mark.parametrize("kind,k", [("spherical", 3), ("spherical", 5), ("hyperbolic", 3), ("spherical", 2)])
def test_quadrature_agrees_with_closed_form(kind, k):
    assert closed_form_difference(ball_ode(kind, k, 0), [0.3, 0.6, 1.0]) <= 1e-8


def test_closed_form_degenerates_for_even_k():
    with pytest.raises(ValidationError):
        closed_form_h(ball_ode("spherical", 4, 0), 0.5)


def test_second_solution_rejects_pole_and_missing_first():
    with pytest.raises(DomainError):
        second_solution(ball_ode("spherical", 3, 0), 0.0)
    with pytest.raises(ValidationError):
        second_solution(ball_ode("spherical", 3, 2), 0.5)


def test_singularity_classification():
    power = singularity_check(ball_ode("spherical", 3, 0))
    assert power["tag"] == "power"
    assert power["growth_exponent"] == pytest.approx(1.0, abs=0.05)
    log = singularity_check(ball_ode("hyperbolic", 2, 0))
    assert log["tag"] == "log"
    assert log["values"][2] < log["values"][1] < log["values"][0]
    assert power["first_solution_max"] <= 1.0


def test_mu_value(hyperbolic_catenoid):
    report = mu_value(hyperbolic_catenoid)
    assert report["mu"] > 0
    assert report["ratio_left"] == pytest.approx(report["ratio_right"], rel=1e-12)
    assert report["eigenvalue"] == pytest.approx(1 / math.tanh(1.0) + report["mu"])


def test_mu_eigenvalue_in_catenoid_spectrum(hyperbolic_catenoid):
    problem = catenoid_radial_problem(hyperbolic_catenoid.family, hyperbolic_catenoid.s0, 2000)
    sigmas = steklov_alpha_spectrum(assemble_radial(problem, 1), -2.0, 2).sigmas
    assert sigmas[0] == pytest.approx(1 / math.tanh(1.0), abs=1e-4)
    assert sigmas[1] == pytest.approx(mu_value(hyperbolic_catenoid)["eigenvalue"], abs=1e-4)


def test_sigma_one_sectors(hyperbolic_catenoid):
    report = sigma_one_sectors(hyperbolic_catenoid)
    assert report["modes"] == [0, 1]
    assert report["multiplicity"] == 3
    assert not report["a0_vanishes"]


def test_verification_report():
    report = verification_report()
    assert report["passed"], report
    assert set(report["catenoids"]) == {"hyperbolic", "spherical"}
