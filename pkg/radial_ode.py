#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
径向常微分方程 a″ + p a′ + q a = 0
超几何级数、降阶法第二解、显式特征函数的残差检查、极点奇性与 μ 值
"""

import math
import logging
import argparse
import json
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.integrate import quad

from discretize import assemble_radial, catenoid_radial_problem
from errors import DomainError, SolverFailureError, ValidationError
from robin_solver import steklov_alpha_spectrum
from spaceform import SpaceKind, cs, ctn, parse_kind, sn
from surfaces import CatenoidFamily, CatenoidSolution, find_critical_catenoid, varphi

logger = logging.getLogger(__name__)

# (y, y′, y″)
Triple = Tuple[np.ndarray, np.ndarray, np.ndarray]

SERIES_RTOL = 1e-15
SERIES_MAX_TERMS = 1_000_000


@dataclass
class RadialODE:
    """
    a″ + p a′ + q a = 0
    w 满足 w′ = p·w（Abel 权），降阶法中 h′ = 1/(w y₁²)
    """
    kind: str
    p: Callable
    q: Callable
    w: Callable
    interval: Tuple[float, float]
    anchor: float
    pole: bool = False
    symmetric: bool = False
    first_solutions: List[Tuple[str, Callable[[np.ndarray], Triple]]] = field(default_factory=list)
    params: Dict = field(default_factory=dict)

    def contains(self, t: float) -> bool:
        lo, hi = self.interval
        if self.pole:
            return lo < t < hi
        return lo <= t <= hi


# ---------------------------------------------------------------- 超几何级数

def _series(a: float, b: float, c: float, x: float) -> float:
    total = 1.0
    term = 1.0
    for n in range(SERIES_MAX_TERMS):
        numerator = (a + n) * (b + n)
        if numerator == 0.0:
            return total
        if c + n == 0.0:
            raise ValidationError(f"₂F₁ 参数退化: c={c} 为非正整数且级数不终止，请改用降阶法",
                                  code="DEGENERATE_PARAMETER", a=a, b=b, c=c)
        term *= numerator / ((c + n) * (n + 1)) * x
        total += term
        if abs(term) <= SERIES_RTOL * abs(total):
            return total
    raise SolverFailureError(f"₂F₁ 级数在 {SERIES_MAX_TERMS} 项内未收敛: x={x}")


def gauss_2f1(a: float, b: float, c: float, x: float) -> float:
    """
    Gauss 超几何函数 ₂F₁(a,b;c;x)

    Args:
        a, b, c: 参数，c 不能是使级数不终止的非正整数
        x: 自变量，x < 1；x < 0 时用 Pfaff 变换映到 (0, 1)

    Returns:
        级数值
    """
    a, b, c, x = float(a), float(b), float(c), float(x)
    if x == 0.0:
        return 1.0
    if x >= 1.0:
        raise DomainError(f"₂F₁ 只在 x<1 上求值: x={x}")
    if x < 0.0:
        # Pfaff: F(a,b;c;x) = (1−x)^{−a} F(a, c−b; c; x/(x−1))
        return (1.0 - x) ** (-a) * _series(a, c - b, c, x / (x - 1.0))
    return _series(a, b, c, x)


# ---------------------------------------------------------------- 方程构造

def _trig_solution(kind: SpaceKind, even: bool) -> Callable[[np.ndarray], Triple]:
    c = kind.curvature

    def solution(t):
        t = np.asarray(t, dtype=float)
        if even:
            return cs(kind, t), -c * sn(kind, t), -c * cs(kind, t)
        return sn(kind, t), cs(kind, t), -c * sn(kind, t)

    return solution


def ball_ode(kind, k: int, m: int = 0) -> RadialODE:
    """
    测地 k 球上坐标函数的径向方程
    球面: a″ + (k−1)cot t a′ + (k − m(m+k−2)/sin²t) a = 0
    双曲: a″ + (k−1)coth t a′ + (−k − m(m+k−2)/sinh²t) a = 0
    """
    kind = parse_kind(kind)
    if k < 2 or m < 0:
        raise ValidationError(f"需要 k≥2 且 m≥0: k={k}, m={m}")
    c = kind.curvature
    lam = m * (m + k - 2)

    def p(t):
        return (k - 1) * ctn(kind, t)

    def q(t):
        return c * k - lam / sn(kind, t) ** 2

    def w(t):
        return sn(kind, t) ** (k - 1)

    firsts = []
    if m == 0:
        firsts.append(("cs", _trig_solution(kind, True)))
    elif m == 1:
        firsts.append(("sn", _trig_solution(kind, False)))

    hi = 0.5 * math.pi if kind is SpaceKind.SPHERICAL else math.inf
    anchor = 0.25 * math.pi if kind is SpaceKind.SPHERICAL else 1.0
    return RadialODE(f"ball-{kind.value}", p, q, w, (0.0, hi), anchor, pole=True, first_solutions=firsts,
                     params={"k": k, "m": m})


def _catenoid_solutions(family: CatenoidFamily, m: int) -> List[Tuple[str, Callable]]:
    c = family.c

    if m == 1:
        def radius_b(s):
            d = family.radius_derivatives(s)
            return d["B"], d["dB"], d["ddB"]
        return [("B", radius_b)]
    if m != 0:
        return []

    def along(even: bool):
        def solution(s):
            s = np.asarray(s, dtype=float)
            d = family.radius_derivatives(s)
            phi = varphi(family, s)
            C, S = cs(family.kind, phi), sn(family.kind, phi)
            A, dA, ddA, dphi, ddphi = d["A"], d["dA"], d["ddA"], d["dphi"], d["ddphi"]
            if even:
                y = A * C
                dy = dA * C - c * A * S * dphi
                ddy = ddA * C - 2 * c * dA * S * dphi - c * A * C * dphi ** 2 - c * A * S * ddphi
            else:
                y = A * S
                dy = dA * S + A * C * dphi
                ddy = ddA * S + 2 * dA * C * dphi - c * A * S * dphi ** 2 + A * C * ddphi
            return y, dy, ddy
        return solution

    return [("A·cs(φ)", along(True)), ("A·sn(φ)", along(False))]


def catenoid_ode(family: CatenoidFamily, m: int = 0, s0: Optional[float] = None) -> RadialODE:
    """
    旋转悬链面上坐标函数的方程 a″ + (B′/B) a′ + (α − m²/B²) a = 0
    双曲 α = −2，球面 α = 2
    """
    if m < 0:
        raise ValidationError(f"m 必须非负: m={m}")
    alpha = 2.0 * family.c

    def p(s):
        d = family.radius_derivatives(s)
        return d["dB"] / d["B"]

    def q(s):
        return alpha - m * m / family.q(s)

    def w(s):
        return family.radii(s)[1]

    half = s0 if s0 is not None else 1.5
    return RadialODE(f"catenoid-{family.kind.value}", p, q, w, (-half, half), 0.0, symmetric=True,
                     first_solutions=_catenoid_solutions(family, m), params={"a": family.a, "m": m})


# ---------------------------------------------------------------- 残差与第二解

def ode_residual(ode: RadialODE, candidate: Callable[[np.ndarray], Triple], samples) -> float:
    """候选解在样本点上的 max |a″ + p a′ + q a|"""
    t = np.asarray(samples, dtype=float)
    y, dy, ddy = candidate(t)
    return float(np.max(np.abs(ddy + ode.p(t) * dy + ode.q(t) * y)))


def _reduction_integral(ode: RadialODE, first: Callable, t: float) -> float:
    def integrand(x):
        y = first(x)[0]
        return 1.0 / (float(ode.w(x)) * float(y) ** 2)

    lo, hi = sorted((ode.anchor, t))
    sign = 1.0 if t >= ode.anchor else -1.0
    if ode.pole and lo < 0.1 * hi:
        # t = e^u，端点奇性在对数变量下可积
        value, _ = quad(lambda u: integrand(math.exp(u)) * math.exp(u), math.log(lo), math.log(hi),
                        epsabs=1e-14, epsrel=1e-13, limit=400)
    else:
        value, _ = quad(integrand, lo, hi, epsabs=1e-14, epsrel=1e-13, limit=400)
    return sign * value


def _first(ode: RadialODE, index: int = 0) -> Callable:
    if not ode.first_solutions:
        raise ValidationError(f"方程 {ode.kind} (参数 {ode.params}) 没有可用的显式第一解")
    return ode.first_solutions[index][1]


def second_solution_derivatives(ode: RadialODE, s: float, index: int = 0) -> Triple:
    """
    降阶法 y = y₁·h，h′ = 1/(w y₁²)，h″ = −h′(p + 2y₁′/y₁)

    Args:
        ode: 方程
        s: 求值点，不能是极点
        index: 使用第几个显式第一解

    Returns:
        (y, y′, y″)
    """
    s = float(s)
    if not ode.contains(s) or (ode.pole and s <= ode.interval[0]):
        raise DomainError(f"{ode.kind}: s={s} 不在开区间 {ode.interval} 内")
    first = _first(ode, index)
    y1, dy1, ddy1 = (float(v) for v in first(s))
    if y1 == 0.0:
        raise DomainError(f"{ode.kind}: 第一解在 s={s} 处为零")
    h = _reduction_integral(ode, first, s)
    dh = 1.0 / (float(ode.w(s)) * y1 * y1)
    ddh = -dh * (float(ode.p(s)) + 2.0 * dy1 / y1)
    return y1 * h, dy1 * h + y1 * dh, ddy1 * h + 2.0 * dy1 * dh + y1 * ddh


def second_solution(ode: RadialODE, s: float, index: int = 0) -> float:
    """与第一解线性无关的第二解在 s 处的值"""
    return second_solution_derivatives(ode, s, index)[0]


def wronskian_check(ode: RadialODE, s: float) -> float:
    """归一化 Wronski 行列式 |y₁y₂′ − y₁′y₂| / (‖(y₁,y₁′)‖‖(y₂,y₂′)‖)"""
    y1, dy1, _ = (float(v) for v in _first(ode)(s))
    y2, dy2, _ = second_solution_derivatives(ode, s)
    det = y1 * dy2 - dy1 * y2
    return abs(det) / (math.hypot(y1, dy1) * math.hypot(y2, dy2))


def closed_form_h(ode: RadialODE, t: float) -> float:
    """
    球模型 m=0 降阶积分的闭式原函数（相差常数）
    k=2: 1/cos t + log tan(t/2) 或 1/cosh t + log tanh(t/2)
    k>2: sn^{2−k} ₂F₁(3/2, 1−k/2; 2−k/2; ±sn²)/(2−k)，双曲取负号
    """
    if not ode.kind.startswith("ball-") or ode.params.get("m") != 0:
        raise ValidationError(f"闭式只适用于球模型 m=0: {ode.kind} {ode.params}")
    k = ode.params["k"]
    spherical = ode.kind == "ball-spherical"
    if k == 2:
        if spherical:
            return 1.0 / math.cos(t) + math.log(math.tan(0.5 * t))
        return 1.0 / math.cosh(t) + math.log(math.tanh(0.5 * t))
    x = math.sin(t) ** 2 if spherical else -math.sinh(t) ** 2
    s = math.sin(t) if spherical else math.sinh(t)
    return s ** (2 - k) * gauss_2f1(1.5, 1 - 0.5 * k, 2 - 0.5 * k, x) / (2 - k)


def closed_form_difference(ode: RadialODE, samples) -> float:
    """降阶法积分与闭式原函数之差的最大偏离（消去常数）"""
    first = _first(ode)
    differences = [_reduction_integral(ode, first, t) - closed_form_h(ode, t) for t in samples]
    return float(np.max(np.abs(np.asarray(differences) - differences[0])))


def singularity_check(ode: RadialODE) -> Dict:
    """
    在 t = 1e-2, 1e-3, 1e-4 处对第二解取值，判定极点处的发散类型

    Returns:
        报告字典，tag 为 power / log / bounded
    """
    if not ode.pole:
        raise ValidationError(f"{ode.kind} 没有极点")
    samples = [1e-2, 1e-3, 1e-4]
    values = [second_solution(ode, t) for t in samples]
    firsts = [float(_first(ode)(t)[0]) for t in samples]
    magnitudes = np.abs(values)
    exponent = float(math.log10(magnitudes[2] / magnitudes[1]))
    steps = np.diff(values)
    if exponent > 0.5:
        tag = "power"
    elif abs(steps[0]) > 0.5 and abs(steps[1] - steps[0]) <= 0.1 * abs(steps[0]):
        tag = "log"
    else:
        tag = "bounded"
    return {
        "kind": ode.kind,
        "params": dict(ode.params),
        "samples": samples,
        "values": [float(v) for v in values],
        "growth_exponent": exponent,
        "tag": tag,
        "unbounded": tag != "bounded",
        "first_solution_max": float(np.max(np.abs(firsts))),
    }


# ---------------------------------------------------------------- μ 值

def mu_value(solution: CatenoidSolution) -> Dict:
    """
    μ = B(s₀)⁻³ / ∫₀^{s₀} B⁻³，以及第二解模态 Ψ = B·h 的特征值 ctn r + μ

    Returns:
        {"mu", "eigenvalue", "ratio_left", "ratio_right"}
    """
    family = solution.family
    s0 = solution.s0

    def h(s):
        value, _ = quad(lambda t: float(family.q(t)) ** -1.5, 0.0, s, epsabs=1e-14, epsrel=1e-13, limit=200)
        return value

    def dh(s):
        return float(family.q(s)) ** -1.5

    # 外法向在 −s₀ 处为 −∂_s
    ratio_right = dh(s0) / h(s0)
    ratio_left = -dh(-s0) / h(-s0)
    mu = ratio_right
    if mu <= 0:
        raise SolverFailureError(f"μ 非正: {mu}")
    return {
        "mu": mu,
        "eigenvalue": float(ctn(family.kind, solution.r)) + mu,
        "ratio_left": ratio_left,
        "ratio_right": ratio_right,
    }


def sigma_one_sectors(solution: CatenoidSolution, elements: int = 2000, tol: float = 1e-4) -> Dict:
    """
    记录 σ₁ = ctn r 落在哪些模态：m=0 中由 Φ₁ 实现，m=1 中由 B 实现
    """
    problem = catenoid_radial_problem(solution.family, solution.s0, elements)
    alpha = 2.0 * solution.family.c
    target = float(ctn(solution.family.kind, solution.r))
    sectors = {}
    for m in (0, 1):
        sigmas = steklov_alpha_spectrum(assemble_radial(problem, m), alpha, 2).sigmas
        sectors[m] = [float(s) for s in sigmas]
    modes = [m for m, sigmas in sectors.items() if any(abs(s - target) <= tol for s in sigmas)]
    return {
        "sigma_1": target,
        "sector_sigmas": {str(m): v for m, v in sectors.items()},
        "modes": modes,
        "multiplicity": sum(1 if m == 0 else 2 for m in modes),
        "a0_vanishes": 0 not in modes,
    }


def verification_report(r_hyperbolic: float = 1.0, r_spherical: float = 0.6) -> Dict:
    """径向方程全部检查的汇总"""
    checks = {}
    t = np.linspace(0.05, 1.4, 40)
    checks["ball_spherical_m0_cos"] = ode_residual(ball_ode("spherical", 3, 0), _trig_solution(SpaceKind.SPHERICAL, True), t)
    checks["ball_hyperbolic_m1_sinh"] = ode_residual(ball_ode("hyperbolic", 3, 1), _trig_solution(SpaceKind.HYPERBOLIC, False), t)
    checks["closed_form_spherical_k3"] = closed_form_difference(ball_ode("spherical", 3, 0), [0.3, 0.6, 1.0])
    checks["closed_form_hyperbolic_k3"] = closed_form_difference(ball_ode("hyperbolic", 3, 0), [0.3, 0.6, 1.0])

    singularities = [singularity_check(ball_ode(kind, k, 0)) for kind, k in
                     (("spherical", 3), ("hyperbolic", 2), ("hyperbolic", 3))]

    catenoids = {}
    for kind, r in (("hyperbolic", r_hyperbolic), ("spherical", r_spherical)):
        solution = find_critical_catenoid(kind, r)
        ode0 = catenoid_ode(solution.family, 0, solution.s0)
        ode1 = catenoid_ode(solution.family, 1, solution.s0)
        s = np.linspace(-solution.s0, solution.s0, 21)
        catenoids[kind] = {
            "solution": solution.to_dict(),
            "residual_m0": max(ode_residual(ode0, f, s) for _, f in ode0.first_solutions),
            "residual_m1": ode_residual(ode1, ode1.first_solutions[0][1], s),
            "second_solution_residual": max(
                abs(d2 + float(ode1.p(x)) * d1 + float(ode1.q(x)) * y)
                for x in np.linspace(0.05, solution.s0, 8)
                for y, d1, d2 in [second_solution_derivatives(ode1, x)]),
            "wronskian": wronskian_check(ode1, 0.5 * solution.s0),
            "mu": mu_value(solution),
        }

    passed = (checks["ball_spherical_m0_cos"] <= 1e-12 and checks["ball_hyperbolic_m1_sinh"] <= 1e-12
              and checks["closed_form_spherical_k3"] <= 1e-8 and checks["closed_form_hyperbolic_k3"] <= 1e-8
              and all(item["unbounded"] for item in singularities)
              and all(c["residual_m0"] <= 1e-8 and c["residual_m1"] <= 1e-8 and c["mu"]["mu"] > 0
                      and c["wronskian"] > 1e-10 for c in catenoids.values()))
    return {"checks": checks, "singularities": singularities, "catenoids": catenoids, "passed": passed}


def main():
    parser = argparse.ArgumentParser(description='径向方程检查')
    parser.add_argument('--r-hyperbolic', type=float, default=1.0, help='双曲悬链面半径')
    parser.add_argument('--r-spherical', type=float, default=0.6, help='球面悬链面半径')
    args = parser.parse_args()
    print(json.dumps(verification_report(args.r_hyperbolic, args.r_spherical), ensure_ascii=False, indent=2))


if __name__ == "__main__":
    main()
