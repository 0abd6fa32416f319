#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
显式参数化曲面
do Carmo–Dajczer 悬链面族、测地 k 球坐标卡、诱导度量、第二基本形式，以及临界悬链面求解器
"""

import math
import logging
import argparse
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

import defaults
from errors import (DegenerateGeometryError, DomainError, NoSolutionError, SolverFailureError,
                    ValidationError)
from spaceform import (AmbientSpace, SpaceKind, ball_boundary_normal, check_radius, cs, ctn, inner,
                       parse_kind, sn)

logger = logging.getLogger(__name__)


@lru_cache(maxsize=None)
def cached_leggauss(order: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


@dataclass(frozen=True)
class CatenoidFamily:
    """
    3 维空间形式中的旋转极小曲面族
    Φ = (A·C(φ), A·S(φ), B·cosθ, B·sinθ)，其中 C/S 为 cos/sin（球面）或 cosh/sinh（双曲）
    B² = q(s)，A² = 1 − c·q(s)
    """
    kind: SpaceKind
    a: float

    def __post_init__(self):
        if self.kind is SpaceKind.SPHERICAL and not -0.5 < self.a <= 0.0:
            raise ValidationError(f"球面悬链面参数要求 -1/2<a≤0: a={self.a}")
        if self.kind is SpaceKind.HYPERBOLIC and not self.a > 0.5:
            raise ValidationError(f"双曲悬链面参数要求 a>1/2: a={self.a}")

    @property
    def space(self) -> AmbientSpace:
        return AmbientSpace(self.kind, 3)

    @property
    def c(self) -> int:
        return self.kind.curvature

    @property
    def kappa(self) -> float:
        return math.sqrt(abs(self.a * self.a - 0.25))

    # q = B² 及其导数
    def q(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind is SpaceKind.HYPERBOLIC:
            return self.a * np.cosh(2 * s) - 0.5
        return 0.5 + self.a * np.cos(2 * s)

    def dq(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind is SpaceKind.HYPERBOLIC:
            return 2 * self.a * np.sinh(2 * s)
        return -2 * self.a * np.sin(2 * s)

    def ddq(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind is SpaceKind.HYPERBOLIC:
            return 4 * self.a * np.cosh(2 * s)
        return -4 * self.a * np.cos(2 * s)

    def radii(self, s) -> Tuple[np.ndarray, np.ndarray]:
        """返回 (A, B)，任一平方非正时抛出 DomainError"""
        q = self.q(s)
        A2 = 1.0 - self.c * q
        if np.any(q <= 0) or np.any(A2 <= 0):
            raise DomainError(f"悬链面半径在 s 处退化: a={self.a}")
        return np.sqrt(A2), np.sqrt(q)

    def dvarphi(self, s):
        A, B = self.radii(s)
        return self.kappa / (A * A * B)

    def radius_derivatives(self, s) -> Dict[str, np.ndarray]:
        """A, B, φ′ 的一阶、二阶解析导数"""
        A, B = self.radii(s)
        dq = self.dq(s)
        ddq = self.ddq(s)
        dA = -self.c * dq / (2 * A)
        dB = dq / (2 * B)
        ddA = (-self.c * ddq / 2 - dA * dA) / A
        ddB = (ddq / 2 - dB * dB) / B
        dphi = self.kappa / (A * A * B)
        ddphi = -dphi * (2 * dA / A + dB / B)
        return {"A": A, "B": B, "dA": dA, "dB": dB, "ddA": ddA, "ddB": ddB,
                "dphi": dphi, "ddphi": ddphi}

    def normB2(self, s):
        """Gauss 方程给出的 |B|² = 2(c + B″/B)"""
        d = self.radius_derivatives(s)
        return 2.0 * (self.c + d["ddB"] / d["B"])


def _varphi_scalar(family: CatenoidFamily, s: float, panel_width: float) -> float:
    if s == 0.0:
        return 0.0
    n_panels = max(1, int(math.ceil(abs(s) / panel_width)))
    edges = np.linspace(0.0, abs(s), n_panels + 1)
    x, w = cached_leggauss(defaults.GAUSS_ORDER)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    t = mid[:, None] + half[:, None] * x[None, :]
    value = float(np.sum(half[:, None] * w[None, :] * family.dvarphi(t)))
    return math.copysign(value, s)


def varphi(family: CatenoidFamily, s, panel_width: float = defaults.PANEL_WIDTH):
    """
    φ(s) = κ ∫₀^s dt / (A(t)² B(t))，复合 Gauss–Legendre 求积

    Args:
        family: 悬链面族
        s: 标量或数组
        panel_width: 每个面板的最大宽度

    Returns:
        与 s 同形状的 φ 值
    """
    s_arr = np.asarray(s, dtype=float)
    if s_arr.ndim == 0:
        return _varphi_scalar(family, float(s_arr), panel_width)
    flat = [_varphi_scalar(family, float(v), panel_width) for v in s_arr.ravel()]
    return np.array(flat).reshape(s_arr.shape)


def varphi_grid(family: CatenoidFamily, s_grid: np.ndarray) -> np.ndarray:
    """递增网格上的累积求积，供扫描使用"""
    s_grid = np.asarray(s_grid, dtype=float)
    edges = np.concatenate([[0.0], s_grid])
    x, w = cached_leggauss(defaults.GAUSS_ORDER)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    t = mid[:, None] + half[:, None] * x[None, :]
    pieces = np.sum(half[:, None] * w[None, :] * family.dvarphi(t), axis=1)
    return np.cumsum(pieces)


def _trig(kind: SpaceKind, phi):
    if kind is SpaceKind.SPHERICAL:
        return np.cos(phi), np.sin(phi)
    return np.cosh(phi), np.sinh(phi)


def catenoid_point(family: CatenoidFamily, s, theta) -> np.ndarray:
    """
    悬链面上的点

    Args:
        family: 悬链面族
        s, theta: 参数（标量或同形状数组）

    Returns:
        形状 (..., 4) 的环境坐标
    """
    s = np.asarray(s, dtype=float)
    theta = np.asarray(theta, dtype=float)
    A, B = family.radii(s)
    C, S = _trig(family.kind, varphi(family, s))
    return np.stack([A * C, A * S, B * np.cos(theta), B * np.sin(theta)], axis=-1)


def catenoid_derivatives(family: CatenoidFamily, s, theta) -> Dict[str, np.ndarray]:
    """
    Φ 及其一阶、二阶偏导数，全部解析给出（φ 本身除外）

    Returns:
        键为 point, ds, dtheta, dss, dstheta, dthetatheta 的字典，每项形状 (..., 4)
    """
    s = np.broadcast_to(np.asarray(s, dtype=float), np.broadcast(np.asarray(s), np.asarray(theta)).shape)
    theta = np.broadcast_to(np.asarray(theta, dtype=float), s.shape)
    c = family.c
    d = family.radius_derivatives(s)
    A, B, dA, dB, ddA, ddB, dphi, ddphi = (d[key] for key in
                                           ("A", "B", "dA", "dB", "ddA", "ddB", "dphi", "ddphi"))
    C, S = _trig(family.kind, varphi(family, s))
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    zero = np.zeros_like(s)

    # 旋转标架 e_r = (C, S), e_φ = (−cS, C)
    point = np.stack([A * C, A * S, B * cos_t, B * sin_t], axis=-1)
    radial = ddA - c * A * dphi ** 2
    angular = 2 * dA * dphi + A * ddphi
    return {
        "point": point,
        "ds": np.stack([dA * C - c * A * dphi * S, dA * S + A * dphi * C, dB * cos_t, dB * sin_t], axis=-1),
        "dtheta": np.stack([zero, zero, -B * sin_t, B * cos_t], axis=-1),
        "dss": np.stack([radial * C - c * angular * S, radial * S + angular * C,
                         ddB * cos_t, ddB * sin_t], axis=-1),
        "dstheta": np.stack([zero, zero, -dB * sin_t, dB * cos_t], axis=-1),
        "dthetatheta": np.stack([zero, zero, -B * cos_t, -B * sin_t], axis=-1),
    }


@dataclass(frozen=True)
class BallChart:
    """测地 k 球 𝔹^k(r) ⊂ 𝔹ⁿ(r) 的极坐标卡"""
    kind: SpaceKind
    k: int
    n: int
    r: float

    def __post_init__(self):
        object.__setattr__(self, "kind", parse_kind(self.kind))
        if not 2 <= self.k <= self.n:
            raise ValidationError(f"维数要求 2≤k≤n: k={self.k}, n={self.n}")
        check_radius(self.kind, self.r)

    @property
    def space(self) -> AmbientSpace:
        return AmbientSpace(self.kind, self.n)


def sphere_direction(angles) -> np.ndarray:
    """球坐标 (θ₁,…,θ_{k−1}) 对应的单位向量 ω ∈ 𝕊^{k−1} ⊂ ℝ^k"""
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    k = angles.shape[0] + 1
    omega = np.ones(k)
    for i, angle in enumerate(angles):
        omega[i] *= math.cos(angle)
        omega[i + 1:] *= math.sin(angle)
    return omega


def ball_point(chart: BallChart, t: float, angles, tol: float = defaults.TOL_ANALYTIC) -> np.ndarray:
    """
    坐标卡 Φ(t,θ) = (cs t, sn t·ω(θ), 0, …, 0)

    Args:
        chart: 球坐标卡
        t: 到中心的有向距离，|t| ≤ r
        angles: k−1 个角度

    Returns:
        长度 n+1 的环境坐标
    """
    if abs(t) > chart.r + tol:
        raise DomainError(f"|t| 超出球半径: t={t}, r={chart.r}")
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    if angles.shape[0] != chart.k - 1:
        raise ValidationError(f"角度个数应为 {chart.k - 1}: 得到 {angles.shape[0]}")
    x = np.zeros(chart.n + 1)
    x[0] = cs(chart.kind, t)
    x[1:chart.k + 1] = sn(chart.kind, t) * sphere_direction(angles)
    return x


def ball_derivatives(chart: BallChart, t, theta) -> Dict[str, np.ndarray]:
    """k=2 球卡 (t,θ) 的解析导数，嵌入 ℝ⁴ 的前三个分量以外补零"""
    if chart.k != 2:
        raise ValidationError("二维采样只支持 k=2 的球卡")
    t = np.asarray(t, dtype=float)
    theta = np.broadcast_to(np.asarray(theta, dtype=float), t.shape)
    c = chart.kind.curvature
    C, S = cs(chart.kind, t), sn(chart.kind, t)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    pad = [np.zeros_like(t)] * (chart.n - 2)
    zero = np.zeros_like(t)

    def stack(*cols):
        return np.stack(list(cols) + pad, axis=-1)

    return {
        "point": stack(C, S * cos_t, S * sin_t),
        "ds": stack(-c * S, C * cos_t, C * sin_t),
        "dtheta": stack(zero, -S * sin_t, S * cos_t),
        "dss": stack(-c * C, -c * S * cos_t, -c * S * sin_t),
        "dstheta": stack(zero, -C * sin_t, C * cos_t),
        "dthetatheta": stack(zero, -S * cos_t, -S * sin_t),
    }


def induced_metric(space: AmbientSpace, d_s, d_theta) -> np.ndarray:
    """
    诱导度量 g_ab = ⟨∂_aΦ, ∂_bΦ⟩

    Args:
        space: 空间形式
        d_s, d_theta: 一阶导数，形状 (..., n+1)

    Returns:
        形状 (..., 2, 2) 的对称正定矩阵
    """
    g_ss = inner(space, d_s, d_s)
    g_st = inner(space, d_s, d_theta)
    g_tt = inner(space, d_theta, d_theta)
    metric = np.stack([np.stack([g_ss, g_st], axis=-1), np.stack([g_st, g_tt], axis=-1)], axis=-2)
    det = g_ss * g_tt - g_st * g_st
    if np.any(det <= 0):
        bad = int(np.argmin(np.atleast_1d(det)))
        raise DegenerateGeometryError(f"诱导度量退化: 第 {bad} 个节点行列式 {np.atleast_1d(det)[bad]:.3e}")
    return metric


def unit_normal(space: AmbientSpace, point, d_s, d_theta) -> np.ndarray:
    """在 {Φ, Φ_s, Φ_θ} 上做带符号 Gram–Schmidt，得到空间形式切空间中的单位法向"""
    c = space.kind.curvature
    frame = [np.asarray(point, dtype=float)]
    norms = [float(c)]
    for v in (d_s, d_theta):
        w = np.asarray(v, dtype=float).copy()
        for e, ee in zip(frame, norms):
            w = w - inner(space, w, e) / ee * e
        ww = inner(space, w, w)
        if ww <= defaults.TOL_ANALYTIC:
            raise DegenerateGeometryError("切标架退化")
        frame.append(w)
        norms.append(ww)

    best, best_norm = None, 0.0
    for i in range(space.n + 1):
        w = np.zeros(space.n + 1)
        w[i] = 1.0
        for e, ee in zip(frame, norms):
            w = w - inner(space, w, e) / ee * e
        ww = inner(space, w, w)
        if ww > best_norm:
            best, best_norm = w, ww
    if best is None or best_norm <= defaults.TOL_ANALYTIC:
        raise DegenerateGeometryError("无法构造单位法向")
    return best / math.sqrt(best_norm)


@dataclass
class ImmersionSample:
    params: np.ndarray            # (N, 2) 参数 (s, θ)
    points: np.ndarray            # (N, n+1)
    metric: np.ndarray            # (N, 2, 2)
    normB2: np.ndarray            # (N,)
    meanH: np.ndarray             # (N,)
    derivatives: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)


def second_fundamental(space: AmbientSpace, derivatives: Dict[str, np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    """
    第二基本形式

    Args:
        space: n=3 的空间形式
        derivatives: catenoid_derivatives / ball_derivatives 的输出，形状 (N, n+1)

    Returns:
        (|B|², |H|) 每个节点一个值
    """
    if space.n != 3:
        raise ValidationError(f"第二基本形式只对 3 维空间形式中的曲面定义: n={space.n}")
    points = np.atleast_2d(derivatives["point"])
    d_s = np.atleast_2d(derivatives["ds"])
    d_t = np.atleast_2d(derivatives["dtheta"])
    second = [np.atleast_2d(derivatives[key]) for key in ("dss", "dstheta", "dthetatheta")]
    metric = induced_metric(space, d_s, d_t)

    normB2 = np.empty(points.shape[0])
    meanH = np.empty(points.shape[0])
    for i in range(points.shape[0]):
        nu = unit_normal(space, points[i], d_s[i], d_t[i])
        b_ss, b_st, b_tt = (float(inner(space, d2[i], nu)) for d2 in second)
        shape = np.linalg.solve(metric[i], np.array([[b_ss, b_st], [b_st, b_tt]]))
        normB2[i] = float(np.trace(shape @ shape))
        meanH[i] = abs(float(np.trace(shape)))
    return normB2, meanH


def sample_catenoid(family: CatenoidFamily, s_values, theta_values) -> ImmersionSample:
    """在张量网格 s × θ 上采样悬链面"""
    ss, tt = np.meshgrid(np.asarray(s_values, dtype=float), np.asarray(theta_values, dtype=float), indexing="ij")
    d = catenoid_derivatives(family, ss.ravel(), tt.ravel())
    space = family.space
    normB2, meanH = second_fundamental(space, d)
    return ImmersionSample(np.stack([ss.ravel(), tt.ravel()], axis=-1), d["point"],
                           induced_metric(space, d["ds"], d["dtheta"]), normB2, meanH, d)


def sample_ball(chart: BallChart, t_values, theta_values) -> ImmersionSample:
    """在张量网格 t × θ 上采样 k=2 球卡，t=0 处坐标奇异需避开"""
    tt, th = np.meshgrid(np.asarray(t_values, dtype=float), np.asarray(theta_values, dtype=float), indexing="ij")
    d = ball_derivatives(chart, tt.ravel(), th.ravel())
    space = chart.space
    if space.n == 3:
        normB2, meanH = second_fundamental(space, d)
    else:
        # 全测地，余维数大于 1 时直接取 0
        normB2 = np.zeros(tt.size)
        meanH = np.zeros(tt.size)
    return ImmersionSample(np.stack([tt.ravel(), th.ravel()], axis=-1), d["point"],
                           induced_metric(space, d["ds"], d["dtheta"]), normB2, meanH, d)


# ---------------------------------------------------------------- 临界悬链面

@dataclass
class CatenoidSolution:
    family: CatenoidFamily
    s0: float
    r: float
    residual_phi0: float
    residual_conormal: float
    attainable_range: Optional[Tuple[float, float]] = None

    @property
    def kind(self) -> SpaceKind:
        return self.family.kind

    @property
    def a(self) -> float:
        return self.family.a

    def to_dict(self) -> Dict:
        return {
            "kind": self.kind.value,
            "a": self.a,
            "s0": self.s0,
            "r": self.r,
            "residual_phi0": self.residual_phi0,
            "residual_conormal": self.residual_conormal,
        }


def _s_upper(kind: SpaceKind) -> float:
    return 3.0 if kind is SpaceKind.HYPERBOLIC else 0.5 * math.pi * (1 - 1e-6)


def _distance(kind: SpaceKind, x0):
    if kind is SpaceKind.SPHERICAL:
        return np.arccos(np.clip(x0, -1.0, 1.0))
    return np.arccosh(np.maximum(x0, 1.0))


def orthogonality_defect(family: CatenoidFamily, s, phi=None):
    """D(a,s) = B′/B − ctn r(s)，在 s₀ 处为零"""
    s = np.asarray(s, dtype=float)
    if phi is None:
        phi = varphi(family, s)
    A, B = family.radii(s)
    C, _ = _trig(family.kind, phi)
    r = _distance(family.kind, A * C)
    with np.errstate(divide="ignore"):
        return family.dq(s) / (2 * B * B) - ctn(family.kind, r)


def boundary_parameter(family: CatenoidFamily) -> float:
    """
    求 s₀：D(a,s) 在 (0, s_max) 上的第一个变号点

    Returns:
        s₀ > 0
    """
    s_grid = np.linspace(0.0, _s_upper(family.kind), defaults.SCAN_POINTS_S + 1)[1:]
    values = orthogonality_defect(family, s_grid, varphi_grid(family, s_grid))
    sign_change = np.nonzero((values[:-1] < 0) & (values[1:] >= 0))[0]
    if values[0] >= 0:
        # 第一个网格点已越过，区间 (0, s_grid[0]) 内 D(a,0) < 0
        lo, hi = 1e-12, s_grid[0]
    elif sign_change.size == 0:
        raise SolverFailureError(f"D(a,s) 在扫描区间内没有变号: a={family.a}", a=family.a)
    else:
        i = int(sign_change[0])
        lo, hi = s_grid[i], s_grid[i + 1]
    return brentq(lambda s: float(orthogonality_defect(family, s)), lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def radius_of(family: CatenoidFamily) -> Tuple[float, float]:
    """返回 (s₀, r)，r 为边界到球心的测地距离"""
    s0 = boundary_parameter(family)
    A, _ = family.radii(s0)
    C, _ = _trig(family.kind, varphi(family, s0))
    return s0, float(_distance(family.kind, A * C))


def _a_range(kind: SpaceKind) -> Tuple[float, float]:
    return defaults.HYPERBOLIC_A_RANGE if kind is SpaceKind.HYPERBOLIC else defaults.SPHERICAL_A_RANGE


@lru_cache(maxsize=None)
def scan_attainable_range(kind: SpaceKind) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    """
    在 a 方向扫描 r(a)，检查单调性

    Returns:
        (a 网格, r 值)，均为元组以便缓存
    """
    lo, hi = _a_range(kind)
    a_grid = np.linspace(lo, hi, defaults.SCAN_POINTS_A)
    logger.info(f"扫描 {kind.value} 悬链面族: a ∈ [{lo}, {hi}], {a_grid.size} 个点")

    def radius_at(a):
        return radius_of(CatenoidFamily(kind, float(a)))[1]

    with ThreadPoolExecutor(max_workers=defaults.thread_count()) as executor:
        radii = list(executor.map(radius_at, a_grid))

    steps = np.diff(radii)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise SolverFailureError(f"r(a) 在扫描范围内不单调: kind={kind.value}",
                                 a_grid=a_grid.tolist(), radii=list(radii))
    logger.info(f"可达半径范围: [{min(radii):.6f}, {max(radii):.6f}]")
    return tuple(float(a) for a in a_grid), tuple(float(r) for r in radii)


def attainable_range(kind: SpaceKind) -> Tuple[float, float]:
    _, radii = scan_attainable_range(kind)
    return min(radii), max(radii)


def free_boundary_residuals(family: CatenoidFamily, s0: float, r: float) -> Tuple[float, float]:
    """|Φ₀(s₀) − cs r| 与 |⟨Φ_s, N⟩ − 1|"""
    d = catenoid_derivatives(family, s0, 0.0)
    point = d["point"]
    residual_phi0 = abs(float(point[0]) - float(cs(family.kind, r)))
    normal = ball_boundary_normal(family.space, r, point, tol=1e-6)
    residual_conormal = abs(float(inner(family.space, d["ds"], normal)) - 1.0)
    return residual_phi0, residual_conormal


def find_critical_catenoid(kind, r: float) -> CatenoidSolution:
    """
    求自由边界临界悬链面

    Args:
        kind: 空间类型
        r: 目标球半径

    Returns:
        CatenoidSolution，两个边界残差都应小于 1e-9
    """
    kind = parse_kind(kind)
    r = check_radius(kind, r)
    a_grid, radii = scan_attainable_range(kind)
    r_min, r_max = min(radii), max(radii)
    if not r_min <= r <= r_max:
        raise NoSolutionError(f"半径 {r} 超出可达范围 [{r_min:.6f}, {r_max:.6f}]", attainable_range=(r_min, r_max))

    offsets = np.asarray(radii) - r
    index = next((i for i in range(len(offsets) - 1) if offsets[i] * offsets[i + 1] <= 0), None)
    if index is None:
        raise SolverFailureError(f"无法在 a 网格上夹逼半径 {r}")
    if offsets[index] == 0.0:
        a = a_grid[index]
    elif offsets[index + 1] == 0.0:
        a = a_grid[index + 1]
    else:
        a = brentq(lambda value: radius_of(CatenoidFamily(kind, value))[1] - r,
                   a_grid[index], a_grid[index + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps)

    family = CatenoidFamily(kind, float(a))
    s0, _ = radius_of(family)
    residual_phi0, residual_conormal = free_boundary_residuals(family, s0, r)
    logger.info(f"临界悬链面: kind={kind.value}, r={r}, a={a:.12f}, s0={s0:.12f}, "
                f"残差=({residual_phi0:.2e}, {residual_conormal:.2e})")
    return CatenoidSolution(family, float(s0), r, residual_phi0, residual_conormal, (r_min, r_max))


def main():
    parser = argparse.ArgumentParser(description='求解测地球中的临界悬链面')
    parser.add_argument('--space', required=True, choices=['spherical', 'hyperbolic'], help='空间类型')
    parser.add_argument('--r', type=float, required=True, help='球半径')
    args = parser.parse_args()

    solution = find_critical_catenoid(args.space, args.r)
    print(json.dumps(solution.to_dict(), ensure_ascii=False, indent=2))


if __name__ == "__main__":
    main()
