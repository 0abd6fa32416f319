#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
空间形式几何
ℝ^{n+1} 上的符号内积，以及上半球面 𝕊ⁿ₊ 与双曲空间 ℍⁿ 中测地球的距离、法向计算
"""

import math
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

import defaults
from errors import DimensionError, DomainError, ValidationError

logger = logging.getLogger(__name__)


class SpaceKind(Enum):
    SPHERICAL = "spherical"
    HYPERBOLIC = "hyperbolic"

    @property
    def curvature(self) -> int:
        """截面曲率 c，同时也是 ⟨x,x⟩ 在流形上的取值"""
        return 1 if self is SpaceKind.SPHERICAL else -1


@dataclass(frozen=True)
class AmbientSpace:
    kind: SpaceKind
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError(f"空间维数必须不小于2: n={self.n}")

    @property
    def signature(self) -> np.ndarray:
        sign = np.ones(self.n + 1)
        if self.kind is SpaceKind.HYPERBOLIC:
            sign[0] = -1.0
        return sign

    @property
    def center(self) -> np.ndarray:
        e0 = np.zeros(self.n + 1)
        e0[0] = 1.0
        return e0


def parse_kind(value) -> SpaceKind:
    if isinstance(value, SpaceKind):
        return value
    try:
        return SpaceKind(str(value).lower())
    except ValueError:
        raise ValidationError(f"未知的空间类型: {value}")


# 三角/双曲函数，按空间类型切换
def cs(kind: SpaceKind, t):
    return np.cos(t) if kind is SpaceKind.SPHERICAL else np.cosh(t)


def sn(kind: SpaceKind, t):
    return np.sin(t) if kind is SpaceKind.SPHERICAL else np.sinh(t)


def ctn(kind: SpaceKind, t):
    """cot r（球面）或 coth r（双曲），即 ∂𝔹ⁿ(r) 的边界系数"""
    return np.cos(t) / np.sin(t) if kind is SpaceKind.SPHERICAL else np.cosh(t) / np.sinh(t)


def check_radius(kind: SpaceKind, r: float) -> float:
    """检查球半径是否在允许范围内"""
    r = float(r)
    if kind is SpaceKind.SPHERICAL and not 0.0 < r < math.pi / 2:
        raise ValidationError(f"半径超出范围: 球面情形要求 0<r<π/2, r={r}", code="RADIUS_OUT_OF_RANGE")
    if kind is SpaceKind.HYPERBOLIC and not r > 0.0:
        raise ValidationError(f"半径超出范围: 双曲情形要求 r>0, r={r}", code="RADIUS_OUT_OF_RANGE")
    return r


def inner(space: AmbientSpace, x, y) -> float:
    """
    符号双线性型

    Args:
        space: 空间形式
        x, y: 长度为 n+1 的向量（也接受最后一维为 n+1 的数组，逐点计算）

    Returns:
        球面情形为欧氏内积，双曲情形为 Minkowski 内积
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != space.n + 1 or y.shape[-1] != space.n + 1:
        raise DimensionError(
            f"向量长度应为 {space.n + 1}: 得到 {x.shape[-1]} 和 {y.shape[-1]}"
        )
    return np.sum(x * y * space.signature, axis=-1)


def residual(space: AmbientSpace, x) -> float:
    """流形残差 |⟨x,x⟩ − c|"""
    return np.abs(inner(space, x, x) - space.kind.curvature)


def is_valid(space: AmbientSpace, x, tol: float = defaults.TOL_ANALYTIC) -> bool:
    x = np.asarray(x, dtype=float)
    if residual(space, x) > tol:
        return False
    if space.kind is SpaceKind.HYPERBOLIC:
        return x[0] >= 1.0 - tol
    return x[0] >= -tol


def normalize(space: AmbientSpace, x) -> np.ndarray:
    """把数值误差造成的离流形点重新缩放回流形"""
    x = np.asarray(x, dtype=float)
    q = inner(space, x, x)
    if space.kind is SpaceKind.SPHERICAL:
        if q <= 0:
            raise DomainError("零向量无法归一化到球面")
        return x / math.sqrt(q)
    if q >= 0:
        raise DomainError("类空或类光向量无法归一化到双曲面")
    return x / math.sqrt(-q)


def ball_distance(space: AmbientSpace, x, tol: float = defaults.TOL_QUADRATURE) -> float:
    """
    到球心 (1,0,…,0) 的测地距离

    Args:
        space: 空间形式
        x: 流形上的点

    Returns:
        arccos(x₀)（球面）或 arccosh(x₀)（双曲）
    """
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != space.n + 1:
        raise DimensionError(f"向量长度应为 {space.n + 1}: 得到 {x.shape[-1]}")
    x0 = float(x[0])
    if space.kind is SpaceKind.SPHERICAL:
        if abs(x0) > 1.0 + tol:
            raise DomainError(f"球面点的 x₀ 超出 [-1,1]: {x0}")
        return math.acos(min(1.0, max(-1.0, x0)))
    if x0 < 1.0 - tol:
        raise DomainError(f"双曲点的 x₀ 小于 1: {x0}")
    return math.acosh(max(1.0, x0))


def ball_boundary_normal(space: AmbientSpace, r: float, x, tol: float = defaults.TOL_QUADRATURE) -> np.ndarray:
    """
    ∂𝔹ⁿ(r) 在 x 处的外单位法向 N = (x·cs(r) − e₀)/sn(r)

    Args:
        space: 空间形式
        r: 球半径
        x: ∂𝔹ⁿ(r) 上的点

    Returns:
        满足 ⟨N,N⟩=1, ⟨N,x⟩=0 的向量
    """
    r = check_radius(space.kind, r)
    x = np.asarray(x, dtype=float)
    distance = ball_distance(space, x, tol)
    if abs(distance - r) > max(tol, 1e-7):
        raise DomainError(f"点不在半径 {r} 的球面上: 距离 {distance}", code="NOT_ON_BOUNDARY")
    return (x * cs(space.kind, r) - space.center) / sn(space.kind, r)
