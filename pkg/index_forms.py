#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
二阶变分形式与指标
面积形式与能量形式的惯性指数、谱指标、指标不等式链，以及由坐标函数给出的极值性证书
"""

import json
import math
import logging
import argparse
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import quad
from scipy.linalg import LinAlgError, eigvalsh, null_space
from scipy.sparse import block_diag, bmat, coo_matrix, csr_matrix, issparse

import defaults
from discretize import (RadialProblem, assemble_radial, ball_radial_problem, catenoid_radial_problem,
                        harmonic_multiplicity, quadrature_points, radial_bilinear, weighted_mass)
from errors import (AssemblyError, DimensionError, EigenspaceMatchError, SpectrumTooShortError,
                    ValidationError)
from radial_ode import ball_ode, catenoid_ode
from robin_solver import SpectralResult, ball_spectrum, default_alpha, radial_spectrum, steklov_alpha_spectrum
from spaceform import check_radius, cs, ctn, parse_kind, sn
from surfaces import BallChart, CatenoidSolution, find_critical_catenoid, varphi

logger = logging.getLogger(__name__)

# 曲面维数
SURFACE_DIM = 2


@dataclass
class IndexForm:
    """径向模态空间上的对称二次型"""
    A: csr_matrix
    mass: csr_matrix
    constraints: str = "none"
    mode: int = 0
    multiplicity: int = 1
    potential: Optional[np.ndarray] = field(default=None, repr=False)
    boundary_coefficient: float = 0.0
    basis: Optional[csr_matrix] = field(default=None, repr=False)
    coords: Optional[np.ndarray] = field(default=None, repr=False)
    label: str = "form"


@dataclass
class Inertia:
    index: int
    nullity: int
    gap_tol: float
    below: Optional[float] = None     # 最大的负特征值
    above: Optional[float] = None     # 最小的正特征值
    negatives: List[float] = field(default_factory=list)
    smallest: float = 0.0

    @property
    def spectral_gap(self) -> Optional[float]:
        """负特征值簇到零的距离"""
        return None if self.below is None else -self.below

    def to_dict(self) -> Dict:
        return {
            "index": self.index,
            "nullity": self.nullity,
            "gap_tol": self.gap_tol,
            "below": self.below,
            "above": self.above,
            "spectral_gap": self.spectral_gap,
            "smallest": self.smallest,
            "negatives": self.negatives,
        }


# ---------------------------------------------------------------- 面积形式

def radial_index_form(problem: RadialProblem, m: int, potential: Optional[np.ndarray], boundary_coefficient: float,
                      label: str = "area") -> IndexForm:
    """
    A = K − V·M − b·Bd，V 为逐节点位势，b 为边界系数

    Args:
        problem: 径向问题
        m: 模态
        potential: 节点上的位势
        boundary_coefficient: 边界项系数

    Returns:
        IndexForm
    """
    if potential is None:
        raise ValidationError("缺少 |B|² 采样，无法组装位势")
    potential = np.asarray(potential, dtype=float)
    if potential.shape != problem.nodes.shape or not np.all(np.isfinite(potential)):
        raise ValidationError(f"位势采样应与径向节点一致: 期望 {problem.nodes.shape}，得到 {potential.shape}")
    forms = assemble_radial(problem, m)
    P = weighted_mass(problem, potential, m)
    A = (forms.K - P - boundary_coefficient * forms.Bd).tocsr()
    return IndexForm(A=A, mass=forms.M, constraints="none", mode=m, multiplicity=problem.multiplicity(m),
                     potential=potential, boundary_coefficient=float(boundary_coefficient), coords=forms.coords,
                     label=f"{label}-m{m}")


def area_index_form(surface: Union[CatenoidSolution, BallChart], m: int = 0,
                    elements: int = defaults.INDEX_RADIAL_ELEMENTS) -> IndexForm:
    """
    面积二阶变分在第 m 个模态上的形式

    悬链面为标量法向变分，位势 2c + |B|²；k 维测地球对每个平坦法向取位势 c·k
    边界系数均为 ctn r
    """
    if isinstance(surface, CatenoidSolution):
        family = surface.family
        problem = catenoid_radial_problem(family, surface.s0, elements)
        potential = 2.0 * family.c + family.normB2(problem.nodes)
        coefficient = float(ctn(family.kind, surface.r))
        label = f"catenoid-{family.kind.value}"
    elif isinstance(surface, BallChart):
        problem = ball_radial_problem(surface.kind, surface.k, surface.r, elements)
        potential = np.full(problem.nodes.shape, float(surface.kind.curvature * surface.k))
        coefficient = float(ctn(surface.kind, surface.r))
        label = f"ball-{surface.kind.value}-k{surface.k}"
    else:
        raise ValidationError(f"不支持的曲面类型: {type(surface).__name__}")
    return radial_index_form(problem, m, potential, coefficient, label)


# ---------------------------------------------------------------- 惯性

def _dense_symmetric(A, name: str) -> np.ndarray:
    matrix = A.toarray() if issparse(A) else np.asarray(A, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionError(f"{name}必须是方阵: 得到 {matrix.shape}")
    scale = float(np.max(np.abs(matrix))) if matrix.size else 0.0
    if matrix.size and float(np.max(np.abs(matrix - matrix.T))) > 1e-12 * max(scale, 1.0):
        raise ValidationError(f"{name}不对称")
    return 0.5 * (matrix + matrix.T)


def inertia(A, gap_tol: Optional[float] = None, mass=None) -> Inertia:
    """
    对称矩阵的惯性（Sylvester），负特征值个数与所取正定质量无关

    给出质量矩阵时求广义问题 A x = λ M x，特征值不随网格尺度缩放，
    零判定阈值缺省为 GAP_TOL_MASS；否则对 A 本身求特征值，阈值缺省为 GAP_TOL_REL·‖A‖

    Args:
        A: 稀疏或稠密对称矩阵
        gap_tol: 零特征值判定阈值
        mass: 正定质量矩阵，可选

    Returns:
        Inertia
    """
    matrix = _dense_symmetric(A, "形式矩阵")
    if mass is None:
        values = eigvalsh(matrix)
        norm = float(np.max(np.abs(values))) if values.size else 0.0
        default_tol = defaults.GAP_TOL_REL * norm
    else:
        weight = _dense_symmetric(mass, "质量矩阵")
        if weight.shape != matrix.shape:
            raise DimensionError(f"质量矩阵形状 {weight.shape} 与形式矩阵 {matrix.shape} 不一致")
        try:
            values = eigvalsh(matrix, weight)
        except LinAlgError as e:
            raise AssemblyError(f"质量矩阵不是正定的: {str(e)}")
        default_tol = defaults.GAP_TOL_MASS
    tol = default_tol if gap_tol is None else float(gap_tol)
    negative = values[values < -tol]
    positive = values[values > tol]
    return Inertia(index=int(negative.size), nullity=int(values.size - negative.size - positive.size),
                   gap_tol=float(tol),
                   below=float(negative[-1]) if negative.size else None,
                   above=float(positive[0]) if positive.size else None,
                   negatives=[float(v) for v in negative],
                   smallest=float(values[0]) if values.size else 0.0)


def _warn_ambiguous(label: str, result: Inertia) -> None:
    if result.nullity:
        logger.warning(f"{label}: {result.nullity} 个特征值落在 ±{result.gap_tol:.2e} 内，"
                       f"指标 {result.index}，计入后为 {result.index + result.nullity}")


def morse_index(form, gap_tol: Optional[float] = None) -> Tuple[int, int]:
    """负特征值个数与零特征值估计，后者不计入指标"""
    if isinstance(form, IndexForm):
        result = inertia(form.A, gap_tol, form.mass)
    else:
        result = inertia(form, gap_tol)
    _warn_ambiguous(form.label if isinstance(form, IndexForm) else "matrix", result)
    return result.index, result.nullity


def _mode_table(build: Callable[[int], IndexForm], modes: Sequence[int]) -> List[Dict]:
    """逐模态组装并计算惯性，组装并发，结果按模态顺序返回"""

    def solve(m):
        form = build(m)
        result = inertia(form.A, mass=form.mass)
        _warn_ambiguous(form.label, result)
        row = {"mode": int(m), "multiplicity": int(form.multiplicity)}
        row.update(result.to_dict())
        return row

    with ThreadPoolExecutor(max_workers=defaults.thread_count()) as executor:
        return list(executor.map(solve, modes))


def _totals(rows: Sequence[Dict]) -> Tuple[int, int]:
    index = sum(row["multiplicity"] * row["index"] for row in rows)
    nullity = sum(row["multiplicity"] * row["nullity"] for row in rows)
    return int(index), int(nullity)


def area_mode_table(surface, mmax: int = defaults.DEFAULT_MMAX,
                    elements: int = defaults.INDEX_RADIAL_ELEMENTS) -> List[Dict]:
    return _mode_table(lambda m: area_index_form(surface, m, elements), range(mmax + 1))


# ---------------------------------------------------------------- 谱指标

def spectral_index_report(spectrum, threshold: float, tie_tol: Optional[float] = None) -> Dict:
    """
    #{σ_j < threshold − tie_tol}，阈值附近的特征值单独列出

    Args:
        spectrum: SpectralResult 或升序特征值序列
        threshold: cot r 或 coth r

    Returns:
        count, threshold, tie_tol, boundary_cases
    """
    sigmas = spectrum.sigmas if isinstance(spectrum, SpectralResult) else spectrum
    sigmas = np.sort(np.asarray(sigmas, dtype=float))
    tie_tol = defaults.TIE_TOL if tie_tol is None else float(tie_tol)
    if sigmas.size == 0:
        raise ValidationError("谱为空")
    if sigmas[-1] < threshold - tie_tol:
        raise SpectrumTooShortError(
            f"最后一个特征值 {sigmas[-1]:.6g} 仍低于阈值 {threshold:.6g}，需要扩展谱",
            computed=int(sigmas.size), last=float(sigmas[-1]), threshold=float(threshold))
    count = int(np.sum(sigmas < threshold - tie_tol))
    boundary = [int(j) for j in np.nonzero(np.abs(sigmas - threshold) <= tie_tol)[0]]
    if boundary:
        logger.warning(f"阈值 {threshold:.12g} 附近的特征值序号 {boundary} 按边界情形处理，未计入")
    return {"count": count, "threshold": float(threshold), "tie_tol": float(tie_tol), "boundary_cases": boundary}


def spectral_index(spectrum, threshold: float, tie_tol: Optional[float] = None) -> int:
    return spectral_index_report(spectrum, threshold, tie_tol)["count"]


# ---------------------------------------------------------------- 能量形式

def tangency_basis(solution: CatenoidSolution, nodes: np.ndarray) -> csr_matrix:
    """
    约束子空间的逐节点正交基

    分量顺序 (V⁰, V¹, V^ρ, V^τ)，每个分量占 len(nodes) 个自由度
    内部节点满足 ⟨V,Φ⟩ = 0（3 个自由度），边界节点另加 V⁰ = 0（2 个自由度）

    Returns:
        列正交的稀疏矩阵 Z，形状 (4N, 约束后自由度数)
    """
    family = solution.family
    kind = family.kind
    n = nodes.size
    d = family.radius_derivatives(nodes)
    phi = varphi(family, nodes)
    normal = np.stack([family.c * d["A"] * cs(kind, phi), d["A"] * sn(kind, phi), d["B"]], axis=-1)
    ends = {0, n - 1}

    rows, cols, vals = [], [], []
    column = 0
    for i in range(n):
        constraint = normal[i][None, :]
        if i in ends:
            constraint = np.vstack([constraint, [1.0, 0.0, 0.0]])
        basis = null_space(constraint)
        expected = 3 - constraint.shape[0]
        if basis.shape[1] != expected:
            raise AssemblyError(f"节点 {i} 处约束秩亏: 零空间维数 {basis.shape[1]}，期望 {expected}", node=i)
        for b in range(expected):
            for j in range(3):
                rows.append(j * n + i)
                cols.append(column)
                vals.append(basis[j, b])
            column += 1
    # V^τ 不受约束
    for i in range(n):
        rows.append(3 * n + i)
        cols.append(column)
        vals.append(1.0)
        column += 1

    Z = coo_matrix((vals, (rows, cols)), shape=(4 * n, column)).tocsr()
    gram = (Z.T @ Z).toarray()
    defect = float(np.max(np.abs(gram - np.eye(column))))
    if defect > 1e-12:
        raise AssemblyError(f"约束投影不幂等: ‖ZᵀZ − I‖ = {defect:.2e}")
    return Z


def energy_form(solution: CatenoidSolution, m: int, elements: int = defaults.INDEX_RADIAL_ELEMENTS,
                basis: Optional[csr_matrix] = None) -> IndexForm:
    """
    能量二阶变分在随动 Fourier 模态 m 上的形式

    V⁰, V¹, V^ρ 取 cos mθ，V^τ 取 sin mθ；(V², V³) = V^ρ(cosθ, sinθ) + V^τ(−sinθ, cosθ)
    S_E = Σ ε_j ∫(|∇V^j|² − c·2·(V^j)²) − ctn r Σ ε_j ∫_∂ (V^j)²，ε₀ = c，其余为 1
    m ≥ 1 时 cos/sin 互换得到同构的一份，重数为 2
    """
    family = solution.family
    c = family.c
    problem = catenoid_radial_problem(family, solution.s0, elements)
    nodes = problem.nodes
    n = nodes.size
    B = family.radii(quadrature_points(nodes))[1]
    orbit = problem.orbit
    signs = (float(c), 1.0, 1.0, 1.0)
    angular = (m * m, m * m, m * m + 1, m * m + 1)

    blocks = [[None] * 4 for _ in range(4)]
    for j in range(4):
        blocks[j][j] = orbit * signs[j] * radial_bilinear(nodes, B, angular[j] / B - c * SURFACE_DIM * B)
    if m:
        # 2m/B·(V^ρV^τ) 交叉项
        cross = orbit * radial_bilinear(nodes, np.zeros_like(B), 2.0 * m / B)
        blocks[2][3] = cross
        blocks[3][2] = cross
    A_full = bmat(blocks, format="csr")

    ends = np.array([0, n - 1])
    end_weight = orbit * family.radii(nodes[ends])[1]
    coefficient = float(ctn(family.kind, solution.r))
    rows = np.concatenate([j * n + ends for j in range(4)])
    vals = np.concatenate([-coefficient * signs[j] * end_weight for j in range(4)])
    A_full = (A_full + csr_matrix((vals, (rows, rows)), shape=A_full.shape)).tocsr()

    mass = orbit * radial_bilinear(nodes, np.zeros_like(B), B)
    M_full = block_diag([mass] * 4, format="csr")

    Z = tangency_basis(solution, nodes) if basis is None else basis
    A = (Z.T @ A_full @ Z).tocsr()
    A = (0.5 * (A + A.T)).tocsr()
    return IndexForm(A=A, mass=(Z.T @ M_full @ Z).tocsr(), constraints="⟨V,Φ⟩=0 at nodes; V⁰=0 on boundary",
                     mode=m, multiplicity=1 if m == 0 else 2, boundary_coefficient=coefficient, basis=Z,
                     coords=nodes, label=f"energy-{family.kind.value}-m{m}")


def energy_mode_table(solution: CatenoidSolution, mmax: int = defaults.DEFAULT_MMAX,
                      elements: int = defaults.INDEX_RADIAL_ELEMENTS) -> List[Dict]:
    nodes = catenoid_radial_problem(solution.family, solution.s0, elements).nodes
    Z = tangency_basis(solution, nodes)
    return _mode_table(lambda m: energy_form(solution, m, elements, Z), range(mmax + 1))


def energy_index(solution: CatenoidSolution, mmax: int = defaults.DEFAULT_MMAX,
                 elements: int = defaults.INDEX_RADIAL_ELEMENTS) -> int:
    """约束能量形式在 |m| ≤ mmax 上的负方向总数"""
    return _totals(energy_mode_table(solution, mmax, elements))[0]


def rotation_null_check(solution: CatenoidSolution, elements: int = defaults.INDEX_RADIAL_ELEMENTS) -> Dict:
    """
    旋转场 Φ_θ = B·e_τ 的能量 S_E(Φ_θ, Φ_θ)

    连续值用自适应积分计算，离散值取 m=0 扭转分量上的二次型

    Returns:
        value, norm (= ∫|Φ_θ|²), ratio, discrete_value, discrete_ratio, passed
    """
    family = solution.family
    c = family.c
    s0 = solution.s0
    coefficient = float(ctn(family.kind, solution.r))

    def density(s):
        d = family.radius_derivatives(s)
        return float((d["dB"] ** 2 + 1.0 - 2.0 * c * d["B"] ** 2) * d["B"])

    interior, _ = quad(density, -s0, s0, epsabs=1e-14, epsrel=1e-13, limit=200)
    edge = float(family.radii(s0)[1])
    value = 2 * math.pi * (interior - coefficient * 2.0 * edge ** 3)
    norm, _ = quad(lambda s: float(family.radii(s)[1]) ** 3, -s0, s0, epsabs=1e-14, epsrel=1e-13, limit=200)
    norm *= 2 * math.pi

    form = energy_form(solution, 0, elements)
    nodes = form.coords
    x = np.zeros(form.A.shape[0])
    x[-nodes.size:] = family.radii(nodes)[1]
    discrete = float(x @ (form.A @ x))
    return {
        "value": value,
        "norm": norm,
        "ratio": abs(value) / norm,
        "discrete_value": discrete,
        "discrete_ratio": abs(discrete) / norm,
        "passed": abs(value) <= 1e-6 * norm,
    }


# ---------------------------------------------------------------- 报告

@dataclass
class IndexReport:
    label: str
    ind: int
    ind_S: int
    ind_E: Optional[int]
    nullity_estimate: int
    n: int
    dim_moduli: Optional[int]           # 仅对二维曲面给出
    lower_bound_applies: bool           # 不含于过原点的超平面时 Ind ≥ Ind_S + n 才适用
    details: Dict = field(default_factory=dict)

    @property
    def inequality_checks(self) -> Dict[str, Optional[bool]]:
        return {
            "energy_bound": None if self.ind_E is None else self.ind_E <= self.n * self.ind_S,
            "lower_bound": (self.ind >= self.ind_S + self.n) if self.lower_bound_applies else None,
            "upper_bound": None if self.dim_moduli is None else self.ind <= self.n * self.ind_S + self.dim_moduli,
        }

    @property
    def passed(self) -> bool:
        return all(value is not False for value in self.inequality_checks.values())

    def to_dict(self) -> Dict:
        return {
            "label": self.label,
            "ind": self.ind,
            "ind_S": self.ind_S,
            "ind_E": self.ind_E,
            "nullity_estimate": self.nullity_estimate,
            "n": self.n,
            "dim_moduli": self.dim_moduli,
            "inequality_checks": self.inequality_checks,
            "passed": self.passed,
            "tolerances": defaults.resolved_tolerances(),
            "details": self.details,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)


def catenoid_index_report(solution: CatenoidSolution, mmax: int = defaults.DEFAULT_MMAX,
                          elements: int = defaults.INDEX_RADIAL_ELEMENTS,
                          spectrum_elements: int = defaults.DEFAULT_RADIAL_ELEMENTS,
                          with_energy: bool = True) -> IndexReport:
    """
    临界悬链面的 Morse 指标、谱指标与能量指标

    Args:
        solution: 临界悬链面
        mmax: 模态截断
        elements: 指标形式的径向单元数
        spectrum_elements: 谱指标所用的径向单元数
        with_energy: 是否计算能量指标

    Returns:
        IndexReport，details 中含逐模态惯性、截断稳定性与 Φ_θ 零方向检查
    """
    family = solution.family
    kind = family.kind
    logger.info(f"悬链面指标: kind={kind.value}, r={solution.r}, mmax={mmax}, 单元数={elements}")
    # 多算一个模态用于截断检查
    area = area_mode_table(solution, mmax + 1, elements)
    kept = area[:mmax + 1]
    ind, nullity = _totals(kept)
    truncation = {
        "higher_modes_zero": all(row["index"] == 0 for row in kept if row["mode"] >= 2),
        "monotone": area[mmax + 1]["smallest"] > area[mmax]["smallest"],
        "smallest_mmax": area[mmax]["smallest"],
        "smallest_next": area[mmax + 1]["smallest"],
    }

    problem = catenoid_radial_problem(family, solution.s0, spectrum_elements)
    spectrum = radial_spectrum(problem, default_alpha(kind, SURFACE_DIM), 2, mmax)
    spectral = spectral_index_report(spectrum, float(ctn(kind, solution.r)))

    details = {"area_modes": kept, "truncation": truncation, "spectral": spectral,
               "sigmas": [float(s) for s in spectrum.sigmas[:6]], "solution": solution.to_dict()}
    ind_E = None
    if with_energy:
        energy = energy_mode_table(solution, mmax, elements)
        ind_E, energy_nullity = _totals(energy)
        details["energy_modes"] = energy
        details["energy_nullity"] = energy_nullity
        details["rotation_null"] = rotation_null_check(solution, elements)

    report = IndexReport(label=f"catenoid-{kind.value}", ind=ind, ind_S=spectral["count"], ind_E=ind_E,
                         nullity_estimate=nullity, n=3, dim_moduli=1, lower_bound_applies=True, details=details)
    logger.info(f"悬链面指标结果: Ind={report.ind}, Ind_S={report.ind_S}, Ind_E={report.ind_E}, "
                f"零方向={report.nullity_estimate}")
    return report


def ball_gram(chart: BallChart, elements: int = defaults.INDEX_RADIAL_ELEMENTS) -> Dict:
    """
    单个法向上面积形式在 span{1, cs t} 上的 Gram 矩阵

    k=2 时连续值的行列式为 −4π²(1 − cs r)²
    """
    form = area_index_form(chart, 0, elements)
    V = np.stack([np.ones_like(form.coords), cs(chart.kind, form.coords)], axis=1)
    gram = V.T @ (form.A @ V)
    values = np.linalg.eigvalsh(gram)
    result = {
        "gram": gram.tolist(),
        "eigenvalues": values.tolist(),
        "determinant": float(np.linalg.det(gram)),
        "negative_definite": bool(np.all(values < 0)),
    }
    if chart.k == 2:
        result["reference_determinant"] = -4 * math.pi ** 2 * (1 - float(cs(chart.kind, chart.r))) ** 2
    return result


def ball_index_report(kind, k: int, n: int, r: float, mmax: int = 3,
                      elements: int = defaults.INDEX_RADIAL_ELEMENTS,
                      spectrum_elements: int = defaults.DEFAULT_RADIAL_ELEMENTS) -> IndexReport:
    """
    测地 k 球在 n 维测地球中的 Morse 指标

    每个法向一个标量形式，取完整 H¹ 离散空间，按球谐重数求和后乘以 n−k

    k=2 时单个法向的形式在 span{1, cs t} 上的 Gram 行列式为 −4π²(1 − cs r)² < 0，
    这个二维子空间上只有一个负方向，故每个法向贡献 1，总指标为 n−k 而非 2(n−k)；
    ball_gram 给出该行列式供核对
    """
    kind = parse_kind(kind)
    chart = BallChart(kind, k, n, r)
    if n <= k:
        raise ValidationError(f"需要 n>k: k={k}, n={n}")
    logger.info(f"测地球指标: kind={kind.value}, k={k}, n={n}, r={r}")
    rows = area_mode_table(chart, mmax, elements)
    for row in rows:
        row["multiplicity"] = harmonic_multiplicity(k, row["mode"])
    per_direction, null_per_direction = _totals(rows)
    directions = n - k

    spectrum = ball_spectrum(kind, k, r, elements=spectrum_elements, mmax=mmax, count=4)
    spectral = spectral_index_report(spectrum, float(ctn(kind, r)))
    gaps = [row["spectral_gap"] for row in rows if row["spectral_gap"] is not None]
    details = {
        "modes": rows,
        "directions": directions,
        "per_direction": per_direction,
        "negative_eigenvalues": [v for row in rows for v in row["negatives"]],
        "spectral_gap": min(gaps) if gaps else None,
        "gram": ball_gram(chart, elements),
        "spectral": spectral,
    }
    return IndexReport(label=f"ball-{kind.value}-k{k}-n{n}", ind=directions * per_direction,
                       ind_S=spectral["count"], ind_E=None, nullity_estimate=directions * null_per_direction,
                       n=n, dim_moduli=0 if k == 2 else None, lower_bound_applies=False, details=details)


# ---------------------------------------------------------------- 极值性证书

@dataclass
class CoordinateProfile:
    """坐标函数 v = scale·f(t)·Θ(mθ)，f 返回 (值, 一阶导, 二阶导)"""
    name: str
    mode: int
    angular: str
    function: Callable
    scale: float = 1.0

    def radial(self, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        y, dy, _ = self.function(t)
        return self.scale * np.asarray(y, dtype=float), self.scale * np.asarray(dy, dtype=float)

    def circle(self, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        m = self.mode
        if self.angular == "one":
            return np.ones_like(theta), np.zeros_like(theta)
        if self.angular == "cos":
            return np.cos(m * theta), -m * np.sin(m * theta)
        if self.angular == "sin":
            return np.sin(m * theta), m * np.cos(m * theta)
        raise ValidationError(f"未知的角向因子: {self.angular}")


def catenoid_coordinates(solution: CatenoidSolution, elements: int = defaults.CERTIFICATE_RADIAL_ELEMENTS):
    """悬链面的坐标函数 (A·cs φ, A·sn φ, B cosθ, B sinθ) 及其径向问题"""
    family = solution.family
    problem = catenoid_radial_problem(family, solution.s0, elements)
    even, odd = [f for _, f in catenoid_ode(family, 0, solution.s0).first_solutions]
    radius = catenoid_ode(family, 1, solution.s0).first_solutions[0][1]
    profiles = [CoordinateProfile("v0", 0, "one", even), CoordinateProfile("v1", 0, "one", odd),
                CoordinateProfile("v2", 1, "cos", radius), CoordinateProfile("v3", 1, "sin", radius)]
    return problem, profiles


def ball_coordinates(kind, r: float, elements: int = defaults.CERTIFICATE_RADIAL_ELEMENTS, scale: float = 1.0):
    """测地 2 球的坐标函数 (cs t, sn t cosθ, sn t sinθ)；scale ≠ 1 时截面半径被放缩"""
    kind = parse_kind(kind)
    problem = ball_radial_problem(kind, SURFACE_DIM, r, elements)
    even = ball_ode(kind, SURFACE_DIM, 0).first_solutions[0][1]
    odd = ball_ode(kind, SURFACE_DIM, 1).first_solutions[0][1]
    profiles = [CoordinateProfile("v0", 0, "one", even), CoordinateProfile("v1", 1, "cos", odd, scale),
                CoordinateProfile("v2", 1, "sin", odd, scale)]
    return problem, profiles


def _match_eigenspaces(problem: RadialProblem, profiles: Sequence[CoordinateProfile], alpha: float,
                       match_tol: float) -> Tuple[List[Dict], float]:
    spectra = {}
    matched = []
    for profile in profiles:
        if profile.mode not in spectra:
            forms = assemble_radial(problem, profile.mode)
            spectra[profile.mode] = (forms, steklov_alpha_spectrum(forms, alpha, forms.boundary_dofs.size))
        forms, spectrum = spectra[profile.mode]
        v, _ = profile.radial(forms.coords)
        quotient = float(v @ ((forms.K - alpha * forms.M) @ v)) / float(v @ (forms.Bd @ v))
        j = int(np.argmin(np.abs(spectrum.sigmas - quotient)))
        if abs(spectrum.sigmas[j] - quotient) > match_tol * max(1.0, abs(quotient)):
            raise EigenspaceMatchError(
                f"{profile.name} 的 Rayleigh 商 {quotient:.8g} 不在模态 {profile.mode} 的计算谱中",
                name=profile.name, rayleigh=quotient, nearest=float(spectrum.sigmas[j]))
        matched.append({"name": profile.name, "mode": profile.mode, "rayleigh": quotient,
                        "sigma": float(spectrum.sigmas[j]), "index": j})
    ground = min(float(spectrum.sigmas[0]) for _, spectrum in spectra.values())
    return matched, ground


def extremality_certificate(problem: RadialProblem, profiles: Sequence[CoordinateProfile], kind, r: float,
                            alpha: Optional[float] = None, angles: int = 16, tol_pointwise: float = 1e-7,
                            tol_spectral: float = 1e-5, match_tol: float = 1e-4) -> Dict:
    """
    由坐标函数 v₀..v_n 检查逆向极值性条件

    (i)  Σ ε_j dv_j⊗dv_j = g，ε₀ = c
    (ii) Σ ε_j v_j² = c
    梯度恒等式 Σ ε_j |∇v_j|² = 2，特征值关系 σ_k = −c·ctn²r·σ₀，
    边界恒等式 σ_k = (σ_k − σ₀)v₀²

    Args:
        problem: 二维旋转坐标卡的径向问题，度量为 dt² + w(t)²dθ²
        profiles: 坐标函数，第一个为 v₀
        kind: 空间类型
        r: 球半径
        alpha: 频率，缺省为 ±2

    Returns:
        各项残差、匹配到的特征值与逐项通过情况
    """
    kind = parse_kind(kind)
    r = check_radius(kind, r)
    c = kind.curvature
    if abs(problem.orbit - 2 * math.pi) > 1e-12:
        raise ValidationError("证书只支持二维旋转坐标卡")
    if len(profiles) < 2:
        raise ValidationError("至少需要 v₀ 和一个更高的坐标函数")
    alpha = default_alpha(kind, SURFACE_DIM) if alpha is None else float(alpha)
    signature = np.ones(len(profiles))
    signature[0] = c

    t = problem.nodes
    theta = np.linspace(0.0, 2 * math.pi, angles, endpoint=False)
    w = problem.weight(t)
    values, d_t, d_theta = [], [], []
    for profile in profiles:
        y, dy = profile.radial(t)
        ang, dang = profile.circle(theta)
        values.append(y[:, None] * ang[None, :])
        d_t.append(dy[:, None] * ang[None, :])
        d_theta.append(y[:, None] * dang[None, :])
    eps = signature[:, None, None]
    V, DT, DTH = np.stack(values), np.stack(d_t), np.stack(d_theta)

    g_tt = np.sum(eps * DT * DT, axis=0)
    g_tth = np.sum(eps * DT * DTH, axis=0)
    g_thth = np.sum(eps * DTH * DTH, axis=0)
    residual_metric = float(max(np.max(np.abs(g_tt - 1.0)), np.max(np.abs(g_tth)),
                                np.max(np.abs(g_thth - (w ** 2)[:, None]))))
    residual_sum = float(np.max(np.abs(np.sum(eps * V * V, axis=0) - c)))
    interior = w > 1e-8
    gradient = g_tt[interior] + g_thth[interior] / (w[interior] ** 2)[:, None]
    residual_gradient = float(np.max(np.abs(gradient - SURFACE_DIM)))

    matched, ground = _match_eigenspaces(problem, profiles, alpha, match_tol)
    sigma0 = matched[0]["sigma"]
    higher = np.array([item["sigma"] for item in matched[1:]])
    sigma_k = float(np.mean(higher))
    residual_relation = abs(sigma_k + c * float(ctn(kind, r)) ** 2 * sigma0)
    ends = [index for flag, index in zip(problem.boundary, (0, t.size - 1)) if flag]
    v0_edge, _ = profiles[0].radial(t[ends])
    residual_boundary = float(np.max(np.abs(sigma_k - (sigma_k - sigma0) * v0_edge ** 2)))

    checks = {
        "metric": residual_metric <= tol_pointwise,
        "sum_of_squares": residual_sum <= tol_pointwise,
        "gradient": residual_gradient <= tol_pointwise,
        "v0_ground": abs(sigma0 - ground) <= match_tol * max(1.0, abs(ground)),
        "higher_common": (float(np.ptp(higher)) <= match_tol * max(1.0, abs(sigma_k))
                          and sigma_k > sigma0 + match_tol),
        "eigen_relation": residual_relation <= tol_spectral,
        "boundary_identity": residual_boundary <= tol_spectral,
    }
    report = {
        "kind": kind.value,
        "r": r,
        "alpha": alpha,
        "residual_metric": residual_metric,
        "residual_sum": residual_sum,
        "residual_gradient": residual_gradient,
        "residual_eigen_relation": residual_relation,
        "residual_boundary": residual_boundary,
        "sigma0": sigma0,
        "sigma_k": sigma_k,
        "matched": matched,
        "checks": checks,
        "passed": all(checks.values()),
        "tolerances": {"pointwise": tol_pointwise, "spectral": tol_spectral, "match": match_tol},
    }
    if not report["passed"]:
        logger.warning(f"极值性证书未通过: {[name for name, ok in checks.items() if not ok]}")
    return report


def main():
    parser = argparse.ArgumentParser(description='二阶变分指标')
    parser.add_argument('surface', choices=['catenoid', 'ball'], help='曲面类型')
    parser.add_argument('--space', required=True, choices=['spherical', 'hyperbolic'], help='空间类型')
    parser.add_argument('--r', type=float, required=True, help='球半径')
    parser.add_argument('--k', type=int, default=2, help='测地球维数')
    parser.add_argument('--n', type=int, default=3, help='环境维数')
    parser.add_argument('--mmax', type=int, default=defaults.DEFAULT_MMAX, help='模态截断')
    args = parser.parse_args()

    if args.surface == 'catenoid':
        report = catenoid_index_report(find_critical_catenoid(args.space, args.r), args.mmax)
    else:
        report = ball_index_report(args.space, args.k, args.n, args.r, min(args.mmax, 3))
    print(report.to_json())


if __name__ == "__main__":
    main()
