#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
离散化
一维径向网格（Fourier 模态约化）与二维三角网格上的 P1 组装：刚度、内部质量、边界质量
"""

import io
import math
import logging
import argparse
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components

import defaults
from errors import AssemblyError, ValidationError
from spaceform import SpaceKind, check_radius, parse_kind, sn

logger = logging.getLogger(__name__)

# 一维 3 点 Gauss
GAUSS_X, GAUSS_W = np.polynomial.legendre.leggauss(3)


@dataclass
class RadialProblem:
    """
    旋转对称问题的一维约化
    weight(t) 为体积密度，angular(t, m) 为第 m 个模态的角向特征值
    """
    nodes: np.ndarray
    weight: Callable[[np.ndarray], np.ndarray]
    angular: Callable[[np.ndarray, int], np.ndarray]
    boundary: Tuple[bool, bool] = (False, True)
    pole: bool = False            # 左端点为极点：m≥1 时取 Dirichlet 条件
    orbit: float = 2 * math.pi    # 对称轨道的测度
    conformal: Optional[np.ndarray] = None
    multiplicity: Callable[[int], int] = lambda m: 1 if m == 0 else 2
    orbit_dimension: int = 1     # 对称轨道 𝕊^d 的维数 d
    label: str = "radial"

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        if self.nodes.size < 17:
            raise ValidationError(f"径向网格至少需要 16 个单元: 得到 {self.nodes.size - 1}")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValidationError("径向节点必须严格递增")
        if self.conformal is not None:
            self.conformal = np.asarray(self.conformal, dtype=float)
            if self.conformal.shape != self.nodes.shape or np.any(self.conformal <= 0):
                raise ValidationError("共形因子必须为逐节点的正数")


@dataclass
class TriMesh:
    vertices: np.ndarray                   # (V, 2) 参数域坐标
    triangles: np.ndarray                  # (F, 3) 逆时针
    boundary_edges: np.ndarray             # (E_b, 2)
    metric: Optional[np.ndarray] = None    # (V, 2, 2)，缺省为欧氏度量
    conformal: Optional[np.ndarray] = None  # (V,)
    genus: int = 0
    boundary_components: int = 1
    conformal_bounds: Optional[Tuple[float, float]] = None
    label: str = "mesh"

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=np.int64)
        self.boundary_edges = np.asarray(self.boundary_edges, dtype=np.int64)
        if self.metric is None:
            self.metric = np.broadcast_to(np.eye(2), (len(self.vertices), 2, 2)).copy()

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_edges)

    def factor(self) -> np.ndarray:
        return np.ones(self.n_vertices) if self.conformal is None else np.asarray(self.conformal, dtype=float)

    def with_conformal(self, conformal, bounds=None) -> "TriMesh":
        return replace(self, conformal=np.asarray(conformal, dtype=float), conformal_bounds=bounds)

    def with_metric(self, metric) -> "TriMesh":
        return replace(self, metric=np.asarray(metric, dtype=float))


@dataclass
class AssembledForms:
    K: csr_matrix
    M: csr_matrix
    Bd: csr_matrix
    boundary_dofs: np.ndarray
    area: float
    boundary_length: float
    coords: np.ndarray                  # 自由度坐标（径向为 t，二维为顶点）
    free: np.ndarray                    # 自由度在完整节点编号中的位置
    n_full: int
    mode: Optional[int] = None
    mesh: Optional[TriMesh] = field(default=None, repr=False)
    problem: Optional[RadialProblem] = field(default=None, repr=False)

    @property
    def n_dofs(self) -> int:
        return self.K.shape[0]

    @property
    def interior_dofs(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.boundary_dofs] = False
        return np.nonzero(mask)[0]

    def to_full(self, vector: np.ndarray) -> np.ndarray:
        """把自由度向量补零扩展为完整节点向量"""
        vector = np.asarray(vector)
        full = np.zeros((self.n_full,) + vector.shape[1:], dtype=vector.dtype)
        full[self.free] = vector
        return full


# ---------------------------------------------------------------- 一维组装

def _gauss_points(nodes: np.ndarray):
    h = np.diff(nodes)
    mid = 0.5 * (nodes[1:] + nodes[:-1])
    t = mid[:, None] + 0.5 * h[:, None] * GAUSS_X[None, :]
    weights = 0.5 * h[:, None] * GAUSS_W[None, :]
    left = 0.5 * (1 - GAUSS_X)[None, :] * np.ones_like(t)
    right = 0.5 * (1 + GAUSS_X)[None, :] * np.ones_like(t)
    return h, t, weights, left, right


def quadrature_points(nodes: np.ndarray) -> np.ndarray:
    """一维组装所用的 Gauss 点，形状 (单元数, 3)"""
    return _gauss_points(nodes)[1]


def interpolate_nodal(nodes: np.ndarray, values: np.ndarray) -> np.ndarray:
    """把逐节点的值线性插值到 Gauss 点"""
    _, _, _, left, right = _gauss_points(nodes)
    values = np.asarray(values, dtype=float)
    return values[:-1, None] * left + values[1:, None] * right


def radial_bilinear(nodes: np.ndarray, stiff_coef: np.ndarray, mass_coef: np.ndarray) -> csr_matrix:
    """
    通用一维 P1 双线性型 ∫ a(t) φ_i′φ_j′ + ∫ b(t) φ_iφ_j

    Args:
        nodes: 节点
        stiff_coef, mass_coef: Gauss 点上的系数，形状 (单元数, 3)

    Returns:
        完整节点编号下的稀疏矩阵
    """
    h, _, weights, left, right = _gauss_points(nodes)
    dl, dr = -1.0 / h, 1.0 / h
    k_ll = np.sum(weights * (stiff_coef * (dl * dl)[:, None] + mass_coef * left * left), axis=1)
    k_lr = np.sum(weights * (stiff_coef * (dl * dr)[:, None] + mass_coef * left * right), axis=1)
    k_rr = np.sum(weights * (stiff_coef * (dr * dr)[:, None] + mass_coef * right * right), axis=1)
    n = nodes.size
    e = np.arange(n - 1)
    rows = np.concatenate([e, e, e + 1, e + 1])
    cols = np.concatenate([e, e + 1, e, e + 1])
    vals = np.concatenate([k_ll, k_lr, k_lr, k_rr])
    return coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def _radial_weight(problem: RadialProblem):
    _, t, _, _, _ = _gauss_points(problem.nodes)
    w = problem.weight(t)
    interior = problem.weight(problem.nodes[1:-1])
    if np.any(interior <= 0):
        bad = int(np.argmin(interior)) + 1
        raise AssemblyError(
            f"权函数在内部节点 t={problem.nodes[bad]:.6g} 处消失；含极点的坐标卡请把极点放在区间端点",
            node=bad)
    if np.any(w <= 0):
        raise AssemblyError("权函数在 Gauss 点上非正")
    return t, w


def _free_dofs(problem: RadialProblem, m: int) -> np.ndarray:
    n = problem.nodes.size
    if problem.pole and m != 0:
        return np.arange(1, n)
    return np.arange(n)


def assemble_radial(problem: RadialProblem, m: int = 0) -> AssembledForms:
    """
    一维径向问题的组装

    Args:
        problem: 径向问题
        m: 模态编号

    Returns:
        AssembledForms，矩阵已乘以轨道测度
    """
    t, w = _radial_weight(problem)
    lam = problem.angular(t, m) if m != 0 else np.zeros_like(t)
    if np.any(lam < 0):
        raise AssemblyError(f"角向特征值为负: m={m}")
    c = np.ones_like(t) if problem.conformal is None else interpolate_nodal(problem.nodes, problem.conformal)

    K = problem.orbit * radial_bilinear(problem.nodes, w, lam * w)
    M = problem.orbit * radial_bilinear(problem.nodes, np.zeros_like(t), c * w)

    n = problem.nodes.size
    diag = np.zeros(n)
    ends = (0, n - 1)
    end_c = np.ones(n) if problem.conformal is None else problem.conformal
    for flag, index in zip(problem.boundary, ends):
        if flag:
            diag[index] = problem.orbit * float(problem.weight(problem.nodes[index])) * math.sqrt(end_c[index])
    Bd = csr_matrix((diag, (np.arange(n), np.arange(n))), shape=(n, n))

    area = float(M.sum())
    boundary_length = float(np.sum(diag))
    free = _free_dofs(problem, m)
    full_boundary = [index for flag, index in zip(problem.boundary, ends) if flag]
    position = {int(dof): i for i, dof in enumerate(free)}
    boundary_dofs = np.array([position[b] for b in full_boundary if b in position], dtype=np.int64)
    return AssembledForms(
        K=K[free][:, free].tocsr(), M=M[free][:, free].tocsr(), Bd=Bd[free][:, free].tocsr(),
        boundary_dofs=boundary_dofs, area=area, boundary_length=boundary_length,
        coords=problem.nodes[free], free=free, n_full=n, mode=m, problem=problem)


def weighted_mass(problem: RadialProblem, potential: np.ndarray, m: int = 0) -> csr_matrix:
    """∫ V φ_iφ_j w，V 为逐节点位势，自由度与 assemble_radial(problem, m) 一致"""
    t, w = _radial_weight(problem)
    V = interpolate_nodal(problem.nodes, potential)
    P = problem.orbit * radial_bilinear(problem.nodes, np.zeros_like(t), V * w)
    free = _free_dofs(problem, m)
    return P[free][:, free].tocsr()


def uniform_nodes(t_min: float, t_max: float, elements: int) -> np.ndarray:
    return np.linspace(t_min, t_max, int(elements) + 1)


def sphere_area(dim: int) -> float:
    """单位球面 𝕊^dim 的面积"""
    return 2 * math.pi ** ((dim + 1) / 2) / math.gamma((dim + 1) / 2)


def harmonic_multiplicity(k: int, m: int) -> int:
    """𝕊^{k−1} 上 m 次球谐函数空间的维数"""
    def comb(a, b):
        return math.comb(a, b) if a >= b >= 0 and a >= 0 else 0
    return comb(m + k - 1, k - 1) - comb(m + k - 3, k - 1)


def ball_radial_problem(kind, k: int, r: float, elements: int = defaults.DEFAULT_RADIAL_ELEMENTS,
                        conformal=None) -> RadialProblem:
    """
    测地 k 球的径向问题，区间 [0, r]，左端点为极点

    Args:
        kind: 空间类型
        k: 球的维数
        r: 半径
        elements: 单元数

    Returns:
        RadialProblem
    """
    kind = parse_kind(kind)
    r = check_radius(kind, r)
    if k < 2:
        raise ValidationError(f"k 必须不小于 2: k={k}")

    def weight(t):
        return sn(kind, t) ** (k - 1)

    def angular(t, m):
        return m * (m + k - 2) / sn(kind, t) ** 2

    return RadialProblem(uniform_nodes(0.0, r, elements), weight, angular, boundary=(False, True), pole=True,
                         orbit=sphere_area(k - 1), conformal=conformal,
                         multiplicity=lambda m: harmonic_multiplicity(k, m), orbit_dimension=k - 1,
                         label=f"ball-{kind.value}-k{k}")


def catenoid_radial_problem(family, s0: float, elements: int = defaults.DEFAULT_RADIAL_ELEMENTS) -> RadialProblem:
    """悬链面 [−s₀, s₀]×𝕊¹ 的径向问题，权为 B(s)，角向特征值 m²/B²"""

    def weight(s):
        return family.radii(s)[1]

    def angular(s, m):
        return m * m / family.q(s)

    return RadialProblem(uniform_nodes(-s0, s0, elements), weight, angular, boundary=(True, True),
                         label=f"catenoid-{family.kind.value}")


def cylinder_radial_problem(length: float, elements: int = defaults.DEFAULT_RADIAL_ELEMENTS,
                            conformal=None) -> RadialProblem:
    """平坦圆柱 [0,T]×𝕊¹，两端均为边界"""
    return RadialProblem(uniform_nodes(0.0, length, elements), np.ones_like, lambda t, m: m * m * np.ones_like(t),
                         boundary=(True, True), conformal=conformal, label=f"cylinder-{length:g}")


# ---------------------------------------------------------------- 二维网格

def _zipper(inner_ids, inner_angles, outer_ids, outer_angles):
    """在两个同心环之间按角度交错生成逆时针三角形"""
    triangles = []
    i = k = 0
    n_in, n_out = len(inner_ids), len(outer_ids)
    while i < n_in or k < n_out:
        next_in = inner_angles[i + 1] if i + 1 < n_in else 2 * math.pi + inner_angles[0]
        next_out = outer_angles[k + 1] if k + 1 < n_out else 2 * math.pi + outer_angles[0]
        a, b = inner_ids[i % n_in], outer_ids[k % n_out]
        if k < n_out and (next_out <= next_in + 1e-12 or i >= n_in):
            triangles.append((a, b, outer_ids[(k + 1) % n_out]))
            k += 1
        else:
            triangles.append((a, b, inner_ids[(i + 1) % n_in]))
            i += 1
    return triangles


def mesh_disk(refinement: int, radius: float = 1.0) -> TriMesh:
    """
    单位圆盘的准均匀网格：第 j 环有 8j 个点，共 2^ℓ 环

    Args:
        refinement: 加密层级 ℓ ≥ 0
        radius: 参数域半径

    Returns:
        TriMesh（亏格 0，1 个边界分支）
    """
    if refinement < 0:
        raise ValidationError(f"加密层级必须非负: {refinement}")
    rings = 2 ** refinement
    vertices = [(0.0, 0.0)]
    ring_ids = [[0]]
    ring_angles = [np.array([0.0])]
    for j in range(1, rings + 1):
        count = 8 * j
        angles = 2 * math.pi * np.arange(count) / count
        start = len(vertices)
        rho = radius * j / rings
        vertices.extend((rho * math.cos(a), rho * math.sin(a)) for a in angles)
        ring_ids.append(list(range(start, start + count)))
        ring_angles.append(angles)

    triangles = []
    outer = ring_ids[1]
    for idx in range(len(outer)):
        triangles.append((0, outer[idx], outer[(idx + 1) % len(outer)]))
    for j in range(2, rings + 1):
        triangles.extend(_zipper(ring_ids[j - 1], ring_angles[j - 1], ring_ids[j], ring_angles[j]))

    boundary = ring_ids[-1]
    vertices = np.array(vertices)
    # 边界点精确落在圆周上
    vertices[boundary] = radius * np.column_stack([np.cos(ring_angles[-1]), np.sin(ring_angles[-1])])
    edges = [(boundary[i], boundary[(i + 1) % len(boundary)]) for i in range(len(boundary))]
    return TriMesh(vertices, np.array(triangles), np.array(edges), genus=0, boundary_components=1,
                   label=f"disk-l{refinement}")


def mesh_annulus(inner: float, outer: float, refinement: int) -> TriMesh:
    """
    圆环 inner ≤ |x| ≤ outer：角向 16·2^ℓ 个点，径向 4·2^ℓ 层

    Returns:
        TriMesh（亏格 0，2 个边界分支）
    """
    if refinement < 0:
        raise ValidationError(f"加密层级必须非负: {refinement}")
    if not 0 < inner < outer:
        raise ValidationError(f"圆环半径要求 0<inner<outer: {inner}, {outer}")
    n_theta = 16 * 2 ** refinement
    n_r = 4 * 2 ** refinement
    angles = 2 * math.pi * np.arange(n_theta) / n_theta
    radii = np.linspace(inner, outer, n_r + 1)
    vertices = np.array([(rho * math.cos(a), rho * math.sin(a)) for rho in radii for a in angles])

    def vid(i, j):
        return i * n_theta + (j % n_theta)

    triangles = []
    for i in range(n_r):
        for j in range(n_theta):
            a, b, c, d = vid(i, j), vid(i, j + 1), vid(i + 1, j + 1), vid(i + 1, j)
            triangles.append((a, d, c))
            triangles.append((a, c, b))
    edges = [(vid(0, j + 1), vid(0, j)) for j in range(n_theta)]
    edges += [(vid(n_r, j), vid(n_r, j + 1)) for j in range(n_theta)]
    return TriMesh(vertices, np.array(triangles), np.array(edges), genus=0, boundary_components=2,
                   label=f"annulus-l{refinement}")


def ball_cap_metric(kind, vertices: np.ndarray) -> np.ndarray:
    """
    测地极坐标下球冠的度量：g = P_r + (sn²t/t²)(I − P_r)，t = |x|

    Args:
        kind: 空间类型
        vertices: (V, 2) 参数坐标

    Returns:
        (V, 2, 2)
    """
    kind = parse_kind(kind)
    t = np.linalg.norm(vertices, axis=1)
    ratio = np.ones_like(t)
    nonzero = t > 0
    ratio[nonzero] = (sn(kind, t[nonzero]) / t[nonzero]) ** 2
    unit = np.zeros_like(vertices)
    unit[nonzero] = vertices[nonzero] / t[nonzero, None]
    radial = np.einsum("vi,vj->vij", unit, unit)
    identity = np.broadcast_to(np.eye(2), radial.shape)
    metric = radial + ratio[:, None, None] * (identity - radial)
    metric[~nonzero] = np.eye(2)
    return metric


def mesh_ball_cap(kind, r: float, refinement: int) -> TriMesh:
    """测地 2 球 𝔹²(r) 的三角网格（参数域为半径 r 的圆盘）"""
    kind = parse_kind(kind)
    r = check_radius(kind, r)
    mesh = mesh_disk(refinement, radius=r)
    mesh = mesh.with_metric(ball_cap_metric(kind, mesh.vertices))
    mesh.label = f"cap-{kind.value}-l{refinement}"
    return mesh


def mesh_edges(mesh: TriMesh) -> np.ndarray:
    tri = mesh.triangles
    edges = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    return np.unique(np.sort(edges, axis=1), axis=0)


def euler_characteristic(mesh: TriMesh) -> int:
    return mesh.n_vertices - len(mesh_edges(mesh)) + len(mesh.triangles)


def mesh_topology(mesh: TriMesh) -> Tuple[int, int]:
    """由网格推出 (亏格, 边界分支数)，用于导入的网格"""
    n = mesh.n_vertices
    edges = mesh.boundary_edges
    graph = coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    components = len(np.unique(labels[np.unique(edges)]))
    genus = (2 - components - euler_characteristic(mesh)) // 2
    return int(genus), int(components)


def validate_mesh(mesh: TriMesh) -> None:
    """每条边界边恰好属于一个三角形；度量正定；共形因子在声明范围内"""
    tri = mesh.triangles
    all_edges = np.sort(np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]]), axis=1)
    unique, counts = np.unique(all_edges, axis=0, return_counts=True)
    lookup = {tuple(e): c for e, c in zip(unique.tolist(), counts.tolist())}
    for edge in np.sort(mesh.boundary_edges, axis=1).tolist():
        if lookup.get(tuple(edge)) != 1:
            raise ValidationError(f"边界边 {edge} 不恰好属于一个三角形")
    det = mesh.metric[:, 0, 0] * mesh.metric[:, 1, 1] - mesh.metric[:, 0, 1] * mesh.metric[:, 1, 0]
    if np.any(det <= 0):
        raise ValidationError(f"顶点 {int(np.argmin(det))} 处度量不正定")
    factor = mesh.factor()
    if np.any(factor <= 0):
        raise ValidationError("共形因子必须为正")
    if mesh.conformal_bounds is not None:
        lo, hi = mesh.conformal_bounds
        if factor.min() < lo * (1 - 1e-12) or factor.max() > hi * (1 + 1e-12):
            raise ValidationError(f"共形因子超出声明范围 [{lo}, {hi}]")


# 三角形边中点求积：质心坐标与权重 1/3
MIDPOINT_BARY = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
EDGE_GAUSS = np.array([0.5 - 0.5 / math.sqrt(3), 0.5 + 0.5 / math.sqrt(3)])


def triangle_geometry(mesh: TriMesh):
    """
    逐三角形的参数面积与重心坐标梯度

    Returns:
        (参数面积 (F,), 梯度 (F, 3, 2))
    """
    X = mesh.vertices[mesh.triangles]                        # (F, 3, 2)
    e1 = X[:, 1] - X[:, 0]
    e2 = X[:, 2] - X[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    if np.any(det <= 0):
        bad = int(np.argmin(det))
        raise AssemblyError(f"三角形 {bad} 翻转或退化: 参数面积 {0.5 * det[bad]:.3e}", triangle=bad)
    H = np.ones((len(X), 3, 3))
    H[:, 1, :] = X[:, :, 0]
    H[:, 2, :] = X[:, :, 1]
    G = np.linalg.inv(H) @ np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    return 0.5 * det, G


def quadrature_metric(mesh: TriMesh, field_values: np.ndarray) -> np.ndarray:
    """把逐顶点的张量或标量场插值到各三角形的边中点，形状 (F, 3, ...)"""
    per_vertex = np.asarray(field_values)[mesh.triangles]         # (F, 3, ...)
    return np.einsum("qv,fv...->fq...", MIDPOINT_BARY, per_vertex)


def assemble_tri(mesh: TriMesh) -> AssembledForms:
    """
    二维 P1 组装

    Args:
        mesh: 三角网格；刚度只用基础度量，质量乘共形因子 c，边界质量乘 √c

    Returns:
        AssembledForms
    """
    area_param, G = triangle_geometry(mesh)
    g_q = quadrature_metric(mesh, mesh.metric)                    # (F, 3, 2, 2)
    det_q = g_q[..., 0, 0] * g_q[..., 1, 1] - g_q[..., 0, 1] * g_q[..., 1, 0]
    if np.any(det_q <= 0):
        bad = int(np.argmin(det_q.min(axis=1)))
        raise AssemblyError(f"三角形 {bad} 上的度量不正定", triangle=bad)
    vol_q = np.sqrt(det_q)
    c_q = quadrature_metric(mesh, mesh.factor())                  # (F, 3)
    weight_q = (area_param / 3.0)[:, None] * vol_q                # (F, 3)

    inv_q = np.linalg.inv(g_q)
    K_loc = np.einsum("fq,fia,fqab,fjb->fij", weight_q, G, inv_q, G)
    M_loc = np.einsum("fq,qi,qj->fij", weight_q * c_q, MIDPOINT_BARY, MIDPOINT_BARY)

    n = mesh.n_vertices
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    K = coo_matrix((K_loc.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = coo_matrix((M_loc.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    Bd = boundary_mass(mesh)

    boundary = mesh.boundary_vertices
    return AssembledForms(K=K, M=M, Bd=Bd, boundary_dofs=boundary, area=float(M.sum()),
                          boundary_length=float(Bd.sum()), coords=mesh.vertices, free=np.arange(n),
                          n_full=n, mesh=mesh)


def boundary_mass(mesh: TriMesh) -> csr_matrix:
    """边界边上的 2 点 Gauss 质量矩阵，线密度 √(eᵀge)·√c"""
    edges = mesh.boundary_edges
    x = mesh.vertices
    e = x[edges[:, 1]] - x[edges[:, 0]]
    g0, g1 = mesh.metric[edges[:, 0]], mesh.metric[edges[:, 1]]
    factor = mesh.factor()
    c0, c1 = factor[edges[:, 0]], factor[edges[:, 1]]
    local = np.zeros((len(edges), 2, 2))
    for xi in EDGE_GAUSS:
        g = (1 - xi) * g0 + xi * g1
        density = np.sqrt(np.einsum("ea,eab,eb->e", e, g, e)) * np.sqrt((1 - xi) * c0 + xi * c1)
        N = np.array([1 - xi, xi])
        local += 0.5 * density[:, None, None] * np.outer(N, N)[None]
    rows = np.repeat(edges, 2, axis=1).ravel()
    cols = np.tile(edges, (1, 2)).ravel()
    n = mesh.n_vertices
    return coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


# ---------------------------------------------------------------- 文本格式

def write_mesh(mesh: TriMesh) -> str:
    """导出为文本：首行 `V E F`，然后顶点、三角形、边界边"""
    out = io.StringIO()
    out.write(f"{mesh.n_vertices} {len(mesh.boundary_edges)} {len(mesh.triangles)}\n")
    factor = mesh.conformal
    for i, (x, y) in enumerate(mesh.vertices):
        if factor is None:
            out.write(f"{float(x)!r} {float(y)!r}\n")
        else:
            out.write(f"{float(x)!r} {float(y)!r} {float(factor[i])!r}\n")
    for a, b, c in mesh.triangles:
        out.write(f"{a} {b} {c}\n")
    for a, b in mesh.boundary_edges:
        out.write(f"{a} {b}\n")
    return out.getvalue()


def read_mesh(text: Union[str, bytes]) -> TriMesh:
    """
    读取文本格式网格，拓扑（亏格、边界分支数）由网格本身推出

    Args:
        text: 文件内容

    Returns:
        欧氏基础度量的 TriMesh
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    lines = [line.split() for line in text.splitlines() if line.strip()]
    try:
        V, E, F = (int(v) for v in lines[0])
        vertex_lines = lines[1:1 + V]
        tri_lines = lines[1 + V:1 + V + F]
        edge_lines = lines[1 + V + F:1 + V + F + E]
        vertices = np.array([[float(v[0]), float(v[1])] for v in vertex_lines])
        conformal = None
        if vertex_lines and all(len(v) >= 3 for v in vertex_lines):
            conformal = np.array([float(v[2]) for v in vertex_lines])
        triangles = np.array([[int(x) for x in t[:3]] for t in tri_lines], dtype=np.int64)
        edges = np.array([[int(x) for x in e[:2]] for e in edge_lines], dtype=np.int64)
    except (ValueError, IndexError) as e:
        raise ValidationError(f"网格文件格式错误: {str(e)}")
    if len(vertices) != V or len(triangles) != F or len(edges) != E:
        raise ValidationError(f"网格文件行数与首行 {V} {E} {F} 不符")
    mesh = TriMesh(vertices, triangles, edges, conformal=conformal, label="uploaded")
    mesh.genus, mesh.boundary_components = mesh_topology(mesh)
    validate_mesh(mesh)
    return mesh


def main():
    parser = argparse.ArgumentParser(description='生成圆盘或圆环网格并导出为文本格式')
    parser.add_argument('--shape', choices=['disk', 'annulus'], default='disk', help='网格形状')
    parser.add_argument('--level', type=int, default=defaults.DEFAULT_MESH_LEVEL, help='加密层级')
    parser.add_argument('--inner', type=float, default=0.5, help='圆环内半径')
    parser.add_argument('--output', help='输出文件路径，缺省打印到标准输出')
    args = parser.parse_args()

    mesh = mesh_disk(args.level) if args.shape == 'disk' else mesh_annulus(args.inner, 1.0, args.level)
    text = write_mesh(mesh)
    if args.output:
        with open(args.output, 'w', encoding='utf-8') as f:
            f.write(text)
        logger.info(f"网格已保存到: {args.output}")
    else:
        print(text, end="")


if __name__ == "__main__":
    main()
