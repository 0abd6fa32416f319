#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
带频率 α 的 Steklov（Robin）特征值求解
离散 Dirichlet-to-Neumann 算子的 Schur 补、内部 Dirichlet 谱、节点域计数与模态合并
"""

import io
import json
import logging
import argparse
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.linalg import LinAlgError, cho_factor, eigh
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import eigsh, splu

import defaults
from discretize import AssembledForms, RadialProblem, assemble_radial, ball_radial_problem, mesh_edges
from errors import DirichletResonanceError, SolverFailureError, ValidationError
from spaceform import SpaceKind, parse_kind

logger = logging.getLogger(__name__)

# 内部自由度不超过该值时用稠密特征求解
DENSE_LIMIT = 800


@dataclass
class SpectralResult:
    alpha: float
    sigmas: np.ndarray
    eigenvectors: Optional[np.ndarray] = None      # (n_full, count)
    boundary_traces: Optional[np.ndarray] = None   # (n_boundary, count)
    mode_tags: Optional[List[int]] = None
    residuals: Optional[np.ndarray] = None
    forms: Optional[AssembledForms] = field(default=None, repr=False)
    sources: Optional[List[tuple]] = field(default=None, repr=False)

    @property
    def count(self) -> int:
        return len(self.sigmas)

    def to_frame(self) -> pd.DataFrame:
        modes = self.mode_tags if self.mode_tags is not None else [""] * self.count
        return pd.DataFrame({"index": np.arange(self.count), "mode": modes, "sigma": self.sigmas})

    def to_csv(self) -> str:
        buffer = io.StringIO()
        self.to_frame().to_csv(buffer, index=False, float_format="%.15g")
        return buffer.getvalue()

    def to_dict(self, include_vectors: bool = False) -> Dict:
        payload = {
            "alpha": float(self.alpha),
            "sigmas": [float(s) for s in self.sigmas],
            "mode_tags": None if self.mode_tags is None else [int(m) for m in self.mode_tags],
        }
        if include_vectors and self.eigenvectors is not None:
            payload["eigenvectors"] = self.eigenvectors.T.tolist()
        return payload

    def to_json(self, include_vectors: bool = False) -> str:
        return json.dumps(self.to_dict(include_vectors), ensure_ascii=False)


def certify_positive_definite(A):
    """
    对称分解证明 A 正定

    Args:
        A: 稀疏对称矩阵

    Returns:
        splu 分解对象；不正定时返回 None
    """
    try:
        lu = splu(A.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                  options=dict(SymmetricMode=True))
    except RuntimeError:
        return None
    if np.array_equal(lu.perm_r, lu.perm_c):
        return lu if np.all(lu.U.diagonal() > 0) else None
    # 行置换破坏了对称结构，改用稠密 Cholesky
    try:
        cho_factor(A.toarray())
    except LinAlgError:
        return None
    return lu


def dirichlet_spectrum(forms: AssembledForms, count: int = 6) -> np.ndarray:
    """
    内部自由度上 K u = λ M u 的最小若干特征值

    Args:
        forms: 组装结果
        count: 个数

    Returns:
        升序特征值
    """
    interior = forms.interior_dofs
    if interior.size == 0:
        raise ValidationError("没有内部自由度")
    K_ii = forms.K[interior][:, interior]
    M_ii = forms.M[interior][:, interior]
    count = min(count, interior.size)
    if interior.size <= DENSE_LIMIT or count >= interior.size - 1:
        values = eigh(K_ii.toarray(), M_ii.toarray(), eigvals_only=True, subset_by_index=[0, count - 1])
    else:
        values = eigsh(K_ii.tocsc(), k=count, M=M_ii.tocsc(), sigma=0.0, which="LM",
                       return_eigenvectors=False)
    return np.sort(np.asarray(values))


def _normalize_signs(vectors: np.ndarray, traces: np.ndarray) -> None:
    for j in range(vectors.shape[1]):
        pivot = int(np.argmax(np.abs(traces[:, j])))
        if traces[pivot, j] < 0:
            vectors[:, j] *= -1
            traces[:, j] *= -1


def steklov_alpha_spectrum(forms: AssembledForms, alpha: float, count: int) -> SpectralResult:
    """
    (K − αM)u = σ Bd u 的最小 count 个特征对，经 Schur 补约化到边界自由度

    Args:
        forms: 组装结果
        alpha: 频率
        count: 特征值个数

    Returns:
        SpectralResult，边界迹已按 Bd 单位化
    """
    if count < 1:
        raise ValidationError(f"count 必须不小于 1: {count}")
    boundary = forms.boundary_dofs
    interior = forms.interior_dofs
    if boundary.size == 0:
        raise ValidationError("没有边界自由度")
    if count > boundary.size:
        logger.warning(f"请求 {count} 个特征值，但只有 {boundary.size} 个边界自由度，已截断")
        count = boundary.size

    A = (forms.K - alpha * forms.M).tocsr()
    A_bb = A[boundary][:, boundary].toarray()
    B_bb = forms.Bd[boundary][:, boundary].toarray()
    X = np.zeros((interior.size, boundary.size))
    if interior.size > 0:
        A_ii = A[interior][:, interior]
        lu = certify_positive_definite(A_ii)
        if lu is None:
            lam = dirichlet_spectrum(forms, 6)
            hits = lam[lam <= alpha]
            offending = float(hits[0]) if hits.size else float(lam[0])
            logger.warning(f"频率 α={alpha} 落在 Dirichlet 谱上或其上方: λ={offending:.10g}")
            raise DirichletResonanceError(
                f"频率 α={alpha} 不低于内部 Dirichlet 特征值 {offending:.10g}", offending, float(alpha))
        A_ib = A[interior][:, boundary].toarray()
        X = lu.solve(A_ib)
        A_bb = A_bb - A_ib.T @ X
    D = 0.5 * (A_bb + A_bb.T)

    try:
        sigmas, Y = eigh(D, B_bb, subset_by_index=[0, count - 1])
    except LinAlgError as e:
        raise SolverFailureError(f"边界广义特征问题求解失败: {str(e)}")

    vectors = np.zeros((forms.n_dofs, count))
    vectors[boundary] = Y
    if interior.size > 0:
        vectors[interior] = -X @ Y
    traces = vectors[boundary].copy()
    _normalize_signs(vectors, traces)

    residual = A @ vectors - (forms.Bd @ vectors) * sigmas[None, :]
    residuals = np.linalg.norm(residual, axis=0)
    if np.any(residuals > 1e-6 * max(1.0, float(np.abs(A).max()))):
        logger.warning(f"特征对残差偏大: max={residuals.max():.3e}")

    tags = None if forms.mode is None else [int(forms.mode)] * count
    return SpectralResult(alpha=float(alpha), sigmas=np.asarray(sigmas), eigenvectors=forms.to_full(vectors),
                          boundary_traces=traces, mode_tags=tags, residuals=residuals, forms=forms)


def _adjacency(forms: AssembledForms):
    n = forms.n_full
    if forms.mesh is not None:
        edges = mesh_edges(forms.mesh)
    else:
        edges = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    return edges


def nodal_domain_count(forms: AssembledForms, vector: np.ndarray, eps_node: float = defaults.EPS_NODE) -> int:
    """
    节点域计数：相邻且同号的顶点连通；近零顶点并入相邻的多数符号

    Args:
        forms: 组装结果（提供网格或一维节点）
        vector: 完整节点向量或自由度向量
        eps_node: 相对零值阈值

    Returns:
        节点域个数；径向模态 m≥1 时乘以圆周轨道上 cos mθ 的 2m 个扇区

    Raises:
        ValidationError: 轨道为 𝕊^d（d≥2）且 m≥1，此时节点域数取决于所选的球谐函数
    """
    radial_mode = forms.mesh is None and bool(forms.mode)
    if radial_mode and forms.problem is not None and forms.problem.orbit_dimension > 1:
        raise ValidationError(f"轨道 𝕊^{forms.problem.orbit_dimension} 上模态 m={forms.mode} 的节点域数不由径向向量决定")
    vector = np.asarray(vector, dtype=float)
    if vector.shape[0] == forms.n_dofs and forms.n_dofs != forms.n_full:
        vector = forms.to_full(vector)
    scale = float(np.max(np.abs(vector)))
    if scale == 0.0:
        raise ValidationError("零向量没有节点域")

    sign = np.where(np.abs(vector) < eps_node * scale, 0, np.sign(vector)).astype(int)
    edges = _adjacency(forms)
    n = forms.n_full
    neighbors = [[] for _ in range(n)]
    for a, b in edges:
        neighbors[a].append(b)
        neighbors[b].append(a)
    while np.any(sign == 0):
        changed = False
        for v in np.nonzero(sign == 0)[0]:
            votes = sum(sign[u] for u in neighbors[v])
            if votes != 0:
                sign[v] = 1 if votes > 0 else -1
                changed = True
            elif any(sign[u] != 0 for u in neighbors[v]):
                sign[v] = 1 if sum(vector[u] for u in neighbors[v]) >= 0 else -1
                changed = True
        if not changed:
            sign[sign == 0] = 1

    same = sign[edges[:, 0]] == sign[edges[:, 1]]
    kept = edges[same]
    graph = coo_matrix((np.ones(len(kept)), (kept[:, 0], kept[:, 1])), shape=(n, n))
    domains, _ = connected_components(graph, directed=False)

    if radial_mode:
        domains *= 2 * abs(int(forms.mode))
    return int(domains)


def merge_modes(results: Sequence[SpectralResult], multiplicities: Optional[Dict[int, int]] = None) -> SpectralResult:
    """
    合并各 Fourier/球谐模态的谱，按重数展开并全局排序

    Args:
        results: 每个模态一个 SpectralResult（mode_tags 必须给出）
        multiplicities: 模态到重数的映射；缺省取径向问题自带的重数函数

    Returns:
        合并后的 SpectralResult（不含特征向量）
    """
    if not results:
        raise ValidationError("没有可合并的谱")
    alpha = results[0].alpha
    entries = []
    for result in results:
        if abs(result.alpha - alpha) > 1e-14 * max(1.0, abs(alpha)):
            raise ValidationError(f"频率不一致: {result.alpha} 与 {alpha}")
        if result.mode_tags is None:
            raise ValidationError("合并需要模态标签")
        traces = result.boundary_traces
        for index, (sigma, mode) in enumerate(zip(result.sigmas, result.mode_tags)):
            if multiplicities is not None:
                copies = multiplicities[int(mode)]
            elif result.forms is not None and result.forms.problem is not None:
                copies = result.forms.problem.multiplicity(int(mode))
            else:
                copies = 1
            vector = () if traces is None else tuple(float(v) for v in traces[:, index])
            for copy in range(copies):
                entries.append((float(sigma), int(mode), vector, copy, index))
    # 同值时按模态、再按边界迹的字典序排序
    entries.sort(key=lambda e: e[:4])
    return SpectralResult(alpha=alpha, sigmas=np.array([e[0] for e in entries]),
                          mode_tags=[e[1] for e in entries], sources=[(e[1], e[4]) for e in entries])


def radial_spectrum(problem: RadialProblem, alpha: float, count: int, mmax: int) -> SpectralResult:
    """逐模态 m = 0..mmax 求解后合并，模态之间并发计算"""

    per_mode = min(count, sum(problem.boundary))

    def solve_mode(m):
        return steklov_alpha_spectrum(assemble_radial(problem, m), alpha, per_mode)

    with ThreadPoolExecutor(max_workers=defaults.thread_count()) as executor:
        results = list(executor.map(solve_mode, range(mmax + 1)))
    return merge_modes(results)


def default_alpha(kind: SpaceKind, k: int) -> float:
    """球面取 α = k，双曲取 α = −k"""
    return float(k) if kind is SpaceKind.SPHERICAL else -float(k)


def ball_spectrum(kind, k: int, r: float, alpha: Optional[float] = None,
                  elements: int = defaults.DEFAULT_RADIAL_ELEMENTS, mmax: int = 3, count: int = 4) -> SpectralResult:
    """
    测地 k 球的 α-Steklov 谱（一维路线）

    Args:
        kind: 空间类型
        k: 球的维数
        r: 半径
        alpha: 频率，缺省按空间类型取 ±k

    Returns:
        合并后的谱
    """
    kind = parse_kind(kind)
    alpha = default_alpha(kind, k) if alpha is None else float(alpha)
    logger.info(f"球谱: kind={kind.value}, k={k}, r={r}, α={alpha}, 单元数={elements}, mmax={mmax}")
    return radial_spectrum(ball_radial_problem(kind, k, r, elements), alpha, count, mmax)


# ---------------------------------------------------------------- 性质检查

def boundary_orthogonality(result: SpectralResult, gap: float = 1e-6) -> float:
    """不同特征值的边界迹在 Bd 内积下的最大交叉项"""
    forms = result.forms
    B = forms.Bd[forms.boundary_dofs][:, forms.boundary_dofs]
    gram = result.boundary_traces.T @ (B @ result.boundary_traces)
    worst = 0.0
    for i in range(result.count):
        for j in range(i + 1, result.count):
            if abs(result.sigmas[i] - result.sigmas[j]) > gap:
                worst = max(worst, abs(gram[i, j]))
    return worst


def first_eigenfunction_sign(result: SpectralResult) -> float:
    """σ₀ 特征函数在自由度上的最小值（符号已归一，应为正）"""
    forms = result.forms
    return float(np.min(result.eigenvectors[forms.free, 0]))


def rayleigh_minimum(result: SpectralResult, trials: int = 200, seed: int = 0) -> float:
    """随机试探向量上离散 Rayleigh 商的最小值"""
    forms = result.forms
    A = (forms.K - result.alpha * forms.M).tocsr()
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((forms.n_dofs, trials))
    numerator = np.einsum("ij,ij->j", U, A @ U)
    denominator = np.einsum("ij,ij->j", U, forms.Bd @ U)
    return float(np.min(numerator / denominator))


def courant_violations(result: SpectralResult, count: int = 10, tol: float = 1e-8) -> List[Dict]:
    """第 j 个特征函数的节点域数不超过其特征值簇首个序号 + 1"""
    violations = []
    for j in range(min(count, result.count)):
        first = j
        while first > 0 and abs(result.sigmas[first - 1] - result.sigmas[j]) <= tol * max(1.0, abs(result.sigmas[j])):
            first -= 1
        domains = nodal_domain_count(result.forms, result.eigenvectors[:, j])
        if domains > first + 1:
            violations.append({"index": j, "domains": domains, "bound": first + 1})
    return violations


def property_checks(result: SpectralResult, seed: int = 0) -> Dict:
    """正交性、σ₀ 定号、Rayleigh 极小、Courant 界四项检查"""
    orthogonality = boundary_orthogonality(result)
    positivity = first_eigenfunction_sign(result)
    minimum = rayleigh_minimum(result, seed=seed)
    violations = courant_violations(result)
    report = {
        "boundary_orthogonality": orthogonality,
        "boundary_orthogonality_pass": orthogonality <= 1e-8,
        "first_eigenfunction_min": positivity,
        "first_eigenfunction_pass": positivity > 0,
        "rayleigh_min": minimum,
        "rayleigh_pass": minimum >= result.sigmas[0] - 1e-10,
        "courant_violations": violations,
        "courant_pass": not violations,
    }
    report["passed"] = all(report[key] for key in
                           ("boundary_orthogonality_pass", "first_eigenfunction_pass", "rayleigh_pass", "courant_pass"))
    return report


def main():
    parser = argparse.ArgumentParser(description='计算测地球的 α-Steklov 谱')
    parser.add_argument('--space', required=True, choices=['spherical', 'hyperbolic'], help='空间类型')
    parser.add_argument('--k', type=int, default=2, help='球的维数')
    parser.add_argument('--r', type=float, required=True, help='半径')
    parser.add_argument('--alpha', type=float, help='频率，缺省为 ±k')
    parser.add_argument('--elements', type=int, default=defaults.DEFAULT_RADIAL_ELEMENTS, help='径向单元数')
    parser.add_argument('--mmax', type=int, default=3, help='最大模态')
    args = parser.parse_args()

    result = ball_spectrum(args.space, args.k, args.r, args.alpha, args.elements, args.mmax)
    print(result.to_csv(), end="")


if __name__ == "__main__":
    main()
