#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
命令行入口
把球谱、临界悬链面、退化实验和各类检查组织成可复现的运行，输出 CSV 或 JSON
每次输出都带有完整配置、代码版本和生效容差
"""

import io
import sys
import json
import logging
import argparse
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

import defaults
from discretize import assemble_tri, ball_radial_problem, catenoid_radial_problem, mesh_annulus, mesh_ball_cap, mesh_disk
from errors import SpectralGeometryError, ValidationError
from functionals import (bound_checks, degeneration_experiment, degeneration_mesh, omega_floor,
                         omega_nonnegativity_sweep, sample_mesh, sample_radial, table_to_csv)
from index_forms import (ball_coordinates, ball_index_report, catenoid_coordinates, catenoid_index_report,
                         extremality_certificate)
from radial_ode import ball_ode, catenoid_ode, ode_residual, verification_report
from robin_solver import ball_spectrum, default_alpha, property_checks, radial_spectrum, steklov_alpha_spectrum
from spaceform import check_radius, parse_kind
from surfaces import find_critical_catenoid

logger = logging.getLogger(__name__)

SWEEPS = ["theta-below", "omega-above", "steklov-limit", "omega-floor", "bounds"]
VERIFY_SUITES = ["extremality", "ode", "invariants"]
ODE_KINDS = ["ball-spherical", "ball-hyperbolic", "catenoid-spherical", "catenoid-hyperbolic", "all"]
INVARIANT_SUITES = ["robin", "chain", "omega"]

# 可在命令行覆盖的容差
TOLERANCE_OVERRIDES = {"tie_tol": "TIE_TOL", "gap_tol_rel": "GAP_TOL_REL", "gap_tol_mass": "GAP_TOL_MASS"}


@dataclass
class RunConfig:
    command: str
    action: Optional[str] = None
    space: Optional[str] = None
    k: int = 2
    n: int = 3
    r: Optional[float] = None
    alpha: Optional[float] = None
    level: Optional[int] = None
    elements: int = defaults.DEFAULT_RADIAL_ELEMENTS
    index_elements: int = defaults.INDEX_RADIAL_ELEMENTS
    mmax: int = defaults.DEFAULT_MMAX
    count: int = 4
    output: str = "json"
    seed: int = 0
    surface: Optional[str] = None
    epsilons: Optional[List[float]] = None
    delta: float = 0.125
    lengths: Optional[List[float]] = None
    ode_kind: Optional[str] = None
    suite: Optional[str] = None
    tolerances: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        values = {name: getattr(args, name) for name in cls.__dataclass_fields__ if hasattr(args, name)}
        values["tolerances"] = _parse_tolerances(getattr(args, "tol", None) or [])
        return cls(**values)

    def validate(self) -> None:
        """分发前检查参数范围"""
        if self.command in ("ball-spectrum", "catenoid") and (self.space is None or self.r is None):
            raise ValidationError(f"{self.command} 需要 --space 和 --r")
        if self.space is not None:
            kind = parse_kind(self.space)
            if self.r is not None:
                check_radius(kind, self.r)
        if self.r is not None and self.r <= 0:
            raise ValidationError(f"半径必须为正: r={self.r}", code="RADIUS_OUT_OF_RANGE")
        if self.k < 1 or self.n < 2:
            raise ValidationError(f"维数无效: k={self.k}, n={self.n}")
        if self.command == "ball-spectrum" and not 2 <= self.k <= self.n:
            raise ValidationError(f"需要 2 ≤ k ≤ n: k={self.k}, n={self.n}")
        if self.mmax < 0 or self.count < 1:
            raise ValidationError(f"mmax 与 count 无效: mmax={self.mmax}, count={self.count}")
        if self.level is not None and not 0 <= self.level <= defaults.MAX_MESH_LEVEL:
            raise ValidationError(f"加密层级超出范围: {self.level}")
        if self.elements < 10 or self.index_elements < 10:
            raise ValidationError(f"径向单元数过少: {self.elements}, {self.index_elements}")
        for name, values in (("epsilons", self.epsilons), ("lengths", self.lengths)):
            if values is not None and (not values or any(v <= 0 for v in values)):
                raise ValidationError(f"{name} 必须是正数列表: {values}")

    @property
    def mesh_level(self) -> int:
        return defaults.DEFAULT_MESH_LEVEL if self.level is None else self.level

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"无法解析数列: {text}")


def _parse_tolerances(items: List[str]) -> Dict[str, float]:
    overrides = {}
    for item in items:
        name, _, value = item.partition("=")
        if name not in TOLERANCE_OVERRIDES:
            raise ValidationError(f"不可覆盖的容差: {name}，可选 {sorted(TOLERANCE_OVERRIDES)}")
        try:
            overrides[name] = float(value)
        except ValueError:
            raise ValidationError(f"容差值无效: {item}")
        if overrides[name] <= 0:
            raise ValidationError(f"容差必须为正: {item}")
    return overrides


@contextmanager
def tolerance_overrides(overrides: Dict[str, float]):
    """在一次运行内临时覆盖 defaults 中的容差"""
    saved = {TOLERANCE_OVERRIDES[name]: getattr(defaults, TOLERANCE_OVERRIDES[name]) for name in overrides}
    try:
        for name, value in overrides.items():
            setattr(defaults, TOLERANCE_OVERRIDES[name], value)
        yield
    finally:
        for attribute, value in saved.items():
            setattr(defaults, attribute, value)


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, pd.DataFrame):
        return json.loads(value.to_json(orient="records", double_precision=15))
    raise TypeError(f"无法序列化 {type(value).__name__}")


def to_json(payload: Any) -> str:
    return json.dumps(payload, ensure_ascii=False, indent=2, default=_json_default) + "\n"


def envelope(config: RunConfig, result: Any) -> Dict[str, Any]:
    return {
        "config": config.to_dict(),
        "version": defaults.CODE_VERSION,
        "tolerances": defaults.resolved_tolerances(),
        "result": result,
    }


def render(config: RunConfig, result: Any) -> str:
    """JSON 直接包装；CSV 在表头前写三行 # 注释"""
    if config.output == "csv":
        if not isinstance(result, pd.DataFrame):
            raise ValidationError(f"{config.command} 的结果不是表格，不能输出 CSV")
        header = io.StringIO()
        header.write(f"# config={json.dumps(config.to_dict(), ensure_ascii=False)}\n")
        header.write(f"# version={defaults.CODE_VERSION}\n")
        header.write(f"# tolerances={json.dumps(defaults.resolved_tolerances())}\n")
        return header.getvalue() + table_to_csv(result)
    return to_json(envelope(config, result))


# ---------------------------------------------------------------- 各子命令

def run_ball_spectrum(config: RunConfig):
    """测地 k 球的 α-Steklov 谱表"""
    result = ball_spectrum(config.space, config.k, config.r, config.alpha, config.elements, config.mmax, config.count)
    if config.output == "csv":
        return result.to_frame()
    return result.to_dict()


def run_catenoid(config: RunConfig):
    """临界悬链面: find 求解，spectrum 求谱，index 求指标"""
    solution = find_critical_catenoid(config.space, config.r)
    if config.action == "find":
        return solution.to_dict()
    if config.action == "spectrum":
        kind = parse_kind(config.space)
        alpha = default_alpha(kind, 2) if config.alpha is None else config.alpha
        problem = catenoid_radial_problem(solution.family, solution.s0, config.elements)
        result = radial_spectrum(problem, alpha, 2, config.mmax)
        if config.output == "csv":
            return result.to_frame()
        return {"solution": solution.to_dict(), "spectrum": result.to_dict()}
    report = catenoid_index_report(solution, config.mmax, config.index_elements, config.elements)
    return report.to_dict()


def _bounds_table(config: RunConfig) -> pd.DataFrame:
    r = 1.0 if config.r is None else config.r
    surface = config.surface or "disk"
    if surface == "disk":
        sample = sample_mesh(mesh_disk(config.mesh_level))
    elif surface == "cap":
        sample = sample_radial(ball_radial_problem("spherical", 2, r, config.elements), 0, 1)
    elif surface == "annulus":
        # 圆环每层的顶点数约为圆盘的 16 倍
        sample = sample_mesh(mesh_annulus(*defaults.ANNULUS_RADII, max(1, config.mesh_level - 2)))
    else:
        solution = find_critical_catenoid(config.space or "hyperbolic", r)
        sample = sample_radial(catenoid_radial_problem(solution.family, solution.s0, config.elements), 0, 2)
    report = bound_checks([sample], r=r, k=max(1, config.k))
    table = pd.DataFrame(report["samples"])
    if "theta" in table:
        table["theta_slack"] = table["theta_bound"] * (1 + report["slack"]) - table["theta"]
    table["passed"] = report["passed"]
    return table


def run_sweep(config: RunConfig) -> pd.DataFrame:
    """退化实验与界的检查，结果为表格"""
    r = 1.0 if config.r is None else config.r
    k = max(1, config.k)
    logger.info(f"扫描 {config.action}: r={r}, k={k}, level={config.level}")
    if config.action == "bounds":
        return _bounds_table(config)
    if config.action == "omega-floor":
        lengths = config.lengths or (2.0, 4.0, 8.0, 16.0)
        return omega_floor(lengths, r=r, k=k)
    epsilons = config.epsilons or (0.5, 0.25, 0.125, 0.0625)
    alpha = 2.0 if config.alpha is None else config.alpha
    mesh = degeneration_mesh(config.action, epsilons, config.delta, config.level)
    return degeneration_experiment(config.action, mesh, r, k, epsilons, config.delta, alpha)


def _ode_rows(kind_name: str, config: RunConfig) -> List[Dict]:
    shape, space = kind_name.split("-")
    rows = []
    if shape == "ball":
        k = max(2, config.k)
        samples = np.linspace(0.05, 1.4, 40)
        odes = [(m, ball_ode(space, k, m)) for m in (0, 1)]
    else:
        solution = find_critical_catenoid(space, config.r if config.r is not None else
                                          (1.0 if space == "hyperbolic" else 0.6))
        samples = np.linspace(-solution.s0, solution.s0, 41)
        odes = [(m, catenoid_ode(solution.family, m, solution.s0)) for m in (0, 1)]
    for m, ode in odes:
        for name, candidate in ode.first_solutions:
            residual = ode_residual(ode, candidate, samples)
            rows.append({"kind": kind_name, "m": m, "solution": name, "residual": residual,
                         "passed": residual <= 1e-8})
    return rows


def _robin_suite(config: RunConfig) -> Dict:
    r = 0.7 if config.r is None else config.r
    geometries = [
        ("disk", mesh_disk(config.mesh_level), 0.0),
        ("disk-alpha2", mesh_disk(config.mesh_level), 2.0),
        ("cap-spherical", mesh_ball_cap("spherical", min(r, 1.5), config.mesh_level), 2.0),
        ("cap-hyperbolic", mesh_ball_cap("hyperbolic", r, config.mesh_level), -2.0),
        ("annulus", mesh_annulus(*defaults.ANNULUS_RADII, max(1, config.mesh_level - 2)), 0.0),
    ]
    results = {}
    for label, mesh, alpha in geometries:
        spectrum = steklov_alpha_spectrum(assemble_tri(mesh), alpha, 6)
        results[label] = property_checks(spectrum, config.seed)
    return {"geometries": results, "passed": all(item["passed"] for item in results.values())}


def _chain_suite(config: RunConfig) -> Dict:
    reports = []
    for space, r in (("spherical", 0.7), ("hyperbolic", 1.1)):
        for k, n in ((2, 3), (2, 4), (3, 4)):
            reports.append(ball_index_report(space, k, n, r, elements=config.index_elements))
    for space, r in (("hyperbolic", 1.0), ("spherical", 0.6)):
        reports.append(catenoid_index_report(find_critical_catenoid(space, r), config.mmax, config.index_elements))
    rows = [{"label": report.label, "ind": report.ind, "ind_S": report.ind_S, "ind_E": report.ind_E,
             "checks": report.inequality_checks, "passed": report.passed} for report in reports]
    return {"surfaces": rows, "passed": all(row["passed"] for row in rows)}


def _omega_suite(config: RunConfig) -> Dict:
    mesh = mesh_annulus(*defaults.ANNULUS_RADII, max(1, config.mesh_level - 2))
    table = omega_nonnegativity_sweep(mesh, max(config.count, 1), config.seed)
    violations = int((table["omega"] < 0).sum())
    return {"samples": len(table), "violations": violations, "min_omega": float(table["omega"].min()),
            "passed": violations == 0}


def run_verify(config: RunConfig) -> Dict:
    """逆向极值性证书、径向方程残差与不变量套件"""
    if config.action == "extremality":
        surface = config.surface or "catenoid"
        kind = parse_kind(config.space or "hyperbolic")
        if surface == "catenoid":
            r = 1.0 if config.r is None else config.r
            problem, profiles = catenoid_coordinates(find_critical_catenoid(kind, r), config.elements)
        else:
            r = 0.7 if config.r is None else config.r
            problem, profiles = ball_coordinates(kind, r, config.elements)
        return extremality_certificate(problem, profiles, kind, r)
    if config.action == "ode":
        if (config.ode_kind or "all") == "all":
            return verification_report()
        rows = _ode_rows(config.ode_kind, config)
        return {"rows": rows, "passed": all(row["passed"] for row in rows)}
    suite = config.suite or "robin"
    if suite == "robin":
        return _robin_suite(config)
    if suite == "chain":
        return _chain_suite(config)
    return _omega_suite(config)


def dispatch(config: RunConfig) -> str:
    handlers = {"ball-spectrum": run_ball_spectrum, "catenoid": run_catenoid, "sweep": run_sweep,
                "verify": run_verify}
    with tolerance_overrides(config.tolerances):
        result = handlers[config.command](config)
        return render(config, result)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='自由边界极小子流形的谱几何计算')
    subparsers = parser.add_subparsers(dest='command', required=True)

    def common(sub, output='json'):
        sub.add_argument('--space', choices=['spherical', 'hyperbolic'], help='空间类型')
        sub.add_argument('--r', type=float, help='测地球半径')
        sub.add_argument('--format', dest='output', choices=['json', 'csv'], default=output, help='输出格式')
        sub.add_argument('--seed', type=int, default=0, help='随机种子')
        sub.add_argument('--tol', action='append', metavar='NAME=VALUE', help='覆盖容差（tie_tol, gap_tol_rel, gap_tol_mass）')
        sub.add_argument('--elements', type=int, default=defaults.DEFAULT_RADIAL_ELEMENTS, help='径向单元数')
        sub.add_argument('--mmax', type=int, default=defaults.DEFAULT_MMAX, help='模态截断')

    ball = subparsers.add_parser('ball-spectrum', help='测地球的 α-Steklov 谱')
    common(ball, output='csv')
    ball.add_argument('--k', type=int, default=2, help='球的维数')
    ball.add_argument('--n', type=int, default=3, help='环境维数')
    ball.add_argument('--alpha', type=float, help='频率，缺省为 ±k')
    ball.add_argument('--count', type=int, default=4, help='每个模态的特征值个数')
    ball.set_defaults(mmax=3)

    catenoid = subparsers.add_parser('catenoid', help='临界悬链面')
    catenoid.add_argument('action', choices=['find', 'spectrum', 'index'], help='操作')
    common(catenoid)
    catenoid.add_argument('--alpha', type=float, help='频率，缺省为 ±2')
    catenoid.add_argument('--index-elements', type=int, default=defaults.INDEX_RADIAL_ELEMENTS,
                          help='指标形式的径向单元数')

    sweep = subparsers.add_parser('sweep', help='退化实验与界的检查')
    sweep.add_argument('action', choices=SWEEPS, help='实验名称')
    common(sweep, output='csv')
    sweep.add_argument('--k', type=int, default=1, help='特征值序号 k')
    sweep.add_argument('--alpha', type=float, help='steklov-limit 的频率')
    sweep.add_argument('--level', type=int, help='网格加密层级，退化实验缺省按最窄领口选取')
    sweep.add_argument('--epsilons', type=_float_list, help='逗号分隔的 ε 序列')
    sweep.add_argument('--delta', type=float, default=0.125, help='omega-above 的领口宽度')
    sweep.add_argument('--lengths', type=_float_list, help='omega-floor 的圆柱长度序列')
    sweep.add_argument('--surface', choices=['disk', 'cap', 'annulus', 'catenoid'], default='disk', help='bounds 的曲面')

    verify = subparsers.add_parser('verify', help='各类检查')
    verify.add_argument('action', choices=VERIFY_SUITES, help='检查类别')
    common(verify)
    verify.add_argument('--surface', choices=['catenoid', 'ball'], default='catenoid', help='证书所用曲面')
    verify.add_argument('--kind', dest='ode_kind', choices=ODE_KINDS, default='all', help='径向方程类型')
    verify.add_argument('--k', type=int, default=3, help='球的维数')
    verify.add_argument('--suite', choices=INVARIANT_SUITES, default='robin', help='不变量套件')
    verify.add_argument('--level', type=int, default=defaults.DEFAULT_MESH_LEVEL, help='网格加密层级')
    verify.add_argument('--count', type=int, default=100, help='omega 套件的随机度量个数')
    verify.add_argument('--index-elements', type=int, default=defaults.INDEX_RADIAL_ELEMENTS,
                        help='指标形式的径向单元数')
    verify.set_defaults(elements=defaults.CERTIFICATE_RADIAL_ELEMENTS)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = RunConfig.from_args(args)
        config.validate()
        output = dispatch(config)
    except SpectralGeometryError as e:
        logger.error(f"{e.code}: {e.message}")
        print(json.dumps({"error": e.to_dict()}, ensure_ascii=False, default=_json_default), file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception(f"运行失败: {str(e)}")
        error = {"status": "error", "message": str(e), "code": "INTERNAL_ERROR"}
        print(json.dumps({"error": error}, ensure_ascii=False), file=sys.stderr)
        return 1
    sys.stdout.write(output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
