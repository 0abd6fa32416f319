#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
默认参数与容差
集中管理各模块使用的数值容差、网格规模和环境变量配置
"""

import os
import logging

CODE_VERSION = "1.0.0"

# 容差
TOL_ANALYTIC = 1e-10      # 解析构造点的流形残差
TOL_QUADRATURE = 1e-8     # 数值积分得到的点的流形残差
TOL_RESIDUAL = 1e-9       # 自由边界条件残差
TOL_ORTHOGONAL = 1e-8     # 边界正交性
EPS_NODE = 1e-9           # 节点域计数的零值阈值（相对）
TIE_TOL = 1e-9            # 谱指标中阈值附近的判定
GAP_TOL_REL = 1e-7        # 零特征值判定，相对于 ‖A‖（无质量矩阵时）
GAP_TOL_MASS = 5e-3       # 质量归一化特征值的零判定阈值，与网格无关
EPS_A = 1e-6              # 球面悬链面参数 a 的开区间边界

# 网格与离散
DEFAULT_RADIAL_ELEMENTS = 2000
INDEX_RADIAL_ELEMENTS = 320
CERTIFICATE_RADIAL_ELEMENTS = 4000
DEFAULT_MESH_LEVEL = 4
MAX_MESH_LEVEL = 7
ANNULUS_RADII = (0.5, 1.0)  # 退化实验与随机度量所用的圆环
DEFAULT_MMAX = 6
GAUSS_ORDER = 10          # varphi 复合 Gauss-Legendre 阶数
PANEL_WIDTH = 0.05        # varphi 每个面板的最大宽度
SCAN_POINTS_S = 400       # 求 s0 时的 s 方向扫描点数
SCAN_POINTS_A = 48        # 检查 r(a) 单调性的 a 方向扫描点数

TASK_TTL = 3600           # 任务状态在 redis 中的保留秒数

# 参数范围
HYPERBOLIC_A_RANGE = (0.5 + 2e-2, 2.0)
SPHERICAL_A_RANGE = (-0.5 + 1e-4, -EPS_A)


def thread_count() -> int:
    """
    读取并发线程数

    Returns:
        SPECTRA_THREADS 环境变量的值，未设置时为 1
    """
    value = os.getenv("SPECTRA_THREADS", "1")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def redis_url() -> str:
    """任务状态库地址"""
    return os.getenv("REDIS_URL", "redis://localhost:6379/0")


def log_level() -> int:
    """读取日志级别"""
    name = os.getenv("SPECTRA_LOG_LEVEL", "INFO").upper()
    return getattr(logging, name, logging.INFO)


def resolved_tolerances() -> dict:
    """返回当前生效的全部容差，嵌入每次运行的输出"""
    return {
        "tol_analytic": TOL_ANALYTIC,
        "tol_quadrature": TOL_QUADRATURE,
        "tol_residual": TOL_RESIDUAL,
        "tol_orthogonal": TOL_ORTHOGONAL,
        "eps_node": EPS_NODE,
        "tie_tol": TIE_TOL,
        "gap_tol_rel": GAP_TOL_REL,
        "gap_tol_mass": GAP_TOL_MASS,
        "eps_a": EPS_A,
    }


# 配置日志
logging.basicConfig(
    level=log_level(),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
