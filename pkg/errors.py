#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
异常定义
所有领域错误都带有机器可读的错误码和命令行退出码
"""

from typing import Any, Dict, Optional


class SpectralGeometryError(Exception):
    code = "INTERNAL_ERROR"
    exit_code = 1

    def __init__(self, message: str, code: Optional[str] = None, **details: Any):
        super().__init__(message)
        self.message = message
        if code is not None:
            self.code = code
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        response = {
            "status": "error",
            "message": self.message,
            "code": self.code
        }
        if self.details:
            response["details"] = self.details
        return response


class DimensionError(SpectralGeometryError):
    code = "DIMENSION_MISMATCH"
    exit_code = 2


class DomainError(SpectralGeometryError):
    code = "OUT_OF_DOMAIN"
    exit_code = 2


class ValidationError(SpectralGeometryError):
    code = "INVALID_PARAMETER"
    exit_code = 2


class NormalizationError(SpectralGeometryError):
    code = "NOT_NORMALIZED"
    exit_code = 2


class DegenerateGeometryError(SpectralGeometryError):
    code = "DEGENERATE_IMMERSION"


class AssemblyError(SpectralGeometryError):
    code = "ASSEMBLY_FAILED"


class DirichletResonanceError(SpectralGeometryError):
    """频率 α 落在内部 Dirichlet 谱上或其上方"""
    code = "FREQUENCY_HITS_DIRICHLET"

    def __init__(self, message: str, dirichlet_eigenvalue: float, alpha: float):
        super().__init__(message, dirichlet_eigenvalue=dirichlet_eigenvalue, alpha=alpha)
        self.dirichlet_eigenvalue = dirichlet_eigenvalue
        self.alpha = alpha


class NoSolutionError(SpectralGeometryError):
    code = "NO_SOLUTION"
    exit_code = 3

    def __init__(self, message: str, attainable_range=None):
        details = {}
        if attainable_range is not None:
            details["attainable_range"] = [float(attainable_range[0]), float(attainable_range[1])]
        super().__init__(message, **details)
        self.attainable_range = attainable_range


class SolverFailureError(SpectralGeometryError):
    code = "SOLVER_FAILURE"


class SpectrumTooShortError(SpectralGeometryError):
    code = "EXTEND_SPECTRUM"


class EigenspaceMatchError(SpectralGeometryError):
    code = "EIGENSPACE_MISMATCH"
