#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
谱几何计算的 Web 接口
提供 RESTful API，覆盖球谱、临界悬链面、各类检查、网格谱和后台扫描任务
"""

from fastapi import FastAPI, UploadFile, File, Form, HTTPException, Depends, Header
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel
import os
import json
from typing import Optional, Dict, Any, List, Union
import uvicorn
import logging

import cli
import defaults
from discretize import assemble_tri, read_mesh
from errors import SpectralGeometryError
from robin_solver import steklov_alpha_spectrum
from task_manager import task_manager

# 配置日志
logging.basicConfig(
    level=defaults.log_level(),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

app = FastAPI(
    title="自由边界极小子流形谱几何计算",
    description="提供 α-Steklov 谱、临界悬链面、指标与极值性检查的 RESTful API 接口",
    version=defaults.CODE_VERSION
)

# 添加CORS中间件
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# API密钥验证
async def verify_api_key(authorization: str = Header(...)):
    if not authorization.startswith("Bearer "):
        raise HTTPException(
            status_code=401,
            detail={
                "status": "error",
                "message": "无效的认证格式",
                "code": "INVALID_AUTH_FORMAT"
            }
        )

    api_key = authorization.split(" ")[1]
    if api_key != os.getenv("API_KEY"):
        raise HTTPException(
            status_code=401,
            detail={
                "status": "error",
                "message": "无效的API密钥",
                "code": "INVALID_API_KEY"
            }
        )

    return api_key

# 请求模型
class BallSpectrumRequest(BaseModel):
    space: str
    r: float
    k: int = 2
    n: int = 3
    alpha: Optional[float] = None
    elements: int = defaults.DEFAULT_RADIAL_ELEMENTS
    mmax: int = 3
    count: int = 4

class CatenoidRequest(BaseModel):
    space: str
    r: float
    alpha: Optional[float] = None
    mmax: int = defaults.DEFAULT_MMAX
    elements: int = defaults.DEFAULT_RADIAL_ELEMENTS
    index_elements: int = defaults.INDEX_RADIAL_ELEMENTS

class VerifyRequest(BaseModel):
    space: Optional[str] = None
    r: Optional[float] = None
    surface: Optional[str] = None
    ode_kind: Optional[str] = None
    suite: Optional[str] = None
    k: int = 3
    level: int = defaults.DEFAULT_MESH_LEVEL
    count: int = 100
    seed: int = 0
    elements: int = defaults.CERTIFICATE_RADIAL_ELEMENTS
    index_elements: int = defaults.INDEX_RADIAL_ELEMENTS

class SweepRequest(BaseModel):
    r: Optional[float] = None
    k: int = 1
    alpha: Optional[float] = None
    level: Optional[int] = None
    epsilons: Optional[List[float]] = None
    delta: float = 0.125
    lengths: Optional[List[float]] = None
    surface: Optional[str] = None
    space: Optional[str] = None
    elements: int = defaults.DEFAULT_RADIAL_ELEMENTS

# 统一响应格式
def create_response(
    status: str,
    message: str,
    data: Optional[Union[Dict[str, Any], str]] = None,
    code: Optional[str] = None
) -> Dict[str, Any]:
    response = {
        "status": status,
        "message": message
    }
    if data is not None:
        response["data"] = data
    if code is not None:
        response["code"] = code
    return response

def error_response(e: Exception) -> HTTPException:
    """领域错误按退出码映射：2 → 422，3 → 404，其余 → 500"""
    if isinstance(e, SpectralGeometryError):
        logger.error(f"{e.code}: {e.message}")
        return HTTPException(
            status_code={2: 422, 3: 404}.get(e.exit_code, 500),
            detail=create_response(
                status="error",
                message=e.message,
                data=json.loads(cli.to_json(e.details)) if e.details else None,
                code=e.code
            )
        )
    logger.exception(f"处理请求时出错: {str(e)}")
    return HTTPException(
        status_code=500,
        detail=create_response(
            status="error",
            message=f"处理请求时出错: {str(e)}",
            code="INTERNAL_SERVER_ERROR"
        )
    )

def run_config(command: str, action: Optional[str], request: BaseModel) -> cli.RunConfig:
    config = cli.RunConfig(command=command, action=action, output="json", **request.model_dump(exclude_none=True))
    config.validate()
    return config

def run_payload(config: cli.RunConfig, result: Any) -> Dict[str, Any]:
    """与命令行相同的输出信封，转换为纯 JSON 类型"""
    return json.loads(cli.to_json(cli.envelope(config, result)))

# 健康检查接口
@app.get("/health")
async def health_check():
    return create_response(
        status="success",
        message="服务正常运行",
        data={"version": defaults.CODE_VERSION}
    )

# 球谱接口
@app.post("/ball-spectrum")
def ball_spectrum(request: BallSpectrumRequest, api_key: str = Depends(verify_api_key)):
    try:
        config = run_config("ball-spectrum", None, request)
        return create_response(
            status="success",
            message="球谱计算成功",
            data=run_payload(config, cli.run_ball_spectrum(config))
        )
    except Exception as e:
        raise error_response(e)

# 临界悬链面接口
@app.post("/catenoid/{action}")
def catenoid(action: str, request: CatenoidRequest, api_key: str = Depends(verify_api_key)):
    if action not in ("find", "spectrum", "index"):
        raise HTTPException(
            status_code=404,
            detail=create_response(status="error", message=f"未知操作: {action}", code="UNKNOWN_ACTION")
        )
    try:
        config = run_config("catenoid", action, request)
        return create_response(
            status="success",
            message="悬链面计算成功",
            data=run_payload(config, cli.run_catenoid(config))
        )
    except Exception as e:
        raise error_response(e)

# 检查接口
@app.post("/verify/{suite}")
def verify(suite: str, request: VerifyRequest, api_key: str = Depends(verify_api_key)):
    if suite not in cli.VERIFY_SUITES:
        raise HTTPException(
            status_code=404,
            detail=create_response(status="error", message=f"未知检查: {suite}", code="UNKNOWN_SUITE")
        )
    try:
        config = run_config("verify", suite, request)
        return create_response(
            status="success",
            message="检查完成",
            data=run_payload(config, cli.run_verify(config))
        )
    except Exception as e:
        raise error_response(e)

# 网格文件上传接口
@app.post("/mesh-spectrum/file")
def mesh_spectrum_file(
    file: UploadFile = File(...),
    alpha: float = Form(0.0),
    count: int = Form(6),
    api_key: str = Depends(verify_api_key)
):
    try:
        content = file.file.read()
        mesh = read_mesh(content)
        result = steklov_alpha_spectrum(assemble_tri(mesh), alpha, count)
        return create_response(
            status="success",
            message="网格谱计算成功",
            data={
                "filename": file.filename,
                "vertices": mesh.n_vertices,
                "genus": mesh.genus,
                "boundary_components": mesh.boundary_components,
                "spectrum": result.to_dict(),
                "version": defaults.CODE_VERSION,
                "tolerances": defaults.resolved_tolerances()
            }
        )
    except Exception as e:
        raise error_response(e)

# 后台扫描接口
@app.post("/sweep/{name}")
def submit_sweep(name: str, request: SweepRequest, api_key: str = Depends(verify_api_key)):
    if name not in cli.SWEEPS:
        raise HTTPException(
            status_code=404,
            detail=create_response(status="error", message=f"未知扫描: {name}", code="UNKNOWN_SWEEP")
        )
    try:
        config = run_config("sweep", name, request)
    except Exception as e:
        raise error_response(e)

    def job():
        table = cli.run_sweep(config)
        return {"csv": cli.render(cli.RunConfig(**{**config.to_dict(), "output": "csv"}), table),
                "rows": run_payload(config, table)["result"]}

    task_id = task_manager.submit(name, job)
    return create_response(
        status="success",
        message="扫描任务已提交",
        data={"task_id": task_id, "status": "doing"}
    )

# 任务状态接口
@app.get("/tasks/{task_id}")
def get_task(task_id: str, api_key: str = Depends(verify_api_key)):
    status = task_manager.get_task_status(task_id)
    if status["status"] == "not_found":
        raise HTTPException(
            status_code=404,
            detail=create_response(status="error", message=f"任务不存在: {task_id}", code="TASK_NOT_FOUND")
        )
    return create_response(
        status="success",
        message="任务状态查询成功",
        data={"task_id": task_id, **status}
    )

if __name__ == "__main__":
    uvicorn.run(app, host="0.0.0.0", port=8000)
