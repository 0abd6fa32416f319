import json
import time
import uuid
import logging
from enum import Enum
from datetime import datetime
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Optional

import redis

import defaults

logger = logging.getLogger(__name__)


class TaskStatus(Enum):
    DOING = "doing"
    SUCCESS = "success"
    FAIL = "fail"


class TaskManager:
    """后台扫描任务：状态存放在 redis 哈希中，计算在线程池中进行"""

    def __init__(self, client: Optional[redis.Redis] = None, max_workers: Optional[int] = None,
                 ttl: int = defaults.TASK_TTL):
        self.client = client
        self.ttl = ttl
        self.executor = ThreadPoolExecutor(max_workers=max_workers or defaults.thread_count())

    @property
    def redis(self) -> redis.Redis:
        """首次使用时按 REDIS_URL 建立连接"""
        if self.client is None:
            client = redis.Redis.from_url(defaults.redis_url(), decode_responses=True)
            try:
                client.ping()
                logger.info("Redis连接成功")
            except redis.AuthenticationError:
                logger.error("Redis认证失败，请检查 REDIS_URL 中的密码")
                raise
            except redis.ConnectionError:
                logger.error("Redis连接失败，请检查 REDIS_URL 中的主机和端口")
                raise
            self.client = client
        return self.client

    def _get_task_key(self, task_type: str) -> str:
        """生成任务编号"""
        return f"spectral-sweep::{task_type}::{uuid.uuid4().hex}"

    def update_task_status(self, task_id: str, status: TaskStatus, message: str = "", result=None) -> None:
        """更新任务状态，并刷新过期时间"""
        data = {
            "status": status.value,
            "message": message,
            "updated_at": datetime.now().isoformat()
        }
        if result is not None:
            data["result"] = json.dumps(result, ensure_ascii=False)
        self.redis.hset(task_id, mapping=data)
        self.redis.expire(task_id, self.ttl)

    def get_task_status(self, task_id: str) -> Dict:
        """获取任务状态"""
        data = self.redis.hgetall(task_id)
        if not data:
            return {"status": "not_found"}
        data = dict(data)
        if "result" in data:
            data["result"] = json.loads(data["result"])
        return data

    def submit(self, task_type: str, job: Callable[[], object]) -> str:
        """
        提交后台任务

        Args:
            task_type: 任务类型，写入编号
            job: 无参可调用对象，返回值须可 JSON 序列化，作为结果保存

        Returns:
            任务编号
        """
        task_id = self._get_task_key(task_type)
        self.update_task_status(task_id, TaskStatus.DOING, "任务已提交")

        def run():
            try:
                result = job()
                self.update_task_status(task_id, TaskStatus.SUCCESS, "任务完成", result)
            except Exception as e:
                logger.error(f"任务 {task_id} 失败: {str(e)}")
                self.update_task_status(task_id, TaskStatus.FAIL, str(e))
                return
            logger.info(f"任务 {task_id} 完成")

        self.executor.submit(run)
        return task_id

    def wait(self, task_id: str, timeout: float = 3600, interval: float = 0.05) -> Dict:
        """阻塞等待任务结束，供脚本和测试使用"""
        start_time = datetime.now()
        while (datetime.now() - start_time).total_seconds() < timeout:
            status = self.get_task_status(task_id)
            if status.get("status") in (TaskStatus.SUCCESS.value, TaskStatus.FAIL.value):
                return status
            time.sleep(interval)
        return self.get_task_status(task_id)


# 创建全局任务管理器实例，首次请求时才连接 redis
task_manager = TaskManager()
