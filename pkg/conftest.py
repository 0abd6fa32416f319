import threading

import pytest

from task_manager import task_manager


class MemoryRedis:
    """测试用的 redis 替身，只实现任务表用到的命令"""

    def __init__(self):
        self.hashes = {}
        self.ttls = {}
        self.lock = threading.Lock()

    def ping(self):
        return True

    def hset(self, key, mapping):
        with self.lock:
            self.hashes.setdefault(key, {}).update({name: str(value) for name, value in mapping.items()})
        return len(mapping)

    def hgetall(self, key):
        with self.lock:
            return dict(self.hashes.get(key, {}))

    def expire(self, key, seconds):
        with self.lock:
            if key not in self.hashes:
                return False
            self.ttls[key] = seconds
            return True


@pytest.fixture
def memory_redis():
    return MemoryRedis()


@pytest.fixture(autouse=True)
def task_store(memory_redis, monkeypatch):
    monkeypatch.setattr(task_manager, "client", memory_redis)
    return memory_redis
