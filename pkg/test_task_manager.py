import defaults
from task_manager import TaskManager, TaskStatus


def test_successful_task_keeps_result(memory_redis):
    manager = TaskManager(client=memory_redis, max_workers=1)
    task_id = manager.submit("demo", lambda: {"value": 3, "rows": [1.5, 2.5]})
    assert task_id.startswith("spectral-sweep::demo::")
    status = manager.wait(task_id, timeout=30)
    assert status["status"] == TaskStatus.SUCCESS.value
    assert status["result"] == {"value": 3, "rows": [1.5, 2.5]}


def test_task_hash_expires(memory_redis):
    manager = TaskManager(client=memory_redis, max_workers=1)
    task_id = manager.submit("demo", lambda: {"value": 1})
    manager.wait(task_id, timeout=30)
    assert memory_redis.ttls[task_id] == defaults.TASK_TTL
    assert set(memory_redis.hashes[task_id]) == {"status", "message", "updated_at", "result"}


def test_failed_task_records_message(memory_redis):
    manager = TaskManager(client=memory_redis, max_workers=1)

    def broken():
        raise RuntimeError("boom")

    status = manager.wait(manager.submit("demo", broken), timeout=30)
    assert status["status"] == TaskStatus.FAIL.value
    assert status["message"] == "boom"
    assert "result" not in status


def test_unserializable_result_fails_task(memory_redis):
    manager = TaskManager(client=memory_redis, max_workers=1)
    status = manager.wait(manager.submit("demo", lambda: {"value": object()}), timeout=30)
    assert status["status"] == TaskStatus.FAIL.value


def test_unknown_task(memory_redis):
    assert TaskManager(client=memory_redis, max_workers=1).get_task_status("missing") == {"status": "not_found"}


def test_connection_uses_redis_url(monkeypatch):
    calls = {}

    class Client:
        def ping(self):
            calls["ping"] = True

    def from_url(url, decode_responses):
        calls["url"] = url
        calls["decode"] = decode_responses
        return Client()

    monkeypatch.setenv("REDIS_URL", "redis://cache:6380/2")
    monkeypatch.setattr("task_manager.redis.Redis.from_url", from_url)
    manager = TaskManager(max_workers=1)
    assert isinstance(manager.redis, Client)
    assert calls == {"url": "redis://cache:6380/2", "decode": True, "ping": True}
