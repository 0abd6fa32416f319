import inspect
import math

import pytest
from fastapi.testclient import TestClient

import app as app_module
import defaults
from app import app
from discretize import mesh_disk, write_mesh
from task_manager import TaskStatus, task_manager

API_KEY = "test-key"
HEADERS = {"Authorization": f"Bearer {API_KEY}"}


@pytest.fixture
def client(monkeypatch):
    monkeypatch.setenv("API_KEY", API_KEY)
    return TestClient(app)


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "success", "message": "服务正常运行",
                               "data": {"version": defaults.CODE_VERSION}}


def test_invalid_api_key(client):
    response = client.post("/ball-spectrum", json={"space": "spherical", "r": 0.7},
                           headers={"Authorization": "Bearer wrong"})
    assert response.status_code == 401
    assert response.json()["detail"]["code"] == "INVALID_API_KEY"


def test_invalid_auth_format(client):
    response = client.post("/ball-spectrum", json={"space": "spherical", "r": 0.7},
                           headers={"Authorization": API_KEY})
    assert response.status_code == 401
    assert response.json()["detail"]["code"] == "INVALID_AUTH_FORMAT"


def test_ball_spectrum(client):
    response = client.post("/ball-spectrum", json={"space": "spherical", "r": 0.7}, headers=HEADERS)
    assert response.status_code == 200
    data = response.json()["data"]
    assert data["version"] == defaults.CODE_VERSION
    assert data["config"]["command"] == "ball-spectrum"
    sigmas = data["result"]["sigmas"]
    assert sigmas[0] == pytest.approx(-math.tan(0.7), abs=1e-5)
    assert sigmas[1] == pytest.approx(1 / math.tan(0.7), abs=1e-5)


def test_radius_out_of_range_is_422(client):
    response = client.post("/ball-spectrum", json={"space": "spherical", "r": 1.6}, headers=HEADERS)
    assert response.status_code == 422
    detail = response.json()["detail"]
    assert detail["status"] == "error"
    assert detail["code"] == "RADIUS_OUT_OF_RANGE"


def test_catenoid_find(client):
    response = client.post("/catenoid/find", json={"space": "spherical", "r": 0.6}, headers=HEADERS)
    assert response.status_code == 200
    result = response.json()["data"]["result"]
    assert result["residual_phi0"] < 1e-9


def test_unattainable_catenoid_is_404(client):
    response = client.post("/catenoid/find", json={"space": "hyperbolic", "r": 20.0}, headers=HEADERS)
    assert response.status_code == 404
    detail = response.json()["detail"]
    assert detail["code"] == "NO_SOLUTION"
    lo, hi = detail["data"]["attainable_range"]
    assert lo < hi


def test_unknown_catenoid_action(client):
    response = client.post("/catenoid/shape", json={"space": "spherical", "r": 0.6}, headers=HEADERS)
    assert response.status_code == 404


def test_verify_ode(client):
    response = client.post("/verify/ode", json={"ode_kind": "ball-hyperbolic", "k": 3}, headers=HEADERS)
    assert response.status_code == 200
    assert response.json()["data"]["result"]["passed"]


def test_mesh_spectrum_upload(client):
    text = write_mesh(mesh_disk(4))
    response = client.post("/mesh-spectrum/file", files={"file": ("disk.mesh", text, "text/plain")},
                           data={"alpha": "0.0", "count": "3"}, headers=HEADERS)
    assert response.status_code == 200
    data = response.json()["data"]
    assert data["genus"] == 0
    assert data["boundary_components"] == 1
    assert abs(data["spectrum"]["sigmas"][0]) < 1e-8
    assert data["spectrum"]["sigmas"][1] == pytest.approx(1.0, abs=2e-2)


def test_malformed_mesh_is_422(client):
    response = client.post("/mesh-spectrum/file", files={"file": ("bad.mesh", "3 0 x\n", "text/plain")},
                           headers=HEADERS)
    assert response.status_code == 422


def test_sweep_task_lifecycle(client, task_store):
    response = client.post("/sweep/omega-floor", json={"lengths": [2.0, 4.0]}, headers=HEADERS)
    assert response.status_code == 200
    task_id = response.json()["data"]["task_id"]
    assert task_manager.wait(task_id, timeout=600)["status"] == TaskStatus.SUCCESS.value

    response = client.get(f"/tasks/{task_id}", headers=HEADERS)
    assert response.status_code == 200
    data = response.json()["data"]
    assert data["status"] == "success"
    assert len(data["result"]["rows"]) == 2
    assert data["result"]["csv"].startswith("# config=")
    assert task_store.ttls[task_id] == defaults.TASK_TTL


def test_unknown_task_is_404(client):
    response = client.get("/tasks/nothing", headers=HEADERS)
    assert response.status_code == 404
    assert response.json()["detail"]["code"] == "TASK_NOT_FOUND"


@pytest.mark.parametrize("name", ["ball_spectrum", "catenoid", "verify", "mesh_spectrum_file", "submit_sweep",
                                  "get_task"])
def test_compute_endpoints_run_in_threadpool(name):
    assert not inspect.iscoroutinefunction(getattr(app_module, name))
