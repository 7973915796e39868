"""
HTTP front end of the marchenko app
"""
import pytest
from fastapi.testclient import TestClient

from main import app

BASE = "/api/v1/marchenko"


@pytest.fixture
def client():
    return TestClient(app)


def _null_rows(rho_deg=0.0):
    return [{"q_invfm": q, "delta_deg": 0.0, "rho_deg": rho_deg} for q in (0.5, 1.0, 1.5, 2.0)]


class TestHealth:
    def test_service_health(self, client):
        response = client.get("/health")
        assert response.status_code == 200
        assert response.json()["status"] == "healthy"

    def test_app_health(self, client):
        response = client.get(f"{BASE}/health")
        assert response.status_code == 200
        assert response.json()["report_schema"] == 1

    def test_root_lists_endpoints(self, client):
        assert "/reconstruct" in client.get(f"{BASE}/").json()["endpoints"]


class TestCommands:
    def test_forward(self, client):
        response = client.post(f"{BASE}/forward", json={"config": {"potential_kind": "square", "q_max": 2}})
        assert response.status_code == 200
        body = response.json()
        assert body["report"]["schema"] == 1
        assert body["report"]["command"] == "forward"
        assert body["report"]["n_samples"] == 20
        assert body["artifacts"]["phase_shifts.csv"].startswith("# forward scan of square potential")

    def test_reconstruct_null_table(self, client):
        response = client.post(f"{BASE}/reconstruct", json={"phase_shifts": _null_rows(), "config": {"h": 0.5, "R": 2}})
        assert response.status_code == 200
        body = response.json()
        assert body["report"]["v0_mev"] == [0.0, 0.0]
        assert body["report"]["grid"]["N"] == 4
        assert "# data=upload" in body["artifacts"]["potential.csv"]

    def test_reconstruct_with_bound_state(self, client):
        payload = {
            "phase_shifts": _null_rows(),
            "bound_states": [{"kappa_invfm": 0.232, "M2_invfm": 0.5}],
            "config": {"h": 0.1, "R": 2},
        }
        response = client.post(f"{BASE}/reconstruct", json=payload)
        assert response.status_code == 200
        assert response.json()["report"]["bound_state_energies_mev"] == pytest.approx([-0.232 ** 2 * 41.47])

    def test_fit_tail(self, client):
        rows = [{"q_invfm": q, "delta_deg": 57.29578 / q} for q in (3.0, 4.0, 5.0, 6.0, 7.0)]
        response = client.post(f"{BASE}/fit-tail", json={"phase_shifts": rows})
        assert response.status_code == 200
        assert response.json()["report"]["tail_fit"]["delta"]["c1"] == pytest.approx(1.0, abs=1e-5)


class TestErrors:
    def test_bad_config(self, client):
        response = client.post(f"{BASE}/forward", json={"config": {"h": 0.03}})
        assert response.status_code == 400
        assert response.json()["detail"]["stage"] == "config"

    def test_inconsistent_units(self, client):
        payload = {"phase_shifts": _null_rows(), "config": {"hbarc": 190.0}}
        response = client.post(f"{BASE}/reconstruct", json=payload)
        assert response.status_code == 400
        assert response.json()["detail"]["stage"] == "config"

    def test_too_few_rows(self, client):
        response = client.post(f"{BASE}/reconstruct", json={"phase_shifts": _null_rows()[:2]})
        assert response.status_code == 422

    def test_unitary_mode_with_absorption(self, client):
        payload = {"phase_shifts": _null_rows(rho_deg=5.0), "config": {"mode": "unitary", "h": 0.5, "R": 2}}
        response = client.post(f"{BASE}/reconstruct", json=payload)
        assert response.status_code == 422
        assert response.json()["detail"]["stage"] == "scatdata"

    def test_tabulated_forward_rejected(self, client):
        response = client.post(f"{BASE}/forward", json={"config": {"potential_kind": "tabulated"}})
        assert response.status_code == 400

    def test_row_without_momentum(self, client):
        rows = [{"delta_deg": 1.0}, {"delta_deg": 2.0}, {"delta_deg": 3.0}]
        response = client.post(f"{BASE}/reconstruct", json={"phase_shifts": rows})
        assert response.status_code == 422
        assert response.json()["detail"]["stage"] == "scatdata"
