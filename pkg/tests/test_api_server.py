import pytest

from backend.api_server import app
from backend.cli import execute


@pytest.fixture
def client(archive):
    app.config["TESTING"] = True
    with app.test_client() as client:
        yield client


def test_health(client):
    data = client.get("/api/health").get_json()
    assert data["status"] == "ok"
    assert data["database"] == "sqlite"


def test_classify(client):
    data = client.get("/api/classify?p=1&q=inf&n=3").get_json()
    assert data["chain"] == "c0 = N ⊊ ℓ∞ = I = E = L"


def test_classify_forms(client):
    data = client.get("/api/classify?p=4&n=3&forms=1").get_json()
    assert data["kind"] == "forms"
    assert data["ideals"][3]["space"] == {"kind": "lu", "exponent": "4"}


def test_table(client):
    data = client.get("/api/table?p=3&q=1").get_json()
    assert data == {"type": "tables", "table1": "N = I", "table2": "I = E ≠ L"}


def test_norm(client):
    data = client.get("/api/norm?ideal=L&p=2&q=1&n=1&alpha=3,4").get_json()
    assert data["certificate"]["value"] == pytest.approx(5.0)


def test_nuclear_norm_with_power_sequence(client):
    data = client.get("/api/norm?ideal=N&p=2&q=2&n=2&alpha=pow:1&nmax=4").get_json()
    assert data["t"] == "1"
    assert data["certificate"]["value"] == pytest.approx(1 + 1 / 2 + 1 / 3 + 1 / 4)


@pytest.mark.parametrize("url", [
    "/api/norm?ideal=E&p=2&q=1&n=1&alpha=1",
    "/api/norm?ideal=L&p=2&q=1&alpha=1",
    "/api/norm?ideal=L&p=1/2&q=1&n=1&alpha=1",
    "/api/classify?p=2&n=2",
    "/api/growth?p=2&q=2&n=2&ideal=E&s=1",
    "/api/growth?p=2&q=2&n=2&s=1&nmax=100000000",
])
def test_bad_requests(client, url):
    response = client.get(url)
    assert response.status_code == 400
    assert "error" in response.get_json()


def test_growth(client):
    data = client.get("/api/growth?p=inf&q=1&n=1&ideal=L&s=0.9&nmax=1024").get_json()
    assert data["grid"] == [16, 32, 64, 128, 256, 512, 1024]
    assert data["bounded"] is False


def test_reports(client):
    execute(["--save", "table", "--p", "2", "--q", "2"])
    data = client.get("/api/reports").get_json()
    assert data["count"] == 1
    report_id = data["reports"][0]["id"]
    detail = client.get(f"/api/reports/{report_id}").get_json()
    assert detail["payload"]["command"] == "table"


def test_missing_report(client):
    response = client.get("/api/reports/12345")
    assert response.status_code == 404


def test_unknown_route(client):
    assert client.get("/api/nothing").status_code == 404


def test_stats_and_suite_runs(client, archive):
    archive.record_suite_run({"walsh_axioms": {"passed": True, "detail": "", "seconds": 0.1}}, seed=1)
    assert client.get("/api/stats").get_json()["suite_runs"] == 1
    runs = client.get("/api/suite-runs").get_json()["runs"]
    assert runs[0]["seed"] == 1
