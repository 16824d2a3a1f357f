import pytest
from fastapi.testclient import TestClient
from httpx import ASGITransport, AsyncClient

from app.main import app
from tests.conftest import MULLER_BOTH, TRIVIAL, ZERO_TEST


@pytest.fixture
def client():
    with TestClient(app) as test_client:
        yield test_client


def test_health(client):
    response = client.get("/api/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "healthy"
    assert set(body["bounds"]) == {"C", "K", "N"}


class TestCoding:
    def test_encode(self, client):
        response = client.post("/api/v1/coding/encode", json={"u": "ab", "v": "a", "blocks": 3})
        assert response.status_code == 200
        assert response.json() == {"prefix": "A0aB00bA000a", "zero_runs": [1, 2, 3]}

    def test_encode_needs_a_cycle(self, client):
        response = client.post("/api/v1/coding/encode", json={"u": "ab", "v": "", "blocks": 1})
        assert response.status_code == 422

    def test_encode_reserved_letter(self, client):
        response = client.post("/api/v1/coding/encode", json={"u": "A", "v": "a", "blocks": 1})
        assert response.status_code == 400

    def test_decode(self, client):
        response = client.post("/api/v1/coding/decode", json={"word": "A0aB0b"})
        assert response.status_code == 200
        body = response.json()
        assert body["blocks"][1] == {"separator": "B", "zeros": 1, "payload": "b"}
        assert body["first_deviant_block"] == 2

    def test_decode_error(self, client):
        response = client.post("/api/v1/coding/decode", json={"word": "AaB"})
        assert response.status_code == 422
        assert "offset 1" in response.json()["detail"]

    def test_classify(self, client):
        response = client.post("/api/v1/coding/classify", json={"u": "B", "v": "a"})
        assert response.json() == {"in_l1": True, "in_l2": False, "in_l": True, "region": "escape"}


class TestMachines:
    def test_validate(self, client):
        response = client.post("/api/v1/machines/validate", json={"automaton": ZERO_TEST})
        assert response.status_code == 200
        assert response.json() == {
            "states": 2,
            "alphabet": ["a", "b"],
            "counters": 1,
            "blind": [],
            "transitions": 6,
            "acceptance": "buchi",
        }

    def test_validate_names_the_line(self, client):
        response = client.post(
            "/api/v1/machines/validate", json={"automaton": TRIVIAL + "t q a Z - q\n"}
        )
        assert response.status_code == 422
        assert response.json()["detail"].startswith("line 9:")

    def test_translate(self, client):
        response = client.post(
            "/api/v1/machines/translate", json={"automaton": TRIVIAL, "emit": "b"}
        )
        assert response.status_code == 200
        summary = response.json()["summary"]
        assert summary["counters"] == 4
        assert summary["blind"] == [0, 1, 2, 3]

    def test_translate_needs_buchi(self, client):
        response = client.post(
            "/api/v1/machines/translate", json={"automaton": MULLER_BOTH, "emit": "b"}
        )
        assert response.status_code == 400


class TestMembership:
    def test_lasso(self, client):
        response = client.post(
            "/api/v1/membership/lasso",
            json={"automaton": ZERO_TEST, "word": {"v": "b"}, "counter_bound": 16},
        )
        body = response.json()
        assert body["verdict"] == "accept"
        assert body["bounds"]["C"] == 16
        assert body["witness"]["cycle"] == ["f"]

    def test_lasso_letter_outside_alphabet(self, client):
        response = client.post(
            "/api/v1/membership/lasso", json={"automaton": ZERO_TEST, "word": {"v": "c"}}
        )
        assert response.status_code == 400

    def test_coded(self, client):
        response = client.post(
            "/api/v1/membership/coded",
            json={"automaton": TRIVIAL, "word": {"v": "a"}, "blocks": 4},
        )
        body = response.json()
        assert body["verdict"] == "accept"
        assert body["bounds"] == {"N": 4}
        assert len(body["survivors"]) == 4

    def test_certify(self, client):
        response = client.post(
            "/api/v1/membership/certify",
            json={"automaton": TRIVIAL, "word": {"v": "a"}, "blocks": 2},
        )
        body = response.json()
        assert body["valid"] is True
        assert body["blocks"] == [
            "block 1 u=0 v=1 q --a * +0--> q F",
            "block 2 u=0 v=2 q --a * +0--> q F",
        ]


class TestGames:
    def test_copy(self, client):
        response = client.post(
            "/api/v1/games/play",
            json={"automaton": TRIVIAL, "mode": "copy", "word": {"v": "a"}, "horizon": 4},
        )
        body = response.json()
        assert body["outcome"] == "P2 wins"
        assert body["rounds"][0] == "1 P1 a P2 A"

    def test_coded_commitment_needs_threecase(self, client):
        response = client.post(
            "/api/v1/games/play",
            json={"automaton": TRIVIAL, "mode": "copy", "word": {"v": "a"}, "coded": True},
        )
        assert response.status_code == 422

    def test_threecase_coded(self, client):
        response = client.post(
            "/api/v1/games/play",
            json={
                "automaton": TRIVIAL,
                "mode": "threecase",
                "word": {"v": "a"},
                "coded": True,
                "horizon": 8,
            },
        )
        body = response.json()
        assert body["outcome"] == "P2 wins"
        assert body["player1"] == "h((a)^w)"
        assert body["player2"] == "(a)^w"
        assert body["answer2"] == "in"


async def test_async_client():
    async with AsyncClient(transport=ASGITransport(app=app), base_url="http://test") as ac:
        response = await ac.post("/api/v1/coding/encode", json={"v": "ab", "blocks": 2})
    assert response.status_code == 200
    assert response.json()["prefix"] == "A0aB00b"
