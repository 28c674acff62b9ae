"""LLM client layer: fixture keys, replay, recording, client resolution."""

import json

import pytest

from uibench.llm import (
    HttpLlmClient,
    LlmClient,
    RecordingLlmClient,
    ReplayLlmClient,
    ReplayMissError,
    TransportError,
    client_from_args,
    prompt_key,
)


class TestPromptKey:
    def test_stable(self):
        assert prompt_key("hi") == prompt_key("hi")
        assert len(prompt_key("hi")) == 64

    def test_system_is_part_of_key(self):
        assert prompt_key("hi", "be brief") != prompt_key("hi")

    def test_separator_prevents_collisions(self):
        # ("ab", "c...") must not collide with ("a", "bc...").
        assert prompt_key("c", "ab") != prompt_key("bc", "a")


class TestReplay:
    def test_hit_and_miss(self):
        client = ReplayLlmClient({prompt_key("q1"): "a1"})
        assert client.send("q1") == "a1"
        with pytest.raises(ReplayMissError):
            client.send("q2")
        assert isinstance(ReplayMissError("x"), KeyError)

    def test_system_respected(self):
        client = ReplayLlmClient({prompt_key("q", "sys"): "with-system"})
        assert client.send("q", "sys") == "with-system"
        with pytest.raises(ReplayMissError):
            client.send("q")

    def test_from_file_wrapped_shape(self, tmp_path):
        path = tmp_path / "fx.json"
        path.write_text(json.dumps(
            {"model": "m1", "responses": {prompt_key("q"): "a"}}))
        client = ReplayLlmClient.from_file(path)
        assert client.model == "m1"
        assert client.send("q") == "a"
        assert client.replay is True

    def test_from_file_plain_dict(self, tmp_path):
        path = tmp_path / "fx.json"
        path.write_text(json.dumps({prompt_key("q"): "a"}))
        assert ReplayLlmClient.from_file(path).send("q") == "a"


class _StubClient(LlmClient):
    model = "stub"

    def __init__(self):
        self.calls = 0

    def send(self, prompt: str, system: str = "") -> str:
        self.calls += 1
        return f"reply to {prompt}"


class TestRecording:
    def test_records_and_dedupes(self, tmp_path):
        path = tmp_path / "rec.json"
        stub = _StubClient()
        rec = RecordingLlmClient(stub, path)
        assert rec.send("q1") == "reply to q1"
        assert rec.send("q1") == "reply to q1"
        assert stub.calls == 1
        data = json.loads(path.read_text())
        assert data["model"] == "stub"
        assert data["responses"] == {prompt_key("q1"): "reply to q1"}
        # A fresh replay client serves the recorded fixture.
        assert ReplayLlmClient.from_file(path).send("q1") == "reply to q1"

    def test_appends_to_existing_file(self, tmp_path):
        path = tmp_path / "rec.json"
        RecordingLlmClient(_StubClient(), path).send("q1")
        rec2 = RecordingLlmClient(_StubClient(), path)
        rec2.send("q2")
        data = json.loads(path.read_text())
        assert len(data["responses"]) == 2


class TestHttpClient:
    def test_requires_endpoint_and_model(self):
        with pytest.raises(ValueError):
            HttpLlmClient("", "m")
        with pytest.raises(ValueError):
            HttpLlmClient("http://x", "")

    def test_from_env_requires_vars(self, monkeypatch):
        monkeypatch.delenv("UIBENCH_LLM_ENDPOINT", raising=False)
        monkeypatch.delenv("UIBENCH_LLM_MODEL", raising=False)
        with pytest.raises(ValueError):
            HttpLlmClient.from_env()

    def test_from_env_reads_vars(self, monkeypatch):
        monkeypatch.setenv("UIBENCH_LLM_ENDPOINT", "http://llm.local/v1/")
        monkeypatch.setenv("UIBENCH_LLM_MODEL", "judge-1")
        monkeypatch.setenv("UIBENCH_LLM_API_KEY", "sk-test")
        client = HttpLlmClient.from_env()
        assert client.endpoint == "http://llm.local/v1"
        assert client.model == "judge-1"
        assert client.api_key == "sk-test"

    def test_network_failure_is_transport_error(self):
        client = HttpLlmClient("http://127.0.0.1:1", "m", timeout=0.2)
        with pytest.raises(TransportError):
            client.send("q")


class TestClientResolution:
    def test_fixtures_force_replay(self, tmp_path, monkeypatch):
        monkeypatch.setenv("UIBENCH_LLM_ENDPOINT", "http://live")
        monkeypatch.setenv("UIBENCH_LLM_MODEL", "live-model")
        path = tmp_path / "fx.json"
        path.write_text(json.dumps({"responses": {}}))
        assert client_from_args(path).replay is True

    def test_explicit_endpoint(self, monkeypatch):
        monkeypatch.delenv("UIBENCH_LLM_API_KEY", raising=False)
        client = client_from_args(None, endpoint="http://x", model="m")
        assert isinstance(client, HttpLlmClient)
        assert client.model == "m"

    def test_falls_back_to_env(self, monkeypatch):
        monkeypatch.setenv("UIBENCH_LLM_ENDPOINT", "http://env")
        monkeypatch.setenv("UIBENCH_LLM_MODEL", "env-model")
        client = client_from_args(None)
        assert client.endpoint == "http://env"
