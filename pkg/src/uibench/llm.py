"""External LLM client with record/replay support.

Generation and judging talk to an abstract `LlmClient`.  Tests and
reproducible runs use `ReplayLlmClient`, which serves canned responses
keyed by a hash of (system, prompt) and never touches the network.
`RecordingLlmClient` wraps a live client and captures fixtures for later
replay.  Credentials come only from the environment, never from files.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from abc import ABC, abstractmethod
from pathlib import Path

logger = logging.getLogger(__name__)

ENV_ENDPOINT = "UIBENCH_LLM_ENDPOINT"
ENV_MODEL = "UIBENCH_LLM_MODEL"
ENV_API_KEY = "UIBENCH_LLM_API_KEY"

_DEFAULT_TIMEOUT = 60.0


class TransportError(RuntimeError):
    """The request could not be completed (network, HTTP, or shape error)."""


class ReplayMissError(KeyError):
    """No fixture recorded for this prompt."""


def prompt_key(prompt: str, system: str = "") -> str:
    """Stable fixture key for a (system, prompt) pair."""
    payload = system.encode("utf-8") + b"\x00" + prompt.encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


class LlmClient(ABC):
    """Minimal text-in/text-out interface to a chat LLM."""

    endpoint: str = ""
    model: str = ""
    replay: bool = False

    @abstractmethod
    def send(self, prompt: str, system: str = "") -> str:
        """Send one prompt and return the raw completion text.

        Raises:
            TransportError: the call could not be completed.
        """


class ReplayLlmClient(LlmClient):
    """Serves fixture responses; identical prompts get identical replies."""

    replay = True

    def __init__(self, fixtures: dict[str, str], model: str = "replay"):
        self.fixtures = dict(fixtures)
        self.model = model

    @classmethod
    def from_file(cls, path: str | Path) -> "ReplayLlmClient":
        data = json.loads(Path(path).read_text("utf-8"))
        responses = data.get("responses", data)
        return cls({str(k): str(v) for k, v in responses.items()},
                   model=str(data.get("model", "replay")) if isinstance(data, dict) else "replay")

    def send(self, prompt: str, system: str = "") -> str:
        key = prompt_key(prompt, system)
        try:
            return self.fixtures[key]
        except KeyError:
            raise ReplayMissError(f"no fixture for prompt key {key}") from None


class RecordingLlmClient(LlmClient):
    """Delegates to a live client and stores every response as a fixture."""

    def __init__(self, inner: LlmClient, path: str | Path):
        self.inner = inner
        self.path = Path(path)
        self.model = inner.model
        if self.path.exists():
            data = json.loads(self.path.read_text("utf-8"))
            self._responses: dict[str, str] = dict(data.get("responses", {}))
        else:
            self._responses = {}

    def send(self, prompt: str, system: str = "") -> str:
        key = prompt_key(prompt, system)
        if key not in self._responses:
            self._responses[key] = self.inner.send(prompt, system)
            self._flush()
        return self._responses[key]

    def _flush(self) -> None:
        payload = {"model": self.model, "responses": dict(sorted(self._responses.items()))}
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")


class HttpLlmClient(LlmClient):
    """Chat-completions HTTP client (OpenAI-style request/response shape)."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        timeout: float = _DEFAULT_TIMEOUT,
        temperature: float = 0.0,
    ):
        if not endpoint or not model:
            raise ValueError("endpoint and model are required for a live client")
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.temperature = temperature

    @classmethod
    def from_env(cls) -> "HttpLlmClient":
        """Build a live client from UIBENCH_LLM_* environment variables."""
        endpoint = os.environ.get(ENV_ENDPOINT, "")
        model = os.environ.get(ENV_MODEL, "")
        if not endpoint or not model:
            raise ValueError(
                f"live LLM access needs {ENV_ENDPOINT} and {ENV_MODEL} set "
                f"(credential via {ENV_API_KEY})"
            )
        return cls(endpoint, model, api_key=os.environ.get(ENV_API_KEY))

    def send(self, prompt: str, system: str = "") -> str:
        import requests

        messages = []
        if system:
            messages.append({"role": "system", "content": system})
        messages.append({"role": "user", "content": prompt})
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = requests.post(
                f"{self.endpoint}/chat/completions",
                json={
                    "model": self.model,
                    "messages": messages,
                    "temperature": self.temperature,
                },
                headers=headers,
                timeout=self.timeout,
            )
            resp.raise_for_status()
            body = resp.json()
            return body["choices"][0]["message"]["content"]
        except TransportError:
            raise
        except Exception as exc:
            raise TransportError(f"LLM request failed: {exc}") from exc


def client_from_args(
    fixtures: str | Path | None,
    endpoint: str | None = None,
    model: str | None = None,
) -> LlmClient:
    """Resolve a client: fixtures force replay mode, else env/flags go live."""
    if fixtures is not None:
        return ReplayLlmClient.from_file(fixtures)
    if endpoint and model:
        return HttpLlmClient(endpoint, model, api_key=os.environ.get(ENV_API_KEY))
    return HttpLlmClient.from_env()
