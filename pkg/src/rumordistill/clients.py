"""Model-client adapters.

Wire contract: (prompt text, optional image reference) -> completion text.
Remote adapters talk to chat-completion endpoints or a locally served
student; scripted in-process mocks correlate calls by evaluation order and
expose reset() so one client instance can serve several runs.
"""

from __future__ import annotations

import os
from typing import Callable, Protocol, Sequence

import requests

from .errors import ClientUnavailable, EndpointFailure
from .labels import terminal_sentence
from .models import StandardLabel
from .retrieval import RetryPolicy
from .util import retry_call


class ModelClient(Protocol):
    def complete(self, prompt: str, image: str | None = None) -> str: ...


def reset_client(client: object) -> None:
    reset = getattr(client, "reset", None)
    if callable(reset):
        reset()


class EchoClient:
    """Answers the gold terminal sentence for each call, in order."""

    def __init__(self, golds: Sequence[StandardLabel]) -> None:
        self._golds = list(golds)
        self._index = 0

    def reset(self) -> None:
        self._index = 0

    def complete(self, prompt: str, image: str | None = None) -> str:
        gold = self._golds[self._index]
        self._index += 1
        return terminal_sentence(gold)


class ConstantClient:
    """Always answers the terminal sentence for one fixed label."""

    def __init__(self, label: StandardLabel) -> None:
        self._label = label

    def complete(self, prompt: str, image: str | None = None) -> str:
        return terminal_sentence(self._label)


class ScriptedClient:
    """Delegates to fn(call_index, prompt, image); call_index resets per run."""

    def __init__(self, fn: Callable[[int, str, str | None], str]) -> None:
        self._fn = fn
        self._index = 0

    def reset(self) -> None:
        self._index = 0

    def complete(self, prompt: str, image: str | None = None) -> str:
        out = self._fn(self._index, prompt, image)
        self._index += 1
        return out


class _Retryable(Exception):
    pass


class ChatCompletionClient:
    """Adapter for an OpenAI-style chat-completion endpoint."""

    def __init__(self, endpoint: str, model_id: str,
                 api_key_env: str = "EVAL_API_KEY", temperature: float = 0.0,
                 max_tokens: int = 1024, timeout: float = 60.0,
                 retry: RetryPolicy | None = None) -> None:
        self.endpoint = endpoint
        self.model_id = model_id
        self.api_key_env = api_key_env
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.timeout = timeout
        self.retry = retry or RetryPolicy()

    def complete(self, prompt: str, image: str | None = None) -> str:
        def attempt() -> str:
            headers = {"Content-Type": "application/json"}
            api_key = os.environ.get(self.api_key_env, "")
            if api_key:
                headers["Authorization"] = f"Bearer {api_key}"
            body = {
                "model": self.model_id,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": self.temperature,
                "max_tokens": self.max_tokens,
            }
            try:
                response = requests.post(self.endpoint, json=body, headers=headers,
                                         timeout=self.timeout)
            except requests.ConnectionError as exc:
                raise ClientUnavailable(str(exc)) from exc
            except requests.RequestException as exc:
                raise _Retryable(str(exc)) from exc
            if response.status_code == 429 or response.status_code >= 500:
                raise _Retryable(f"{self.endpoint} answered {response.status_code}")
            if not 200 <= response.status_code < 300:
                raise EndpointFailure(f"{self.endpoint} answered {response.status_code}")
            try:
                return response.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, ValueError, TypeError) as exc:
                raise EndpointFailure(f"malformed completion response: {exc}") from exc

        try:
            return retry_call(attempt, max_attempts=self.retry.max_attempts,
                              base_backoff=self.retry.base_backoff,
                              retry_on=(_Retryable,))
        except _Retryable as exc:
            raise EndpointFailure(str(exc)) from exc


class StudentServerClient:
    """Adapter for a locally served student: POST /v1/complete."""

    def __init__(self, endpoint: str, timeout: float = 120.0) -> None:
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout

    def complete(self, prompt: str, image: str | None = None) -> str:
        try:
            response = requests.post(f"{self.endpoint}/v1/complete",
                                     json={"prompt": prompt, "image": image},
                                     timeout=self.timeout)
        except requests.ConnectionError as exc:
            raise ClientUnavailable(str(exc)) from exc
        except requests.RequestException as exc:
            raise EndpointFailure(str(exc)) from exc
        if not 200 <= response.status_code < 300:
            raise EndpointFailure(f"student server answered {response.status_code}")
        try:
            return response.json()["completion"]
        except (KeyError, ValueError, TypeError) as exc:
            raise EndpointFailure(f"malformed student response: {exc}") from exc
