# -*- coding: utf-8 -*-
#
# Copyright (C) 2026 nckg-review contributors
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU Lesser General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Lesser General Public License for more details.
#
# You should have received a copy of the GNU Lesser General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.
"""Chat-completion gateway with a live HTTP backend and a scripted mock."""

import hashlib
import json
import logging
import os
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Union

import requests
from requests_toolbelt.sessions import BaseUrlSession  # type: ignore

from nckg import const, prompts, utils
from nckg.exceptions import (
    GatewayAuthenticationError,
    GatewayError,
    GatewayHttpError,
    GatewayTimeoutError,
    MalformedResponse,
    MockMiss,
)

__all__ = [
    "GatewayConfig",
    "ChatRequest",
    "ChatResponse",
    "HttpBackend",
    "MockBackend",
    "Gateway",
    "complete",
    "prompt_hash",
]

log = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant")
RETRY_STATUSES = (429, 500, 502, 503, 504)


@dataclass(frozen=True)
class GatewayConfig(object):
    """Settings of the chat-completion gateway.

    Args:
        endpoint: Base URL of the chat-completions API
        api_key_env: Name of the environment variable holding the API key
        model: Model name sent with every request
        timeout: Per-request timeout, in seconds
        max_retries: Retries after transport errors, 429 or 5xx responses
        backoff_base: First retry wait, in seconds; doubled on each retry
        backend: ``http`` or ``mock``
        mock_script: Path of the JSON script used by the mock backend
        max_in_flight: Maximum number of concurrent requests
    """

    endpoint: str = const.DEFAULT_ENDPOINT
    api_key_env: str = const.DEFAULT_API_KEY_ENV
    model: str = const.DEFAULT_MODEL
    timeout: float = const.DEFAULT_TIMEOUT
    max_retries: int = const.DEFAULT_MAX_RETRIES
    backoff_base: float = const.DEFAULT_BACKOFF_BASE
    backend: str = "http"
    mock_script: Optional[str] = None
    max_in_flight: int = const.DEFAULT_MAX_IN_FLIGHT
    temperature: float = 0.0
    max_tokens: Optional[int] = None

    def __post_init__(self) -> None:
        if self.backend not in ("http", "mock"):
            raise ValueError("backend must be 'http' or 'mock', not %r" % self.backend)
        if self.backend == "mock" and not self.mock_script:
            raise ValueError("The mock backend needs a script file")
        if self.backend == "http" and not self.endpoint:
            raise ValueError("The http backend needs an endpoint")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must not be negative")
        if self.backoff_base < 0:
            raise ValueError("backoff_base must not be negative")
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be at least 1")
        if self.temperature < 0:
            raise ValueError("temperature must not be negative")
        if self.max_tokens is not None and self.max_tokens < 1:
            raise ValueError("max_tokens must be a positive integer")

    @property
    def api_key(self) -> Optional[str]:
        return os.environ.get(self.api_key_env) or None


@dataclass(frozen=True)
class ChatRequest(object):
    model: str
    messages: Sequence[Mapping[str, str]]
    temperature: float = 0.0
    max_tokens: Optional[int] = None
    # Prompt template the request was rendered from; used by the mock.
    template_id: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("A chat request needs at least one message")
        if self.messages[0].get("role") not in ("system", "user"):
            raise ValueError("The first message must come from the system or user")
        for message in self.messages:
            if message.get("role") not in ROLES:
                raise ValueError("Unknown message role %r" % message.get("role"))
            if not isinstance(message.get("content"), str):
                raise ValueError("Message content must be a string")
        if self.temperature < 0:
            raise ValueError("temperature must not be negative")
        if self.max_tokens is not None and self.max_tokens < 1:
            raise ValueError("max_tokens must be a positive integer")

    @classmethod
    def from_prompt(
        cls,
        prompt: str,
        config: GatewayConfig,
        template_id: Optional[str] = None,
    ) -> "ChatRequest":
        return cls(
            model=config.model,
            messages=[{"role": "user", "content": prompt}],
            temperature=config.temperature,
            max_tokens=config.max_tokens,
            template_id=template_id,
        )

    @property
    def prompt_text(self) -> str:
        return "\n".join(m["content"] for m in self.messages)

    def to_payload(self) -> Dict[str, Any]:
        return utils.remove_none_from_dict(
            {
                "model": self.model,
                "messages": [dict(m) for m in self.messages],
                "temperature": self.temperature,
                "max_tokens": self.max_tokens,
            }
        )


@dataclass(frozen=True)
class ChatResponse(object):
    content: str
    finish_reason: str = "stop"
    usage: Mapping[str, int] = field(
        default_factory=lambda: {"prompt_tokens": 0, "completion_tokens": 0}
    )


def prompt_hash(request: ChatRequest) -> str:
    """sha256 of the message contents joined with newlines."""
    return hashlib.sha256(request.prompt_text.encode("utf-8")).hexdigest()


class HttpBackend(object):
    """POST requests to ``<endpoint>/chat/completions``.

    Transport errors, 429 and 5xx responses are retried with exponential
    backoff and jitter; a ``Retry-After`` header takes precedence. Other 4xx
    responses fail at once.
    """

    def __init__(
        self,
        config: GatewayConfig,
        session: Optional[requests.Session] = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        api_key = config.api_key
        if api_key is None:
            raise GatewayAuthenticationError(
                "Environment variable %s holds no API key" % config.api_key_env
            )
        self.config = config
        endpoint = config.endpoint if config.endpoint.endswith("/") else config.endpoint + "/"
        self.session = session or BaseUrlSession(base_url=endpoint)
        self.headers = {
            "Authorization": "Bearer %s" % api_key,
            "Content-Type": "application/json",
            "User-Agent": const.USER_AGENT,
        }
        self._sleep = sleep

    def _wait_time(self, retry: int, result: Optional[requests.Response]) -> float:
        if result is not None and "Retry-After" in result.headers:
            try:
                return float(result.headers["Retry-After"])
            except ValueError:
                pass
        base = self.config.backoff_base
        return base * 2 ** retry + random.uniform(0, base)

    def complete(self, request: ChatRequest) -> ChatResponse:
        cur_retries = 0
        while True:
            result: Optional[requests.Response] = None
            try:
                result = self.session.post(
                    "chat/completions",
                    json=request.to_payload(),
                    headers=self.headers,
                    timeout=self.config.timeout,
                )
            except requests.exceptions.Timeout as e:
                if cur_retries >= self.config.max_retries:
                    raise GatewayTimeoutError(
                        "Request timed out after %d retries: %s" % (cur_retries, e)
                    ) from e
                reason = "timeout"
            except requests.exceptions.RequestException as e:
                if cur_retries >= self.config.max_retries:
                    raise GatewayError(
                        "Transport error after %d retries: %s" % (cur_retries, e)
                    ) from e
                reason = "transport error"
            else:
                if 200 <= result.status_code < 300:
                    return self._parse(result)
                if (
                    result.status_code not in RETRY_STATUSES
                    or cur_retries >= self.config.max_retries
                ):
                    self._raise_for_status(result)
                reason = "HTTP %d" % result.status_code

            wait_time = self._wait_time(cur_retries, result)
            cur_retries += 1
            log.warning(
                "Chat request failed (%s), retry %d/%d in %.2fs",
                reason,
                cur_retries,
                self.config.max_retries,
                wait_time,
            )
            self._sleep(wait_time)

    def _raise_for_status(self, result: requests.Response) -> None:
        error_message: Union[str, bytes] = utils.excerpt(result.content)
        try:
            error_json = result.json()
            error = error_json.get("error", error_json)
            if isinstance(error, dict):
                error = error.get("message", error)
            error_message = utils.excerpt(str(error))
        except (AttributeError, KeyError, ValueError, TypeError):
            pass

        if result.status_code == 401:
            raise GatewayAuthenticationError(
                response_code=result.status_code,
                error_message=error_message,
                response_body=result.content,
            )

        raise GatewayHttpError(
            response_code=result.status_code,
            error_message=error_message,
            response_body=result.content,
        )

    def _parse(self, result: requests.Response) -> ChatResponse:
        try:
            data = result.json()
            choice = data["choices"][0]
            content = choice["message"].get("content")
            finish_reason = choice.get("finish_reason") or "stop"
        except (KeyError, IndexError, ValueError, TypeError, AttributeError) as e:
            raise MalformedResponse(
                "Unexpected chat-completions response: %s" % utils.excerpt(result.content),
                result.status_code,
                result.content,
            ) from e
        if content is None:
            if finish_reason == "stop":
                raise MalformedResponse(
                    "Response stopped normally but carries no content",
                    result.status_code,
                    result.content,
                )
            content = ""
        usage = data.get("usage") or {}
        return ChatResponse(
            content=content,
            finish_reason=finish_reason,
            usage={
                "prompt_tokens": int(usage.get("prompt_tokens", 0)),
                "completion_tokens": int(usage.get("completion_tokens", 0)),
            },
        )


class MockBackend(object):
    """Answer requests from a script of canned responses.

    The script is a JSON list of ``{"match": {...}, "response": "..."}``
    entries. ``match`` holds either ``prompt_sha256`` or ``template_id``,
    optionally narrowed by ``contains`` (a string or a list of strings that
    must all occur in the prompt). Lookup order: hash, then template plus
    ``contains``, then bare template; ties go to the earlier entry.
    """

    def __init__(self, script: Union[str, List[Dict[str, Any]]]) -> None:
        if isinstance(script, str):
            self.source = script
            try:
                with open(script, encoding="utf-8") as f:
                    entries = json.load(f)
            except (OSError, ValueError) as e:
                raise GatewayError("Cannot read mock script %s: %s" % (script, e)) from e
        else:
            self.source = "<inline>"
            entries = script
        if not isinstance(entries, list):
            raise GatewayError("Mock script %s must be a JSON list" % self.source)
        for i, entry in enumerate(entries):
            if (
                not isinstance(entry, dict)
                or not isinstance(entry.get("match"), dict)
                or not isinstance(entry.get("response"), str)
            ):
                raise GatewayError(
                    "Mock script %s: entry %d needs 'match' and 'response'" % (self.source, i)
                )
        self.entries: List[Dict[str, Any]] = entries

    def _lookup(self, request: ChatRequest, digest: str) -> Optional[str]:
        text = request.prompt_text
        refined = bare = None
        for entry in self.entries:
            match = entry["match"]
            if match.get("prompt_sha256") == digest:
                return entry["response"]
            if "prompt_sha256" in match:
                continue
            if request.template_id is None or match.get("template_id") != request.template_id:
                continue
            contains = match.get("contains")
            if contains is None:
                if bare is None:
                    bare = entry["response"]
                continue
            needles = [contains] if isinstance(contains, str) else list(contains)
            if refined is None and all(n in text for n in needles):
                refined = entry["response"]
        return refined if refined is not None else bare

    def complete(self, request: ChatRequest) -> ChatResponse:
        digest = prompt_hash(request)
        content = self._lookup(request, digest)
        log.debug(
            "Mock lookup template=%s sha256=%s: %s",
            request.template_id,
            digest,
            "hit" if content is not None else "miss",
        )
        if content is None:
            raise MockMiss(
                "No scripted response in %s for prompt sha256=%s (template %s)"
                % (self.source, digest, request.template_id or "-")
            )
        return ChatResponse(
            content=content,
            finish_reason="stop",
            usage={"prompt_tokens": 0, "completion_tokens": 0},
        )


class Gateway(object):
    """Reentrant front of a backend, capping the requests in flight.

    Args:
        config: Gateway settings
        backend: Backend to use instead of the one ``config`` names
    """

    def __init__(self, config: GatewayConfig, backend: Optional[Any] = None) -> None:
        self.config = config
        if backend is None:
            if config.backend == "mock":
                backend = MockBackend(config.mock_script)  # type: ignore
            else:
                backend = HttpBackend(config)
        self.backend = backend
        self._slots = threading.BoundedSemaphore(config.max_in_flight)
        self._lock = threading.Lock()
        self.calls = 0

    @classmethod
    def from_config(cls, config: GatewayConfig) -> "Gateway":
        return cls(config)

    def complete(self, request: ChatRequest) -> ChatResponse:
        with self._slots:
            with self._lock:
                self.calls += 1
            return self.backend.complete(request)

    def ask(
        self,
        template: prompts.PromptTemplate,
        slots: Mapping[str, str],
        prompts_dir: str = const.PROMPTS_DIR,
    ) -> str:
        """Render ``template`` and return the model's reply text."""
        prompt = prompts.render(template, slots, prompts_dir)
        request = ChatRequest.from_prompt(prompt, self.config, template.value)
        return self.complete(request).content


def complete(config: GatewayConfig, request: ChatRequest) -> ChatResponse:
    return Gateway(config).complete(request)
