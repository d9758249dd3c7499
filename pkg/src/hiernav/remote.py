"""Chat-completions-style client shared by the remote backends.

One request carries a ``model`` name and a ``messages`` list; the reply
must contain ``choices[0].message.content``.  Credentials come only from
the environment (never from flags), transport failures, timeouts, and
unparseable replies surface as distinct exceptions, and retry-on-malformed
is the caller's job since only the caller knows what "parseable" means.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import requests

from .errors import MalformedReplyError, RemoteTimeoutError, RemoteTransportError

DEFAULT_TOKEN_ENV = "HIERNAV_API_TOKEN"


@dataclass(frozen=True)
class RemoteEndpointConfig:
    """Where and how to reach a remote reasoning / pointing model."""

    url: str
    model: str
    timeout_s: float = 10.0
    retries: int = 2  # extra attempts after a malformed reply
    token_env: str = DEFAULT_TOKEN_ENV


def chat(config: RemoteEndpointConfig, messages: list[dict]) -> str:
    """Send one chat request and return the assistant text."""
    headers = {"Content-Type": "application/json"}
    token = os.environ.get(config.token_env)
    if token:
        headers["Authorization"] = f"Bearer {token}"
    body = {"model": config.model, "messages": messages}
    try:
        response = requests.post(
            config.url, json=body, headers=headers, timeout=config.timeout_s
        )
    except requests.Timeout as exc:
        raise RemoteTimeoutError(
            f"no reply from {config.url} within {config.timeout_s}s"
        ) from exc
    except requests.RequestException as exc:
        raise RemoteTransportError(f"cannot reach {config.url}: {exc}") from exc
    if response.status_code != 200:
        raise RemoteTransportError(
            f"{config.url} answered HTTP {response.status_code}"
        )
    try:
        data = response.json()
        content = data["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise MalformedReplyError(
            f"reply from {config.url} lacks choices[0].message.content"
        ) from exc
    if not isinstance(content, str):
        raise MalformedReplyError(f"assistant content is {type(content).__name__}, not text")
    return content
