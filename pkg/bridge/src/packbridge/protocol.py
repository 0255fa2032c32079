"""Wire protocol: newline-delimited JSON request/response messages.

Every inbound line gets exactly one response line.  Malformed input of any
shape produces an error message (echoing the request id when one could be
parsed) and never tears down the loop; a provider crash on one request
must not take the server with it.
"""

from __future__ import annotations

import json
from typing import Any

SCORE_REQUEST = "score_request"
SCORE_RESPONSE = "score_response"
VALUE_REQUEST = "value_request"
VALUE_RESPONSE = "value_response"
ERROR = "error"

REQUEST_KINDS = (SCORE_REQUEST, VALUE_REQUEST)


def error_message(request_id: Any, text: str) -> dict:
    return {"id": request_id, "kind": ERROR, "payload": {"message": text}}


def _fail(request_id: Any, text: str) -> dict:
    return error_message(request_id, text)


def handle_line(line: str, provider) -> dict:
    """One request line in, one response document out."""
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as exc:
        return _fail(None, f"not valid JSON: {exc.msg}")
    if not isinstance(msg, dict):
        return _fail(None, "message must be a JSON object")
    req_id = msg.get("id")
    kind = msg.get("kind")
    payload = msg.get("payload")
    if kind not in REQUEST_KINDS:
        return _fail(req_id, f"unknown kind {kind!r}")
    if not isinstance(payload, dict):
        return _fail(req_id, "payload must be an object")

    try:
        if kind == SCORE_REQUEST:
            state = payload["state"]
            item = payload["item"]
            candidates = payload["candidates"]
            if not isinstance(candidates, list):
                raise TypeError("candidates must be a list")
            scores = provider.score(state, item, candidates)
            if len(scores) != len(candidates):
                raise ValueError("provider returned a wrong-length score list")
            return {"id": req_id, "kind": SCORE_RESPONSE, "payload": {"scores": scores}}
        state = payload["state"]
        item = payload.get("item")
        value = provider.value(state, item)
        return {"id": req_id, "kind": VALUE_RESPONSE, "payload": {"value": value}}
    except Exception as exc:  # noqa: BLE001 - anything becomes an error reply
        return _fail(req_id, f"{type(exc).__name__}: {exc}")


def render(doc: dict) -> bytes:
    return (json.dumps(doc) + "\n").encode("utf-8")
