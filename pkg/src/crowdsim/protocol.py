"""Newline-delimited JSON wire protocol.

One JSON object per line, UTF-8, LF-terminated, no pretty-printing.
Numbers use shortest round-trip decimals; a laser NoHit is -1.0 on the
wire. Unknown message types or malformed fields raise ProtocolError.
"""

from __future__ import annotations

import json
import math
from typing import Any

from .errors import ProtocolError

PROTOCOL_VERSION = 1
DEFAULT_PORT = 7171
NO_HIT_WIRE = -1.0

# field specs: (name, kind, required, default)
_SCHEMAS: dict[str, list[tuple[str, str, bool, Any]]] = {
    # client -> server
    "hello": [("version", "int", True, None)],
    "subscribe": [("robot_id", "int", True, None), ("topic", "topic", True, None)],
    "cmd_vel": [("robot_id", "int", True, None), ("linear", "float", True, None),
                ("angular", "float", True, None)],
    "step": [("n", "int", False, 1)],
    "bye": [],
    # server -> client
    "welcome": [("version", "int", True, None), ("scenario", "str", True, None),
                ("dt", "float", True, None), ("robots", "int_list", True, None)],
    "scan": [("robot_id", "int", True, None), ("tick", "int", True, None),
             ("angle_min", "float", True, None),
             ("angle_increment", "float", True, None),
             ("range_max", "float", True, None),
             ("ranges", "float_list", True, None)],
    "state": [("tick", "int", True, None), ("t", "float", True, None),
              ("agents", "agent_rows", True, None)],
    "stepped": [("tick", "int", True, None)],
    "error": [("code", "str", True, None), ("message", "str", True, None)],
}

TOPICS = ("scan", "state")


def _check(kind: str, value: Any, name: str) -> Any:
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ProtocolError(f"field {name!r} must be an integer")
        return value
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ProtocolError(f"field {name!r} must be a number")
        v = float(value)
        if not math.isfinite(v):
            raise ProtocolError(f"field {name!r} must be finite")
        return v
    if kind == "str":
        if not isinstance(value, str):
            raise ProtocolError(f"field {name!r} must be a string")
        return value
    if kind == "topic":
        if value not in TOPICS:
            raise ProtocolError(f"field {name!r} must be one of {TOPICS}")
        return value
    if kind == "int_list":
        if not isinstance(value, list) or any(
                isinstance(v, bool) or not isinstance(v, int) for v in value):
            raise ProtocolError(f"field {name!r} must be a list of integers")
        return value
    if kind == "float_list":
        if not isinstance(value, list) or any(
                isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            raise ProtocolError(f"field {name!r} must be a list of numbers")
        return [float(v) for v in value]
    if kind == "agent_rows":
        if not isinstance(value, list):
            raise ProtocolError(f"field {name!r} must be a list")
        for row in value:
            if (not isinstance(row, list) or len(row) != 7
                    or isinstance(row[0], bool) or not isinstance(row[0], int)
                    or row[1] not in ("pedestrian", "robot")
                    or any(isinstance(v, bool) or not isinstance(v, (int, float))
                           for v in row[2:])):
                raise ProtocolError(
                    f"field {name!r} rows must be [id, kind, x, y, theta, vx, vy]")
        return [[row[0], row[1], *(float(v) for v in row[2:])] for row in value]
    raise AssertionError(kind)


def validate_message(doc: Any) -> dict:
    """Validate a decoded object against its type's schema; fills defaults
    and normalizes numbers."""
    if not isinstance(doc, dict):
        raise ProtocolError("message must be a JSON object")
    mtype = doc.get("type")
    schema = _SCHEMAS.get(mtype)
    if schema is None:
        raise ProtocolError(f"unknown message type {mtype!r}")
    allowed = {"type"} | {name for name, *_ in schema}
    for key in doc:
        if key not in allowed:
            raise ProtocolError(f"unknown field {key!r} for {mtype!r}")
    out: dict[str, Any] = {"type": mtype}
    for name, kind, required, default in schema:
        if name in doc:
            out[name] = _check(kind, doc[name], name)
        elif required:
            raise ProtocolError(f"message {mtype!r} missing field {name!r}")
        else:
            out[name] = default
    return out


def encode_message(msg: dict) -> bytes:
    """Canonical wire form (validates first); fields in schema order."""
    out = validate_message(msg)
    ordered = {"type": out["type"]}
    for name, *_ in _SCHEMAS[out["type"]]:
        ordered[name] = out[name]
    return (json.dumps(ordered, separators=(",", ":")) + "\n").encode("utf-8")


def decode_message(line: bytes | str) -> dict:
    """Parse and validate one wire line."""
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError(f"invalid UTF-8: {exc}") from exc
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"invalid JSON: {exc.msg}") from exc
    return validate_message(doc)


def scan_message(scan) -> dict:
    """Wire form of a LaserScan; NoHit becomes -1.0."""
    ranges = [NO_HIT_WIRE if math.isinf(r) else float(r) for r in scan.ranges]
    return {"type": "scan", "robot_id": scan.robot_id, "tick": scan.tick,
            "angle_min": scan.angle_min,
            "angle_increment": scan.angle_increment,
            "range_max": scan.max_range, "ranges": ranges}


def state_message(snapshot) -> dict:
    return {"type": "state", "tick": snapshot.tick, "t": snapshot.sim_time,
            "agents": [[a.id, a.kind, a.x, a.y, a.theta, a.vx, a.vy]
                       for a in snapshot.agents]}


def error_message(code: str, message: str) -> dict:
    return {"type": "error", "code": code, "message": message}
