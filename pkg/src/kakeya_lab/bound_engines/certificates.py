"""JSON certificate envelopes and bit-exact replay.

A certificate is::

    {"engine", "version", "q", "n", "familyDigest", "parameters",
     "parametersDigest", "result"}

``result`` is the engine's ``to_dict()`` after a JSON round trip.  Replay
re-runs the engine on the supplied family with the recorded parameters and
reports every field that differs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Callable

from ..line_families import LineFamily
from .cordoba import cordoba_prime
from .hairbrush import hairbrush_bound
from .planebrush import planebrush_bound
from .ratio import theorem_ratio

FORMAT_VERSION = "1"


def _points(value):
    return None if value is None else [tuple(p) for p in value]


def _run_cordoba(fam, p):
    return cordoba_prime(fam, _points(p.get("X")), p.get("threshold"), p.get("nSelect"), p.get("C", 1))


def _run_hairbrush(fam, p):
    return hairbrush_bound(
        fam,
        _points(p.get("X")),
        line_threshold=p.get("lineThreshold"),
        leaf_threshold=p.get("leafThreshold"),
        check_hypotheses=p.get("checkHypotheses", True),
    )


ENGINES: dict[str, tuple[Callable, frozenset]] = {
    "cordoba": (_run_cordoba, frozenset({"X", "threshold", "nSelect", "C"})),
    "hairbrush": (_run_hairbrush, frozenset({"X", "lineThreshold", "leafThreshold", "checkHypotheses"})),
    "planebrush": (lambda fam, p: planebrush_bound(fam), frozenset()),
    "ratio": (lambda fam, p: theorem_ratio(fam), frozenset()),
}


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _digest(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def normalize_parameters(engine: str, params: dict | None) -> dict:
    if engine not in ENGINES:
        raise ValueError(f"unknown engine {engine!r}")
    allowed = ENGINES[engine][1]
    params = {k: v for k, v in (params or {}).items() if v is not None}
    extra = set(params) - allowed
    if extra:
        raise ValueError(f"unknown parameters for {engine}: {sorted(extra)}")
    if "X" in params:
        params["X"] = sorted({tuple(int(c) for c in p) for p in params["X"]})
        params["X"] = [list(p) for p in params["X"]]
    return params


def run_engine(engine: str, fam: LineFamily, params: dict | None = None):
    params = normalize_parameters(engine, params)
    return ENGINES[engine][0](fam, params)


def make_certificate(engine: str, fam: LineFamily, params: dict | None = None, result=None) -> dict:
    """Run ``engine`` (unless ``result`` is given) and wrap it in an envelope."""
    params = normalize_parameters(engine, params)
    if result is None:
        result = ENGINES[engine][0](fam, params)
    return {
        "engine": engine,
        "version": FORMAT_VERSION,
        "q": fam.q,
        "n": fam.n,
        "familyDigest": fam.digest(),
        "parameters": params,
        "parametersDigest": _digest(params),
        "result": json.loads(json.dumps(result.to_dict())),
    }


def diff_json(expected: Any, actual: Any, path: str = "$") -> list[str]:
    """Paths at which two JSON values differ (type-sensitive: 1 != 1.0 != true)."""
    if type(expected) is not type(actual):
        return [f"{path}: expected {expected!r}, found {actual!r}"]
    if isinstance(expected, dict):
        out = []
        for k in sorted(set(expected) | set(actual)):
            if k not in actual:
                out.append(f"{path}.{k}: missing")
            elif k not in expected:
                out.append(f"{path}.{k}: unexpected field")
            else:
                out.extend(diff_json(expected[k], actual[k], f"{path}.{k}"))
        return out
    if isinstance(expected, list):
        if len(expected) != len(actual):
            return [f"{path}: expected {len(expected)} items, found {len(actual)}"]
        out = []
        for i, (a, b) in enumerate(zip(expected, actual)):
            out.extend(diff_json(a, b, f"{path}[{i}]"))
        return out
    return [] if expected == actual else [f"{path}: expected {expected!r}, found {actual!r}"]


@dataclass
class ReplayReport:
    mismatches: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_dict(self) -> dict:
        return {"kind": "replay", "ok": self.ok, "mismatches": self.mismatches}


def replay_certificate(cert: dict, fam: LineFamily) -> ReplayReport:
    """Re-run the engine named in ``cert`` and compare every field."""
    bad: list[str] = []
    expected_keys = {"engine", "version", "q", "n", "familyDigest", "parameters", "parametersDigest", "result"}
    for k in sorted(set(cert) ^ expected_keys):
        bad.append(f"$.{k}: {'missing' if k in expected_keys else 'unexpected field'}")
    engine = cert.get("engine")
    if engine not in ENGINES:
        return ReplayReport(bad + [f"$.engine: unknown engine {engine!r}"])
    if cert.get("version") != FORMAT_VERSION:
        bad.append(f"$.version: expected {FORMAT_VERSION!r}, found {cert.get('version')!r}")
    for key, val in (("q", fam.q), ("n", fam.n), ("familyDigest", fam.digest())):
        if cert.get(key) != val or type(cert.get(key)) is not type(val):
            bad.append(f"$.{key}: certificate has {cert.get(key)!r}, family has {val!r}")
    params = cert.get("parameters")
    if not isinstance(params, dict):
        return ReplayReport(bad + ["$.parameters: not an object"])
    if cert.get("parametersDigest") != _digest(params):
        bad.append("$.parametersDigest: does not match the recorded parameters")
    try:
        if normalize_parameters(engine, params) != params:
            bad.append("$.parameters: not in canonical form")
        fresh = make_certificate(engine, fam, params)
    except Exception as exc:  # a tampered parameter may make the engine refuse
        return ReplayReport(bad + [f"$.result: engine raised {type(exc).__name__}: {exc}"])
    bad.extend(diff_json(fresh["result"], cert.get("result"), "$.result"))
    return ReplayReport(bad)
