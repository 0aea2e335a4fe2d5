"""``kakeya-lab`` command-line driver.

Exit codes: 0 ok, 1 a check failed, 2 usage or parse error, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

from .bound_engines import make_certificate, replay_certificate
from .errors import InvariantViolation, KakeyaLabError, PreconditionFailed
from .field_geometry import PrimeModulus, span_flat
from .incidence_axioms import IncidenceTable, planiness_check, wolff_axiom_report
from .line_families import (
    LineFamily,
    atomic_write_text,
    bush_family,
    format_family,
    kakeya_family,
    load_family,
    parallel_pencil_family,
    plane_pencil_family,
    random_family,
)

log = logging.getLogger("kakeya_lab")

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_INVARIANT = 0, 1, 2, 3
FAMILIES = ("bush", "plane-pencil", "parallel-pencil", "random", "kakeya")
ENGINES = ("cordoba", "hairbrush", "planebrush")
DEFAULTS = {"n": 4, "seed": 0, "format": "json", "family": None, "count": None, "cap": None}
INT_KEYS = {"q", "n", "seed", "count", "cap", "threshold", "n_select", "line_threshold", "leaf_threshold", "c"}
BOOL_KEYS = {"no_timing", "assignment", "verbose"}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration


def read_config(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment; keys use flag names."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key in INT_KEYS:
            try:
                value = int(value)
            except ValueError:
                raise UsageError(f"{path}:{lineno}: {key} must be an integer, got {value!r}") from None
        elif key in BOOL_KEYS:
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise UsageError(f"{path}:{lineno}: {key} must be true or false, got {value!r}")
            value = value.lower() in ("true", "1", "yes")
        out[key] = value
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Flags override the config file, which overrides defaults."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(read_config(args.config))
    for k, v in vars(args).items():
        if v is not None:
            cfg[k] = v
    return cfg


def build_family(cfg: dict) -> LineFamily:
    if cfg.get("family_file") and cfg.get("family"):
        raise UsageError("give exactly one of --family and --family-file")
    if cfg.get("family_file"):
        return load_family(cfg["family_file"])
    kind = cfg.get("family")
    if kind is None:
        raise UsageError("a family source is required (--family or --family-file)")
    if kind not in FAMILIES:
        raise UsageError(f"unknown family {kind!r}; choose from {', '.join(FAMILIES)}")
    if cfg.get("q") is None:
        raise UsageError("--q is required with --family")
    n = int(cfg["n"])
    if not 2 <= n <= 4:
        raise UsageError(f"n must be in [2, 4], got {n}")
    m = PrimeModulus(int(cfg["q"]), n)
    seed = int(cfg["seed"])
    if kind == "bush":
        return bush_family((0,) * n, m)
    if kind == "plane-pencil":
        e = [tuple(int(i == j) for i in range(n)) for j in (0, 1)]
        return plane_pencil_family(span_flat((0,) * n, e, m.q), m)
    if kind == "parallel-pencil":
        return parallel_pencil_family(None, m, cfg.get("cap"))
    if kind == "random":
        if cfg.get("count") is None:
            raise UsageError("--count is required for random families")
        return random_family(m, int(cfg["count"]), seed)
    return kakeya_family(m, seed)


# ---------------------------------------------------------------------------
# output


def _flatten(obj, prefix="") -> list[tuple[str, str]]:
    rows = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            rows.extend(_flatten(v, f"{prefix}.{k}" if prefix else k))
    elif isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
        for i, v in enumerate(obj):
            rows.extend(_flatten(v, f"{prefix}[{i}]"))
    else:
        rows.append((prefix, json.dumps(obj) if isinstance(obj, (list, bool)) or obj is None else str(obj)))
    return rows


def render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
    rows = _flatten(doc)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["field", "value"])
        w.writerows(rows)
        return buf.getvalue()
    if fmt == "table":
        width = max((len(k) for k, _ in rows), default=0)
        return "".join(f"{k.ljust(width)}  {v}\n" for k, v in rows)
    raise UsageError(f"unknown format {fmt!r}")


def emit(text: str, cfg: dict) -> None:
    out = cfg.get("output")
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def cmd_gen(cfg: dict) -> int:
    emit(format_family(build_family(cfg)), cfg)
    return EXIT_OK


def cmd_check_axioms(cfg: dict) -> int:
    report = wolff_axiom_report(build_family(cfg))
    emit(render(report.to_dict(), cfg["format"]), cfg)
    if not report.ok:
        for name in report.failed():
            log.error("hypothesis failed: %s (bound %d)", name, report.bounds[name])
        return EXIT_CHECK
    return EXIT_OK


def cmd_check_plany(cfg: dict) -> int:
    res = planiness_check(build_family(cfg))
    emit(render(res.to_dict(include_assignment=cfg.get("assignment", False)), cfg["format"]), cfg)
    if not res.plany:
        log.error("hypothesis failed: planiness at point %s", res.violation[0])
        return EXIT_CHECK
    return EXIT_OK


def _engine_params(engine: str, cfg: dict) -> dict:
    if engine == "cordoba":
        n_sel = cfg.get("n_select")
        return {"threshold": cfg.get("threshold"), "nSelect": n_sel, "C": cfg.get("c")}
    if engine == "hairbrush":
        return {"lineThreshold": cfg.get("line_threshold"), "leafThreshold": cfg.get("leaf_threshold")}
    return {}


def cmd_bound(cfg: dict) -> int:
    engine = cfg["engine"]
    fam = build_family(cfg)
    cert = make_certificate(engine, fam, _engine_params(engine, cfg))
    emit(render(cert, cfg["format"]), cfg)
    return EXIT_OK


def cmd_ratio(cfg: dict) -> int:
    emit(render(make_certificate("ratio", build_family(cfg)), cfg["format"]), cfg)
    return EXIT_OK


def cmd_replay(cfg: dict) -> int:
    try:
        cert = json.loads(Path(cfg["certificate"]).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise UsageError(f"{cfg['certificate']}: line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(cert, dict):
        raise UsageError("certificate must be a JSON object")
    report = replay_certificate(cert, build_family(cfg))
    emit(render(report.to_dict(), cfg["format"]), cfg)
    for m in report.mismatches:
        log.error("replay mismatch: %s", m)
    return EXIT_OK if report.ok else EXIT_CHECK


SWEEP_FIELDS = ["q", "family", "engine", "lines", "union", "c", "cLower", "cases", "wallTime", "error"]


def _sweep_row(q: int, engine: str, cfg: dict, timing: bool) -> dict:
    row = {"q": q, "family": cfg["family"], "engine": engine}
    row.update({k: "" for k in SWEEP_FIELDS if k not in row})
    start = time.perf_counter()
    try:
        fam = build_family({**cfg, "q": q})
        row["lines"] = len(fam)
        row["union"] = int(IncidenceTable(fam).union_mask.sum())
        res = make_certificate(engine, fam, _engine_params(engine, cfg))["result"]
        const = res.get("finalRatio") or res.get("measuredConstant")
        if engine == "ratio":
            const = {"c": res["ratio"], "cLower": res["cLower"]}
        if const:
            row["c"] = const["c"]
            row["cLower"] = f"{const['cLower'][0]}/{const['cLower'][1]}"
        if engine == "planebrush":
            row["cases"] = " ".join(it["caseTaken"] for it in res["iterations"])
        elif engine == "hairbrush":
            row["cases"] = res["caseTaken"]
    except (KakeyaLabError, UsageError, ValueError) as e:
        row["error"] = f"{type(e).__name__}: {e}"
    if timing:
        row["wallTime"] = f"{time.perf_counter() - start:.3f}"
    return row


def cmd_sweep(cfg: dict) -> int:
    raw = [s for s in str(cfg.get("qs", "")).replace(",", " ").split() if s]
    try:
        qs = [int(s) for s in raw]
    except ValueError:
        raise UsageError(f"--qs must list integers, got {cfg.get('qs')!r}") from None
    uniq = sorted(set(qs))
    if len(uniq) < len(qs):
        log.warning("duplicate q values removed from the sweep")
    engines = cfg.get("engines") or ["planebrush"]
    if isinstance(engines, str):
        engines = engines.replace(",", " ").split()
    engines = sorted(set(engines))
    for e in engines:
        if e not in ENGINES + ("ratio",):
            raise UsageError(f"unknown engine {e!r}")
    if uniq and cfg.get("family") is None:
        raise UsageError("--family is required for sweeps")
    jobs = [(q, e) for q in uniq for e in engines]
    workers = max(1, min(len(jobs) or 1, int(os.environ.get("KAKEYA_LAB_THREADS", "1") or 1)))
    timing = not cfg.get("no_timing", False)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda j: _sweep_row(j[0], j[1], cfg, timing), jobs))
    rows.sort(key=lambda r: (r["q"], r["engine"]))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_FIELDS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    emit(buf.getvalue(), cfg)
    return EXIT_CHECK if any(r["error"] for r in rows) else EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _family_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("family source")
    g.add_argument("--family", choices=FAMILIES)
    g.add_argument("--family-file", dest="family_file")
    g.add_argument("--q", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--cap", type=int, help="lines per plane for parallel-pencil")
    g.add_argument("--count", type=int, help="number of lines for random")
    g.add_argument("--seed", type=int)


def _common(p: argparse.ArgumentParser, family: bool = True) -> None:
    if family:
        _family_args(p)
    p.add_argument("--format", choices=("json", "csv", "table"))
    p.add_argument("--output", "-o")
    p.add_argument("--config", help="key=value file; flags take precedence")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kakeya-lab", description=__doc__.splitlines()[0])
    ap.add_argument("--verbose", "-v", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    _common(sub.add_parser("gen", help="write a family file"))
    _common(sub.add_parser("check-axioms", help="exact Wolff-type line counts"))
    p = sub.add_parser("check-plany", help="planiness check")
    _common(p)
    p.add_argument("--assignment", action="store_true", default=None, help="include the plane at every point")

    p = sub.add_parser("bound", help="run a bound engine and print its certificate")
    p.add_argument("engine", choices=ENGINES)
    _common(p)
    th = p.add_argument_group("threshold overrides")
    th.add_argument("--threshold", type=int, help="cordoba: per-line threshold")
    th.add_argument("--n-select", dest="n_select", help="cordoba: number of lines, or 'best'")
    th.add_argument("--c", type=int, help="cordoba: constant C of the proportional form")
    th.add_argument("--line-threshold", dest="line_threshold", type=int, help="hairbrush: per-line threshold")
    th.add_argument("--leaf-threshold", dest="leaf_threshold", type=int, help="hairbrush: leaf threshold")

    _common(sub.add_parser("ratio", help="exact union against |L| q^(1/3)"))

    p = sub.add_parser("replay", help="re-verify a certificate against its family")
    p.add_argument("certificate")
    _common(p)

    p = sub.add_parser("sweep", help="run engines over several q and write CSV")
    _common(p)
    p.add_argument("--qs", help="comma or space separated list of primes")
    p.add_argument("--engine", dest="engines", action="append", choices=ENGINES + ("ratio",))
    p.add_argument("--no-timing", dest="no_timing", action="store_true", default=None)
    return ap


COMMANDS = {
    "gen": cmd_gen,
    "check-axioms": cmd_check_axioms,
    "check-plany": cmd_check_plany,
    "bound": cmd_bound,
    "ratio": cmd_ratio,
    "replay": cmd_replay,
    "sweep": cmd_sweep,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="kakeya-lab: %(message)s")
    try:
        cfg = resolve(args)
        if cfg.get("n_select") not in (None, "best"):
            try:
                cfg["n_select"] = int(cfg["n_select"])
            except ValueError:
                raise UsageError("--n-select must be an integer or 'best'") from None
        return COMMANDS[args.command](cfg)
    except InvariantViolation as e:
        log.error("internal invariant violated: %s", e)
        return EXIT_INVARIANT
    except PreconditionFailed as e:
        log.error("hypothesis failed: %s", e)
        return EXIT_CHECK
    except (UsageError, KakeyaLabError, ValueError, OSError) as e:
        log.error("%s", e)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
