"""Command-line driver.

    taukit verify --suite claims
    taukit experiment --experiment corollary1 --dims 10 --t-grid 1,2,4,8 --format csv --out c1.csv
    taukit report --input c1.json

Exit status: 0 when every record passes (or passes vacuously), 1 when any
record fails (``--strict`` also counts inconclusive records as failures),
2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time

import numpy as np

from .suites import EXPERIMENTS, RECORD_KEYS, SUITES, RunSettings

SCHEMA = 1
CSV_COLUMNS = ("suite", "case", "param", "estimate", "standard_error", "bound", "slack", "exact", "verdict",
               "wall_time", "inputs", "details")
PASSING = ("pass", "vacuous-pass")


class UsageError(Exception):
    pass


# ---- serialisation ---------------------------------------------------------------

def _num(x) -> str:
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def to_json(obj, indent: int = 0, step: int = 2) -> str:
    """JSON text with every float written to 17 significant digits.

    Non-finite floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``.
    """
    pad, inner = " " * indent, " " * (indent + step)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k), ensure_ascii=False)}: {to_json(v, indent + step, step)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + to_json(v, indent + step, step) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (dict, list, tuple)):
        return to_json(v).replace("\n", "").replace("  ", "")
    if isinstance(v, (float, np.floating)):
        return _num(v).strip('"')
    return str(v)


def to_csv(records: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in records:
        w.writerow([_cell(rec.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path``, then rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".taukit-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---- configuration ----------------------------------------------------------------

def _float_list(text: str) -> list[float]:
    try:
        out = [float(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def _int_list(text: str) -> list[int]:
    vals = _float_list(text)
    if any(v != int(v) or v < 1 for v in vals):
        raise argparse.ArgumentTypeError(f"dimensions must be positive integers, got {text!r}")
    return [int(v) for v in vals]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="64-bit seed (default: $TAUKIT_SEED or 0)")
    common.add_argument("--samples", type=int, help="Monte Carlo sample count")
    common.add_argument("--dims", type=_int_list, help="comma-separated dimensions")
    common.add_argument("--t-grid", type=_float_list, help="comma-separated t values")
    common.add_argument("--lambda-grid", type=_float_list, help="comma-separated lambda values")
    common.add_argument("--format", choices=("json", "csv"), help="report format (default json)")
    common.add_argument("--out", help="report path (default: standard output)")
    common.add_argument("--threads", type=int, help="worker threads (default: CPU count)")
    common.add_argument("--strict", action="store_true", default=None,
                        help="count inconclusive records as failures")
    common.add_argument("--config", help="JSON file with default values for these options")

    p = argparse.ArgumentParser(prog="taukit", description="Numerical checks of inf-convolution inequalities.")
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", parents=[common], help="run an invariant suite")
    v.add_argument("--suite", choices=sorted(SUITES))
    e = sub.add_parser("experiment", parents=[common], help="run a deviation experiment")
    e.add_argument("--experiment", choices=sorted(EXPERIMENTS))
    r = sub.add_parser("report", parents=[common], help="summarise or convert a JSON report")
    r.add_argument("--input", required=True, help="JSON report written by verify or experiment")
    return p


_OPTION_KEYS = ("seed", "samples", "dims", "t_grid", "lambda_grid", "format", "out", "threads", "strict",
                "suite", "experiment")


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the config file and flags (flags win)."""
    cfg = {"seed": None, "samples": None, "dims": None, "t_grid": None, "lambda_grid": None, "format": "json",
           "out": None, "threads": os.cpu_count() or 1, "strict": False, "suite": None, "experiment": None}
    env = os.environ.get("TAUKIT_SEED")
    if env is not None:
        try:
            cfg["seed"] = int(env)
        except ValueError as exc:
            raise UsageError(f"TAUKIT_SEED must be an integer, got {env!r}") from exc
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        for k, val in data.items():
            key = k.replace("-", "_")
            if key not in _OPTION_KEYS:
                raise UsageError(f"unknown config key {k!r}")
            cfg[key] = val
    for key in _OPTION_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if cfg["seed"] is None:
        cfg["seed"] = 0
    if not 0 <= int(cfg["seed"]) < 2 ** 64:
        raise UsageError("seed must fit in 64 unsigned bits")
    if cfg["samples"] is not None and int(cfg["samples"]) < 1:
        raise UsageError("--samples must be positive")
    if int(cfg["threads"]) < 1:
        raise UsageError("--threads must be positive")
    if cfg["dims"] is not None and (not cfg["dims"] or any(int(d) < 1 or int(d) > 32 for d in cfg["dims"])):
        raise UsageError("dimensions must lie in 1..32")
    if cfg["t_grid"] is not None and any(float(t) < 0 for t in cfg["t_grid"]):
        raise UsageError("t values must be non-negative")
    if cfg["format"] not in ("json", "csv"):
        raise UsageError("format must be json or csv")
    return cfg


def settings(cfg: dict) -> RunSettings:
    return RunSettings(seed=int(cfg["seed"]), n_samples=cfg["samples"], threads=int(cfg["threads"]),
                       dims=cfg["dims"], t_grid=cfg["t_grid"], lambda_grid=cfg["lambda_grid"],
                       strict=bool(cfg["strict"]))


# ---- commands ---------------------------------------------------------------------

def summarize(records: list[dict], strict: bool) -> dict:
    counts: dict[str, int] = {}
    for rec in records:
        counts[rec["verdict"]] = counts.get(rec["verdict"], 0) + 1
    bad = sum(n for v, n in counts.items() if v not in PASSING and (strict or v != "inconclusive"))
    return {"records": len(records), "verdicts": dict(sorted(counts.items())), "ok": bad == 0}


def render(document: dict, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(document["records"])
    return to_json(document) + "\n"


def emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def run(command: str, cfg: dict) -> tuple[dict, int]:
    """Run ``verify`` or ``experiment`` and return ``(document, exit_status)``."""
    st = settings(cfg)
    if command == "verify":
        if cfg["suite"] not in SUITES:
            raise UsageError(f"unknown suite {cfg['suite']!r}; choose from {sorted(SUITES)}")
        name, fn = cfg["suite"], SUITES[cfg["suite"]]
    else:
        if cfg["experiment"] not in EXPERIMENTS:
            raise UsageError(f"unknown experiment {cfg['experiment']!r}; choose from {sorted(EXPERIMENTS)}")
        name, fn = cfg["experiment"], EXPERIMENTS[cfg["experiment"]]
    t0 = time.perf_counter()
    records = fn(st)
    for rec in records:
        if tuple(rec) != RECORD_KEYS:
            raise AssertionError("record keys out of order")
    summary = summarize(records, st.strict)
    doc = {"schema": SCHEMA, "command": command, "name": name,
           "config": {k: cfg[k] for k in ("seed", "samples", "dims", "t_grid", "lambda_grid", "threads", "strict")},
           "summary": summary, "records": records, "wall_time": time.perf_counter() - t0}
    return doc, (0 if summary["ok"] else 1)


def run_verify(cfg: dict) -> tuple[dict, int]:
    return run("verify", cfg)


def run_experiment(cfg: dict) -> tuple[dict, int]:
    return run("experiment", cfg)


def _report(cfg: dict, path: str) -> int:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read report {path}: {exc}") from exc
    if doc.get("schema") != SCHEMA:
        raise UsageError(f"unsupported report schema {doc.get('schema')!r}")
    summary = summarize(doc["records"], bool(cfg["strict"]))
    if cfg["format"] == "csv" or cfg["out"]:
        emit(render(doc, cfg["format"]), cfg["out"])
    else:
        for rec in doc["records"]:
            param = "" if rec["param"] is None else f" [{rec['param']}]"
            sys.stdout.write(f"{rec['verdict']:>13}  {rec['suite']}: {rec['case']}{param}\n")
        sys.stdout.write(f"{summary['records']} records, verdicts {summary['verdicts']}\n")
    return 0 if summary["ok"] else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        if args.command == "report":
            return _report(cfg, args.input)
        if args.command == "verify" and cfg["suite"] is None:
            raise UsageError("verify needs --suite")
        if args.command == "experiment" and cfg["experiment"] is None:
            raise UsageError("experiment needs --experiment")
        doc, status = run(args.command, cfg)
        emit(render(doc, cfg["format"]), cfg["out"])
        return status
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"taukit: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
