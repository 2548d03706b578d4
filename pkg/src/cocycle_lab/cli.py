"""Command line front end: ``cocycle-lab <analysis> --config path [--out dir] [--seed n] [--flag ...]``.

Exit status is 0 when the analysis verdict passes, 1 when it fails (this
includes a NOT-DISSIPATIVE verdict) and 2 on any configuration or runtime
error. Every run writes ``manifest.json`` and ``result.json`` plus the
analysis's CSV tables into the output directory.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import platform
import sys
import time
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import jsonschema
import numpy as np

from . import __version__
from .analyses import ANALYSES, RUNNERS, Context
from .base_flow import as_base_point
from .discretize import IntegratorConfig
from .errors import CocycleLabError
from .scenarios import build
from .serialize import config_hash, to_jsonable, write_csv, write_json

log = logging.getLogger("cocycle_lab")

RAW_SIGNS_FLAG = "wc2-raw-signs"
RNG_NAME = "numpy PCG64"


class ConfigError(CocycleLabError):
    pass


def load_schema() -> dict:
    return json.loads(resources.files("cocycle_lab").joinpath("config_schema.json").read_text(encoding="utf-8"))


def _line_of(text: str, path: Sequence) -> int:
    """Best-effort line number of the JSON member addressed by ``path``."""
    lines = text.splitlines()
    line = 1
    for key in path:
        if not isinstance(key, str):
            continue
        needle = f'"{key}"'
        for i in range(line - 1, len(lines)):
            if needle in lines[i]:
                line = i + 1
                break
    return line


def parse_config(text: str) -> dict:
    """Parse and validate a run configuration; errors carry a line number."""
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"line {err.lineno}: invalid JSON: {err.msg}") from None
    if isinstance(cfg, dict) and "config_echo" in cfg:
        # a manifest from a previous run
        cfg = cfg["config_echo"]
        text = json.dumps(cfg, indent=2)
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        line = _line_of(text, list(err.absolute_path))
        raise ConfigError(f"line {line}: {where}: {err.message}")
    return cfg


def effective_config(cfg: dict, analysis: Optional[str], seed: Optional[int], flags: Sequence[str]) -> dict:
    out = copy.deepcopy(cfg)
    if analysis is not None:
        out["analysis"] = analysis
    if "analysis" not in out:
        raise ConfigError("line 1: no analysis given on the command line or in the config")
    if seed is not None:
        out["seed"] = int(seed)
    out.setdefault("seed", 0)
    merged = list(dict.fromkeys([*out.get("flags", []), *flags]))
    if merged:
        out["flags"] = merged
    for f in merged:
        if f != RAW_SIGNS_FLAG:
            raise ConfigError(f"line 1: unknown flag {f!r}")
    if RAW_SIGNS_FLAG in merged and out["scenario"] != "wc2":
        raise ConfigError(f"line 1: flag {RAW_SIGNS_FLAG} applies only to scenario 'wc2'")
    return out


def make_context(cfg: dict) -> Context:
    params = dict(cfg.get("params", {}))
    if RAW_SIGNS_FLAG in cfg.get("flags", []):
        params["raw_signs"] = True
    sc = build(cfg["scenario"], params)
    icfg = IntegratorConfig(**cfg.get("integrator", {}))
    c = sc.cocycle(icfg)
    y0 = sc.default_y0 if "y0" not in cfg else np.asarray(cfg["y0"], dtype=float)
    return Context(sc, c, sc.base, as_base_point(sc.base, y0), dict(cfg.get("options", {})),
                   int(cfg["seed"]), icfg)


def run(cfg: dict, out_dir) -> tuple[int, dict]:
    """Execute one configured analysis and write its artifacts; returns (exit status, result)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    ctx = make_context(cfg)
    outcome = RUNNERS[cfg["analysis"]](ctx)
    wall = time.perf_counter() - t0
    result = {"analysis": cfg["analysis"], "scenario": cfg["scenario"], **outcome.result}
    write_json(out_dir / "result.json", result)
    for name, (header, rows) in sorted(outcome.tables.items()):
        write_csv(out_dir / name, header, rows)
    manifest = {
        "config_echo": cfg,
        "config_hash": config_hash(cfg),
        "version": __version__,
        "wall_time_s": wall,
        "rng": RNG_NAME,
        "seed": cfg["seed"],
        "flags": cfg.get("flags", []),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "files": ["result.json", *sorted(outcome.tables)],
    }
    write_json(out_dir / "manifest.json", manifest)
    return (0 if outcome.verdict else 1), to_jsonable(result)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cocycle-lab", description="Numerical experiments on cocycles over torus rotations.")
    p.add_argument("analysis", choices=ANALYSES)
    p.add_argument("--config", required=True, help="JSON run configuration (or a manifest.json to replay)")
    p.add_argument("--out", default=None, help="output directory (default: config 'output' or ./cocycle-out)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--flag", action="append", default=[], help=f"repeatable; known: {RAW_SIGNS_FLAG}")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as err:
        print(f"error: cannot read config: {err}", file=sys.stderr)
        return 2
    try:
        cfg = effective_config(parse_config(text), args.analysis, args.seed, args.flag)
        out = args.out or cfg.get("output") or "cocycle-out"
        status, result = run(cfg, out)
    except CocycleLabError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (TypeError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    verdict = result.get("verdict", "PASS" if status == 0 else "FAIL")
    print(f"{cfg['analysis']} on {cfg['scenario']}: {verdict} (exit {status}); artifacts in {out}")
    return status


if __name__ == "__main__":
    sys.exit(main())
