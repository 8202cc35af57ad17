"""Command-line experiment runner.

Three subcommands:

* ``sample`` -- draw process or sequence realizations, write JSON lines plus
  a manifest carrying the fully resolved configuration;
* ``verify`` -- run a named verification suite, write a JSON report and a
  CSV of per-check statistics, exit 0 on pass / 1 on statistical failure /
  2 on configuration or domain errors;
* ``report`` -- aggregate suite reports into a summary table and plot-ready
  CSV series.

Configuration is a flat JSON object validated against ``CONFIG_SCHEMA``
(unknown keys rejected); command-line flags override config keys.  The
``LEVYLAB_THREADS`` environment variable caps suite-level parallelism for
``verify --suite all``.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from pathlib import Path

import numpy as np

from .core import BaseSpace
from .errors import ConfigError, LevyLabError
from .models import make_model
from .rng import RandomStream
from .samplers import (
    TruncationPolicy,
    sample_cpd,
    sample_levy_batch,
    sample_pd_alpha_theta,
    sample_pd_theta,
)
from .suites import SUITES, run_suite

CONFIG_SCHEMA = {
    # key: (type, description)
    "suite": (str, "suite name for verify (or 'all')"),
    "model": (str, "gamma | stable | tempered-stable | pd | pd2 | cpd"),
    "theta": (float, "total charge of the base measure"),
    "alpha": (float, "stability index in (0,1)"),
    "c": (float, "jump-measure intensity constant"),
    "k": (float, "rescaling constant of the small-index family"),
    "lam": (float, "exponential rate of the gamma jump density"),
    "tilt": (float, "exponential tilt of the tempered-stable density"),
    "n": (int, "sample count"),
    "n_terms": (int, "stick-breaking truncation length"),
    "n_draws": (int, "number of sequence draws (asymptotics suite)"),
    "n_crosscheck": (int, "importance-sampling oracle sample count"),
    "seed": (int, "base seed; all streams derive from it"),
    "trunc_atoms": (int, "atom cap per draw"),
    "trunc_tail": (float, "expected residual-mass cap per draw"),
    "cutoff": (float, "total-charge cutoff for sigma-finite expectations"),
    "top": (int, "number of leading atoms to test"),
    "m": (float, "exponent of the logarithmic jump-density example"),
    "final_tol": (float, "absolute tolerance at the final grid index"),
    "out": (str, "output path or directory"),
    "format": (str, "json | csv"),
    "theta_grid": (list, "grid of theta values"),
    "alpha_grid": (list, "grid of alpha values"),
    "z_grid": (list, "grid of transform arguments"),
    "t_grid": (list, "grid of time points"),
    "n_per_alpha": (list, "per-alpha sample counts"),
    "partition": (list, "probability vector for the block partition"),
    "a_grid": (list, "grid of rescaling constants"),
    "n_product": (int, "product truncation inside the simplex density"),
}

_FLOAT_KEYS = {k for k, (t, _) in CONFIG_SCHEMA.items() if t is float}
_INT_KEYS = {k for k, (t, _) in CONFIG_SCHEMA.items() if t is int}


def validate_config(cfg: dict) -> dict:
    out = {}
    for key, value in cfg.items():
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        want = CONFIG_SCHEMA[key][0]
        try:
            if want is float:
                value = float(value)
            elif want is int:
                if isinstance(value, float) and value != int(value):
                    raise ValueError
                value = int(value)
            elif want is str:
                value = str(value)
            elif want is list:
                value = [float(v) for v in value]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config key {key!r} expects {want.__name__}") from exc
        out[key] = value
    return out


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError("config must be a flat JSON object")
    return validate_config(payload)


def _f17(x) -> str:
    return format(float(x), ".17g")


def write_csv(path: Path, header, rows):
    """CSV with '.' decimals and 17-significant-digit floats."""
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, bool):
                cells.append("true" if cell else "false")
            elif isinstance(cell, float):
                cells.append(_f17(cell))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------


def cmd_sample(cfg: dict) -> int:
    model_name = cfg.get("model", "gamma")
    n = int(cfg.get("n", 100))
    seed = int(cfg.get("seed", 0))
    theta = float(cfg.get("theta", 1.0))
    out_dir = Path(cfg.get("out", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    trunc = TruncationPolicy(
        max_atoms=int(cfg.get("trunc_atoms", 2048)),
        tail_mass_cap=float(cfg.get("trunc_tail", 1e-8)),
    )
    stream = RandomStream(seed)
    lines = []
    if model_name in ("gamma", "stable", "tempered-stable"):
        kw = {}
        if model_name == "gamma":
            kw["lam"] = float(cfg.get("lam", 1.0))
        else:
            kw["alpha"] = float(cfg.get("alpha", 0.5))
            kw["c"] = float(cfg.get("c", 1.0))
            if model_name == "tempered-stable":
                kw["tilt"] = float(cfg.get("tilt", 1.0))
        model = make_model(model_name, **kw)
        draws = sample_levy_batch(model, BaseSpace(theta), n, trunc, stream)
        lines = [draws.measure(i).to_json() for i in range(n)]
        params = {"model": model_name, **model.params(), "theta": theta}
        tail_info = [float(t) for t in draws.tail_bounds]
    elif model_name in ("pd", "pd2", "cpd"):
        n_terms = int(cfg.get("n_terms", 256))
        tail_info = []
        for i in range(n):
            sub = stream.substream(i, "seq")
            if model_name == "pd":
                seq = sample_pd_theta(theta, n_terms, sub)
                tail = seq.tail_tolerance
            elif model_name == "pd2":
                seq = sample_pd_alpha_theta(float(cfg.get("alpha", 0.5)), theta, n_terms, sub)
                tail = seq.tail_tolerance
            else:
                seq = sample_cpd(theta, n_terms, sub)
                tail = seq.tail_bound
            lines.append(
                json.dumps(
                    {"terms": [float(t) for t in seq.terms], "tail": float(tail)},
                )
            )
            tail_info.append(float(tail))
        params = {"model": model_name, "theta": theta, "n_terms": n_terms}
        if model_name == "pd2":
            params["alpha"] = float(cfg.get("alpha", 0.5))
    else:
        raise ConfigError(f"unknown model {model_name!r}")

    draws_path = out_dir / f"{model_name}-draws.jsonl"
    draws_path.write_text("\n".join(lines) + "\n")
    manifest = {
        "command": "sample",
        "params": params,
        "n": n,
        "seed": seed,
        "truncation": {"max_atoms": trunc.max_atoms, "tail_mass_cap": trunc.tail_mass_cap},
        "tail_bounds_mean": float(np.mean(tail_info)) if tail_info else 0.0,
        "output": draws_path.name,
    }
    (out_dir / f"{model_name}-manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    )
    print(f"wrote {draws_path}")
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _suite_csv_rows(result):
    rows = []
    for chk in result.checks:
        params = json.dumps(chk["params"], sort_keys=True)
        for g, lhs, se, rhs, allow in zip(
            chk["grid"], chk["lhs"], chk["se"], chk["rhs"], chk["allowance"]
        ):
            rows.append(
                [result.suite, chk["check"], params, float(g), float(lhs), float(se),
                 float(rhs), float(allow), bool(chk["pass"])]
            )
    return rows


def cmd_verify(cfg: dict) -> int:
    suite = cfg.get("suite")
    if not suite:
        raise ConfigError("verify needs --suite")
    if "seed" not in cfg:
        raise ConfigError("verify needs --seed")
    out_dir = Path(cfg.get("out", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    names = sorted(SUITES) if suite == "all" else [suite]
    if suite != "all" and suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; known: {sorted(SUITES)} or 'all'")
    suite_cfg = {k: v for k, v in cfg.items() if k not in ("suite", "out", "format")}

    threads = max(1, int(os.environ.get("LEVYLAB_THREADS", "1")))
    if threads > 1 and len(names) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {name: pool.submit(run_suite, name, dict(suite_cfg)) for name in names}
            results = [futures[name].result() for name in names]  # merge in name order
    else:
        results = [run_suite(name, dict(suite_cfg)) for name in names]

    all_passed = True
    for result in results:
        all_passed &= result.passed
        (out_dir / f"report-{result.suite}.json").write_text(result.to_json() + "\n")
        write_csv(
            out_dir / f"report-{result.suite}.csv",
            ["suite", "check", "params", "x", "lhs", "se", "rhs", "allowance", "pass"],
            _suite_csv_rows(result),
        )
        print(f"{'PASS' if result.passed else 'FAIL'} {result.suite} "
              f"({len(result.checks)} checks, m={result.m_tests})")
    return 0 if all_passed else 1


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def cmd_report(inputs, cfg: dict) -> int:
    out_dir = Path(cfg.get("out", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    fmt = cfg.get("format", "csv")
    summary_rows = []
    series_rows = []
    for path in inputs:
        payload = json.loads(Path(path).read_text())
        suite = payload["suite"]
        n_checks = len(payload["checks"])
        n_fail = sum(1 for c in payload["checks"] if not c["pass"])
        summary_rows.append([suite, n_checks, n_fail, payload["m_tests"], payload["passed"]])
        for chk in payload["checks"]:
            if len(chk["grid"]) > 1:  # plot-ready series
                for g, lhs, se in zip(chk["grid"], chk["lhs"], chk["se"]):
                    series_rows.append([suite, chk["check"], float(g), float(lhs), float(se)])
    write_csv(
        out_dir / "summary.csv",
        ["suite", "checks", "failures", "m_tests", "passed"],
        summary_rows,
    )
    if series_rows:
        write_csv(out_dir / "series.csv", ["suite", "check", "x", "y", "se"], series_rows)
    if fmt == "json":
        (out_dir / "summary.json").write_text(
            json.dumps(
                [dict(zip(["suite", "checks", "failures", "m_tests", "passed"], r))
                 for r in summary_rows],
                sort_keys=True,
                indent=2,
            )
            + "\n"
        )
    lines = ["| suite | checks | failures | passed |", "|---|---|---|---|"]
    for suite, n_checks, n_fail, _, passed in summary_rows:
        lines.append(f"| {suite} | {n_checks} | {n_fail} | {'yes' if passed else 'no'} |")
    (out_dir / "summary.md").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--config", help="JSON config file (flat keys)")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levylab",
        description="simulate and statistically verify non-Gaussian random measures",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="write process/sequence draws as JSON lines")
    _add_common(p)
    p.add_argument("--model", choices=("gamma", "stable", "tempered-stable", "pd", "pd2", "cpd"))
    p.add_argument("--theta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--k", type=float)
    p.add_argument("--lam", type=float)
    p.add_argument("--tilt", type=float)
    p.add_argument("--n-terms", dest="n_terms", type=int)
    p.add_argument("--trunc-atoms", dest="trunc_atoms", type=int)
    p.add_argument("--trunc-tail", dest="trunc_tail", type=float)

    p = sub.add_parser("verify", help="run a named verification suite")
    _add_common(p)
    p.add_argument("--suite")
    p.add_argument("--theta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--k", type=float)
    p.add_argument("--alpha-grid", dest="alpha_grid")
    p.add_argument("--z-grid", dest="z_grid")
    p.add_argument("--trunc-atoms", dest="trunc_atoms", type=int)
    p.add_argument("--trunc-tail", dest="trunc_tail", type=float)

    p = sub.add_parser("report", help="aggregate suite reports")
    _add_common(p)
    p.add_argument("inputs", nargs="+", help="report JSON files")
    return parser


def _merge_flags(cfg: dict, args: argparse.Namespace) -> dict:
    merged = dict(cfg)
    for key in CONFIG_SCHEMA:
        val = getattr(args, key, None)
        if val is None:
            continue
        if key in ("alpha_grid", "z_grid") and isinstance(val, str):
            val = [float(v) for v in val.split(",")]
        merged[key] = val
    return validate_config(merged)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(getattr(args, "config", None))
        cfg = _merge_flags(cfg, args)
        if args.command == "sample":
            return cmd_sample(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "report":
            return cmd_report(args.inputs, cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except LevyLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
