"""Command-line front end.

Each subcommand can read its parameters from a JSON config (``--config``);
flags given on the command line override config fields.  Outputs are
written atomically and embed the fully resolved config.

Exit codes: 0 success, 2 validation error, 3 capacity error, 4 internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import bounds, experiments, transport
from .errors import CapacityError, ConclabError, DataError, InternalError, ParameterError
from .markov import MarkovChainModel
from .measures import tau_p_upper

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CAPACITY = 3
EXIT_INTERNAL = 4

DEFAULTS = {
    "bounds": {"eta": "optimize", "tau": None, "seed": 0},
    "tail": {"trials": 100_000, "seed": 0, "stationary": False},
    "compare": {"trials": 100_000, "seed": 0, "stationary": False},
    "tci": {"samples": 1000, "seed": 0},
    "mgf": {"trials": 100_000, "seed": 0},
    "complexity": {"index_rule": "power:1", "eta": "optimize", "seed": 0},
}
# passing --n switches `bounds` from the vector bound to the three chain bounds
CHAIN_BOUNDS_REQUIRED = ["k", "n", "r", "p", "eps"]
CHAIN_BOUNDS_DEFAULTS = {"index": 1.0, "delta": 0.05, "stationary": False, "expected_dev": None}
REQUIRED = {
    "bounds": ["k", "sigma2", "lip", "eps"],
    "tail": ["chain", "n", "p", "eps"],
    "compare": ["chain", "n", "p", "eps_grid"],
    "tci": ["chain", "n"],
    "mgf": ["chain", "n", "p", "h", "lambdas"],
    "complexity": ["K_list", "p", "eps", "delta", "r"],
}


class ValidationError(ParameterError):
    pass


# ---------------------------------------------------------------------------
# argument parsing


def _csv_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _csv_ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def parse_grid(spec) -> list[float]:
    """``A:B:STEP`` (inclusive of B up to rounding) or a list of numbers."""
    if isinstance(spec, (list, tuple)):
        return [float(x) for x in spec]
    parts = str(spec).split(":")
    if len(parts) != 3:
        raise ValidationError(f"eps_grid must look like A:B:STEP, got {spec!r}")
    a, b, step = (float(x) for x in parts)
    if step <= 0 or b < a:
        raise ValidationError(f"eps_grid needs STEP > 0 and B >= A, got {spec!r}")
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    return [round(a + i * step, 12) for i in range(count)]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="conclab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, chain=True):
        p.add_argument("--config", type=Path, help="JSON file with parameters")
        p.add_argument("--csv", type=Path, help="write CSV output here")
        p.add_argument("--json", type=Path, help="write JSON output here")
        if chain:
            p.add_argument("--chain", help="chain JSON file")
        p.add_argument("--seed", type=int)

    p = sub.add_parser("bounds", help="vector-valued bound, or the three chain bounds with --n")
    common(p, chain=False)
    p.add_argument("--k", type=int, help="dimension, or number of states with --n")
    p.add_argument("--sigma2", type=float)
    p.add_argument("--lip", type=float)
    p.add_argument("--tau", help='norm-comparison constant or "upper"')
    p.add_argument("--eps", type=_csv_floats, help="one or more thresholds")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--eta", type=float)
    group.add_argument("--optimize-eta", dest="optimize_eta", action="store_true", default=None)
    p.add_argument("--n", type=int, help="path length; selects the chain bounds")
    p.add_argument("--r", type=float, help="Dobrushin coefficient")
    p.add_argument("--p", type=float)
    p.add_argument("--index", type=float, help="nonstationarity index")
    p.add_argument("--delta", type=float)
    p.add_argument("--expected-dev", dest="expected_dev", type=float, help="defaults to the K/sqrt(n) envelope")
    p.add_argument("--stationary", action="store_true", default=None)

    p = sub.add_parser("tail", help="tail probability of the plug-in estimator")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--stationary", action="store_true", default=None)

    p = sub.add_parser("compare", help="tail probability against the three chain bounds")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--eps-grid", dest="eps_grid")
    p.add_argument("--trials", type=int)
    p.add_argument("--stationary", action="store_true", default=None)

    p = sub.add_parser("tci", help="transportation cost inequality check on chain paths")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("mgf", help="sub-Gaussian MGF check for the plug-in estimator")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--h", type=_csv_floats)
    p.add_argument("--lambdas", type=_csv_floats)
    p.add_argument("--trials", type=int)

    p = sub.add_parser("complexity", help="sample-complexity comparison table")
    common(p, chain=False)
    p.add_argument("--K-list", dest="K_list", type=_csv_ints)
    p.add_argument("--p", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--index-rule", dest="index_rule")
    p.add_argument("--eta")
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults, the JSON config file and explicit flags (in that order)."""
    cmd = args.subcommand
    config = {"subcommand": cmd, **DEFAULTS[cmd]}
    if cmd == "bounds" and (args.n is not None or _config_has(args.config, "n")):
        config.update(CHAIN_BOUNDS_DEFAULTS)
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"config: cannot read {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ValidationError("config: top level must be a JSON object")
        config.update({k.replace("-", "_"): v for k, v in loaded.items()})
    for key, value in vars(args).items():
        if key in ("subcommand", "config", "csv", "json") or value is None:
            continue
        config[key] = value
    if cmd == "bounds":
        if config.pop("optimize_eta", None):
            config["eta"] = "optimize"
        if "eps" in config and not isinstance(config["eps"], list):
            config["eps"] = [config["eps"]]
    for out in ("csv", "json"):
        value = getattr(args, out)
        if value is not None:
            config[out] = str(value)
    required = CHAIN_BOUNDS_REQUIRED if cmd == "bounds" and "n" in config else REQUIRED[cmd]
    missing = [k for k in required if config.get(k) is None]
    if missing:
        raise ValidationError(f"missing required field(s) for {cmd}: {', '.join(missing)}")
    return config


def _config_has(path, key) -> bool:
    if path is None:
        return False
    try:
        loaded = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError):
        return False  # resolve_config reports the problem
    return isinstance(loaded, dict) and loaded.get(key) is not None


def load_chain(spec) -> MarkovChainModel:
    if isinstance(spec, dict):
        return MarkovChainModel.from_dict(spec)
    try:
        text = Path(spec).read_text()
    except OSError as exc:
        raise DataError(f"chain: cannot read {spec}: {exc}") from None
    return MarkovChainModel.from_json(text)


def _require(cond: bool, field: str, message: str):
    if not cond:
        raise ValidationError(f"{field}: {message}")


def _int(config, field, minimum):
    value = config[field]
    _require(isinstance(value, int) and not isinstance(value, bool), field, "must be an integer")
    _require(value >= minimum, field, f"must be >= {minimum}, got {value}")
    return value


def _float(config, field, lo=None, lo_open=False, hi=None, hi_open=False):
    try:
        value = float(config[field])
    except (TypeError, ValueError):
        raise ValidationError(f"{field}: must be a number, got {config[field]!r}") from None
    if lo is not None:
        ok = value > lo if lo_open else value >= lo
        _require(ok, field, f"must be {'>' if lo_open else '>='} {lo}, got {value}")
    if hi is not None:
        ok = value < hi if hi_open else value <= hi
        _require(ok, field, f"must be {'<' if hi_open else '<='} {hi}, got {value}")
    return value


def _resolved_chain(config) -> MarkovChainModel:
    """Load the chain and replace the config entry by its resolved contents."""
    chain = load_chain(config["chain"])
    config["chain"] = chain.to_dict()
    return chain


def _contracting_chain(config) -> MarkovChainModel:
    chain = _resolved_chain(config)
    chain.pi  # raises ModelError naming the ergodicity failure
    _require(
        chain.r < 1 - bounds.R_MARGIN,
        "chain",
        f"Dobrushin coefficient r={chain.r} is not < 1; bounds need a contracting chain",
    )
    return chain


# ---------------------------------------------------------------------------
# subcommands: each returns (csv_text, json_obj, table_lines)


def _fmt(x) -> str:
    if x is None:
        return "NA"
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _table(columns, rows) -> list[str]:
    cells = [[str(c) for c in columns]] + [[_fmt(r[c]) for c in columns] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    return ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]


def _eps_list(config) -> list[float]:
    eps_list = [float(e) for e in config["eps"]]
    for e in eps_list:
        _require(e >= 0, "eps", f"must be >= 0, got {e}")
    return eps_list


def _tau(config, p=None, K=None) -> float | None:
    """Explicit tau, or the upper comparison constant (``None`` without p)."""
    if config["tau"] in (None, "upper"):
        return None if p is None else tau_p_upper(p, K)
    return _float(config, "tau", 0, True)


def cmd_bounds(config):
    if "n" in config:
        return cmd_chain_bounds(config)
    k = _int(config, "k", 1)
    sigma2 = _float(config, "sigma2", 0, True)
    lip = _float(config, "lip", 0, True)
    tau = _tau(config) or 1.0
    eps_list = _eps_list(config)
    optimize = config["eta"] == "optimize"
    eta = 0.5 if optimize else _float(config, "eta", 0, True, 1)
    rows = []
    for e in eps_list:
        inp = bounds.ConcentrationInputs(k, sigma2, lip, e, eta, tau)
        res = bounds.vector_tail_bound(inp, optimize_eta=optimize)
        used = inp.with_eta(res.eta)
        rows.append(
            {
                "eps": e,
                "covering": bounds.covering_bound(used),
                "gaussian": bounds.gaussian_bound(used),
                "bound_raw": res.raw,
                "bound": res.clamped,
                "branch": res.branch,
                "eta_used": res.eta,
                "clamped_flag": res.raw > 1,
            }
        )
    cols = ["eps", "covering", "gaussian", "bound_raw", "bound", "branch", "eta_used", "clamped_flag"]
    prov = experiments.provenance(config, config["seed"])
    return (
        experiments.rows_to_csv(rows, cols, config),
        {"provenance": prov, "rows": rows},
        _table(cols, rows),
    )


def cmd_chain_bounds(config):
    K = _int(config, "k", 1)
    n = _int(config, "n", 1)
    r = _float(config, "r", 0, False, 1 - bounds.R_MARGIN, True)
    p = _float(config, "p", 1)
    index = _float(config, "index", 1)
    delta = _float(config, "delta", 0, True, 1, True)
    stationary = bool(config["stationary"])
    _require(not stationary or index == 1, "index", "must be 1 for a stationary start")
    eps_list = _eps_list(config)
    if config["expected_dev"] is None:
        expected_dev = K / math.sqrt(n)
    else:
        expected_dev = _float(config, "expected_dev", 0)
    inp = bounds.ChainBoundInputs(K, n, r, p, eps_list[0], index, delta, stationary)
    rows = bounds.approach_rows(inp, eps_list, expected_dev, _tau(config, p, K))
    cols = ["eps", "approach1", "approach2", "approach3", "eta_used", "clamped_flags"]
    prov = experiments.provenance(config, config["seed"])
    return experiments.rows_to_csv(rows, cols, config), {"provenance": prov, "rows": rows}, _table(cols, rows)


def _chain_args(config):
    n = _int(config, "n", 1)
    p = _float(config, "p", 1)
    seed = _int(config, "seed", 0)
    return n, p, seed


def cmd_tail(config):
    n, p, seed = _chain_args(config)
    eps = _float(config, "eps", 0)
    trials = _int(config, "trials", 1000)
    chain = _resolved_chain(config)
    stationary = bool(config["stationary"])
    chain.pi
    if experiments.num_paths(chain.K, n) <= experiments.EXACT_PATH_LIMIT:
        est, half, exact = experiments.exact_tail(chain, n, p, eps, stationary), 0.0, True
    else:
        est, half = experiments.mc_tail(chain, n, p, eps, trials, seed, stationary)
        exact = False
    rows = [{"eps": eps, "empirical": est, "half_width": half, "exact_flag": exact}]
    cols = ["eps", "empirical", "half_width", "exact_flag"]
    prov = experiments.provenance(config, seed, chain)
    return experiments.rows_to_csv(rows, cols, config), {"provenance": prov, "rows": rows}, _table(cols, rows)


def cmd_compare(config):
    n, p, seed = _chain_args(config)
    trials = _int(config, "trials", 1000)
    grid = parse_grid(config["eps_grid"])
    for e in grid:
        _require(e >= 0, "eps_grid", f"thresholds must be >= 0, got {e}")
    config["eps_grid"] = grid
    chain = _contracting_chain(config)
    reports = experiments.compare_bounds(chain, n, p, grid, trials, seed, bool(config["stationary"]))
    rows = [asdict(r) for r in reports]
    prov = experiments.provenance(config, seed, chain)
    return (
        experiments.tail_reports_to_csv(reports, config),
        {"provenance": prov, "rows": rows},
        _table(experiments.TAIL_COLUMNS, rows),
    )


def cmd_tci(config):
    n = _int(config, "n", 1)
    seed = _int(config, "seed", 0)
    samples = _int(config, "samples", 1)
    chain = _contracting_chain(config)
    law = transport.chain_path_law(chain, n)
    space = transport.hamming_space(chain.K, n)
    sigma2 = bounds.marton_sigma2(n, chain.r)
    report = transport.tci_check(law, space, sigma2, samples, seed)
    row = {
        "max_ratio": report.max_ratio,
        "num_violations": report.num_violations,
        "num_evaluated": report.num_evaluated,
        "num_skipped": report.num_skipped,
        "sigma2": report.sigma2,
        "seed": report.seed,
    }
    cols = list(row)
    prov = experiments.provenance(config, seed, chain)
    return (
        experiments.rows_to_csv([row], cols, config),
        {"provenance": prov, **report.to_dict()},
        _table(cols, [row]),
    )


def cmd_mgf(config):
    n, p, seed = _chain_args(config)
    trials = _int(config, "trials", 1)
    chain = _contracting_chain(config)
    h = [float(x) for x in config["h"]]
    _require(len(h) == chain.K, "h", f"needs {chain.K} entries, got {len(h)}")
    _require(any(x != 0 for x in h), "h", "must be non-zero")
    lambdas = [float(x) for x in config["lambdas"]]
    report = bounds.mgf_check(chain, n, p, h, lambdas, trials, seed)
    data = report.to_dict()
    rows = data["rows"]
    cols = ["lambda", "empirical", "bound", "margin", "stderr", "violation"]
    prov = experiments.provenance(config, seed, chain)
    return experiments.rows_to_csv(rows, cols, config), {"provenance": prov, **data}, _table(cols, rows)


def cmd_complexity(config):
    K_list = config["K_list"]
    _require(
        isinstance(K_list, list) and all(isinstance(k, int) and k >= 2 for k in K_list) and K_list,
        "K_list",
        "must be a non-empty list of integers >= 2",
    )
    p = _float(config, "p", 1)
    eps = _float(config, "eps", 0, True)
    delta = _float(config, "delta", 0, True, 1, True)
    r = _float(config, "r", 0, False, 1, True)
    rule = str(config["index_rule"])
    eta = config["eta"]
    if eta != "optimize":
        config["eta"] = eta = _float(config, "eta", 0, True, 1, True)
    rows = [asdict(x) for x in experiments.complexity_table(K_list, p, eps, delta, r, rule, eta)]
    cols = ["K", "index", "n1", "n2", "n3", "eta3", "ratio23", "ratio23_logK", "ratio23_K"]
    prov = experiments.provenance(config, config["seed"])
    return experiments.rows_to_csv(rows, cols, config), {"provenance": prov, "rows": rows}, _table(cols, rows)


COMMANDS = {
    "bounds": cmd_bounds,
    "tail": cmd_tail,
    "compare": cmd_compare,
    "tci": cmd_tci,
    "mgf": cmd_mgf,
    "complexity": cmd_complexity,
}


# ---------------------------------------------------------------------------
# output


def _json_safe(obj):
    if isinstance(obj, float):
        if math.isnan(obj):
            return "NaN"
        if math.isinf(obj):
            return "Infinity" if obj > 0 else "-Infinity"
        return obj
    if isinstance(obj, (np.floating, np.integer)):
        return _json_safe(obj.item())
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def atomic_write(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def run(config: dict) -> int:
    """Dispatch a resolved config; write outputs and print a table.

    Output paths are not part of the embedded provenance, so the same
    experiment written to two locations yields identical files.
    """
    outputs = {k: config.get(k) for k in ("csv", "json")}
    body = {k: v for k, v in config.items() if k not in outputs}
    csv_text, json_obj, lines = COMMANDS[body["subcommand"]](body)
    json_text = json.dumps(_json_safe(json_obj), sort_keys=True, indent=2, allow_nan=False) + "\n"
    # render everything before touching disk so failures leave no partial files
    if outputs["csv"]:
        atomic_write(Path(outputs["csv"]), csv_text)
    if outputs["json"]:
        atomic_write(Path(outputs["json"]), json_text)
    print("\n".join(lines))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
        return run(config)
    except CapacityError as exc:
        print(f"conclab: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except InternalError as exc:
        print(f"conclab: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ConclabError as exc:
        print(f"conclab: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # anything unanticipated is a bug, not bad input
        print(f"conclab: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
