"""Command-line front end: ``rateless {capacity,bounds,simulate,sweep,verify}``.

Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import bounds as bnd
from .channel import AwgnChannel, capacity, channel_from_spec
from .errors import ConfigError, RatelessError
from .sim import DEFAULT_SEED, ExperimentConfig, run_experiment, trials_csv

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
MAX_SIMULATED_M = 2**16


def _load_json(path):
    if path is None:
        raise ConfigError("--config is required for this command")
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: malformed JSON ({e})") from None
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from None


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def _csv_text(header, rows):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([_fmt(row.get(h)) for h in header])
    return buf.getvalue()


def _json_text(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        try:
            Path(out).write_text(text)
        except OSError as e:
            raise ConfigError(f"{out}: {e.strerror}") from None


def _flat(d):
    """One-level dict of scalars for CSV output; nested values become JSON strings."""
    return {k: (json.dumps(v, sort_keys=True) if isinstance(v, (dict, list, tuple)) else v) for k, v in d.items()}


def _channel_capacity(spec):
    ch = channel_from_spec(spec)
    if isinstance(ch, AwgnChannel):
        return ch.capacity_bits
    return capacity(ch).capacity_bits


# commands ------------------------------------------------------------------


def cmd_capacity(args):
    data = _load_json(args.config)
    spec = data.get("channel", data) if isinstance(data, dict) else data
    ch = channel_from_spec(spec)
    if isinstance(ch, AwgnChannel):
        result = {"capacity_bits": ch.capacity_bits, "optimal_prior": None, "iterations": 0, "gap_bound": 0.0}
    else:
        res = capacity(ch)
        result = {
            "capacity_bits": res.capacity_bits,
            "optimal_prior": [float(p) for p in res.optimal_prior.probs],
            "iterations": res.iterations,
            "gap_bound": res.gap_bound,
        }
    if args.format == "csv":
        _emit(_csv_text(list(result), [_flat(result)]), args.out)
    else:
        _emit(_json_text(result), args.out)
    return EXIT_OK


def _bound_params(data):
    params = dict(data.get("params", {}))
    if "channel" in data and "C" not in params:
        params["C"] = _channel_capacity(data["channel"])
    return params


def cmd_bounds(args):
    data = _load_json(args.config)
    if not isinstance(data, dict) or "formulas" not in data:
        raise ConfigError("bounds config needs 'formulas' and 'params'")
    params = _bound_params(data)
    try:
        values = {name: bnd.evaluate(name, params) for name in data["formulas"]}
    except KeyError as e:
        raise ConfigError(e.args[0]) from None
    row = {**{k: v for k, v in params.items() if not isinstance(v, (dict, list))}, **values}
    if args.format == "csv":
        _emit(_csv_text(list(row), [row]), args.out)
    else:
        _emit(_json_text({k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in row.items()}), args.out)
    return EXIT_OK


def _experiment_config(data, args):
    cfg = ExperimentConfig.from_dict(data)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.workers is not None:
        changes["worker_count"] = args.workers
    return cfg.replace(**changes) if changes else cfg


def cmd_simulate(args):
    cfg = _experiment_config(_load_json(args.config), args)
    dump_path = None
    if args.dump_trials:
        if args.dump_trials is True:
            if args.out is None:
                raise ConfigError("--dump-trials without a path needs --out")
            dump_path = Path(args.out).with_suffix(".trials.csv")
        else:
            dump_path = Path(args.dump_trials)
    records = [] if dump_path is not None else None
    report = run_experiment(cfg, records)
    if args.format == "csv":
        d = report.to_dict()
        row = {k: v for k, v in d.items() if k not in ("bounds", "extras", "config", "error_ci")}
        row["error_ci_low"], row["error_ci_high"] = d["error_ci"]
        row.update({f"bound_{k}": v for k, v in d["bounds"].items()})
        _emit(_csv_text(list(row), [_flat(row)]), args.out)
    else:
        _emit(report.to_json(), args.out)
    if dump_path is not None:
        _emit(trials_csv(records), dump_path)
    return EXIT_OK


def _sweep_rows(spec, args):
    if not isinstance(spec, dict) or "grid" not in spec:
        raise ConfigError("sweep config needs a 'grid'")
    grid_spec = spec["grid"]
    var = grid_spec.get("variable")
    if not var:
        raise ConfigError("grid needs a 'variable'")
    try:
        points = bnd.grid(grid_spec)
    except (KeyError, ValueError) as e:
        raise ConfigError(f"bad grid: {e}") from None
    formulas = list(spec.get("formulas", []))
    unknown = [f for f in formulas if f not in bnd.FORMULAS]
    if unknown:
        raise ConfigError(f"unknown formula(s): {', '.join(unknown)}")
    differences = [tuple(d) for d in spec.get("differences", [])]
    for d in differences:
        if len(d) != 2 or not set(d) <= set(formulas):
            raise ConfigError("each difference names two requested formulas")
    params = _bound_params(spec)
    simulate = bool(spec.get("simulate", False))
    experiment = dict(spec.get("experiment", {}))
    if simulate:
        experiment.setdefault("channel", spec.get("channel"))
        if experiment.get("channel") is None:
            raise ConfigError("simulate needs a channel")
        experiment.setdefault("scheme", "known")
        experiment.setdefault("trials", int(spec.get("trials", 1000)))
        if "epsilon" in params:
            experiment.setdefault("epsilon", params["epsilon"])

    header = [var] + formulas + [f"{a}-{b}" for a, b in differences]
    if simulate:
        header += ["sim_rate", "sim_rate_ci", "sim_mean_T", "sim_error_rate", "sim_error_ci_high"]
    rows = []
    for x in points:
        p = {**params, var: x}
        row = {var: x}
        for f in formulas:
            v = bnd.evaluate(f, p)
            row[f] = float(v)
        for a, b in differences:
            row[f"{a}-{b}"] = row[a] - row[b]
        if simulate:
            exp = {**experiment, **({var: int(x) if var == "M" else x} if var in ("M", "epsilon") else {})}
            if exp.get("M") is not None and exp["M"] > MAX_SIMULATED_M:
                raise ConfigError(f"simulation needs M <= {MAX_SIMULATED_M}, got {exp['M']}")
            r = run_experiment(_experiment_config(exp, args))
            row.update(sim_rate=r.rate, sim_rate_ci=r.rate_ci, sim_mean_T=r.mean_T,
                       sim_error_rate=r.error_rate, sim_error_ci_high=r.error_ci[1])
        rows.append(row)
    return header, rows


def cmd_sweep(args):
    header, rows = _sweep_rows(_load_json(args.config), args)
    if args.format == "json":
        clean = [{k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in r.items()} for r in rows]
        _emit(_json_text({"columns": header, "rows": clean}), args.out)
    else:
        _emit(_csv_text(header, rows), args.out)
    return EXIT_OK


def cmd_verify(args):
    from .verify import QUICK_CHECKS, QUICK_SCALE, run_acceptance

    workers = args.workers or 1
    kwargs = {"scale": QUICK_SCALE, "only": QUICK_CHECKS} if args.quick else {}
    results = run_acceptance(workers=workers, fault=args.inject_fault,
                             echo=lambda r: print(r.line(), flush=True), **kwargs)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if args.out is not None:
        _emit(_json_text([r.__dict__ for r in results]), args.out)
    return EXIT_FAIL if failed else EXIT_OK


COMMANDS = {
    "capacity": cmd_capacity,
    "bounds": cmd_bounds,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def build_parser():
    p = argparse.ArgumentParser(prog="rateless", description="Rateless coding with sequential threshold decoding.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", metavar="PATH", help="JSON config for the command")
    p.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    p.add_argument("--seed", type=int, default=None, help=f"master seed (default: config value or {DEFAULT_SEED})")
    p.add_argument("--workers", type=int, default=None, help="worker processes for simulations")
    p.add_argument("--format", choices=("json", "csv"), default=None, help="output format")
    p.add_argument("--dump-trials", nargs="?", const=True, default=None, metavar="PATH",
                   help="also write per-trial CSV (default path: <out>.trials.csv)")
    p.add_argument("--quick", action="store_true", help="verify: reduced-size subset")
    p.add_argument("--inject-fault", choices=("kt",), default=None, help=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.format is None:
        args.format = "csv" if args.command == "sweep" else "json"
    if args.workers is not None and args.workers < 1:
        print("error: --workers must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except (RatelessError, ValueError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
