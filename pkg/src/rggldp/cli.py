"""Command-line entry point.

Exit codes: 0 success, 1 acceptance failure in ``verify``, 2 usage or
domain error. The default seed comes from ``$RGGLDP_SEED`` (else 0).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import acceptance, montecarlo, rates
from .exceptions import RGGError
from .geometry import ModelParams
from .measures import CountableMeasure, neighbourhood_from_json

SCHEMA = 1
SIMULATE_HEADER = ["n", "trial", "isolated", "edges"]
TAIL_HEADER = ["y", "n", "trials", "hits", "p_hat", "log_rate", "wilson_lo", "wilson_hi", "xi1", "seed"]


def _default_seed() -> int:
    try:
        return int(os.environ.get("RGGLDP_SEED", "0"))
    except ValueError:
        return 0


class _Parser(argparse.ArgumentParser):
    def field_error(self, field: str, message: str):
        self.error(f"invalid --{field}: {message}")


def _finite(value: float) -> float | str:
    return "inf" if value == math.inf else value


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _emit(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _load_matrix(spec: str) -> np.ndarray:
    """Accept a JSON literal or a path to a JSON/CSV file."""
    path = Path(spec)
    if path.exists():
        text = path.read_text()
        if path.suffix == ".csv":
            return np.loadtxt(io.StringIO(text), delimiter=",", ndmin=2)
        return np.array(json.loads(text), dtype=np.float64, ndmin=2)
    return np.array(json.loads(spec), dtype=np.float64, ndmin=2)


def _load_json(spec: str):
    path = Path(spec)
    return json.loads(path.read_text() if path.exists() else spec)


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _add_model_args(p, coloured_ok=True):
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--c", type=float)
    if coloured_ok:
        p.add_argument("--C", dest="kernel", help="kernel matrix: JSON literal or .json/.csv path")
        p.add_argument("--nu", help="colour law, comma separated")
    p.add_argument("--mode", choices=["cube", "torus"], default="torus")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"])


def build_parser() -> _Parser:
    parser = _Parser(prog="rggldp", description="Large-deviation rates and Monte Carlo for near-intermediate RGGs")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="typical-value ensemble (run_trials)")
    _add_model_args(p)
    p.add_argument("--trials", type=int, default=100)

    p = sub.add_parser("rate", help="evaluate a rate function")
    rsub = p.add_subparsers(dest="rate", required=True, parser_class=_Parser)
    for name in ("eta1", "xi1", "hcd", "J"):
        rp = rsub.add_parser(name)
        rp.add_argument("--d", type=int, default=2)
        rp.add_argument("--out")
        if name in ("eta1", "xi1"):
            rp.add_argument("--c", type=float, required=True)
        if name == "eta1":
            rp.add_argument("--delta", required=True,
                            help="masses at 0,1,2,... comma separated, or a measure JSON literal/path")
        if name == "xi1":
            rp.add_argument("--y", type=float, required=True)
        if name in ("hcd", "J"):
            rp.add_argument("--C", dest="kernel", required=True)
            rp.add_argument("--varpi", required=True, help="pair measure as a matrix (JSON literal or path)")
        if name == "hcd":
            rp.add_argument("--omega", required=True, help="comma separated")
        if name == "J":
            rp.add_argument("--nu", required=True, help="comma separated")
            rp.add_argument("--mu", required=True, help="neighbourhood measure JSON literal or path")

    p = sub.add_parser("tail", help="tail probability of D(0) >= y")
    _add_model_args(p, coloured_ok=False)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--trials", type=int, default=10_000)

    p = sub.add_parser("slope", help="tail estimates over a ladder of n")
    _add_model_args(p, coloured_ok=False)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--n-list", dest="n_list", default="50,100")
    p.add_argument("--trials", type=int, default=10_000)

    p = sub.add_parser("coloured", help="coloured typical-law check")
    _add_model_args(p)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--n-ladder", dest="n_ladder", default="500,2000")

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--only", help="comma separated criterion numbers")
    return parser


def _check_common(parser: _Parser, args):
    if getattr(args, "d", 1) < 1:
        parser.field_error("d", f"dimension must be >= 1, got {args.d}")
    if getattr(args, "c", None) is not None and not args.c > 0:
        parser.field_error("c", f"must be > 0, got {args.c}")
    if getattr(args, "y", None) is not None and not 0 <= args.y <= 1:
        parser.field_error("y", f"must lie in [0, 1], got {args.y}")
    if getattr(args, "trials", 1) < 1:
        parser.field_error("trials", f"must be >= 1, got {args.trials}")
    if getattr(args, "n", 1) < 1:
        parser.field_error("n", f"must be >= 1, got {args.n}")


def _model(parser: _Parser, args) -> ModelParams:
    kernel = getattr(args, "kernel", None)
    if (args.c is None) == (kernel is None):
        parser.field_error("c", "give exactly one of --c or --C")
    try:
        if kernel is None:
            return ModelParams(d=args.d, n=args.n, c=args.c, mode=args.mode, seed=args.seed)
        if not args.nu:
            parser.field_error("nu", "required with --C")
        return ModelParams(d=args.d, n=args.n, C=_load_matrix(kernel), nu=_floats(args.nu),
                           mode=args.mode, seed=args.seed)
    except RGGError as exc:
        field = "C" if "kernel" in str(exc) else "nu" if "nu" in str(exc) else "c"
        parser.field_error(field, str(exc))


def _params_record(params: ModelParams) -> dict:
    rec = {"d": params.d, "n": params.n, "mode": params.mode.value, "seed": params.seed,
           "rho_d": rates.rho(params.d)}
    if params.coloured:
        rec.update(C=params.C.tolist(), nu=params.nu.tolist(),
                   rho_C=(rates.rho(params.d) * params.C).tolist())
    else:
        rec.update(c=params.c, rho_c=rates.rho(params.d) * params.c)
    return rec


def _workers(args) -> int:
    return max(1, int(args.threads))


def cmd_simulate(parser, args) -> int:
    params = _model(parser, args)
    s = montecarlo.run_trials(params, args.trials, _workers(args))
    fmt = args.format or ("json" if (args.out or "").endswith(".json") else "csv")
    if fmt == "csv":
        _emit(_csv_text(SIMULATE_HEADER, [(params.n, t, iso, e) for t, iso, e in s.rows]), args.out)
    else:
        body = s.to_json()
        body["rows"] = [dict(zip(SIMULATE_HEADER, (params.n, t, iso, e))) for t, iso, e in s.rows]
        _emit(_dump_json({"schema": SCHEMA, "command": "simulate", "params": _params_record(params),
                          "summary": body}), args.out)
    return 0


def _degree_arg(text: str) -> CountableMeasure:
    stripped = text.strip()
    if stripped.startswith("{") or Path(stripped).exists():
        return CountableMeasure.from_json(_load_json(stripped))
    return rates.degree_law(_floats(stripped))


def _matrix_measure(mat: np.ndarray) -> CountableMeasure:
    k = mat.shape[0]
    return CountableMeasure({(a, b): mat[a, b] for a in range(k) for b in range(k)})


def cmd_rate(parser, args) -> int:
    rec = {"schema": SCHEMA, "command": f"rate {args.rate}", "params": {"d": args.d, "rho_d": rates.rho(args.d)}}
    aux = {}
    try:
        if args.rate == "eta1":
            delta = _degree_arg(args.delta)
            rec["params"].update(c=args.c, rho_c=rates.rho(args.d) * args.c)
            rec["input"] = {"delta": delta.to_json()}
            value = rates.eta1(delta, args.d, args.c)
            aux["mean"] = delta.mean()
            aux["truncation_k"] = rates.PoissonLaw(delta.mean()).truncation
        elif args.rate == "xi1":
            rec["params"].update(c=args.c, rho_c=rates.rho(args.d) * args.c)
            rec["input"] = {"y": args.y}
            value = rates.xi1(args.y, args.d, args.c)
            if args.y < 1:
                aux["a"] = rates.solve_a(args.y, args.d, args.c)
                aux["truncation_k"] = rates.PoissonLaw(aux["a"]).truncation
        elif args.rate == "hcd":
            C = _load_matrix(args.kernel)
            varpi = _matrix_measure(_load_matrix(args.varpi))
            omega = CountableMeasure(dict(enumerate(_floats(args.omega))))
            rec["input"] = {"C": C.tolist(), "varpi": varpi.to_json(), "omega": omega.to_json()}
            value = rates.hc_d(varpi, omega, C, args.d)
        else:
            C = _load_matrix(args.kernel)
            varpi = _matrix_measure(_load_matrix(args.varpi))
            mu = neighbourhood_from_json(_load_json(args.mu))
            nu = _floats(args.nu)
            rec["input"] = {"C": C.tolist(), "varpi": varpi.to_json(), "nu": nu, "mu": mu.to_json()}
            value = rates.rate_J(varpi, mu, nu, C, args.d)
    except RGGError as exc:
        parser.error(f"invalid input for rate {args.rate}: {exc}")
    except (ValueError, json.JSONDecodeError) as exc:
        parser.error(f"could not parse input for rate {args.rate}: {exc}")
    rec["value"] = _finite(value)
    rec["aux"] = aux
    _emit(_dump_json(rec), args.out)
    return 0


def _tail_rows(ests):
    return [(e.y, e.n, e.trials, e.hits, repr(e.p_hat), "" if e.log_rate is None else repr(e.log_rate),
             repr(e.wilson_ci[0]), repr(e.wilson_ci[1]), repr(e.reference_rate), e.seed) for e in ests]


def _emit_tails(args, params, ests, command):
    fmt = args.format or ("csv" if (args.out or "").endswith(".csv") else "json")
    if fmt == "csv":
        _emit(_csv_text(TAIL_HEADER, _tail_rows(ests)), args.out)
    else:
        _emit(_dump_json({"schema": SCHEMA, "command": command, "params": _params_record(params),
                          "estimates": [e.to_json() for e in ests]}), args.out)


def cmd_tail(parser, args) -> int:
    params = _model(parser, args)
    est = montecarlo.estimate_tail_probability(params, args.y, args.trials, _workers(args))
    _emit_tails(args, params, [est], "tail")
    return 0


def cmd_slope(parser, args) -> int:
    try:
        n_list = _ints(args.n_list)
    except ValueError:
        parser.field_error("n-list", f"expected comma separated integers, got {args.n_list!r}")
    if not n_list or min(n_list) < 1:
        parser.field_error("n-list", "need at least one n >= 1")
    params = _model(parser, args)
    ests = montecarlo.estimate_rate_slope(params, args.y, n_list, args.trials, _workers(args))
    _emit_tails(args, params, ests, "slope")
    return 0


def cmd_coloured(parser, args) -> int:
    params = _model(parser, args)
    if not params.coloured:
        parser.field_error("C", "coloured check needs --C and --nu")
    try:
        ladder = _ints(args.n_ladder)
    except ValueError:
        parser.field_error("n-ladder", f"expected comma separated integers, got {args.n_ladder!r}")
    rep = montecarlo.coloured_typical_check(params, args.trials, ladder, _workers(args))
    _emit(_dump_json({"schema": SCHEMA, "command": "coloured", "params": _params_record(params),
                      "report": rep.to_json()}), args.out)
    return 0


def cmd_verify(parser, args) -> int:
    numbers = None
    if args.only:
        try:
            numbers = set(_ints(args.only))
        except ValueError:
            parser.field_error("only", f"expected comma separated integers, got {args.only!r}")
    results = acceptance.run_all(numbers)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed"
          + (f"; failing: {', '.join(map(str, failed))}" if failed else ""))
    return 1 if failed else 0


COMMANDS = {"simulate": cmd_simulate, "rate": cmd_rate, "tail": cmd_tail, "slope": cmd_slope,
            "coloured": cmd_coloured, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _check_common(parser, args)
    return COMMANDS[args.command](parser, args)


if __name__ == "__main__":
    sys.exit(main())
