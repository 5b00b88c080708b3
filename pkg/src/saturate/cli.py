"""Command-line front end.

    saturate threshold --dv 3 --dc 6 --m 1 --coupled --L 100 --w 3
    saturate threshold --dv 3 --dc 6,9 --m 1,3 --coupled --L 100 --w 3 --sweep --jobs 4
    saturate potential --dv 3 --dc 4 --m 2
    saturate potential --system bilayer.json
    saturate saturate --dv 3 --dc 6 --m 2 --L 100 --w 3,5
    saturate verify --suite appendix-a --m 6

Single results are JSON ResultRecords, sweeps and curves are CSV.  Exit
codes: 0 success (including an infeasibility verdict), 1 usage error,
2 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__
from .de_engine import (
    MAX_ITER,
    CoupledParams,
    EnsembleParams,
    bp_threshold_bracket,
    coupled_bp_threshold,
    coupled_de,
    de_fixed_point,
)
from .polynomial import MAX_EXTRACT_M, extract_de_polynomials
from .potential import (
    Infeasible,
    ThresholdReport,
    check_necessary_condition,
    energy_gap,
    load_system,
    nonbinary_potential,
    potential_threshold,
    solve_potential,
    w_bound,
)

SCHEMA = "saturate.result/1"
BACKEND_ENV = "SATURATE_NUM_BACKEND"
BACKENDS = {"double": "compiled", "numpy": "numpy", "exact": None}
SHAPES = ("positive", "strictly-positive", "full", "diagonal")
THRESHOLD_CSV = ["dv", "dc", "m", "L", "w", "eps_bp"]
CURVE_CSV = ["eps", "delta_E", "w_min"]
VERIFY_CSV = ["suite", "name", "passed", "detail"]


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str = "threshold"
    dv: list = field(default_factory=lambda: [3])
    dc: list = field(default_factory=lambda: [6])
    m: list = field(default_factory=lambda: [1])
    coupled: bool = False
    L: list = field(default_factory=lambda: [100])
    w: list = field(default_factory=lambda: [3])
    eps: list | None = None
    tol: float | None = None          # bisection tolerance; None -> per-command default
    max_iter: int = MAX_ITER
    sweep: bool = False
    out: str | None = None
    format: str | None = None
    jobs: int = 1
    system: str | None = None
    check_only: bool = False
    suite: list = field(default_factory=lambda: ["all"])
    shape: str | None = None
    backend: str = "double"
    appendix_m: int | None = None     # verify: largest m for the appendix-a suite (from --m)

    def validate(self) -> "RunConfig":
        for name in ("dv", "dc", "m", "L", "w"):
            vals = getattr(self, name)
            if not vals or any(not isinstance(v, int) or isinstance(v, bool) for v in vals):
                raise UsageError(f"--{name} needs integers, got {vals!r}")
        if min(self.dv) < 2 or min(self.dc) < 2:
            raise UsageError("need dv >= 2 and dc >= 2")
        if min(self.m) < 1:
            raise UsageError("need m >= 1")
        if min(self.L) < 1 or min(self.w) < 1:
            raise UsageError("need L >= 1 and w >= 1")
        if self.tol is not None and not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.max_iter < 1:
            raise UsageError("--max-iter must be positive")
        if self.jobs < 1:
            raise UsageError("--jobs must be positive")
        if self.eps is not None and any(not 0 <= e <= 1 for e in self.eps):
            raise UsageError("--eps values must lie in [0, 1]")
        if self.format not in (None, "json", "csv"):
            raise UsageError("--format must be json or csv")
        if self.shape is not None and self.shape not in SHAPES:
            raise UsageError(f"--shape must be one of {', '.join(SHAPES)}")
        if self.backend not in BACKENDS:
            raise UsageError(f"{BACKEND_ENV} must be one of {', '.join(BACKENDS)}, got {self.backend!r}")

        multi = [n for n in ("dv", "dc", "m") if len(getattr(self, n)) > 1]
        if self.command == "threshold":
            if self.coupled:
                multi += [n for n in ("L", "w") if len(getattr(self, n)) > 1]
            if multi and not self.sweep:
                raise UsageError(f"lists for {', '.join(multi)} need --sweep")
            if self.eps is not None and (self.sweep or len(self.eps) != 1):
                raise UsageError("--eps takes a single value for threshold and excludes --sweep")
        elif multi and self.command != "verify":
            raise UsageError(f"{self.command} takes a single ensemble; got lists for {', '.join(multi)}")
        if self.command in ("threshold", "saturate") and self.backend == "exact":
            raise UsageError("density evolution runs in double precision only; exact is for potential/verify")
        if self.command == "saturate" and self.m[0] > MAX_EXTRACT_M:
            raise UsageError(f"potential construction is limited to m <= {MAX_EXTRACT_M}")
        if self.command == "potential":
            if self.system is None and self.m[0] > MAX_EXTRACT_M:
                raise UsageError(f"potential construction is limited to m <= {MAX_EXTRACT_M}")
            if self.format == "csv":
                raise UsageError("potential output is JSON only")
        if self.command != "potential" and (self.system is not None or self.check_only):
            raise UsageError("--system and --check-only belong to the potential command")
        return self

    @property
    def de_backend(self) -> str:
        return BACKENDS[self.backend]


def _int_list(text: str) -> list:
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list:
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _str_list(text: str) -> list:
    return [t.strip() for t in str(text).split(",") if t.strip()]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    g = common.add_argument_group("ensemble")
    g.add_argument("--dv", type=_int_list, help="variable degree (comma list with --sweep; default 3)")
    g.add_argument("--dc", type=_int_list, help="check degree (default 6)")
    g.add_argument("--m", type=_int_list, help="field GF(2^m) exponent (default 1); for verify, the appendix-a m range")
    g.add_argument("--coupled", action="store_true", help="spatially coupled chain (threshold command)")
    g.add_argument("--L", type=_int_list, help="chain length (default 100)")
    g.add_argument("--w", type=_int_list, help="coupling window (default 3)")
    o = common.add_argument_group("run")
    o.add_argument("--eps", type=_float_list,
                   help="threshold: run DE at this erasure rate; saturate: energy-gap curve grid")
    o.add_argument("--tol", type=float,
                   help="bisection tolerance (default 1e-5 uncoupled and eps*, 1e-4 coupled)")
    o.add_argument("--max-iter", dest="max_iter", type=int, help=f"DE iteration cap (default {MAX_ITER})")
    o.add_argument("--sweep", action="store_true", help="cartesian product over list flags, CSV rows")
    o.add_argument("--jobs", type=int, help="worker processes for sweeps (default 1)")
    o.add_argument("--config", help="JSON file of defaults; flags take precedence")
    o.add_argument("--out", help="write output here instead of stdout")
    o.add_argument("--format", choices=["json", "csv"], help="output format")

    parser = _Parser(prog="saturate", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"saturate {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("threshold", parents=[common], argument_default=argparse.SUPPRESS,
                   help="BP threshold of an uncoupled or coupled ensemble")
    pot = sub.add_parser("potential", parents=[common], argument_default=argparse.SUPPRESS,
                         help="solve for D, F, G")
    pot.add_argument("--system", help="JSON system file (bilayer or explicit f, g polynomials)")
    pot.add_argument("--check-only", dest="check_only", action="store_true",
                     help="only report the necessary-condition verdict")
    pot.add_argument("--shape", choices=SHAPES, help="sparsity of D (default positive; bilayer files default diagonal)")
    sub.add_parser("saturate", parents=[common], argument_default=argparse.SUPPRESS,
                   help="eps_BP, eps*, coupled thresholds over (L, w), energy-gap curve and w bound")
    ver = sub.add_parser("verify", parents=[common], argument_default=argparse.SUPPRESS,
                         help="run property and golden-value suites")
    ver.add_argument("--suite", type=_str_list, help="comma list of suites (default all)")
    return parser


def make_config(argv=None, env=None) -> RunConfig:
    env = os.environ if env is None else env
    ns = vars(build_parser().parse_args(argv))
    values = {}
    path = ns.pop("config", None)
    if path is not None:
        try:
            with open(path) as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}")
        known = {f.name for f in fields(RunConfig)}
        unknown = set(values) - known
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        for key in ("dv", "dc", "m", "L", "w"):
            if key in values and not isinstance(values[key], list):
                values[key] = [values[key]]
        if "eps" in values and not isinstance(values["eps"], list):
            values["eps"] = [values["eps"]]
        if "suite" in values and isinstance(values["suite"], str):
            values["suite"] = _str_list(values["suite"])
    values.update(ns)
    if values.get("command") == "verify" and "m" in values:
        values["appendix_m"] = max(values["m"])
    if env.get(BACKEND_ENV):
        values["backend"] = env[BACKEND_ENV]
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise UsageError(str(exc))
    return cfg.validate()


# -- helpers -------------------------------------------------------------------------

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    return obj


def result_record(cfg: RunConfig, result, seconds: float, timing_extra=None) -> dict:
    config = asdict(cfg)
    config.pop("out")
    timing = {"seconds": seconds}
    if timing_extra:
        timing.update(timing_extra)
    return _plain({"schema": SCHEMA, "tool_version": __version__, "command": cfg.command,
                   "config": config, "result": result, "timing": timing})


def dumps_record(record: dict) -> str:
    return json.dumps(record, sort_keys=True, indent=2) + "\n"


def dumps_csv(columns: list, rows: list) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row.get(k) is None else row[k]) for k in columns})
    return buf.getvalue()


def read_csv(text: str) -> list:
    return list(csv.DictReader(io.StringIO(text)))


def _emit(cfg: RunConfig, text: str):
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _pmap(fn, items, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))


def _de_kwargs(cfg: RunConfig) -> dict:
    return {"max_iter": cfg.max_iter, "backend": cfg.de_backend}


# -- threshold -----------------------------------------------------------------------

def _threshold_task(args) -> dict:
    dv, dc, m, L, w, coupled, tol, de_kwargs = args
    p = EnsembleParams(dv, dc, m)
    lo, hi = bp_threshold_bracket(p, tol if tol and not coupled else 1e-5, **de_kwargs)
    if not coupled:
        return {"dv": dv, "dc": dc, "m": m, "L": None, "w": None, "eps_bp": 0.5 * (lo + hi),
                "bracket": [lo, hi]}
    # the uncoupled threshold is a valid lower end for the coupled bisection
    eps = coupled_bp_threshold(CoupledParams(p, L, w), bisect_tol=tol or 1e-4, lo=lo, **de_kwargs)
    return {"dv": dv, "dc": dc, "m": m, "L": L, "w": w, "eps_bp": eps, "eps_bp_uncoupled": 0.5 * (lo + hi)}


def cmd_threshold(cfg: RunConfig) -> tuple:
    de_kwargs = _de_kwargs(cfg)
    if cfg.eps is not None:
        p = EnsembleParams(cfg.dv[0], cfg.dc[0], cfg.m[0])
        eps = cfg.eps[0]
        if cfg.coupled:
            rep = coupled_de(CoupledParams(p, cfg.L[0], cfg.w[0]), eps, **de_kwargs)
        else:
            rep = de_fixed_point(p, eps, **de_kwargs)
        return {"eps": eps, "de": rep.to_dict()}, None
    Ls, ws = (cfg.L, cfg.w) if cfg.coupled else ([None], [None])
    tasks = [(dv, dc, m, L, w, cfg.coupled, cfg.tol, de_kwargs)
             for dv, dc, m, L, w in itertools.product(cfg.dv, cfg.dc, cfg.m, Ls, ws)]
    rows = _pmap(_threshold_task, tasks, cfg.jobs)
    if cfg.sweep:
        return {"rows": rows}, THRESHOLD_CSV
    return rows[0], THRESHOLD_CSV


# -- potential -----------------------------------------------------------------------

def cmd_potential(cfg: RunConfig) -> tuple:
    if cfg.system is not None:
        try:
            with open(cfg.system) as fh:
                f, g, shape = load_system(json.load(fh))
        except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
            raise UsageError(f"cannot load system {cfg.system}: {exc}")
        source = {"system": os.path.basename(cfg.system)}
    else:
        p = EnsembleParams(cfg.dv[0], cfg.dc[0], cfg.m[0])
        f, g = extract_de_polynomials(p)
        shape = "positive"
        source = {"dv": p.dv, "dc": p.dc, "m": p.m}
    shape = cfg.shape or shape
    cond = check_necessary_condition(f, g, shape)
    result = {"source": source, "shape": shape, "condition": cond.to_dict()}
    if cfg.check_only:
        return result, None
    try:
        sol = solve_potential(f, g, shape)
    except Infeasible as exc:
        witness = exc.witness
        result.update(feasible=False, reason=exc.reason,
                      witness=list(witness) if isinstance(witness, tuple) else witness)
        return result, None
    result.update(feasible=True, solution=sol.to_json())
    return result, None


# -- saturate ------------------------------------------------------------------------

def _coupled_task(args) -> dict:
    dv, dc, m, L, w, lo, tol, de_kwargs = args
    cp = CoupledParams(EnsembleParams(dv, dc, m), L, w)
    return {"L": L, "w": w, "eps_bp": coupled_bp_threshold(cp, bisect_tol=tol, lo=lo, **de_kwargs)}


def cmd_saturate(cfg: RunConfig) -> tuple:
    p = EnsembleParams(cfg.dv[0], cfg.dc[0], cfg.m[0])
    de_kwargs = _de_kwargs(cfg)
    tol = cfg.tol or 1e-5
    lo, hi = bp_threshold_bracket(p, 1e-5, **de_kwargs)
    sol = nonbinary_potential(p)
    eps_star = potential_threshold(sol, p, tol=tol, eps_bp=hi)
    tasks = [(p.dv, p.dc, p.m, L, w, lo, cfg.tol or 1e-4, de_kwargs) for L, w in itertools.product(cfg.L, cfg.w)]
    coupled = _pmap(_coupled_task, tasks, cfg.jobs)
    grid = cfg.eps if cfg.eps is not None else list(np.linspace(hi, eps_star, 12)[1:-1])
    curve = []
    for eps in grid:
        gap = energy_gap(sol, eps, p)
        wb = w_bound(sol, eps, p, delta_E=gap) if np.isfinite(gap) else None
        curve.append({"eps": float(eps), "delta_E": gap, "w_min": wb.w_min if wb else None})
    # w bound where the gap is largest: the first grid point with a finite positive gap
    best = next((r for r in curve if np.isfinite(r["delta_E"]) and r["delta_E"] > 0), None)
    wb = None
    if best is not None:
        wb = dict(w_bound(sol, best["eps"], p, delta_E=best["delta_E"]).to_dict(), eps=best["eps"])
    report = ThresholdReport(0.5 * (lo + hi), eps_star, curve, coupled, wb)
    return report.to_dict(), CURVE_CSV


# -- verify --------------------------------------------------------------------------

def cmd_verify(cfg: RunConfig) -> tuple:
    from .verify import SUITES, run_suites
    names = cfg.suite
    bad = [n for n in names if n != "all" and n not in SUITES]
    if bad:
        raise UsageError(f"unknown suite(s) {', '.join(bad)}; choose from all, {', '.join(SUITES)}")
    checks = run_suites(names, m_max=cfg.appendix_m)
    n_fail = sum(not c.passed for c in checks)
    width = max((len(c.suite) for c in checks), default=5)
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status}  {c.suite:<{width}}  {c.name}  [{c.detail}] ({c.seconds:.1f}s)")
    print(f"{len(checks) - n_fail} passed, {n_fail} failed")
    rows = [{k: v for k, v in c.to_dict().items() if k != "seconds"} for c in checks]
    result = {"checks": rows, "passed": len(checks) - n_fail, "failed": n_fail}
    timing = {"per_check": [c.seconds for c in checks]}
    return result, VERIFY_CSV, timing


COMMANDS = {"threshold": cmd_threshold, "potential": cmd_potential, "saturate": cmd_saturate, "verify": cmd_verify}


def run(cfg: RunConfig) -> tuple:
    """(record, text, exit_code) for a validated config."""
    t = time.perf_counter()
    out = COMMANDS[cfg.command](cfg)
    result, columns = out[0], out[1]
    timing_extra = out[2] if len(out) > 2 else None
    record = result_record(cfg, result, time.perf_counter() - t, timing_extra)
    fmt = cfg.format or ("csv" if cfg.sweep else "json")
    if fmt == "csv":
        if columns is None:
            raise UsageError(f"{cfg.command} output has no CSV form")
        if cfg.command == "threshold":
            rows = record["result"].get("rows", [record["result"]])
        elif cfg.command == "saturate":
            rows = record["result"]["energy_gap_curve"]
        else:
            rows = record["result"]["checks"]
        text = dumps_csv(columns, rows)
    else:
        text = dumps_record(record)
    code = 2 if cfg.command == "verify" and record["result"]["failed"] else 0
    return record, text, code


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = make_config(argv)
        _, text, code = run(cfg)
    except UsageError as exc:
        sys.stderr.write(f"saturate: error: {exc}\n")
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)
    if cfg.command != "verify" or cfg.out:
        # verify prints its table; the record is only written to a file
        _emit(cfg, text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
