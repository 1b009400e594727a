"""Command-line interface: ``rcrdesign {minimax,criterion,efficiency-curve,figures,simulate}``.

Every command accepts ``--config FILE`` (a JSON object, see ``CONFIG_KEYS``);
flags given on the command line override the file.  Tables go to stdout as
CSV and, with ``--out``, to a file written atomically.

Exit codes: 0 ok, 2 configuration error, 3 numerical/singular problem,
4 I/O error, 5 statistical check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .covariance import TaggedCovariance
from .criteria import SingularCriterion, imse_limit
from .model import BasisSpec, DesignError, PopulationSetup, WeightMeasure, validate_design
from .simulation import MIN_REPLICATES, SimulationPlan, check_mse, design_matrix
from .solvers import (
    CASES,
    SolverError,
    closed_form_minimax_weight,
    efficiency_curve,
    get_case,
    minimize_weight_1d,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO, EXIT_STAT = 0, 2, 3, 4, 5

CONFIG_KEYS = {
    "model", "degree", "region", "measure", "n", "m", "d", "case", "cases", "design",
    "rho_grid", "n_range", "out", "seed", "replicates", "threads", "sigma2", "beta",
}

# (figure, kind, case)
FIGURES = [
    ("figure1", "weight", "SL"),
    ("figure2", "efficiency", "SL"),
    ("figure3", "weight", "Q1"),
    ("figure4", "weight", "Q2"),
    ("figure5", "weight", "Q4"),
    ("figure6", "weight", "Q5"),
    ("figure7", "efficiency", "Q1"),
    ("figure8", "efficiency", "Q2"),
]
EFFICIENCY_NS = (10, 50, 500)


class ConfigError(ValueError):
    pass


class StatisticalFailure(RuntimeError):
    pass


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- parsing


def parse_range(text, name: str, parts: int):
    try:
        vals = [float(t) for t in str(text).split(":")]
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {text!r}") from None
    if len(vals) != parts:
        raise ConfigError(f"{name}: expected {parts} ':'-separated numbers, got {text!r}")
    return vals


def parse_rho_grid(text) -> np.ndarray:
    lo, hi, step = parse_range(text, "rho_grid", 3)
    if not (0 < lo <= hi < 1) or step <= 0:
        raise ConfigError(f"rho_grid must satisfy 0 < lo <= hi < 1 and step > 0, got {text!r}")
    count = int(round((hi - lo) / step)) + 1
    return np.linspace(lo, hi, count) if count > 1 else np.array([lo])


def parse_n_range(text) -> range:
    lo, hi = parse_range(text, "n_range", 2)
    if lo != int(lo) or hi != int(hi) or not (2 <= lo <= hi <= 10**6):
        raise ConfigError(f"n_range must be integers with 2 <= lo <= hi <= 1e6, got {text!r}")
    return range(int(lo), int(hi) + 1)


def parse_design(spec):
    if isinstance(spec, dict):
        if set(spec) != {"support", "weights"}:
            raise ConfigError("design object needs exactly 'support' and 'weights'")
        return validate_design(spec["support"], spec["weights"])
    pts, wts = [], []
    for item in str(spec).split(","):
        try:
            x, w = item.split(":")
            pts.append(float(x))
            wts.append(float(w))
        except ValueError:
            raise ConfigError(f"design entries must look like x:w, got {item!r}") from None
    return validate_design(pts, wts)


def parse_cov(spec) -> TaggedCovariance:
    if isinstance(spec, list):
        spec = ",".join(str(v) for v in spec)
    return TaggedCovariance.parse(str(spec))


def parse_ints(spec, name: str) -> list[int]:
    if isinstance(spec, (int, float)):
        spec = [spec]
    if isinstance(spec, str):
        spec = spec.split(",")
    try:
        vals = [float(v) for v in spec]
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected integer(s), got {spec!r}") from None
    if any(v != int(v) for v in vals):
        raise ConfigError(f"{name}: expected integer(s), got {spec!r}")
    return [int(v) for v in vals]


def one_int(cfg, key: str, default=None) -> int:
    v = cfg.get(key, default)
    if v is None:
        raise ConfigError(f"missing required setting {key!r}")
    vals = parse_ints(v, key)
    if len(vals) != 1:
        raise ConfigError(f"{key} must be a single integer")
    return vals[0]


def build_basis(cfg) -> BasisSpec:
    model = cfg.get("model", "linear")
    region = cfg.get("region")
    if isinstance(region, str):
        region = parse_range(region, "region", 2)
    if model == "linear":
        return BasisSpec(2, tuple(region) if region else (0.0, 1.0))
    if model == "quadratic":
        return BasisSpec(3, tuple(region) if region else (-1.0, 1.0))
    if model == "polynomial":
        if cfg.get("degree") is None or region is None:
            raise ConfigError("model 'polynomial' needs 'degree' and 'region'")
        return BasisSpec(one_int(cfg, "degree") + 1, tuple(region))
    raise ConfigError(f"unknown model {model!r}; expected linear, quadratic or polynomial")


def build_measure(cfg, basis: BasisSpec) -> WeightMeasure:
    spec = cfg.get("measure", "uniform")
    if spec == "uniform":
        return WeightMeasure.on_region(basis)
    if isinstance(spec, dict) and set(spec) == {"points", "masses"}:
        return WeightMeasure.discrete(spec["points"], spec["masses"])
    raise ConfigError("measure must be 'uniform' or {'points': [...], 'masses': [...]}")


def load_config(args) -> dict:
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(cfg) - CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    if args.verbose:
        print(json.dumps(cfg, sort_keys=True, default=str), file=sys.stderr)
    return cfg


def emit(cfg, text: str) -> None:
    sys.stdout.write(text)
    if cfg.get("out"):
        write_atomic(Path(cfg["out"]), text)


def _map(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------- commands


def cmd_minimax(cfg) -> int:
    if cfg.get("case") is None:
        raise ConfigError("missing required setting 'case'")
    try:
        case = get_case(cfg["case"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.get("model") not in (None, case.model):
        raise ConfigError(f"case {case.id} belongs to the {case.model} model, not {cfg['model']!r}")
    n = one_int(cfg, "n")
    if n < 2:
        raise ConfigError(f"minimax designs need n >= 2 individuals, got n={n}")
    m = one_int(cfg, "m", 1)
    setup = PopulationSetup(n, m)
    w_closed = closed_form_minimax_weight(case, n)
    w_num = minimize_weight_1d(case.criterion(n, m), case.bounds)
    rep = imse_limit(case.design(w_closed), case.basis, None, case.covariance, setup)
    header = ["case", "model", "tags", "n", "m", "w_closed", "w_numeric", "abs_diff",
              "criterion", "population_term", "prediction_term"]
    row = [case.id, case.model, str(case.covariance).replace(",", " "), n, m, w_closed, w_num,
           abs(w_closed - w_num), rep.value, rep.population_term, rep.prediction_term]
    emit(cfg, to_csv(header, [row]))
    return EXIT_OK


def cmd_criterion(cfg) -> int:
    basis = build_basis(cfg)
    measure = build_measure(cfg, basis)
    if cfg.get("design") is None or cfg.get("d") is None:
        raise ConfigError("criterion needs 'design' and 'd'")
    design = parse_design(cfg["design"])
    cov = parse_cov(cfg["d"])
    if cov.p != basis.p:
        raise ConfigError(f"d has {cov.p} entries but the model has {basis.p} coefficients")
    basis.check_points(design.support)
    setup = PopulationSetup(one_int(cfg, "n"), one_int(cfg, "m", 1))
    rep = imse_limit(design, basis, measure, cov, setup)
    header = ["value", "population_term", "prediction_term", "scaling"]
    emit(cfg, to_csv(header, [[rep.value, rep.population_term, rep.prediction_term, rep.scaling]]))
    return EXIT_OK


def _efficiency_rows(case, ns, rho, m, threads):
    cols = _map(lambda n: efficiency_curve(case, n, rho, m), ns, threads)
    return [[r, *(c[i] for c in cols)] for i, r in enumerate(rho)]


def cmd_efficiency_curve(cfg) -> int:
    if cfg.get("case") is None:
        raise ConfigError("missing required setting 'case'")
    try:
        case = get_case(cfg["case"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    ns = parse_ints(cfg.get("n", list(EFFICIENCY_NS)), "n")
    if min(ns) < 2:
        raise ConfigError("efficiency curves need n >= 2")
    rho = parse_rho_grid(cfg.get("rho_grid", "0.01:0.99:0.01"))
    m = one_int(cfg, "m", 1)
    rows = _efficiency_rows(case, ns, rho, m, one_int(cfg, "threads", 1))
    emit(cfg, to_csv(["rho", *(f"eff_n{n}" for n in ns)], rows))
    return EXIT_OK


def cmd_figures(cfg) -> int:
    ns = parse_n_range(cfg.get("n_range", "2:500"))
    rho = parse_rho_grid(cfg.get("rho_grid", "0.01:0.99:0.01"))
    m = one_int(cfg, "m", 1)
    threads = one_int(cfg, "threads", 1)
    cases = cfg.get("cases")
    if cases is None:
        wanted = set(CASES)
    else:
        if isinstance(cases, str):
            cases = cases.split(",")
        try:
            wanted = {get_case(c).id for c in cases}
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if "Q3" in wanted:
            wanted.add("Q2")
    outdir = Path(cfg.get("out") or ".")
    if not outdir.is_dir():
        raise OSError(f"output directory {outdir} does not exist")

    def build(spec):
        name, kind, cid = spec
        if kind == "weight":
            return name, to_csv(["n", "w_star"], [[n, closed_form_minimax_weight(cid, n)] for n in ns])
        return name, to_csv(["rho", *(f"eff_n{n}" for n in EFFICIENCY_NS)],
                            _efficiency_rows(cid, EFFICIENCY_NS, rho, m, 1))

    specs = [f for f in FIGURES if f[2] in wanted]
    for name, text in _map(build, specs, threads):
        write_atomic(outdir / f"{name}.csv", text)
        print(f"wrote {outdir / (name + '.csv')}")
    return EXIT_OK


def cmd_simulate(cfg) -> int:
    basis = build_basis(cfg)
    design = parse_design(cfg.get("design", "0:0.5,1:0.5"))
    basis.check_points(design.support)
    m = one_int(cfg, "m", 2)
    n = one_int(cfg, "n", 1)
    R = one_int(cfg, "replicates", 100_000)
    if R < MIN_REPLICATES:
        raise ConfigError(f"simulate needs at least {MIN_REPLICATES} replicates, got {R}")
    cov = parse_cov(cfg.get("d", ",".join(["1"] * basis.p)))
    if not cov.all_finite or cov.p != basis.p:
        raise ConfigError(f"simulate needs {basis.p} finite positive variances in 'd'")
    beta = cfg.get("beta", [0.0] * basis.p)
    seed = one_int(cfg, "seed", 0)
    sigma2 = float(cfg.get("sigma2", 1.0))
    try:
        plan = SimulationPlan(design_matrix(design, basis, m), cov.values, beta, sigma2, n, R, seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    res = check_mse(plan, workers=one_int(cfg, "threads", 1))
    header = ["n", "m", "replicates", "seed", "max_abs_deviation", "stderr_at_max", "max_z", "z_limit", "result"]
    row = [n, m, R, seed, res.max_abs_deviation, res.stderr_at_max, res.max_z, res.z_limit,
           "pass" if res.passed else "fail"]
    emit(cfg, to_csv(header, [row]))
    if not res.passed:
        raise StatisticalFailure(f"max deviation is {res.max_z:.3g} standard errors (limit {res.z_limit:g})")
    return EXIT_OK


COMMANDS = {
    "minimax": cmd_minimax,
    "criterion": cmd_criterion,
    "efficiency-curve": cmd_efficiency_curve,
    "figures": cmd_figures,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--verbose", action="store_true", help="echo the effective config to stderr")
    common.add_argument("--model", choices=["linear", "quadratic", "polynomial"])
    common.add_argument("--degree", type=int, help="degree for --model polynomial")
    common.add_argument("--region", help="region a:b")
    common.add_argument("--n", help="number of individuals (comma list for efficiency-curve)")
    common.add_argument("--m", type=int, help="observations per individual")
    common.add_argument("--d", help="variances, comma list of zero|inf|number")
    common.add_argument("--out", help="output file (output directory for figures)")
    common.add_argument("--threads", type=int, help="worker threads")

    p = argparse.ArgumentParser(prog="rcrdesign", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("minimax", parents=[common], help="closed-form and numerical minimax weight")
    s.add_argument("--case", help="SL, Q1, Q2, Q3, Q4 or Q5")

    s = sub.add_parser("criterion", parents=[common], help="evaluate the IMSE criterion for a design")
    s.add_argument("--design", help='inline design "x1:w1,x2:w2,..."')

    s = sub.add_parser("efficiency-curve", parents=[common], help="efficiency of a minimax design over rho")
    s.add_argument("--case")
    s.add_argument("--rho-grid", dest="rho_grid", help="lo:hi:step inside (0, 1)")

    s = sub.add_parser("figures", parents=[common], help="write figure1.csv .. figure8.csv")
    s.add_argument("--cases", help="comma list restricting which figures are written")
    s.add_argument("--n-range", dest="n_range", help="lo:hi for the weight figures")
    s.add_argument("--rho-grid", dest="rho_grid", help="lo:hi:step inside (0, 1)")

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo check of the BLUP MSE matrix")
    s.add_argument("--design", help='exact design source "x1:w1,..." (default "0:0.5,1:0.5")')
    s.add_argument("--seed", type=int)
    s.add_argument("--replicates", type=int)
    s.add_argument("--sigma2", type=float)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, DesignError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularCriterion, SolverError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except StatisticalFailure as exc:
        print(f"statistical check failed: {exc}", file=sys.stderr)
        return EXIT_STAT


if __name__ == "__main__":
    sys.exit(main())
