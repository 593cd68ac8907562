"""Command-line entry point: run scenarios, sweep grids, test price series for bubbles."""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import itertools
import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import closed_form, pricing, saddle, stock_land
from .core import (
    CES,
    CobbDouglas,
    CRRAPeriodUtility,
    DomainError,
    GrowthEconomy,
    RegimeError,
    SolverError,
    TrendedPath,
)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_RESIDUAL = 0, 2, 3, 4
DEFAULT_HORIZON = 400
DEFAULT_RESIDUAL_TOL = 1e-10

COMMON_KEYS = {"model", "id", "horizon", "output"}
TOLERANCE_KEYS = {"margin", "tube_radius", "t0", "residual_tol"}
STRING_KEYS = {"kernel", "prices", "dividends"}

KERNEL_KEYS = {"kernel": "cobb_douglas", "eps": 1.0}

# model -> (required parameters, optional parameters with defaults)
MODELS = {
    "log_olg": ({"a", "D", "beta"}, {"Ga": 1.0, "Gd": 1.0}),
    "wilson": ({"beta", "G", "Gd", "a", "D"}, {"b": 0.0}),
    "bewley_money": ({"a", "b", "beta", "gamma"}, {}),
    "bewley_growth": ({"beta", "gamma", "G", "a", "b", "D"}, {}),
    "saddle_fundamental": ({"beta", "a", "b", "G", "D", "Gd"}, dict(KERNEL_KEYS)),
    "saddle_bubbly": ({"beta", "a", "b", "G", "D", "Gd"}, dict(KERNEL_KEYS)),
    "regime_map": ({"beta", "G", "Gd", "w_min", "w_max", "w_step"},
                   {**KERNEL_KEYS, "a": 1.0, "D": 0.0029}),
    "two_sector": ({"GK", "GL", "GX"},
                   {"alpha": 0.3, "sigma": 0.5, "K0": 10.0, "L0": 1.0, "D0": 0.01,
                    "N": 1.0, "X": 1.0, "beta": 0.5, "theta": 0.5}),
    "firm_shares": ({"R", "C", "share_growth", "p0"}, {}),
    "detect": ({"prices", "dividends"}, {}),
}


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class ScenarioConfig:
    model: str
    id: str
    horizon: int
    output: Path
    params: dict
    tolerances: dict = field(default_factory=dict)
    base: Path = Path(".")


@dataclass
class Outcome:
    """What a model runner hands back before anything is written."""

    series: dict = field(default_factory=dict)      # file stem -> values
    tables: dict = field(default_factory=dict)      # file stem -> (columns, rows)
    verdicts: dict = field(default_factory=dict)
    scalars: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)   # name -> (max value, tolerance)


# ---------------------------------------------------------------- config parsing

def _parse_value(key: str, raw: str):
    if key in STRING_KEYS:
        return raw.strip()
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"key {key!r}: expected a number, got {raw!r}", key) from None


def config_from_mapping(entries: dict, base: Path = Path(".")) -> ScenarioConfig:
    """Validate a flat key/value mapping into a ScenarioConfig."""
    if "model" not in entries:
        raise ConfigError("missing required key 'model'", "model")
    model = entries["model"].strip()
    if model not in MODELS:
        raise ConfigError(f"unknown model {model!r}", "model")
    required, optional = MODELS[model]
    allowed = COMMON_KEYS | TOLERANCE_KEYS | required | set(optional)
    for key in entries:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} for model {model!r}", key)
    for key in sorted(required):
        if key not in entries:
            raise ConfigError(f"missing required key {key!r}", key)
    try:
        horizon = int(entries.get("horizon", DEFAULT_HORIZON))
    except ValueError:
        raise ConfigError("key 'horizon': expected an integer", "horizon") from None
    if horizon < 2:
        raise ConfigError("key 'horizon' must be at least 2", "horizon")
    params = dict(optional)
    for key in required | set(optional):
        if key in entries:
            params[key] = _parse_value(key, entries[key])
    tolerances = {k: _parse_value(k, entries[k]) for k in TOLERANCE_KEYS if k in entries}
    return ScenarioConfig(model, entries.get("id", model).strip(), horizon,
                          Path(entries.get("output", f"out/{model}").strip()),
                          params, tolerances, base)


def _read_ini(path: Path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case-sensitive (G vs g)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    if not parser.has_section("scenario"):
        raise ConfigError("missing [scenario] section", "scenario")
    extra = set(parser.sections()) - {"scenario", "grid"}
    if extra:
        raise ConfigError(f"unknown section {sorted(extra)[0]!r}", sorted(extra)[0])
    return parser


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    parser = _read_ini(path)
    return config_from_mapping(dict(parser["scenario"]), path.parent)


# ---------------------------------------------------------------- model runners

def _kernel(p: dict):
    name = p["kernel"]
    if name == "cobb_douglas":
        return CobbDouglas(p["beta"])
    if name == "ces":
        return CES(p["beta"], p["eps"])
    raise ConfigError(f"key 'kernel': unknown kernel {name!r}", "kernel")


def _margin(cfg: ScenarioConfig) -> float:
    return cfg.tolerances.get("margin", pricing.DEFAULT_MARGIN)


def _tol(cfg: ScenarioConfig, default: float = DEFAULT_RESIDUAL_TOL) -> float:
    return cfg.tolerances.get("residual_tol", default)


def _values(path: TrendedPath) -> np.ndarray:
    try:
        return path.values()
    except FloatingPointError:
        raise SolverError("series overflows in levels; shorten the horizon") from None


def _price_outcome(out: Outcome, cfg: ScenarioConfig, prices, dividends, name="asset"):
    P = prices if isinstance(prices, np.ndarray) else _values(prices)
    D = dividends if isinstance(dividends, np.ndarray) else _values(dividends)
    out.series["prices"] = P
    out.series["dividends"] = D
    # the recorded verdict is the one a later `detect` run on these files reproduces
    verdict = pricing.detect_bubble(P, D, _margin(cfg))
    out.verdicts[name] = verdict.as_dict()


def run_log_olg(cfg: ScenarioConfig) -> Outcome:
    p, T = cfg.params, cfg.horizon
    a = TrendedPath(p["Ga"], np.full(T + 1, p["a"]))
    D = TrendedPath(p["Gd"], np.full(T + 1, p["D"]))
    sol = closed_form.solve_log_olg(a, D, p["beta"], _margin(cfg))
    out = Outcome()
    _price_outcome(out, cfg, sol.prices, sol.dividends)
    out.scalars["rule_bubbly"] = closed_form.log_olg_rule(p["Ga"], p["Gd"])
    out.residuals["euler"] = (float(np.max(sol.euler_residuals())), _tol(cfg))
    return out


def run_wilson(cfg: ScenarioConfig) -> Outcome:
    p = cfg.params
    sol = closed_form.solve_wilson(p["a"], p["b"], p["G"], p["D"], p["Gd"], p["beta"],
                                   cfg.horizon, _margin(cfg))
    out = Outcome()
    _price_outcome(out, cfg, sol.prices, sol.dividends)
    out.series["rates"] = sol.rates
    out.residuals["no_arbitrage"] = (float(np.max(sol.no_arbitrage_residuals())), _tol(cfg))
    return out


def run_bewley_money(cfg: ScenarioConfig) -> Outcome:
    p = cfg.params
    sol = closed_form.solve_bewley_money(p["a"], p["b"], p["beta"],
                                         CRRAPeriodUtility(p["gamma"]))
    out = Outcome()
    out.series["prices"] = np.full(cfg.horizon + 1, sol.P)
    out.series["dividends"] = np.zeros(cfg.horizon + 1)
    out.verdicts["asset"] = pricing.detect_bubble(
        out.series["prices"], out.series["dividends"], _margin(cfg)).as_dict()
    out.scalars.update(P=sol.P, poor_slack=sol.euler_poor_slack)
    out.residuals["euler_rich"] = (sol.euler_rich_residual, _tol(cfg, 1e-12))
    out.residuals["poor_slack_negative"] = (max(0.0, -sol.euler_poor_slack), 0.0)
    return out


def run_bewley_growth(cfg: ScenarioConfig) -> Outcome:
    p = cfg.params
    spec = closed_form.BewleySpec(p["beta"], p["gamma"], p["G"], p["a"], p["b"], p["D"])
    sol = closed_form.solve_bewley_growth(spec, cfg.horizon, _margin(cfg))
    out = Outcome()
    _price_outcome(out, cfg, sol.prices, sol.dividends)
    out.scalars.update(p=sol.p, contraction=sol.contraction, poor_slack=sol.euler_poor_slack)
    out.residuals["euler_rich"] = (sol.euler_rich_residual, _tol(cfg, 1e-12))
    out.residuals["poor_slack_negative"] = (max(0.0, -sol.euler_poor_slack), 0.0)
    return out


def _run_saddle(cfg: ScenarioConfig, variant: saddle.Variant) -> Outcome:
    p = cfg.params
    econ = GrowthEconomy(p["a"], p["b"], p["G"], p["D"], p["Gd"])
    system = saddle.DetrendedSystem(variant, econ, _kernel(p))
    t0 = cfg.tolerances.get("t0")
    path = saddle.stable_path(system, None if t0 is None else int(t0), cfg.horizon,
                              tube_radius=cfg.tolerances.get("tube_radius"),
                              margin=_margin(cfg))
    out = Outcome()
    _price_outcome(out, cfg, path.prices, path.dividends)
    out.series["xi1"] = np.asarray(path.xi1)
    r = path.report
    out.scalars.update(xi1_star=r.xi1_star, lambda1=r.lambda1, lambda2=r.lambda2,
                       slope=r.slope, anchor=path.anchor, bisections=path.bisections,
                       xi1_final=float(path.xi1[-1]), **path.flags)
    out.residuals["euler"] = (path.max_euler_residual, _tol(cfg))
    return out


def run_saddle_fundamental(cfg):
    return _run_saddle(cfg, saddle.Variant.FUNDAMENTAL)


def run_saddle_bubbly(cfg):
    return _run_saddle(cfg, saddle.Variant.BUBBLY)


def run_regime_map(cfg: ScenarioConfig) -> Outcome:
    p = cfg.params
    if not p["w_step"] > 0 or p["w_max"] < p["w_min"]:
        raise ConfigError("need w_step > 0 and w_max >= w_min", "w_step")
    n = int(math.floor((p["w_max"] - p["w_min"]) / p["w_step"] + 1e-9))
    kernel = _kernel(p)
    rows = []
    for i in range(n + 1):
        w = round(p["w_min"] + i * p["w_step"], 12)
        row = saddle.regime_row(w, p["G"], p["Gd"], kernel, p["a"], p["D"])
        rows.append([row[c] for c in saddle.REGIME_COLUMNS])
    out = Outcome()
    out.tables["regime_map"] = (saddle.REGIME_COLUMNS, rows)
    out.scalars.update(w_f_star=rows[0][3], w_b_star=rows[0][4])
    return out


def run_two_sector(cfg: ScenarioConfig) -> Outcome:
    p = dict(cfg.params)
    theta = p.pop("theta")
    econ = stock_land.TwoSectorEconomy(**p)
    sim = stock_land.simulate_aggregate(econ, cfg.horizon, _margin(cfg))
    out = Outcome()
    S, E = _values(sim.S), _values(sim.E)
    out.series["S"] = S
    out.series["E"] = E
    out.verdicts["aggregate"] = pricing.detect_bubble(S, E, _margin(cfg)).as_dict()
    out.scalars.update(analytic=stock_land.analytic_rule(econ), boundary=econ.boundary)
    dec = None
    if sim.verdict.classification is not pricing.Verdict.INCONCLUSIVE:
        dec = stock_land.decompose_bubble(sim, theta)
    T = cfg.horizon
    trend = np.exp(np.arange(T + 1) * math.log(econ.GL))
    rows = []
    for t in range(T + 1):
        row = [t, S[t], E[t], sim.R[t] if t < T else math.nan, sim.q.q[t]]
        if dec is None:
            row += [math.nan] * 5
        else:
            row += [dec.VS[t] * trend[t], dec.VL[t] * trend[t], dec.B[t] * trend[t],
                    dec.Q[t] * trend[t], dec.P[t] * trend[t]]
        rows.append(row)
    out.tables["two_sector"] = (stock_land.TWO_SECTOR_COLUMNS, rows)
    if dec is not None:
        out.scalars.update(bubble_limit=dec.bubble_limit, tail_mismatch=dec.tail_mismatch)
        B = dec.B
        pos = B[:-1] > 0
        growth = np.abs(B[1:][pos] / (sim.R[pos] / econ.GL * B[:-1][pos]) - 1)
        out.residuals["bubble_growth"] = (float(growth.max()) if growth.size else 0.0,
                                          _tol(cfg))
        total = dec.Q * econ.N + dec.P * econ.X
        out.residuals["adding_up"] = (float(np.max(np.abs(total / sim.S.levels - 1))),
                                      _tol(cfg))
    return out


def run_firm_shares(cfg: ScenarioConfig) -> Outcome:
    p, T = cfg.params, cfg.horizon
    t = np.arange(T + 1)
    shares = p["share_growth"] ** t.astype(float)
    cash = np.full(T + 1, p["C"])
    rates = np.full(T, p["R"])
    series = pricing.firm_accounting(shares, cash, rates, p["p0"])
    verdicts = pricing.classify_firm_bubbles(series, pricing.ladder_from_rates(rates),
                                             _margin(cfg))
    out = Outcome()
    out.series.update(prices=series.prices, dividends=series.dividends,
                      firm_value=series.firm_value, cashflows=np.where(t == 0, 0.0, cash),
                      shares=series.shares)
    out.verdicts["stock"] = verdicts.stock.as_dict()
    out.verdicts["value"] = verdicts.value.as_dict()
    out.scalars.update(stock_class=verdicts.stock_class.value,
                       value_class=verdicts.value_class.value,
                       share_regime=verdicts.share_regime, consistent=verdicts.consistent,
                       violations=len(series.violations))
    out.residuals["cashflow_identity"] = (series.cashflow_residual, _tol(cfg))
    out.residuals["negative_dividends"] = (float(len(series.violations)), 0.0)
    return out


def run_detect(cfg: ScenarioConfig) -> Outcome:
    p = cfg.params
    P = read_series(cfg.base / p["prices"])
    D = read_series(cfg.base / p["dividends"])
    out = Outcome()
    out.verdicts["asset"] = pricing.detect_bubble(P, D, _margin(cfg)).as_dict()
    return out


RUNNERS = {
    "log_olg": run_log_olg,
    "wilson": run_wilson,
    "bewley_money": run_bewley_money,
    "bewley_growth": run_bewley_growth,
    "saddle_fundamental": run_saddle_fundamental,
    "saddle_bubbly": run_saddle_bubbly,
    "regime_map": run_regime_map,
    "two_sector": run_two_sector,
    "firm_shares": run_firm_shares,
    "detect": run_detect,
}


# ---------------------------------------------------------------- output

def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return format(x, ".17g")


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def series_csv(values) -> str:
    return _csv_text(("t", "value"), ([t, v] for t, v in enumerate(values)))


def read_series(path) -> np.ndarray:
    """Values column of a `t,value` CSV."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read series: {exc}") from None
    if not rows or [c.strip() for c in rows[0]] != ["t", "value"]:
        raise ConfigError(f"{path}: expected header 't,value'")
    try:
        return np.array([float(r[1]) for r in rows[1:]], dtype=float)
    except (IndexError, ValueError):
        raise ConfigError(f"{path}: malformed row") from None


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


@dataclass
class RunReport:
    id: str
    model: str
    status: str
    verdicts: dict
    scalars: dict
    residuals: dict
    paths: list
    wall_clock: float
    error: dict | None = None

    @property
    def exit_code(self) -> int:
        if self.error is not None:
            return EXIT_CONFIG if self.error["category"] == "config" else EXIT_SOLVER
        return EXIT_OK if self.status == "OK" else EXIT_RESIDUAL

    def as_dict(self) -> dict:
        d = {"id": self.id, "model": self.model, "status": self.status,
             "verdicts": self.verdicts, "scalars": self.scalars,
             "residuals": self.residuals, "paths": self.paths,
             "wall_clock": self.wall_clock}
        if self.error is not None:
            d["error"] = self.error
        return _jsonable(d)


def _error(exc: Exception) -> dict:
    if isinstance(exc, ConfigError):
        return {"category": "config", "key": exc.key, "message": str(exc)}
    if isinstance(exc, DomainError):
        return {"category": "config", "key": None, "message": str(exc)}
    if isinstance(exc, RegimeError):
        return {"category": "regime", "message": str(exc)}
    return {"category": "solver", "message": str(exc)}


def run_scenario(cfg: ScenarioConfig, write: bool = True) -> RunReport:
    """Solve one scenario, write its CSVs and report.json under cfg.output."""
    start = time.perf_counter()
    outdir = cfg.output if cfg.output.is_absolute() else cfg.base / cfg.output
    try:
        out = RUNNERS[cfg.model](cfg)
    except (ConfigError, DomainError, RegimeError, SolverError) as exc:
        report = RunReport(cfg.id, cfg.model, "ERROR", {}, {}, {}, [],
                           time.perf_counter() - start, _error(exc))
        if write:
            write_atomic(outdir / "report.json", _report_json(report))
        return report
    residuals = {name: {"max": value, "tol": tol, "ok": bool(value <= tol)}
                 for name, (value, tol) in out.residuals.items()}
    status = "OK" if all(r["ok"] for r in residuals.values()) else "FAILED"
    paths = []
    if write:
        for stem, values in sorted(out.series.items()):
            write_atomic(outdir / f"{stem}.csv", series_csv(values))
            paths.append(f"{stem}.csv")
        for stem, (columns, rows) in sorted(out.tables.items()):
            write_atomic(outdir / f"{stem}.csv", _csv_text(columns, rows))
            paths.append(f"{stem}.csv")
    report = RunReport(cfg.id, cfg.model, status, out.verdicts, out.scalars, residuals,
                       sorted(paths), time.perf_counter() - start)
    if write:
        write_atomic(outdir / "report.json", _report_json(report))
    return report


def _report_json(report: RunReport) -> str:
    return json.dumps(report.as_dict(), sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------- sweeps

def _threads() -> int:
    raw = os.environ.get("BUBBLELAB_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError("BUBBLELAB_THREADS must be an integer") from None
    return os.cpu_count() or 1


def sweep_cells(path) -> tuple[ScenarioConfig, dict, list[str], list[tuple]]:
    path = Path(path)
    parser = _read_ini(path)
    base_entries = dict(parser["scenario"])
    if not parser.has_section("grid") or not parser["grid"]:
        raise ConfigError("missing or empty [grid] section", "grid")
    base = config_from_mapping(base_entries, path.parent)
    axes, values = [], []
    for key, raw in parser["grid"].items():
        if key in COMMON_KEYS:
            raise ConfigError(f"key {key!r} cannot be a grid axis", key)
        items = [v.strip() for v in raw.split(",") if v.strip()]
        if not items:
            raise ConfigError(f"grid axis {key!r} is empty", key)
        parsed = [_parse_value(key, v) for v in items]
        if any(isinstance(v, float) and not math.isfinite(v) for v in parsed):
            raise ConfigError(f"grid axis {key!r} has non-finite values", key)
        axes.append(key)
        values.append(items)
    # validate the axis names against the model once
    config_from_mapping({**base_entries, **{k: v[0] for k, v in zip(axes, values)}},
                        path.parent)
    return base, base_entries, axes, list(itertools.product(*values))


def sweep(path) -> tuple[list[RunReport], Path]:
    """One run_scenario per grid cell, concurrently; aggregate CSV written last."""
    path = Path(path)
    base, base_entries, axes, cells = sweep_cells(path)
    root = base.output if base.output.is_absolute() else base.base / base.output

    def run_cell(i, cell):
        entries = dict(base_entries)
        entries.update(zip(axes, cell))
        entries["id"] = f"{base.id}-{i:04d}"
        entries["output"] = str(root / f"cell_{i:04d}")
        return run_scenario(config_from_mapping(entries, path.parent))

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        reports = list(pool.map(run_cell, range(len(cells)), cells))

    if base.model == "two_sector":
        columns = list(stock_land.SWEEP_COLUMNS) + ["boundary", "status"]
    else:
        columns = ["cell"] + axes + ["verdict", "status"]
    rows = []
    for i, (cell, rep) in enumerate(zip(cells, reports)):
        params = dict(zip(axes, cell))
        if base.model == "two_sector":
            p = {**MODELS["two_sector"][1], **base.params,
                 **{k: float(v) for k, v in params.items()}}
            numeric = rep.verdicts.get("aggregate", {}).get("class", "")
            rows.append([p["GK"], p["GL"], p["GX"], p["sigma"],
                         rep.scalars.get("analytic", ""), numeric,
                         rep.scalars.get("boundary", ""), rep.status])
        else:
            first = next(iter(rep.verdicts.values()), {})
            rows.append([i] + list(cell) + [first.get("class", ""), rep.status])
    target = root / "sweep.csv"
    write_atomic(target, _csv_text(columns, rows))
    return reports, target


# ---------------------------------------------------------------- entry point

def _fail(exc: Exception) -> int:
    err = _error(exc)
    print(json.dumps(_jsonable(err), sort_keys=True), file=sys.stderr)
    return EXIT_CONFIG if err["category"] == "config" else EXIT_SOLVER


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bubblelab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="solve one scenario")
    run.add_argument("config")
    sw = sub.add_parser("sweep", help="solve every cell of a parameter grid")
    sw.add_argument("config")
    det = sub.add_parser("detect", help="dividend-yield bubble test on two t,value CSVs")
    det.add_argument("--prices", required=True)
    det.add_argument("--dividends", required=True)
    det.add_argument("--margin", type=float, default=pricing.DEFAULT_MARGIN)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            report = run_scenario(load_config(args.config))
            print(_report_json(report), end="")
            return report.exit_code
        if args.command == "sweep":
            reports, target = sweep(args.config)
            failed = [r.id for r in reports if r.status != "OK"]
            print(json.dumps({"sweep": str(target), "cells": len(reports),
                              "not_ok": failed}, sort_keys=True))
            return EXIT_OK
        P = read_series(args.prices)
        D = read_series(args.dividends)
        verdict = pricing.detect_bubble(P, D, args.margin)
        print(json.dumps(_jsonable(verdict.as_dict()), sort_keys=True))
        return EXIT_OK
    except (ConfigError, DomainError, RegimeError, SolverError) as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
