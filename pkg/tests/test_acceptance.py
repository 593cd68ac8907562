"""Acceptance criteria 1-9, one test each.

Every test prints a single ``PASS``/``FAIL`` line before asserting, so
``pytest -s tests/test_acceptance.py`` (or ``python tests/test_acceptance.py``)
gives a one-screen summary.
"""

import csv
import itertools
import json
import math
import tempfile
from pathlib import Path

import numpy as np
import pytest

from bubblelab.cli import main
from bubblelab.closed_form import (
    BewleySpec,
    log_olg_rule,
    solve_bewley_growth,
    solve_bewley_money,
    solve_log_olg,
    solve_wilson,
)
from bubblelab.core import CobbDouglas, CRRAPeriodUtility, GrowthEconomy, TrendedPath, Verdict
from bubblelab.pricing import (
    classify_firm_bubbles,
    firm_accounting,
    ladder_from_prices,
    ladder_from_rates,
    sandwich,
)
from bubblelab.saddle import (
    DetrendedSystem,
    Regime,
    Variant,
    linearize,
    numerical_jacobian,
    regime_row,
    stable_path,
    steady_state,
    threshold_w,
)
from bubblelab.stock_land import TwoSectorEconomy, classify_two_sector, decompose_bubble, simulate_aggregate

CD = CobbDouglas(0.5)
G, GD, D = 1.05, 1.0, 0.0029
T = 400


def _economy(b):
    return GrowthEconomy(1.0, b, G, D, GD)


def _report(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    print(line)
    return ok


# ---------------------------------------------------------------- criteria

def criterion_1():
    sol = solve_wilson(1.0, 0.0, 1.5, 1.0, 1.2, 0.9, horizon=T)
    resid = float(sol.no_arbitrage_residuals().max())
    levels_ok = np.array_equal(sol.prices.levels, np.ones(T + 1)) and sol.prices.growth == 1.5
    wilson_ok = levels_ok and resid <= 1e-10 and sol.verdict.classification is Verdict.BUBBLY

    families = [(1.02, 1.00), (1.02, 1.01), (1.00, 1.02), (1.05, 0.98), (0.98, 1.00),
                (1.10, 1.05), (1.01, 1.03), (1.00, 0.95), (1.03, 1.03), (0.97, 0.99)]
    beta = 0.45
    olg_ok = True
    for Ga, Gd in families:
        a = TrendedPath.geometric(1.0, Ga, T)
        sol_olg = solve_log_olg(a, TrendedPath.geometric(0.05, Gd, T), beta)
        exact = np.array_equal(sol_olg.prices.levels, beta * a.levels) and sol_olg.prices.growth == Ga
        expected = Verdict.BUBBLY if log_olg_rule(Ga, Gd) else Verdict.FUNDAMENTAL
        olg_ok &= exact and sol_olg.verdict.classification is expected
    return wilson_ok and olg_ok, (
        f"Wilson residual {resid:.1e}, verdict {sol.verdict.classification}; "
        f"log-OLG P = beta a exact and rule matched on {len(families)} families: {olg_ok}")


def criterion_2():
    a, b, beta = 2.0, 1.0, 0.9
    money = solve_bewley_money(a, b, beta, CRRAPeriodUtility(1.0))
    money_err = abs(money.P - (beta * a - b) / (1 + beta))

    spec = BewleySpec(0.96, 2.0, 1.02, 1.0, 0.5, 0.005)
    growth = solve_bewley_growth(spec, T)
    k = (spec.beta * spec.G ** (1 - spec.gamma)) ** (1 / spec.gamma)
    p_err = abs(growth.p - (spec.a * k - spec.b) / (1 + k))
    ok = (money_err <= 1e-12 and money.euler_rich_residual <= 1e-12 and money.euler_poor_slack >= 0
          and p_err <= 1e-12 and growth.euler_rich_residual <= 1e-12
          and growth.euler_poor_slack >= 0 and growth.contraction < 1
          and growth.verdict.classification is Verdict.BUBBLY)
    return ok, (f"money |P - hand| {money_err:.1e}; growth |p - formula| {p_err:.1e}, "
                f"rich residual {growth.euler_rich_residual:.1e}, "
                f"poor slack {growth.euler_poor_slack:.3g}, contraction {growth.contraction:.4f}")


def criterion_3():
    wf = threshold_w(CD, G, GD)
    wb = threshold_w(CD, G, G)
    s = DetrendedSystem(Variant.FUNDAMENTAL, _economy(0.98), CD)
    fund = linearize(s, steady_state(s))
    ok = abs(wf - GD / G) <= 1e-9 and abs(wb - 1) <= 1e-12
    ok &= abs(fund.lambda1 - 1.029) <= 1e-9 and fund.lambda2 == GD / G
    worst = 0.0
    for variant, b in ((Variant.FUNDAMENTAL, 0.98), (Variant.BUBBLY, 0.9)):
        sys_ = DetrendedSystem(variant, _economy(b), CD)
        rep = linearize(sys_, steady_state(sys_))
        num = numerical_jacobian(sys_, (rep.xi1_star, 0.0))
        scale = np.abs(rep.jacobian).max()
        worst = max(worst, float(np.max(np.abs(num - rep.jacobian)) / scale))
    ok &= worst <= 1e-6
    return ok, (f"w_f* {wf:.12f}, w_b* {wb:.12f}, lambda1 {fund.lambda1:.12f}, "
                f"lambda2 {fund.lambda2}, Jacobian rel. gap {worst:.1e}")


def criterion_4():
    fund = stable_path(DetrendedSystem(Variant.FUNDAMENTAL, _economy(0.98), CD), horizon=T)
    bub = stable_path(DetrendedSystem(Variant.BUBBLY, _economy(0.9), CD), horizon=T)
    e_f, e_b = abs(fund.xi1[300] - 0.1), abs(bub.xi1[300] - 0.05)
    euler = max(fund.max_euler_residual, bub.max_euler_residual)
    ok = (e_f <= 1e-6 and e_b <= 1e-6 and euler <= 1e-10
          and fund.verdict.classification is Verdict.FUNDAMENTAL
          and bub.verdict.classification is Verdict.BUBBLY)
    return ok, (f"|xi1(300) - xi1*| {e_f:.1e} ({fund.verdict.classification}), "
                f"{e_b:.1e} ({bub.verdict.classification}); max Euler residual {euler:.1e}")


def criterion_5():
    ws = [round(0.80 + 0.01 * i, 2) for i in range(41)]
    rows = [regime_row(w, G, GD, CD) for w in ws]
    wf, wb = rows[0]["w_f_star"], rows[0]["w_b_star"]
    # the knife-edge cell w = w_b* has no regime of its own
    seq = [(r["w"], r["regime"]) for r in rows if r["regime"] != Regime.KNIFE_EDGE.value]
    runs = [k for k, _ in itertools.groupby(reg for _, reg in seq)]
    order = [Regime.BUBBLE_NECESSITY.value, Regime.COEXISTENCE.value,
             Regime.FUNDAMENTAL_ONLY.value]
    ok = runs == order
    if ok:
        last = {reg: max(w for w, r in seq if r == reg) for reg in order}
        ok &= abs(last[order[0]] - wf) <= 0.01 + 1e-12
        ok &= abs(last[order[1]] - wb) <= 0.01 + 1e-12
    necessity = [r for r in rows if r["regime"] == Regime.BUBBLE_NECESSITY.value]
    ok &= all(math.isnan(r["xi1_fund"]) for r in necessity)
    for w in ws:
        if w < wf:
            s = DetrendedSystem(Variant.FUNDAMENTAL, _economy(w), CD)
            ok &= not steady_state(s).exists
    return ok, (f"regime runs {runs}, thresholds {wf:.6f} / {wb:.6f}, "
                f"{len(necessity)} necessity cells without a fundamental steady state")


def _equilibria():
    wil = solve_wilson(1.0, 0.0, 1.5, 1.0, 1.2, 0.9, horizon=T)
    yield "wilson", wil.prices, wil.dividends, ladder_from_rates(wil.rates)
    a = TrendedPath.geometric(1.0, 1.02, T)
    olg = solve_log_olg(a, TrendedPath.geometric(0.05, 1.01, T), 0.45)
    yield "log_olg", olg.prices, olg.dividends, None
    spec = BewleySpec(0.96, 2.0, 1.02, 1.0, 0.5, 0.005)
    bg = solve_bewley_growth(spec, T)
    yield "bewley_growth", bg.prices, bg.dividends, ladder_from_rates(np.full(T, bg.rate))
    for variant, b in ((Variant.FUNDAMENTAL, 0.98), (Variant.BUBBLY, 0.9)):
        p = stable_path(DetrendedSystem(variant, _economy(b), CD), horizon=T)
        yield f"saddle_{variant.value.lower()}", p.prices, p.dividends, None
    for growth in ((1.06, 1.02, 1.00), (1.06, 1.02, 1.03)):
        sim = simulate_aggregate(TwoSectorEconomy(GK=growth[0], GL=growth[1], GX=growth[2]), T)
        yield f"two_sector{growth}", sim.S, sim.E, sim.q


def criterion_6():
    worst, count = -math.inf, 0
    for name, P, Dv, ladder in _equilibria():
        for Tn in (50, 100, 200, 400):
            lo, mid, hi = sandwich(P, Dv, Tn, ladder)
            worst = max(worst, lo - mid, mid - hi)
            count += 1
    return worst <= 1e-9, f"{count} checks on 7 equilibria, worst violation {worst:.1e} (log scale)"


def criterion_7():
    R, C, n = 1.1, 1.0, 120
    t = np.arange(n + 1, dtype=float)
    ladder = ladder_from_rates(np.full(n, R))
    P0 = C / (R - 1)
    ex1 = firm_accounting(R ** -t, np.full(n + 1, C), np.full(n, R), P0)
    err1 = max(np.max(np.abs(ex1.prices / (P0 * R ** t) - 1)), np.max(np.abs(ex1.dividends)))
    v1 = classify_firm_bubbles(ex1, ladder)
    b = 1.0
    ex2 = firm_accounting(R ** t, np.full(n + 1, C), np.full(n, R), b + C / (R - 1))
    d_exact = (R - 1) * b + C * (R + 1) * R ** -t
    err2 = np.max(np.abs(ex2.dividends[1:] / d_exact[1:] - 1))
    v2 = classify_firm_bubbles(ex2, ladder)
    ok = (err1 <= 1e-10 and err2 <= 1e-10
          and (v1.stock_class, v1.value_class) == (Verdict.BUBBLY, Verdict.FUNDAMENTAL)
          and (v2.stock_class, v2.value_class) == (Verdict.FUNDAMENTAL, Verdict.BUBBLY))
    return ok, (f"example 1 err {err1:.1e} -> ({v1.stock_class}, {v1.value_class}); "
                f"example 2 err {err2:.1e} -> ({v2.stock_class}, {v2.value_class})")


def criterion_8():
    grid = (1.00, 1.02, 1.04, 1.06, 1.08)
    agree = checked = 0
    for GK, GL, GX in itertools.product(grid, repeat=3):
        v = classify_two_sector(TwoSectorEconomy(GK=GK, GL=GL, GX=GX))
        if v.boundary:
            continue
        checked += 1
        agree += v.agree
    econ = TwoSectorEconomy(GK=1.06, GL=1.02, GX=1.00)
    sim = simulate_aggregate(econ)
    decs = [decompose_bubble(sim, th) for th in (0.0, 0.25, 0.5, 0.75, 1.0)]
    S = sim.S.levels
    cons = decs[0].old_consumption(sim)
    theta_gap = max(max(np.max(np.abs((d.Q * econ.N + d.P * econ.X) / S - 1)),
                        np.max(np.abs(d.old_consumption(sim) / cons - 1))) for d in decs)
    B = decs[0].B
    growth_gap = float(np.max(np.abs(B[1:] * econ.GL / (sim.R * B[:-1]) - 1)))
    ok = agree == checked and theta_gap <= 1e-12 and growth_gap <= 1e-10 and B[0] > 0
    return ok, (f"{agree}/{checked} non-boundary cells agree; theta gap {theta_gap:.1e}; "
                f"B growth gap {growth_gap:.1e}")


SADDLE_INI = """[scenario]
model = saddle_bubbly
beta = 0.5
a = 1
b = 0.9
G = 1.05
D = 0.0029
Gd = 1.0
output = {out}
"""


def criterion_9():
    import contextlib
    import io

    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        for name in ("first", "second"):
            (root / f"{name}.ini").write_text(SADDLE_INI.format(out=name))
            with contextlib.redirect_stdout(io.StringIO()):
                if main(["run", str(root / f"{name}.ini")]) != 0:
                    return False, f"run {name} failed"
        csvs = sorted(p.name for p in (root / "first").glob("*.csv"))
        identical = all((root / "first" / c).read_bytes() == (root / "second" / c).read_bytes()
                        for c in csvs)
        recorded = json.loads((root / "first" / "report.json").read_text())["verdicts"]["asset"]
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            code = main(["detect", "--prices", str(root / "first" / "prices.csv"),
                         "--dividends", str(root / "first" / "dividends.csv")])
        again = json.loads(buf.getvalue())
    ok = identical and code == 0 and again == recorded and len(csvs) >= 3
    return ok, (f"{len(csvs)} CSVs byte-identical: {identical}; detect reproduces "
                f"'{again['class']}' recorded verdict: {again == recorded}")


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 10)}


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, capsys):
    ok, detail = CRITERIA[n]()
    with capsys.disabled():
        _report(n, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    results = [_report(n, *CRITERIA[n]()) for n in sorted(CRITERIA)]
    raise SystemExit(0 if all(results) else 1)
