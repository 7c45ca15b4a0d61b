"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the criterion lines are
printed even under output capture.
"""

import numpy as np
import pytest

from nonlocal_neumann.appendix_oracles import (
    B_value,
    beta_search,
    bg_bound,
    blowup_check,
    gamma_closed_form,
    integral_J,
    sign_exponent,
)
from nonlocal_neumann.cli import run
from nonlocal_neumann.local_limit import (
    LocalCoefficients,
    alpha_sweep,
    measure_concentration,
    solve_local_neumann,
    strictly_decreasing,
)
from nonlocal_neumann.measures import stable_measure
from nonlocal_neumann.nonlocal_op import Grid, assemble_operator, compensator_drift
from nonlocal_neumann.reflect import ALL_MODELS
from nonlocal_neumann.solver import (
    ProblemSpec,
    contraction_step,
    holder_quotient,
    solve_direct,
    solve_limit,
    solve_truncated,
    solve_viscous,
)

MODELS = [m.value for m in ALL_MODELS]
GRID = Grid(4.0, 81)


@pytest.fixture
def report(capsys):
    def emit(number: int, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        assert ok, detail
    return emit


def random_f(rng):
    """Bounded data mixing a random trigonometric sum, a jump and piecewise-linear noise."""
    knots = np.linspace(0.0, GRID.L, 9)
    noise = rng.uniform(-1, 1, knots.size)
    amp, freq, phase = rng.uniform(-2, 2, 3), rng.uniform(0.5, 6, 3), rng.uniform(0, 2 * np.pi, 3)
    jump, where = rng.uniform(-1, 1), rng.uniform(0.2, 3.8)

    def f(x):
        x = np.asarray(x, dtype=float)
        trig = sum(a * np.sin(w * x + p) for a, w, p in zip(amp, freq, phase))
        return trig + jump * (x > where) + np.interp(x, knots, noise)
    return f


def problem(f, alpha, model, grid=GRID, measure=None):
    return ProblemSpec(measure or stable_measure(alpha), model, f, grid)


def test_criterion_1_maximum_principle(report):
    rng = np.random.default_rng(1)
    worst = -np.inf
    for _ in range(20):
        f = random_f(rng)
        for alpha in (0.5, 1.5):
            for model in MODELS:
                for rep in (solve_direct(problem(f, alpha, model)),
                            solve_truncated(problem(f, alpha, model), k=4, tol=1e-10)):
                    fv = f(GRID.nodes)
                    worst = max(worst, np.max(np.abs(rep.values)) - np.max(np.abs(fv)),
                                fv.min() - rep.values.min(), rep.values.max() - fv.max())
    report(1, worst <= 1e-8, f"max excess of |u| over ||f|| and of u over [min f, max f] = {worst:.3e} (bound 1e-8)")


def test_criterion_2_constant_preservation(report):
    c = 3.0
    f = lambda x: c + 0.0 * x
    errs = {}
    for alpha in (0.5, 1.5):
        for model in MODELS:
            prob = problem(f, alpha, model)
            errs[("truncated", alpha, model)] = solve_truncated(prob, k=8, tol=1e-12).values
            errs[("limit", alpha, model)] = solve_limit(prob, [4, 8, 16], tol=1e-12).values
            errs[("direct", alpha, model)] = solve_direct(prob).values
            errs[("viscous", alpha, model)] = solve_viscous(prob, 0.05, 10.0, tol=1e-12).values
    worst = max(float(np.max(np.abs(u - c))) for u in errs.values())
    report(2, worst <= 1e-10, f"max |u - c| over {len(errs)} solves on four paths = {worst:.3e} (bound 1e-10)")


def test_criterion_3_comparison(report):
    rng = np.random.default_rng(3)
    tol = 1e-10
    worst = -np.inf
    for _ in range(10):
        f, bump = random_f(rng), random_f(rng)
        g = lambda x, f=f, bump=bump: f(x) + np.abs(bump(x))
        for alpha in (0.5, 1.5):
            for model in MODELS:
                uf = solve_truncated(problem(f, alpha, model), k=4, tol=tol).values
                ug = solve_truncated(problem(g, alpha, model), k=4, tol=tol).values
                df = solve_direct(problem(f, alpha, model)).values
                dg = solve_direct(problem(g, alpha, model)).values
                worst = max(worst, float(np.max(uf - ug)) - 2 * tol, float(np.max(df - dg)) - 2 * tol)
    report(3, worst <= 0, f"max of u_f - u_g - 2 tol over 10 pairs = {worst:.3e} (must be <= 0)")


def test_criterion_4_contraction(report):
    worst, count = -np.inf, 0
    f = lambda x: np.exp(-((x - 1.0) ** 2)) + 0.5 * np.sign(x - 2.0)
    for alpha in (0.5, 1.5):
        for model in MODELS:
            for k in (4, 8, 16):
                prob = problem(f, alpha, model)
                rep = solve_truncated(prob, k=k, tol=1e-10)
                eps = contraction_step(prob, k)
                worst = max(worst, rep.contraction_factor - (1 - 0.05 * eps))
                count += 1
    report(4, worst <= 0, f"max of observed factor - (1 - 0.05 eps) over {count} runs = {worst:.3e} (must be <= 0)")


def test_criterion_5_mirror_even_extension(report):
    tol = 1e-10
    f = lambda x: np.cos(x) + 0.3 * np.exp(-x * x)
    whole = Grid.whole_line(GRID.L, 2 * GRID.n - 1)
    op_err = sol_err = 0.0
    for alpha in (0.5, 1.5):
        mu = stable_measure(alpha)
        for k in (None, 8):
            a = assemble_operator(GRID, mu, "mirror", k=k)
            b = assemble_operator(whole, mu, None, k=k)
            op_err = max(op_err, float(np.max(np.abs(a.apply(f(GRID.nodes)) - b.apply(f(np.abs(whole.nodes)))[GRID.n - 1:]))))
        half = solve_truncated(problem(f, alpha, "mirror"), k=8, tol=tol).values
        full = solve_truncated(ProblemSpec(mu, None, lambda x: f(np.abs(x)), whole), k=8, tol=tol).values
        sol_err = max(sol_err, float(np.max(np.abs(half - full[GRID.n - 1:]))))
        half = solve_direct(problem(f, alpha, "mirror")).values
        full = solve_direct(ProblemSpec(mu, None, lambda x: f(np.abs(x)), whole)).values
        sol_err = max(sol_err, float(np.max(np.abs(half - full[GRID.n - 1:]))))
    ok = op_err <= 1e-10 and sol_err <= 5 * tol
    report(5, ok, f"operator gap {op_err:.3e} (bound 1e-10), solution gap {sol_err:.3e} (bound {5 * tol:.0e})")


def test_criterion_6_fleas_projection_identical(report):
    f = lambda x: np.exp(-((x - 1.0) ** 2)) + 0.5 * np.sign(x - 2.0)
    same = True
    for alpha in (0.5, 1.5):
        runs = {}
        for model in ("fleas", "projection"):
            prob = problem(f, alpha, model)
            runs[model] = [
                solve_truncated(prob, k=8, tol=1e-10).values,
                solve_limit(prob, [4, 8, 16], tol=1e-10).values,
                solve_direct(prob).values,
                solve_viscous(prob, 0.05, 1e6).values,
            ]
        same &= all(a.tobytes() == b.tobytes() for a, b in zip(runs["fleas"], runs["projection"]))
    report(6, same, "fleas and projection outputs are bit-identical on every solver path" if same
           else "fleas and projection outputs differ")


def test_criterion_7_compensator(report):
    sym = max(abs(compensator_drift(stable_measure(a), m, x, 0.2))
              for a in (0.5, 1.5) for m in MODELS for x in (0.3, 1.0, 2.5))
    rel = max(abs(compensator_drift(stable_measure(1.5), "censored", x, 1.0) / gamma_closed_form(1.5, 1.0, x) - 1)
              for x in (0.1, 0.01, 0.001))
    report(7, sym < 1e-12 and rel <= 1e-8,
           f"symmetric interior |gamma| = {sym:.3e} (bound 1e-12), censored closed-form rel error {rel:.3e} (bound 1e-8)")


def test_criterion_8_sign_trichotomy(report):
    ok, parts = True, []
    for alpha in (1.2, 1.5, 1.8):
        b = alpha - 1
        zero, up, down = (sign_exponent(alpha, b + d).value for d in (0.0, 0.1, -0.1))
        ok &= abs(zero) < 1e-6 and up > 0 and down < 0
        parts.append(f"alpha={alpha}: S(c)={zero:.1e} S(c+.1)={up:.3f} S(c-.1)={down:.3f}")
    report(8, ok, "; ".join(parts))


def test_criterion_9_bg_certification(report):
    ok, parts = True, []
    for alpha in (1.2, 1.5, 1.8):
        rep = bg_bound(alpha)
        d = rep.details
        b2 = B_value(alpha, alpha - 1, 2.0).value
        search = beta_search(alpha)
        cond = (rep.verdict and d["kappa"] > 0 and rep.quadrature_error < d["kappa"] / 10
                and b2 < -d["G"] / 2 and search.verdict and search.value > alpha - 1)
        ok &= cond
        parts.append(f"alpha={alpha}: kappa={d['kappa']:.4f} B(2)={b2:.4f} -G/2={-d['G'] / 2:.4f} beta*={search.value:.3f}")
    report(9, ok, "; ".join(parts))


def test_criterion_10_boundary_blowup(report):
    ok, parts = True, []
    for alpha in (0.2, 0.5, 0.8):
        rep = integral_J(alpha)
        ok &= rep.value > 0 and rep.quadrature_error < rep.value / 100
        parts.append(f"J({alpha})={rep.value:.4f}")
    blow = blowup_check(stable_measure(0.5), 4.0)
    d = blow.details
    ok &= d["min_neg_I"] >= d["half_J"] - blow.quadrature_error
    parts.append(f"R=4 min -x^a I[U_R]={d['min_neg_I']:.4f} >= J/2={d['half_J']:.4f}")
    report(10, ok, "; ".join(parts))


def test_criterion_11_local_limit_sweep(report):
    alphas = [1.5, 1.7, 1.9, 1.95]
    ok, parts = True, []
    f = lambda x: np.exp(-((x - 1.0) ** 2))
    for g in ("const", "affine"):
        template = ProblemSpec(stable_measure(1.5, g), "censored", f, Grid(8.0, 201), normalized=True)
        table = alpha_sweep(template, alphas)
        dec = all(strictly_decreasing(table.errors(m)) for m in MODELS)
        gaps = table.cross_model_gap(alphas[0]), table.cross_model_gap(alphas[-1])
        ok &= dec and gaps[1] < gaps[0] and all(r.ok for r in table.rows)
        worst = max(table.errors(m)[-1] for m in MODELS)
        parts.append(f"g={g}: decreasing={dec} e(1.95)<={worst:.4f} gap {gaps[0]:.4f}->{gaps[1]:.4f}")
    report(11, ok, "; ".join(parts))


def test_criterion_12_local_solver(report):
    L = 4.0
    k = np.pi / L
    exact = lambda x: np.cos(k * x)
    a, b = 1.0, 0.5
    f = lambda x: a * k * k * exact(x) + b * k * np.sin(k * x) + exact(x)
    errs = []
    for n in (101, 201):
        grid = Grid(L, n)
        errs.append(float(np.max(np.abs(solve_local_neumann(LocalCoefficients(a, b), f, grid).values - exact(grid.nodes)))))
    ratio = errs[0] / errs[1]
    conc = max(abs(measure_concentration(1.0, alpha, 1.0)[0] - 2.0) for alpha in np.linspace(0.05, 1.95, 39))
    report(12, 3.5 <= ratio <= 4.5 and conc <= 1e-10,
           f"error ratio {ratio:.3f} (in [3.5, 4.5]), max |nu1 - 2| over 39 alphas = {conc:.1e} (bound 1e-10)")


def test_criterion_13_holder(report):
    f = lambda x: np.cos(3 * x) + np.sign(x - 1.0)
    qs = []
    for n in (200, 400, 800):
        rep = solve_direct(problem(f, 1.5, "censored", grid=Grid(4.0, n)))
        qs.append(holder_quotient(rep.u, 0.6, 0.5))
    ratio = max(qs) / min(qs)
    report(13, ratio < 2, f"quotients {', '.join(f'{q:.4f}' for q in qs)}; max/min = {ratio:.3f} (bound 2)")


def test_criterion_14_determinism(tmp_path, report):
    configs = {
        "solve": ["n=61", "L=4"],
        "sweep-alpha": ["n=41", "L=4", "sweep.alphas=1.5,1.9"],
        "verify-appendix": [],
        "check-reflections": ["reflections.samples=5000"],
        "gamma-profile": [],
        "holder": ["holder.ns=50,100,200", "L=4"],
    }
    same = []
    for sub, overrides in configs.items():
        a = run(sub, None, tmp_path / "a", overrides)[1].read_bytes()
        b = run(sub, None, tmp_path / "b", overrides)[1].read_bytes()
        same.append(a == b)
    report(14, all(same), f"{sum(same)}/{len(same)} subcommands produced byte-identical CSV output")
