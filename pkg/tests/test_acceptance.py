"""Acceptance criteria 1-12, one test and one PASS/FAIL line each.

Tolerances and budgets are pinned below; none are tuned to the results.
"""

import json
import math
import subprocess
import sys
import time

import jsonschema
import numpy as np
import pytest

from qwhit import harness as H
from qwhit import opcalc as oc
from qwhit.qdilog import ModularParameter, c_function, phi, phi_pole_residue_check
from qwhit.whittaker import WhittakerOptions, asymptotic_estimate, whittaker

BS = (0.6, 1.0, 1.3)

DILOG_TOL = 1e-9
DILOG_SECONDS = 60
PROBE_TOL = 1e-3
ONE_D_TOL = 1e-7
ONE_D_SECONDS = 120
OPERATOR_TOL = 1e-6
ROUNDTRIP_TOL = 1e-8
ROUTE_N2_TOL, ROUTE_N2_SECONDS = 1e-6, 60
ROUTE_N3_TOL, ROUTE_N3_SECONDS = 1e-3, 600
DUAL_EPS_TOL = 1e-8
SYMMETRY_TOL = 1e-8
EIGEN_TOL = 1e-6
DEHN_N1_TOL = 1e-7
DEGEN_N2_TOL = 1e-4
CL_N1_TOL, CL_N2_TOL = 1e-6, 1e-5
ORTHO_TOL = 1e-6
GUSTAFSON_N1_TOL, GUSTAFSON_N2_TOL = 1e-6, 1e-4
RAINS_TOL = 1e-5
CONTROL_FACTOR = 1e3
MEASURE_TOL = 1e-9
SUITE_SECONDS = 300


def worst(reports):
    # the pass rule: relative error, absolute error when |rhs| < 1
    return max(r.rel_err if abs(r.rhs) >= 1 else r.abs_err for r in reports)


def errs(reports):
    return f"{worst(reports):.1e} (rel {max(r.rel_err for r in reports):.1e})"


def failures(reports):
    return [r.summary() for r in reports if not r.ok]


def test_criterion_01_dilog_properties(verdict):
    t0 = time.perf_counter()
    res = {"fe": 0.0, "inv": 0.0, "unit": 0.0, "dual": 0.0}
    for b in BS:
        P = ModularParameter(b)
        rng = np.random.default_rng([1, round(1e3 * b)])
        z = rng.uniform(-3, 3, 100) + 1j * rng.uniform(-0.45, 0.45, 100) * P.im_cb
        for e in (P.b, 1 / P.b):
            lhs = phi(z - 0.5j * e, P, 1e-11)
            rhs = (1 + np.exp(2 * math.pi * e * z)) * phi(z + 0.5j * e, P, 1e-11)
            res["fe"] = max(res["fe"], np.max(np.abs(lhs - rhs) / np.abs(lhs)))
        z = rng.uniform(-3, 3, 100) + 1j * rng.uniform(-1.5, 1.5, 100) * P.im_cb
        ref = P.zeta_inv * np.exp(1j * math.pi * z * z)
        res["inv"] = max(res["inv"], np.max(np.abs(phi(z, P, 1e-11) * phi(-z, P, 1e-11) - ref) / np.abs(ref)))
        x = rng.uniform(-8, 8, 100)
        res["unit"] = max(res["unit"], np.max(np.abs(np.abs(phi(x, P, 1e-11)) - 1)))
        z = rng.uniform(-3, 3, 100) + 1j * rng.uniform(-1.5, 1.5, 100) * P.im_cb
        a, d = phi(z, P, 1e-11), phi(z, P.dual(), 1e-11)
        res["dual"] = max(res["dual"], np.max(np.abs(a - d) / np.abs(a)))
    wall = time.perf_counter() - t0
    ok = max(res.values()) <= DILOG_TOL and wall < DILOG_SECONDS
    detail = ", ".join(f"{k} {v:.1e}" for k, v in res.items())
    assert verdict(1, ok, f"dilog properties max rel {detail} (tol {DILOG_TOL:g}), {wall:.1f}s")


def test_criterion_02_pole_probes(verdict):
    worst_res = 0.0
    for b in BS:
        P = ModularParameter(b)
        worst_res = max(worst_res, phi_pole_residue_check(P), phi_pole_residue_check(P, at="zero"))
        eps = 1e-4 * (1 + 1j)
        cz = c_function(eps, P, delta_pole=1e-6)
        worst_res = max(worst_res, abs(-2j * math.pi * eps * cz - 1))
    ok = worst_res <= PROBE_TOL
    assert verdict(2, ok, f"pole/zero/c-function probes max residual {worst_res:.2e} (tol {PROBE_TOL:g})")


def test_criterion_03_fourier_beta(verdict):
    t0 = time.perf_counter()
    reps = []
    for name in ("fourier1", "fourier2", "beta1", "beta2"):
        for b in BS:
            reps += H.run_case(H.CASES[name], b, trials=20, seed=0)
    wall = time.perf_counter() - t0
    err = max(r.rel_err for r in reps)
    ok = err <= ONE_D_TOL and wall < ONE_D_SECONDS and not failures(reps)
    assert verdict(3, ok, f"{len(reps)} Fourier/beta sets, max rel {err:.2e} (tol {ONE_D_TOL:g}), {wall:.1f}s"), failures(reps)


def _probe_reports(name, P, packets=5, points=10):
    case = H.CASES[name]
    out = []
    for i in range(packets):
        base = case.sampler(H.case_rng(name, P.b, i, 0), P)
        for x in oc.probe_points(1, points, seed=i):
            out.append(H.evaluate(case, {**base, "x": x}, P, tol=OPERATOR_TOL))
    return out


def test_criterion_04_pentagon_triv(verdict):
    reps = []
    for b in BS:
        P = ModularParameter(b)
        for name in ("pentagon", "lemma-triv:1", "lemma-triv:2"):
            reps += _probe_reports(name, P)
    err = worst(reps)
    ok = err <= OPERATOR_TOL and not failures(reps)
    assert verdict(4, ok, f"pentagon + triv relations, {len(reps)} packet probes, max err {errs(reps)} (tol {OPERATOR_TOL:g})"), failures(reps)


def test_criterion_05_baxter(verdict):
    comm, trip = [], []
    for b in BS:
        for name in ("q-commute:top-top", "q-commute:bottom-bottom", "q-commute:top-bottom"):
            comm += H.run_case(H.CASES[name], b, tol=OPERATOR_TOL)
        trip += H.run_case(H.CASES["q-roundtrip"], b, tol=ROUNDTRIP_TOL)
    ec, et = worst(comm), worst(trip)
    ok = ec <= OPERATOR_TOL and et <= ROUNDTRIP_TOL and not failures(comm + trip)
    assert verdict(5, ok, f"Baxter commutators max {errs(comm)} (tol {OPERATOR_TOL:g}), Q Q^-1 max {errs(trip)} (tol {ROUNDTRIP_TOL:g})"), failures(comm + trip)


def test_criterion_06_route_agreement(verdict):
    P = ModularParameter(1.0)
    t0 = time.perf_counter()
    n2 = H.run_case(H.CASES["givental-vs-mb:n2"], 1.0, trials=10, tol=ROUTE_N2_TOL)
    t2 = time.perf_counter() - t0
    t0 = time.perf_counter()
    n3 = H.run_case(H.CASES["givental-vs-mb:n3"], 1.0, trials=3, tol=ROUTE_N3_TOL)
    t3 = time.perf_counter() - t0
    dual = 0.0
    half = WhittakerOptions(epsilon=0.25 * P.im_cb)
    for t in range(10):
        p = H.CASES["givental-vs-mb:n2"].sampler(H.case_rng("givental-vs-mb:n2", 1.0, t, 0), P)
        a, c = whittaker(p["lam"], p["x"], P), whittaker(p["lam"], p["x"], P, half)
        dual = max(dual, abs(a - c) / abs(a))
    e2, e3 = worst(n2), worst(n3)
    ok = (e2 <= ROUTE_N2_TOL and t2 < ROUTE_N2_SECONDS and e3 <= ROUTE_N3_TOL and t3 < ROUTE_N3_SECONDS
          and dual <= DUAL_EPS_TOL and not failures(n2 + n3))
    detail = (f"Givental vs MB n=2 max {errs(n2)} in {t2:.1f}s, n=3 max {errs(n3)} in {t3:.1f}s, "
              f"dual-eps max {dual:.1e}")
    assert verdict(6, ok, detail), failures(n2 + n3)


def test_criterion_07_symmetries(verdict):
    reps = []
    for b in BS:
        for name in ("lambda-symmetry", "modular-duality"):
            reps += H.run_case(H.CASES[name], b, trials=3, tol=SYMMETRY_TOL)
    err = worst(reps)
    ok = err <= SYMMETRY_TOL and not failures(reps)
    assert verdict(7, ok, f"lambda-symmetry and modular duality of Psi^(2), max {errs(reps)} (tol {SYMMETRY_TOL:g})"), failures(reps)


def test_criterion_08_eigen(verdict):
    groups = {
        "baxter": (["eigen-baxter:top-n1", "eigen-baxter:bottom-n1", "eigen-baxter:top-n2", "eigen-baxter:bottom-n2"], EIGEN_TOL),
        "toda": (["eigen-toda:k1", "eigen-toda:k2"], EIGEN_TOL),
        "dehn-n1": (["eigen-dehn:n1"], DEHN_N1_TOL),
        "degen-n1": (["degen-dehn:n1"], OPERATOR_TOL),
        "degen-n2": (["degen-dehn:n2"], DEGEN_N2_TOL),
    }
    parts, bad = [], []
    for label, (names, tol) in groups.items():
        reps = []
        for name in names:
            for b in (BS if label != "degen-n2" else (1.0,)):
                reps += H.run_case(H.CASES[name], b, trials=1, tol=tol)
        bad += failures(reps)
        e = worst(reps)
        parts.append(f"{label} {errs(reps)}")
        bad += [f"{label} above tol"] if e > tol else []
    assert verdict(8, not bad, "eigen-relations max " + ", ".join(parts)), bad


def test_criterion_09_integral_identities(verdict):
    plan = [
        ("cauchy-littlewood:n1", BS, CL_N1_TOL),
        ("cauchy-littlewood:n2", BS, CL_N2_TOL),
        ("orthogonality", BS, ORTHO_TOL),
        ("gustafson:n1", BS, GUSTAFSON_N1_TOL),
        ("gustafson:n2", (1.0,), GUSTAFSON_N2_TOL),
        ("rains", BS, RAINS_TOL),
    ]
    parts, bad = [], []
    for name, bs, tol in plan:
        reps = []
        for b in bs:
            reps += H.run_case(H.CASES[name], b, trials=1, tol=tol)
        bad += failures(reps)
        parts.append(f"{name} {errs(reps)}")
    controls = [H.run_case(H.CASES["rains"], b, 1, 0, tol=RAINS_TOL, control=True)[0] for b in BS]
    ctrl = min(r.rel_err for r in controls) / RAINS_TOL
    if ctrl < CONTROL_FACTOR:
        bad.append(f"rains control only {ctrl:.1e} x tol")
    parts.append(f"rains control {ctrl:.1e} x tol")
    assert verdict(9, not bad, ", ".join(parts)), bad


def test_criterion_10_measures(verdict):
    reps = []
    for b in BS:
        for name in ("measure-recursion:n2", "measure-recursion:n3", "measure-symmetrization:n2", "measure-symmetrization:n3"):
            reps += H.run_case(H.CASES[name], b, trials=5, tol=MEASURE_TOL)
    err = max(r.rel_err for r in reps)
    ok = err <= MEASURE_TOL and not failures(reps)
    assert verdict(10, ok, f"measure symmetrization and recursion, n <= 3, max rel {err:.2e} (tol {MEASURE_TOL:g})"), failures(reps)


def test_criterion_11_asymptotics(verdict):
    lam = (0.3, -0.2)
    bad = []
    for b in BS:
        P = ModularParameter(b)
        out = [abs(whittaker(lam, (-k * P.s, k * P.s), P)) for k in (2, 3, 4)]
        if not out[0] > out[1] > out[2]:
            bad.append(f"b={b}: |Psi| outside the chamber {out}")
        # beyond R ~ b + 1/b the residual sits at round-off, so the radii stay below it
        gaps = []
        for k in (0.25, 0.5, 0.75):
            R = k * P.s
            est = asymptotic_estimate(lam, (R, -R), P)
            gaps.append(abs(whittaker(lam, (R, -R), P) - est) / abs(est))
        if not gaps[0] > gaps[1] > gaps[2]:
            bad.append(f"b={b}: in-chamber gaps {gaps}")
    assert verdict(11, not bad, "outside-chamber decay monotone, in-chamber gap shrinking with R" if not bad else "; ".join(bad)), bad


def _suite_json(tmp_path, tag):
    out = tmp_path / f"{tag}.json"
    t0 = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "qwhit.cli", "suite", "--profile", "quick", "--seed", "7", "--json", str(out), "--quiet"],
        capture_output=True, text=True,
    )
    return proc, time.perf_counter() - t0, json.loads(out.read_text()) if out.exists() else None


def test_criterion_12_cli_suite(verdict, tmp_path):
    first, wall, doc = _suite_json(tmp_path, "a")
    second, _, doc2 = _suite_json(tmp_path, "b")
    problems = []
    if first.returncode != 0:
        problems.append(f"exit {first.returncode}: {first.stdout[-500:]}{first.stderr[-500:]}")
    if wall >= SUITE_SECONDS:
        problems.append(f"took {wall:.0f}s")
    try:
        jsonschema.validate(doc, H.REPORT_SCHEMA)
    except jsonschema.ValidationError as exc:
        problems.append(f"schema: {exc.message}")
    strip = lambda d: [{k: v for k, v in r.items() if k != "wall_ms"} for r in d]
    if doc is None or doc2 is None or json.dumps(strip(doc)) != json.dumps(strip(doc2)):
        problems.append("numeric fields differ between runs")
    detail = f"qwhit suite --profile quick exit {first.returncode} in {wall:.0f}s, {len(doc or [])} reports, schema ok, reproducible"
    assert verdict(12, not problems, detail if not problems else "; ".join(problems)), problems
