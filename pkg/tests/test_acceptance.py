"""Acceptance criteria, one test each, run at the stated tolerances.

Each test prints one ``criterion N ... PASS|FAIL`` line; the lines are
collected again in the terminal summary. Run directly with
``python3 tests/test_acceptance.py`` to get just the summary.
"""

import csv
import filecmp
import sys
import time

import numpy as np
import pytest

import _invariants as inv
import _oracles
from hapd import (DeltaPolicy, NldiModel, SimScenario, ControlSchedule, TrimSpec, ValidationError,
                  check_truncated_l2, compare_responses, discretize, expm, integrate_nonlinear,
                  linearize_trim, simulate_discrete_ldi, trim, zoh)
from hapd.cli import main
from hapd.sim import ActuatorState, clamp_position, iterate_linear

RESULTS = {}
DEG = np.pi / 180


def record(n, title, passed, detail):
    line = f"criterion {n:>2} {title:<34} {'PASS' if passed else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert passed, line


def test_criterion_01_pipeline(tmp_path):
    start = time.perf_counter()
    code = main(["synth", "--out", str(tmp_path)])
    elapsed = time.perf_counter() - start
    manifest = [l.split() for l in (tmp_path / "pldi" / "manifest.txt").read_text().splitlines()
                if not l.startswith("#")]
    speeds = [float(m[1]) for m in manifest]
    alts = [float(m[2]) for m in manifest]
    in_env = min(speeds) >= 17 and max(speeds) <= 23 and min(alts) >= 300 and max(alts) <= 700
    r = int((tmp_path / "nldi.txt").read_text().split("r = ")[1].split()[0])
    with open(tmp_path / "coverage.csv") as fh:
        rows = list(csv.DictReader(fh))
    sigma = max(float(x["sigma_max"]) for x in rows)
    resid = max(float(x["relative_residual"]) for x in rows)
    ok = (len(manifest) == 30 and in_env and r <= 12 and sigma <= 1 + 1e-6 and resid <= 1e-6
          and elapsed < 60)
    record(1, "pipeline reproduction", ok,
           f"models={len(manifest)} r={r} max_sigma={sigma:.9f} max_rel_residual={resid:.3e} "
           f"(limit 1e-6) exit={code} runtime={elapsed:.2f}s")


def test_criterion_02_trim_contract(pldi):
    res = max(t.residual_norm for t in pldi.trims)
    defl = max(np.max(np.abs(t.u_trim[:12])) for t in pldi.trims)
    thrust = min(t.thrust for t in pldi.trims)
    ok = len(pldi.trims) == 30 and res < 1e-8 and defl <= 25 * DEG and thrust >= 0
    record(2, "trim contract", ok,
           f"max_residual={res:.2e} max_|delta|={defl / DEG:.3f}deg min_T={thrust:.2f}N")


def test_criterion_03_jacobians(model, pldi):
    idx = np.random.default_rng(3).choice(len(pldi.trims), 3, replace=False)
    worst, struct = 0.0, 0.0
    for i in idx:
        t, lin = pldi.trims[i], pldi.linear_models[i]
        A, B = _oracles.one_sided_jacobian(model, t.x_trim, t.u_trim, t.spec.altitude)
        for got, ref in ((lin.A, A), (lin.B, B)):
            big = np.abs(got) > 1e-6
            worst = max(worst, np.max(np.abs(got[big] - ref[big]) / np.abs(got[big])))
        struct = max(struct, abs(lin.A[6, 3] - 1), abs(lin.A[7, 4] - 1))
    record(3, "Jacobian correctness", worst <= 1e-4 and struct <= 1e-8,
           f"trims={sorted(int(i) for i in idx)} max_rel_diff={worst:.2e} structural_err={struct:.1e}")


def _deviation(model, V, h, eps):
    res = trim(TrimSpec(V, h), model)
    local = NldiModel.nominal(discretize(linearize_trim(res, model)))
    dx = np.zeros(12)
    dx[[0, 1, 2, 3, 4]] = eps * np.array([1.0, 0.02, 0.01, 0.05, 0.05])
    sc = SimScenario(np.array(res.x_trim) + dx, ControlSchedule.constant(res.u_trim), h, 1.0)
    lin = simulate_discrete_ldi(local, DeltaPolicy.zero(), np.zeros(13), 50, dx)
    return compare_responses(integrate_nonlinear(sc, model), lin, res.x_trim).worst


def test_criterion_04_second_order(model):
    ratios = [_deviation(model, V, h, 1.0) / _deviation(model, V, h, 0.5)
              for V, h in ((17.0, 300.0), (20.6, 500.0), (23.0, 700.0))]
    record(4, "linear/nonlinear O(eps^2)", all(3 <= r <= 5 for r in ratios),
           "ratios=" + ", ".join(f"{r:.3f}" for r in ratios))


def test_criterion_05_vertex_replay(pldi, nldi, coverage):
    x0 = np.random.default_rng(5).standard_normal(12) * 0.1
    u = np.concatenate([np.full(12, DEG), [5.0]])
    errs, errs_rec = [], []
    for i, v in enumerate(pldi.vertices):
        tr = simulate_discrete_ldi(nldi, DeltaPolicy.vertex_replay(i, coverage), u, 250, x0)
        errs.append(np.max(np.abs(tr.x - iterate_linear(v.Phi, v.G, u, 250, x0))))
        Phi, G = nldi.vertex_matrices(coverage.vertices[i].delta)
        errs_rec.append(np.max(np.abs(tr.x - iterate_linear(Phi, G, u, 250, x0))))
    record(5, "vertex-replay equivalence", max(errs) <= 1e-8,
           f"max_err_vs_PLDI={max(errs):.2e} (limit 1e-8); vs reconstructed vertex {max(errs_rec):.1e}")


def test_criterion_06_uncertainty_contract(nldi):
    rng = np.random.default_rng(6)
    ok_runs = 0
    for seed in range(100):
        x0 = rng.standard_normal(12) * 0.1
        U = rng.standard_normal((100, 13)) * np.r_[np.full(12, DEG), 5.0]
        tr = simulate_discrete_ldi(nldi, DeltaPolicy.random_contraction(seed), U, 100, x0)
        ok_runs += bool(check_truncated_l2(tr.w, tr.z))
    Q = np.linalg.qr(rng.standard_normal((nldi.rank, nldi.rank)))[0]
    tr = simulate_discrete_ldi(nldi, DeltaPolicy.constant(1.1 * Q, validate=False), np.zeros(13), 10,
                               np.full(12, 0.1))
    inflated = check_truncated_l2(tr.w, tr.z)
    try:
        simulate_discrete_ldi(nldi, DeltaPolicy.constant(1.1 * Q), np.zeros(13), 10, np.full(12, 0.1))
        refused = False
    except ValidationError:
        refused = True
    ok = ok_runs == 100 and not inflated and inflated.first_violation == 0 and refused
    record(6, "uncertainty contract", ok,
           f"random runs passing={ok_runs}/100; inflated first violation at step {inflated.first_violation}")


def test_criterion_07_physics_invariants(model):
    rng = np.random.default_rng(7)
    errs = {
        "gravity": max(inv.gravity_error(rng) for _ in range(1000)),
        "homogeneity": max(inv.homogeneity_error(rng, model) for _ in range(1000)),
        "affinity": max(inv.affinity_error(rng, model) for _ in range(1000)),
        "mirror": max(inv.mirror_error(rng, model) for _ in range(1000)),
        "inertia": max(inv.inertia_error(rng, model) for _ in range(1000)),
    }
    record(7, "physics invariants (1000 each)", all(e < 1e-10 for e in errs.values()),
           " ".join(f"{k}={v:.1e}" for k, v in errs.items()))


def test_criterion_08_actuator_limits(model):
    rng = np.random.default_rng(8)
    lim, dt = model.params.surface_deflection_limit, 0.02
    act = ActuatorState.at(np.zeros(12), model.params)
    prev, worst_pos, worst_step = act.effective.copy(), 0.0, 0.0
    for _ in range(1000):
        eff = act.update(rng.uniform(-60, 60, 12) * DEG, dt)
        worst_pos = max(worst_pos, np.max(np.abs(eff)))
        worst_step = max(worst_step, np.max(np.abs(eff - prev)))
        prev = eff.copy()
    exact = clamp_position(np.array([30.0, -30.0]) * DEG, lim)
    ok = worst_pos <= lim and worst_step <= 4 * DEG * (1 + 1e-15) and np.all(np.abs(exact) == lim)
    record(8, "actuator limits", ok,
           f"max_|delta|={worst_pos / DEG:.12f}deg max_step={worst_step / DEG:.12f}deg")


def test_criterion_09_numerics(model):
    res = trim(TrimSpec(20.0, 500.0), model)
    x0 = np.array(res.x_trim)
    x0[[0, 1, 3]] += [1.0, 0.03, 0.2]

    def end(h):
        return integrate_nonlinear(SimScenario(x0, ControlSchedule.constant(res.u_trim), 500.0, 1.0, h), model).x[-1]
    ref = end(0.02 / 32)
    ratio = np.max(np.abs(end(0.02) - ref)) / np.max(np.abs(end(0.01) - ref))
    rng = np.random.default_rng(9)
    semi = 0.0
    for _ in range(20):
        A = rng.standard_normal((12, 12))
        t, s = rng.uniform(0, 0.5, 2)
        lhs = expm(A * t) @ expm(A * s)
        semi = max(semi, np.max(np.abs(lhs - expm(A * (t + s)))) / np.linalg.norm(lhs, 1))
    B = rng.standard_normal((12, 13))
    Phi, G = zoh(np.zeros((12, 12)), B, 0.02)
    exact = np.array_equal(Phi, np.eye(12)) and np.array_equal(G, 0.02 * B)
    record(9, "numerics", 8 <= ratio <= 32 and semi <= 1e-10 and exact,
           f"rk4_ratio={ratio:.2f} semigroup_err={semi:.1e} zero_A_exact={exact}")


def test_criterion_10_determinism(tmp_path):
    outs = [tmp_path / "a", tmp_path / "b"]
    for i, name in enumerate(("ldi.txt", "nl.txt")):
        text = ("mode = ldi\nvtas = 20\nalt = 500\nduration = 2\ndelta = random\nnldi = a/nldi.txt\n"
                "perturb = V:1 alpha_deg:0.5\n") if i == 0 else (
                "mode = nonlinear\nvtas = 20\nalt = 500\nduration = 2\nschedule = 0.5 elevators:2; 1.0\n")
        (tmp_path / name).write_text(text)
    codes = []
    for out in outs:
        codes.append(main(["synth", "--out", str(out)]))
        for name in ("ldi.txt", "nl.txt"):
            codes.append(main(["simulate", str(tmp_path / name), "--seed", "42", "--out", str(out)]))
    files = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*") if p.is_file())
    same = all(filecmp.cmp(outs[0] / f, outs[1] / f, shallow=False) for f in files)
    same = same and files == sorted(p.relative_to(outs[1]) for p in outs[1].rglob("*") if p.is_file())
    record(10, "determinism", same and codes[1:3] == [0, 0] and codes[4:] == [0, 0],
           f"{len(files)} files compared, byte-identical={same}, exit codes={codes}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
