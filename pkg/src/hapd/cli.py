"""Command-line front end: ``hapd {trim,linearize,synth,verify,simulate,compare}``.

Angles are given and printed in degrees; everything inside is radians.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure
(trim, fit, coverage), 3 simulation singularity.
"""

import argparse
import configparser
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import archive
from .discrete import DEFAULT_TS, discretize
from .errors import (FitError, HapdError, LinearizationError, ParseError, SimulationAbort, TrimError,
                     ValidationError)
from .kvfile import read_kv
from .ldi import (NldiModel, VertexError, build_grid, build_pldi, build_vertex, fit_nldi,
                  verify_coverage)
from .model import N_INPUTS, N_STATES, STATE_NAMES, WindVector
from .parameters import DEG, ELEVATORS, N_SURFACES, load_model
from .sim import (ControlSchedule, DeltaPolicy, SimScenario, compare_responses, integrate_nonlinear,
                  simulate_discrete_ldi)
from .trim import SPEED_RANGE, ALTITUDE_RANGE, TrimSpec, linearize_trim, trim

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_SINGULAR = 0, 1, 2, 3


class UsageError(Exception):
    pass


# -- configuration -------------------------------------------------------------

_CONFIG_KEYS = {
    "core-model": {"params", "coeffs"},
    "trim-linearize": {"ts"},
    "ldi-synthesis": {"speeds", "altitudes", "rank_tolerance"},
    "sim-harness": {"step", "seed"},
    "cli": {"out"},
}


@dataclass
class RunConfig:
    params: Path = None
    coeffs: Path = None
    speeds: tuple = (SPEED_RANGE[0], SPEED_RANGE[1], 6)
    altitudes: tuple = (ALTITUDE_RANGE[0], ALTITUDE_RANGE[1], 5)
    rank_tolerance: float = 1e-8
    ts: float = DEFAULT_TS
    step: float = 0.005
    seed: int = 0
    out: Path = Path("hapd-out")

    def model(self):
        return load_model(self.params, self.coeffs)

    def grid(self):
        (v0, v1, nv), (h0, h1, nh) = self.speeds, self.altitudes
        return build_grid((v0, v1), int(nv), (h0, h1), int(nh))


def _axis(text, key, path):
    parts = text.split()
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError):
        raise ParseError(f"{key} must read 'low high count', got {text!r}", path) from None
    if len(parts) != 3:
        raise ParseError(f"{key} must read 'low high count', got {text!r}", path)
    return lo, hi, n


def load_config(path):
    """Read an INI-style config whose sections mirror the package modules.

    Unknown sections or keys are rejected. Relative paths are resolved
    against the directory holding the config file.
    """
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ParseError(f"cannot read config: {exc.strerror}", path) from exc
    except configparser.Error as exc:
        raise ParseError(str(exc).replace("\n", " "), path, getattr(exc, "lineno", None)) from None
    cfg = RunConfig()
    base = path.parent
    for section in parser.sections():
        if section not in _CONFIG_KEYS:
            raise ParseError(f"unknown config section [{section}]", path)
        for key, value in parser.items(section):
            if key not in _CONFIG_KEYS[section]:
                raise ParseError(f"unknown key {key!r} in [{section}]", path)
            try:
                if key in ("params", "coeffs", "out"):
                    setattr(cfg, key, base / value)
                elif key in ("speeds", "altitudes"):
                    setattr(cfg, key, _axis(value, key, path))
                elif key == "seed":
                    cfg.seed = int(value)
                else:
                    setattr(cfg, key, float(value))
            except ValueError:
                raise ParseError(f"[{section}] {key}: bad value {value!r}", path) from None
    for key in ("params", "coeffs"):
        p = getattr(cfg, key)
        if p is not None and not p.exists():
            raise ParseError(f"{key} file does not exist", p)
    return cfg


def _config_from_args(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.out is not None:
        cfg.out = Path(args.out)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.ts is not None:
        if not args.ts > 0:
            raise UsageError("--ts must be positive")
        cfg.ts = args.ts
    if getattr(args, "grid", None):
        try:
            nv, nh = (int(s) for s in args.grid.lower().split("x"))
        except ValueError:
            raise UsageError(f"--grid must look like 6x5, got {args.grid!r}") from None
        cfg.speeds = cfg.speeds[:2] + (nv,)
        cfg.altitudes = cfg.altitudes[:2] + (nh,)
    return cfg


# -- scenarios -------------------------------------------------------------------

_SCENARIO_KEYS = {"mode", "vtas", "alt", "duration", "step", "wind", "perturb", "schedule",
                  "delta", "nldi", "pldi", "reference"}
_ANGLE_STATES = {"alpha", "beta", "phi", "theta"}
_RATE_STATES = {"p", "q", "r"}


@dataclass
class Scenario:
    mode: str
    vtas: float
    alt: float
    duration: float
    step: float
    wind: WindVector
    perturb: np.ndarray
    schedule: list
    delta: str
    nldi: Path
    pldi: Path
    reference: str


def _input_deviation(tokens, path, lineno):
    du = np.zeros(N_INPUTS)
    for tok in tokens:
        name, _, val = tok.partition(":")
        try:
            v = float(val)
        except ValueError:
            raise ParseError(f"bad schedule entry {tok!r}", path, lineno) from None
        if name == "elevators":
            du[ELEVATORS] = v * DEG
        elif name == "ailerons":
            du[[6, 8]] = v * DEG
            du[[7, 9]] = -v * DEG
        elif name == "rudders":
            du[[10, 11]] = v * DEG
        elif name == "thrust":
            du[N_SURFACES] = v
        elif name.startswith("delta[") and name.endswith("]"):
            try:
                i = int(name[6:-1])
            except ValueError:
                raise ParseError(f"bad surface index in {tok!r}", path, lineno) from None
            if not 1 <= i <= N_SURFACES:
                raise ParseError(f"surface index {i} outside 1..{N_SURFACES}", path, lineno)
            du[i - 1] = v * DEG
        else:
            raise ParseError(f"unknown input {name!r} (elevators, ailerons, rudders, thrust, delta[i])",
                             path, lineno)
    return du


def load_scenario(path, cfg):
    """Parse a scenario file (``key = value``; angles in degrees)."""
    path = Path(path)
    e = read_kv(path)
    for key, (_, lineno) in e.items():
        if key not in _SCENARIO_KEYS:
            raise ParseError(f"unknown scenario key {key!r}", path, lineno)

    def num(key, default=None):
        if key not in e:
            if default is None:
                raise ParseError(f"missing scenario key {key!r}", path)
            return default
        v, lineno = e[key]
        try:
            return float(v)
        except ValueError:
            raise ParseError(f"{key}: not a number: {v!r}", path, lineno) from None

    mode, mline = e.get("mode", ("nonlinear", None))
    if mode not in ("nonlinear", "ldi"):
        raise ParseError(f"mode must be 'nonlinear' or 'ldi', got {mode!r}", path, mline)
    wind = WindVector()
    if "wind" in e:
        v, lineno = e["wind"]
        try:
            wind = WindVector(*(float(s) for s in v.split()))
        except (TypeError, ValueError):
            raise ParseError("wind needs three numbers 'u v w' in m/s", path, lineno) from None
    perturb = np.zeros(N_STATES)
    if "perturb" in e:
        v, lineno = e["perturb"]
        for tok in v.split():
            name, _, val = tok.partition(":")
            unit_deg = name.endswith("_deg")
            base = name[:-4] if unit_deg else name
            if base not in STATE_NAMES:
                raise ParseError(f"unknown state {base!r} in perturb", path, lineno)
            try:
                x = float(val)
            except ValueError:
                raise ParseError(f"bad perturb entry {tok!r}", path, lineno) from None
            perturb[STATE_NAMES.index(base)] = x * DEG if unit_deg else x
    schedule = [(0.0, np.zeros(N_INPUTS))]
    if "schedule" in e:
        v, lineno = e["schedule"]
        schedule = []
        for part in v.split(";"):
            toks = part.split()
            if not toks:
                continue
            try:
                t = float(toks[0])
            except ValueError:
                raise ParseError(f"schedule segment {part.strip()!r} must start with a time", path, lineno) from None
            schedule.append((t, _input_deviation(toks[1:], path, lineno)))
        if not schedule or schedule[0][0] > 0.0:
            schedule.insert(0, (0.0, np.zeros(N_INPUTS)))
        times = [t for t, _ in schedule]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ParseError("schedule times must be strictly increasing", path, lineno)
    reference, rline = e.get("reference", ("local", None))
    if reference not in ("local", "nldi"):
        raise ParseError(f"reference must be 'local' or 'nldi', got {reference!r}", path, rline)
    out = cfg.out
    return Scenario(
        mode=mode, vtas=num("vtas"), alt=num("alt"), duration=num("duration"),
        step=num("step", cfg.step), wind=wind, perturb=perturb, schedule=schedule,
        delta=e.get("delta", ("zero", None))[0],
        nldi=path.parent / e["nldi"][0] if "nldi" in e else out / "nldi.txt",
        pldi=path.parent / e["pldi"][0] if "pldi" in e else out / "pldi",
        reference=reference,
    )


def _delta_policy(spec, cfg, pldi_path, nldi):
    kind, _, arg = spec.partition(":")
    if kind == "zero":
        return DeltaPolicy.zero()
    if kind == "random":
        return DeltaPolicy.random_contraction(int(arg) if arg else cfg.seed)
    if kind == "vertex":
        pldi, _ = archive.load_pldi(pldi_path)
        i = int(arg)
        if not 0 <= i < len(pldi):
            raise UsageError(f"vertex index {i} outside 0..{len(pldi) - 1}")
        return DeltaPolicy.vertex_replay(i, verify_coverage(nldi, pldi))
    raise UsageError(f"unknown delta policy {spec!r} (zero, random[:seed], vertex:i)")


# -- commands ---------------------------------------------------------------------

def _need_point(args):
    if args.vtas is None or args.alt is None:
        raise UsageError("--vtas and --alt are required")
    return args.vtas, args.alt


def _trim(model, V, h):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = trim(TrimSpec(V, h), model)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return result


def _warn_outside(V, h):
    if not (SPEED_RANGE[0] <= V <= SPEED_RANGE[1] and ALTITUDE_RANGE[0] <= h <= ALTITUDE_RANGE[1]):
        print(f"warning: V={V} m/s, h={h} m is outside the design envelope", file=sys.stderr)


def cmd_trim(args, cfg):
    V, h = _need_point(args)
    model = cfg.model()
    try:
        result = _trim(model, V, h)
    except TrimError as exc:
        print(f"trim failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / f"trim_V{V:g}_h{h:g}.txt"
    archive.atomic_write(path, archive.format_trim(result))
    x, u = result.x_trim, result.u_trim
    print(f"trim V_TAS = {V:g} m/s, h = {h:g} m")
    print(f"  residual  {result.residual_norm:.3e}")
    print(f"  alpha     {x[1] / DEG:.4f} deg")
    print(f"  theta     {x[7] / DEG:.4f} deg")
    print(f"  elevator  {u[0] / DEG:.4f} deg")
    print(f"  thrust    {u[N_SURFACES]:.4f} N")
    print(f"  eta_s     {x[8]:.6f}")
    print(f"written {path}")
    return EXIT_OK


def cmd_linearize(args, cfg):
    V, h = _need_point(args)
    model = cfg.model()
    try:
        result = _trim(model, V, h)
        lin = linearize_trim(result, model)
    except (TrimError, LinearizationError) as exc:
        print(f"linearization failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    disc = discretize(lin, cfg.ts)
    cfg.out.mkdir(parents=True, exist_ok=True)
    path = cfg.out / f"linear_V{V:g}_h{h:g}.txt"
    archive.save_linear_model(path, lin, disc)
    print(f"linear model at V_TAS = {V:g} m/s, h = {h:g} m, Ts = {cfg.ts:g} s")
    print("continuous eigenvalues:")
    for ev in sorted(lin.eigenvalues(), key=lambda z: (z.real, z.imag)):
        print(f"  {ev.real: .6f} {ev.imag:+.6f}j")
    print(f"written {path}")
    return EXIT_OK


def _write_coverage(out, report):
    archive.atomic_write(out / "coverage.txt", report.format() + "\n")
    archive.atomic_write(out / "coverage.csv", archive.coverage_csv(report))


def cmd_synth(args, cfg):
    model = cfg.model()
    grid = cfg.grid()
    try:
        pldi = build_pldi(grid, model, cfg.ts)
    except VertexError as exc:
        print(f"synthesis aborted: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    cfg.out.mkdir(parents=True, exist_ok=True)
    sha = archive.save_pldi(cfg.out / "pldi", pldi)
    try:
        nldi = fit_nldi(pldi, rank_tolerance=cfg.rank_tolerance, strict=False)
    except FitError as exc:
        print(f"NLDI fit failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    archive.export_nldi(cfg.out / "nldi.txt", nldi, sha)
    report = verify_coverage(nldi, pldi)
    _write_coverage(cfg.out, report)
    print(f"{len(pldi)} vertices over V_TAS {grid.speeds[0]:g}-{grid.speeds[-1]:g} m/s, "
          f"h {grid.altitudes[0]:g}-{grid.altitudes[-1]:g} m; Ts = {cfg.ts:g} s")
    print(f"NLDI channels r = {nldi.rank} (numerical ranks left {nldi.meta['rank_left']}, "
          f"right {nldi.meta['rank_right']})")
    print(f"worst sigma_max(Delta_i) = {report.max_sigma:.9f}")
    print(f"worst relative reconstruction residual = {report.max_relative_residual:.3e}")
    print("coverage PASS" if report.passed else "coverage FAIL")
    return EXIT_OK if report.passed else EXIT_NUMERICAL


def cmd_verify(args, cfg):
    nldi_path = Path(args.nldi) if args.nldi else cfg.out / "nldi.txt"
    pldi, sha = archive.load_pldi(cfg.out / "pldi")
    nldi = archive.import_nldi(nldi_path)
    recorded = nldi.meta.get("grid_manifest_sha256")
    if recorded is not None and recorded != sha:
        print("warning: NLDI was fitted to a different grid manifest", file=sys.stderr)
    report = verify_coverage(nldi, pldi)
    print(report.format())
    return EXIT_OK if report.passed else EXIT_NUMERICAL


def _schedule_for(sc, u_trim):
    times = tuple(t for t, _ in sc.schedule)
    inputs = tuple(u_trim + du for _, du in sc.schedule)
    return ControlSchedule(times, inputs)


def _ldi_inputs(sc, steps, Ts):
    sched = ControlSchedule(tuple(t for t, _ in sc.schedule), tuple(du for _, du in sc.schedule))
    return np.array([sched(k * Ts) for k in range(steps)])


def _run_nonlinear(sc, model):
    result = _trim(model, sc.vtas, sc.alt)
    x0 = result.x_trim + sc.perturb
    scenario = SimScenario(x0, _schedule_for(sc, result.u_trim), sc.alt, sc.duration, sc.step, sc.wind)
    return result, integrate_nonlinear(scenario, model)


def cmd_simulate(args, cfg):
    sc = load_scenario(args.scenario, cfg)
    cfg.out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.scenario).stem
    if sc.mode == "nonlinear":
        model = cfg.model()
        _, traj = _run_nonlinear(sc, model)
        path = cfg.out / f"{stem}.csv"
        archive.atomic_write(path, archive.trajectory_csv(traj))
    else:
        nldi = archive.import_nldi(sc.nldi)
        policy = _delta_policy(sc.delta, cfg, sc.pldi, nldi)
        steps = int(round(sc.duration / nldi.Ts))
        traj = simulate_discrete_ldi(nldi, policy, _ldi_inputs(sc, steps, nldi.Ts), steps, sc.perturb)
        path = cfg.out / f"{stem}.csv"
        archive.atomic_write(path, archive.ldi_trajectory_csv(traj))
    print(f"written {path}")
    return EXIT_OK


def cmd_compare(args, cfg):
    sc = load_scenario(args.scenario, cfg)
    model = cfg.model()
    result, nl = _run_nonlinear(sc, model)
    if sc.reference == "nldi":
        nldi = archive.import_nldi(sc.nldi)
    else:
        _, _, disc = build_vertex(sc.vtas, sc.alt, model, cfg.ts)
        nldi = NldiModel.nominal(disc)
    steps = int(round(sc.duration / nldi.Ts))
    ldi = simulate_discrete_ldi(nldi, DeltaPolicy.zero(), _ldi_inputs(sc, steps, nldi.Ts), steps, sc.perturb)
    cmp = compare_responses(nl, ldi, result.x_trim)
    cfg.out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.scenario).stem
    archive.atomic_write(cfg.out / f"{stem}_compare.txt", cmp.format() + "\n")
    archive.atomic_write(cfg.out / f"{stem}_compare.csv", archive.comparison_csv(cmp))
    print(cmp.format())
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config with [core-model], [trim-linearize], "
                        "[ldi-synthesis], [sim-harness], [cli] sections")
    common.add_argument("--out", help="output directory (default from config, else ./hapd-out)")
    common.add_argument("--seed", type=int, help="seed for random Delta policies")
    common.add_argument("--ts", type=float, help="sample time in seconds (default 0.02)")
    point = argparse.ArgumentParser(add_help=False)
    point.add_argument("--vtas", type=float, help="true airspeed [m/s]")
    point.add_argument("--alt", type=float, help="altitude [m]")

    parser = argparse.ArgumentParser(
        prog="hapd", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("trim", parents=[common, point], help="trim at one flight condition")
    sub.add_parser("linearize", parents=[common, point], help="trim, linearize and discretize")
    p = sub.add_parser("synth", parents=[common], help="build the PLDI and fit the NLDI")
    p.add_argument("--grid", help="speeds x altitudes, e.g. 6x5")
    p = sub.add_parser("verify", parents=[common], help="check an NLDI against the stored PLDI")
    p.add_argument("--nldi", help="NLDI file (default OUT/nldi.txt)")
    p = sub.add_parser("simulate", parents=[common], help="run a scenario file and write CSV")
    p.add_argument("scenario")
    p = sub.add_parser("compare", parents=[common], help="nonlinear vs Delta=0 linear response")
    p.add_argument("scenario")
    return parser


_COMMANDS = {"trim": cmd_trim, "linearize": cmd_linearize, "synth": cmd_synth,
             "verify": cmd_verify, "simulate": cmd_simulate, "compare": cmd_compare}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = _config_from_args(args)
        return _COMMANDS[args.command](args, cfg)
    except SimulationAbort as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (ParseError, ValidationError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrimError, FitError, LinearizationError, VertexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except HapdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
