"""Command-line front end.

Every command accepts ``--config FILE`` (``key = value`` lines, ``#`` comments;
flags override file values), ``--threads N`` (fallback ``LOGSP_THREADS``),
``--out DIR`` and ``-v``.  Each run writes a manifest of the resolved
parameters to ``DIR/manifest.json`` (or to stderr without ``--out``);
``logsp rerun DIR/manifest.json`` repeats it.

Exit codes: 0 success, 1 failed verification, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, energy, logkernel
from .energy import Params
from .errors import FiberStructureError, NoInteriorMax
from .fiber import ScaledFiber, amplitude_scan
from .fieldio import read_field, write_field
from .grid import Grid2D
from .potentials import (check_lemma51, check_V0, check_V1, check_V2, constant, parse_potential,
                         power)
from .solver import InitialProfile, SolveConfig, lambda_family_study, solve, verify_ground_state

SCHEMA = "logsp/1"
log = logging.getLogger("logsp")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list of numbers, got {text!r}") from None


# --- parser ---------------------------------------------------------------------------

def _common(p):
    p.add_argument("--config", help="key = value file; flags take precedence")
    p.add_argument("--threads", type=int, help="worker threads (default LOGSP_THREADS or 1)")
    p.add_argument("--out", help="output directory")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _physics(p, need_lambda=False):
    p.add_argument("--potential", help="power:Q, constant:C or checkerboard")
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--p", type=float, default=4.0)
    if need_lambda:
        p.add_argument("--lambda", dest="lam", type=float, default=1.0)


def _grid(p, L=12.0, n=257):
    p.add_argument("--L", type=float, default=L, help="half-width of the box [-L, L]^2")
    p.add_argument("--n", type=int, default=n, help="nodes per axis")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="logsp", description="Planar Schrodinger-Poisson with logarithmic kernel")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("solve", help="compute a ground-state candidate")
    _common(p)
    _physics(p)
    _grid(p)
    p.add_argument("--manifold", choices=["nehari", "np", "nehari_pohozaev"], default="nehari")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--grad-tol", type=float, default=1e-6)
    p.add_argument("--init", choices=["gaussian", "file", "random"], default="gaussian")
    p.add_argument("--init-file")
    p.add_argument("--width", type=float)
    p.add_argument("--center", type=_floats, default=[0.0, 0.0])
    p.add_argument("--amplitude", type=float)
    p.add_argument("--probes", type=int, default=20)
    p.add_argument("--pohozaev-tol", type=float, default=1e-2)

    p = sub.add_parser("energy-report", help="energy breakdown of a stored field")
    _common(p)
    _physics(p, need_lambda=True)
    p.add_argument("--field")

    p = sub.add_parser("fiber-scan", help="tabulate a fiber through a stored field")
    _common(p)
    _physics(p, need_lambda=True)
    p.add_argument("--field")
    p.add_argument("--mode", choices=["amplitude", "scaled"], default="amplitude")
    p.add_argument("--t-min", type=float, default=0.01)
    p.add_argument("--t-max", type=float, default=100.0)
    p.add_argument("--t-count", type=int, default=200)

    p = sub.add_parser("check-potential", help="check the potential hypotheses")
    _common(p)
    _grid(p)
    p.add_argument("--potential", help="alternative to --kind: power:Q, constant:C, checkerboard")
    p.add_argument("--kind", choices=["power", "constant", "checkerboard"])
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--M", type=_floats, default=[1.5, 5.0], help="sublevel values")
    p.add_argument("--boxes", type=_floats, default=[8.0, 16.0, 32.0], help="box half-widths")
    p.add_argument("--spacing", type=float, default=0.02)

    p = sub.add_parser("kernel-selftest", help="FFT convolution vs direct double sum")
    _common(p)
    p.add_argument("--n", type=int, nargs="+", default=[32])
    p.add_argument("--L", type=float, default=4.0)
    p.add_argument("--fields", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)

    p = sub.add_parser("lambda-study", help="inf-sup bounds of the lambda family")
    _common(p)
    _physics(p)
    _grid(p, n=129)
    p.add_argument("--lambdas", type=_floats, default=[0.5, 0.6, 0.7, 0.8, 0.9, 1.0])
    p.add_argument("--probes", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("rerun", help="repeat a run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="override the output directory")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def _read_config(path: str) -> dict:
    out = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"{path}:{num}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        raise UsageError(parser.format_usage().strip())
    if getattr(ns, "config", None):
        sub = parser._subparsers._group_actions[0].choices[ns.command]
        actions = {a.dest: a for a in sub._actions}
        conf = _read_config(ns.config)
        defaults = {}
        for key, value in conf.items():
            key = {"lambda": "lam"}.get(key, key)
            act = actions.get(key)
            if act is None or key in ("config", "help"):
                raise UsageError(f"unknown config key {key!r} for {ns.command}")
            if act.nargs in ("+", "*"):
                # list defaults bypass argparse type conversion
                try:
                    value = [act.type(x) if act.type else x for x in value.split()]
                except (TypeError, ValueError):
                    raise UsageError(f"bad value for config key {key!r}: {value!r}") from None
            defaults[key] = value
        sub.set_defaults(**defaults)
        ns = parser.parse_args(argv)
        # verbose is a counter; string defaults are not converted by argparse
        if isinstance(ns.verbose, str):
            ns.verbose = int(ns.verbose)
    return ns


# --- helpers --------------------------------------------------------------------------

def _potential(ns):
    if getattr(ns, "potential", None):
        try:
            return parse_potential(ns.potential)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    raise UsageError(f"{ns.command}: --potential is required")


def _params(ns, lam=1.0) -> Params:
    try:
        return Params(ns.b, ns.p, lam)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _grid_of(ns, n=None) -> Grid2D:
    try:
        return Grid2D(ns.L, ns.n if n is None else n)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _field(ns):
    if not ns.field:
        raise UsageError(f"{ns.command}: --field is required")
    try:
        return read_field(ns.field)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read field: {exc}") from None


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _dump(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False)


def _emit_json(ns, obj, name="report.json"):
    text = _dump({"schema": SCHEMA, **obj})
    print(text)
    if ns.out:
        (Path(ns.out) / name).write_text(text + "\n", encoding="utf-8")


def _write_manifest(ns):
    args = {k: v for k, v in vars(ns).items() if k not in ("config",)}
    manifest = {
        "schema": SCHEMA,
        "command": ns.command,
        "version": __version__,
        "seed": getattr(ns, "seed", None),
        "threads": logkernel.get_threads(),
        "args": args,
        "config_file": getattr(ns, "config", None),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }
    text = _dump(manifest)
    if ns.out:
        Path(ns.out).mkdir(parents=True, exist_ok=True)
        (Path(ns.out) / "manifest.json").write_text(text + "\n", encoding="utf-8")
    else:
        print(text, file=sys.stderr)


# --- commands -------------------------------------------------------------------------

def cmd_solve(ns) -> int:
    V = _potential(ns)
    prm = _params(ns)
    grid = _grid_of(ns)
    manifold = "nehari" if ns.manifold == "nehari" else "nehari_pohozaev"
    if manifold == "nehari_pohozaev" and prm.p < 3:
        raise UsageError("nehari_pohozaev requires p ≥ 3")
    if manifold == "nehari" and prm.p < 4:
        raise UsageError("nehari requires p >= 4")
    if ns.init == "file" and not ns.init_file:
        raise UsageError("--init file needs --init-file")
    if len(ns.center) != 2:
        raise UsageError("--center takes two numbers")
    init = InitialProfile(kind=ns.init, center=tuple(ns.center), width=ns.width,
                          amplitude=ns.amplitude, path=ns.init_file, seed=ns.seed)
    try:
        cfg = SolveConfig(manifold=manifold, max_iters=ns.max_iters, grad_tol=ns.grad_tol,
                          initial=init)
        rep = solve(V, prm, cfg, grid, raise_on_failure=False)
    except (ValueError, NoInteriorMax, FiberStructureError) as exc:
        # Condition32Violated is a ValueError: the start has no Nehari point
        if isinstance(exc, (NoInteriorMax, FiberStructureError)):
            print(f"error: {exc}", file=sys.stderr)
            return 1
        raise UsageError(str(exc)) from None
    summary = verify_ground_state(rep, V, prm, probes=ns.probes, seed=ns.seed,
                                  pohozaev_tol=ns.pohozaev_tol)
    bd = energy.breakdown(rep.field, V, prm)
    out = {"report": rep.scalars(), "energy": bd.to_json_dict(),
           "verification": summary.to_dict()}
    if ns.out:
        d = Path(ns.out)
        write_field(d / "u_star.lspf", rep.field)
        _fiber_csv(d / "fiber_scan.csv", _scan_rows(rep.field, V, prm, manifold, 0.1, 10.0, 200))
        with open(d / "probes.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["probe", "fiber_sup", "I_star", "passes"])
            floor = summary.checks["minimax"]["floor"]
            for k, v in enumerate(summary.probe_values):
                w.writerow([k, repr(v), repr(rep.energy), v >= floor])
    _emit_json(ns, out)
    if not summary.passed:
        print("verification failed: " + ", ".join(summary.failures), file=sys.stderr)
        return 1
    return 0


def cmd_energy_report(ns) -> int:
    V = _potential(ns)
    prm = _params(ns, ns.lam)
    u = _field(ns)
    _emit_json(ns, {"field": ns.field, "potential": V.label, "b": prm.b, "p": prm.p,
                    "lambda": prm.lam, **energy.breakdown(u, V, prm).to_json_dict()})
    return 0


def _scan_rows(u, V, prm, mode, t_min, t_max, count):
    t = np.geomspace(t_min, t_max, count)
    if mode in ("amplitude", "nehari"):
        scan = amplitude_scan(u, V, prm, t)
    else:
        scan = ScaledFiber(u.values, u.grid, V, prm).scan(t)
    return list(scan.rows())


def _fiber_csv(target, rows):
    fh = open(target, "w", newline="") if target is not None else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["t", "h", "h_prime_sign"])
        for t, h, sg in rows:
            w.writerow([repr(t), repr(h), sg])
    finally:
        if target is not None:
            fh.close()


def cmd_fiber_scan(ns) -> int:
    V = _potential(ns)
    prm = _params(ns, ns.lam)
    u = _field(ns)
    if not 0 < ns.t_min < ns.t_max or ns.t_count < 2:
        raise UsageError("need 0 < --t-min < --t-max and --t-count >= 2")
    rows = _scan_rows(u, V, prm, ns.mode, ns.t_min, ns.t_max, ns.t_count)
    _fiber_csv(Path(ns.out) / "fiber_scan.csv" if ns.out else None, rows)
    return 0


def cmd_check_potential(ns) -> int:
    if ns.potential:
        V = _potential(ns)
    elif ns.kind == "power":
        V = power(ns.q)
    elif ns.kind == "constant":
        V = constant(ns.c)
    elif ns.kind == "checkerboard":
        V = parse_potential("checkerboard")
    else:
        raise UsageError("check-potential: --kind or --potential is required")
    grid = _grid_of(ns)
    try:
        v0 = check_V0(V, ns.M, ns.boxes, ns.spacing)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    v1 = check_V1(V, grid)
    v2 = check_V2(V)
    l51 = check_lemma51(V, grid)
    _emit_json(ns, {
        "potential": V.label,
        "box": {"L": grid.L, "n": grid.n, "sublevel_boxes": ns.boxes},
        "v0_verdict": v0.verdict,
        "alpha_hat": None if v1 is None else v1[0],
        "beta_hat": None if v1 is None else v1[1],
        "v2_verdict": v2.verdict,
        "lemma51_verdict": l51.verdict,
        "details": {"v0": v0.to_dict(), "v2": v2.to_dict(), "lemma51": l51.to_dict()},
    })
    return 0


def cmd_kernel_selftest(ns) -> int:
    rng = np.random.default_rng(ns.seed)
    rows = []
    for n in ns.n:
        grid = _grid_of(ns, n)
        worst = 0.0
        for _ in range(ns.fields):
            f = grid.field(rng.standard_normal((n, n)))
            g = grid.field(rng.standard_normal((n, n)))
            worst = max(worst, max(logkernel.selftest_errors(f, g).values()))
        rows.append((n, worst))
    lines = ["grid_size,max_relative_error"] + [f"{n},{e:.3e}" for n, e in rows]
    text = "\n".join(lines)
    print(text)
    if ns.out:
        (Path(ns.out) / "kernel_selftest.csv").write_text(text + "\n", encoding="utf-8")
    bad = [n for n, e in rows if not e <= ns.tol]
    if bad:
        print(f"kernel self-test above {ns.tol:g} for n = {bad}", file=sys.stderr)
        return 1
    return 0


def cmd_lambda_study(ns) -> int:
    V = _potential(ns)
    prm = _params(ns)
    try:
        study = lambda_family_study(V, prm, ns.lambdas, ns.probes, ns.seed, _grid_of(ns))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit_json(ns, {"potential": V.label, "b": prm.b, "p": prm.p, **study.to_dict()})
    if not study.passed:
        print("lambda-family checks failed", file=sys.stderr)
        return 1
    return 0


COMMANDS = {
    "solve": cmd_solve,
    "energy-report": cmd_energy_report,
    "fiber-scan": cmd_fiber_scan,
    "check-potential": cmd_check_potential,
    "kernel-selftest": cmd_kernel_selftest,
    "lambda-study": cmd_lambda_study,
}


def _from_manifest(ns) -> argparse.Namespace:
    try:
        data = json.loads(Path(ns.manifest).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read manifest: {exc}") from None
    if data.get("schema") != SCHEMA or data.get("command") not in COMMANDS:
        raise UsageError("not a logsp manifest")
    args = dict(data["args"])
    args["config"] = None
    if ns.out is not None:
        args["out"] = ns.out
    args["verbose"] = max(ns.verbose, args.get("verbose", 0) or 0)
    return argparse.Namespace(**args)


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        ns = parse_args(argv)
        if ns.command == "rerun":
            ns = _from_manifest(ns)
        logging.basicConfig(level=logging.WARNING - 10 * min(ns.verbose, 2),
                            format="%(levelname)s %(name)s: %(message)s")
        if getattr(ns, "threads", None) is not None:
            if ns.threads < 1:
                raise UsageError("--threads must be >= 1")
            logkernel.set_threads(ns.threads)
        else:
            logkernel.set_threads(None)
            ns.threads = logkernel.get_threads()
        _write_manifest(ns)
        start = time.perf_counter()
        code = COMMANDS[ns.command](ns)
        log.info("%s finished in %.2f s", ns.command, time.perf_counter() - start)
        return code
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
