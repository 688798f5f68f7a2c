"""Command-line front end: ``entire-julia <subcommand> ...``."""
from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import errors
from .construction import Params, Schedule, build_schedule, cardioid_c, smallest_valid_R, verify_lemmas
from .logcomplex import LogComplex, LogComplexArray

OPERATION_ERRORS = (
    errors.DomainError, errors.ScheduleError, errors.FeasibilityError, errors.OutOfRange,
    errors.PrecisionLoss, errors.ResolutionError, errors.InsufficientScales, errors.NoBracket,
    errors.Unreachable, ValueError, OSError, KeyError, IndexError,
)


def _complex(s) -> complex:
    if isinstance(s, (int, float, complex)):
        return complex(s)
    s = str(s).replace(" ", "")
    if "," in s:
        re_, im = s.split(",")
        return complex(float(re_), float(im))
    return complex(s.replace("i", "j"))


def _levels(s):
    if s is None or isinstance(s, list):
        return s
    a, b = str(s).split(":")
    return list(range(int(a), int(b) + 1))


# ---------------------------------------------------------------------------

class Run:
    """Output directory plus the manifest written beside the outputs."""

    def __init__(self, args):
        self.args = args
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs = []
        self.schedule_hash = None

    def path(self, name) -> Path:
        self.outputs.append(name)
        return self.out / name

    def write_json(self, name, obj):
        self.path(name).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def manifest(self, status):
        cfg = {k: v for k, v in vars(self.args).items() if k != "func"}
        cfg = json.loads(json.dumps(cfg, default=str))
        versions = {"python": platform.python_version()}
        for pkg in ("entire-julia", "numpy", "scipy", "scikit-learn", "mpmath"):
            try:
                versions[pkg] = metadata.version(pkg)
            except metadata.PackageNotFoundError:
                versions[pkg] = None
        m = {"command": self.args.command, "config": cfg, "seed": self.args.seed,
             "threads": self.args.threads, "schedule_hash": self.schedule_hash,
             "versions": versions, "outputs": self.outputs, "status": status,
             "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z")}
        (self.out / "manifest.json").write_text(json.dumps(m, indent=2, sort_keys=True) + "\n")


def _load_schedule(run: Run) -> Schedule:
    if not run.args.schedule:
        raise ValueError("--schedule is required")
    s = Schedule.from_json(Path(run.args.schedule).read_text())
    run.schedule_hash = s.hash()
    return s


def _point(args, schedule=None) -> LogComplex:
    if args.z is not None:
        return LogComplex.from_cartesian(_complex(args.z))
    if args.log_r is None:
        raise ValueError("give --z or --log-r/--theta")
    lr = float(args.log_r)
    lo = 0.0
    if args.anchor_k is not None:
        from .logcomplex import dd_add
        lr, lo = dd_add(*schedule.logR(int(args.anchor_k)), lr, 0.0)
    return LogComplex(lr, float(args.theta or 0.0), 0.0, lo)


def _window(args):
    from .grid import CartesianWindow, LogPolarWindow, window_from_dict
    from .render import annulus_window

    if args.window:
        w = args.window
        return window_from_dict(json.loads(Path(w).read_text()) if Path(w).exists() else json.loads(w))
    if args.annulus is not None:
        return LogPolarWindow(-math.log(4), math.log(4), -math.pi, math.pi, anchor_k=int(args.annulus))
    return CartesianWindow(_complex(args.center), float(args.width), float(args.height or args.width))


# ---------------------------------------------------------------------------
# subcommands

def cmd_schedule(run: Run) -> int:
    a = run.args
    mu = _complex(a.mu)
    R = smallest_valid_R(cardioid_c(mu), a.N) if str(a.R) == "auto" else float(a.R)
    s = build_schedule(Params(mu, a.N, R, a.K, not a.exploratory))
    run.schedule_hash = s.hash()
    run.path("schedule.json").write_text(s.to_json() + "\n")
    print(json.dumps({"schedule": str(run.out / "schedule.json"), "R": R, "hash": s.hash()}))
    return 0


def cmd_verify(run: Run) -> int:
    s = _load_schedule(run)
    rep = verify_lemmas(s, n_samples=run.args.samples, seed=run.args.seed)
    if s.params.conformant:
        from .partition import check_mapping

        rep.extend(check_mapping(s, n_samples=run.args.samples, seed=run.args.seed))
    run.path("verify.json").write_text(rep.to_json() + "\n")
    for e in rep.entries:
        print(f"{e['id']:<22} {e['status']:<9} worst={e['worst_value']} tol={e['tolerance']}")
    return 0 if rep.passed else 1


def cmd_classify(run: Run) -> int:
    from .partition import classify

    s = _load_schedule(run)
    lab = classify(s, _point(run.args, s))
    out = {"zone": lab.zone, "k": lab.k, "subzone": lab.subzone, "petal_hint": lab.petal_hint,
           "code": lab.code}
    run.write_json("classify.json", out)
    print(json.dumps(out))
    return 0


def cmd_orbit(run: Run) -> int:
    from .partition import orbit

    s = _load_schedule(run)
    it = orbit(s, _point(run.args, s), run.args.max_iter)
    with open(run.path("orbit.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "zone", "k", "subzone", "log_abs", "phase"])
        for st in it.steps:
            w.writerow([st.n, st.label.zone, st.label.k if st.label.k is not None else "",
                        st.label.subzone or "", repr(st.log_abs), repr(st.phase)])
    out = {"fate": it.fate.tag, "detail": it.fate.detail, "backward_events": it.backward_events,
           "flags": it.flags}
    run.write_json("orbit_fate.json", out)
    print(json.dumps(out, default=str))
    return 0


def cmd_render(run: Run) -> int:
    from .render import render_fates, render_regions, write_pgm, write_ppm, write_sidecar

    a = run.args
    s = _load_schedule(run)
    win = _window(a)
    res = (a.res, a.res_y or a.res)
    if a.what == "regions":
        g = render_regions(s, win, res, threads=a.threads)
        write_pgm(g, run.path("regions.pgm"))
        write_sidecar(g, run.path("regions.json"), s.hash())
    else:
        g = render_fates(s, win, res, a.max_iter, threads=a.threads)
        write_pgm(g, run.path("fates.pgm"))
        write_ppm(g, run.path("fates.ppm"))
        write_pgm(g.layers["boundary"].astype(np.uint8) * 255, run.path("fates_boundary.pgm"))
        write_sidecar(g, run.path("fates.json"), s.hash())
    print(json.dumps({"outputs": run.outputs}))
    return 0


def _read_points_csv(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, :2]


def cmd_dim(run: Run) -> int:
    from . import dimension as D
    from .render import read_pgm

    a = run.args
    levels = _levels(a.levels)
    if a.points and str(a.points).isdigit():
        # `dim quad --points 1000000` gives a sample count, not a file
        a.n_points, a.points = int(a.points), None
    if a.what == "box":
        if a.mask:
            table = D.box_count(mask=read_pgm(a.mask) > 0, levels=levels)
        elif a.points:
            table = D.box_count(points=_read_points_csv(a.points), levels=levels)
        else:
            raise ValueError("give --mask or --points")
        est = D.fit_dimension(table)
        table.to_csv(run.path("counts.csv"))
    elif a.what == "whitney":
        if not a.mask:
            raise ValueError("--mask (nonzero pixels = K) is required")
        K = read_pgm(a.mask) > 0
        dec = D.whitney_decompose(~K)
        ce = D.critical_exponent(dec, fit_levels=levels)
        ce.to_csv(run.path("whitney_sums.csv"))
        est = ce.as_estimate((2.0 ** -dec.M, 1.0))
    else:
        est = D.estimate_quadratic_dim(_complex(a.c), a.n_points, a.seed, levels)
        est.counts_table.to_csv(run.path("counts.csv"))
    run.write_json("estimate.json", est.to_dict())
    print(est.to_json())
    return 0


def cmd_find_c(run: Run) -> int:
    from .dimension import find_c_for_dimension

    a = run.args
    r = find_c_for_dimension(a.s, a.tol, a.n_points, a.seed)
    out = {"mu": r.mu, "c": [r.c.real, r.c.imag], "estimate": r.estimate, "best_effort": r.best_effort,
           "history": [list(h) for h in r.history]}
    run.write_json("find_c.json", out)
    print(json.dumps(out))
    return 0


def cmd_fates(run: Run) -> int:
    from .partition import compute_S_sequence, fate_statistics

    a = run.args
    s = _load_schedule(run)
    rng = np.random.default_rng(a.seed)
    hi, lo = s.logR(a.ring_k)
    lr = rng.uniform(hi + math.log(a.ring_lo), hi + math.log(a.ring_hi), a.count)
    th = rng.uniform(-math.pi, math.pi, a.count)
    seeds = LogComplexArray(lr, th)
    S = None
    if a.fast:
        S = compute_S_sequence(s, log_S0=s.logR(1)[0] + math.log(8))
    summ = fate_statistics(s, seeds, a.max_iter, S)
    summ.to_csv(run.path("fates.csv"))
    out = {"counts": summ.counts, "backward_histogram": summ.backward_histogram,
           "fraction_with_backward": summ.fraction_with_backward()}
    run.write_json("fates_summary.json", out)
    print(json.dumps(out))
    return 0


def cmd_s_seq(run: Run) -> int:
    from .partition import compute_S_sequence

    a = run.args
    s = _load_schedule(run)
    log_S0 = math.log(a.S0) if a.S0 else s.logR(1)[0] + math.log(8)
    seq = compute_S_sequence(s, log_S0=log_S0, length=a.length)
    with open(run.path("s_seq.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "log_S"])
        for i, v in enumerate(seq.log_S):
            w.writerow([i, repr(float(v))])
    out = {"log_S": [float(v) for v in seq.log_S], "truncated": seq.truncated}
    run.write_json("s_seq.json", out)
    print(json.dumps(out))
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    def globals_parser(suppress):
        g = argparse.ArgumentParser(add_help=False)
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        g.add_argument("--config", default=d(None), help="JSON file of option defaults (flags override it)")
        g.add_argument("--seed", type=int, default=d(0))
        g.add_argument("--threads", type=int, default=d(1))
        g.add_argument("--out", default=d("."))
        return g

    # globals may come before or after the subcommand; the copy on the
    # subparsers must not reset values given before it
    common = globals_parser(False)
    late = globals_parser(True)

    p = argparse.ArgumentParser(prog="entire-julia", parents=[common],
                                description="Schedules, verification, rendering and dimension estimates.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, **kw):
        sp = sub.add_parser(name, parents=[late], **kw)
        sp.set_defaults(func=func)
        return sp

    sp = add("schedule", cmd_schedule, help="build and store a schedule")
    sp.add_argument("--mu", default="0")
    sp.add_argument("--N", type=int, default=10)
    sp.add_argument("--R", default="auto", help="radius, or 'auto' for the smallest valid one")
    sp.add_argument("--K", type=int, default=6)
    sp.add_argument("--exploratory", action="store_true", help="allow N < 10 and skip conformance")

    sp = add("verify", cmd_verify, help="re-check a schedule; exit 1 on failure")
    sp.add_argument("--schedule")
    sp.add_argument("--samples", type=int, default=4096)

    for name, func in (("classify", cmd_classify), ("orbit", cmd_orbit)):
        sp = add(name, func)
        sp.add_argument("--schedule")
        sp.add_argument("--z", help="point as 're,im' or a Python complex literal")
        sp.add_argument("--log-r", type=float)
        sp.add_argument("--theta", type=float, default=0.0)
        sp.add_argument("--anchor-k", type=int, help="--log-r is relative to log R_k")
        if name == "orbit":
            sp.add_argument("--max-iter", type=int, default=100)

    sp = add("render", cmd_render, help="region or fate raster")
    sp.add_argument("what", choices=["regions", "fates"])
    sp.add_argument("--schedule")
    sp.add_argument("--window", help="window JSON (file or inline)")
    sp.add_argument("--annulus", type=int, help="log-polar window over A_k")
    sp.add_argument("--center", default="0")
    sp.add_argument("--width", type=float, default=4.0)
    sp.add_argument("--height", type=float)
    sp.add_argument("--res", type=int, default=512)
    sp.add_argument("--res-y", type=int)
    sp.add_argument("--max-iter", type=int, default=50)

    sp = add("dim", cmd_dim, help="dimension estimates")
    sp.add_argument("what", choices=["box", "whitney", "quad"])
    sp.add_argument("--mask", help="PGM; nonzero pixels form the set")
    sp.add_argument("--points", help="CSV with x,y columns and a header row, or a sample count for quad")
    sp.add_argument("--levels", help="a:b inclusive")
    sp.add_argument("--c", default="0")
    sp.add_argument("--points-count", dest="n_points", type=int, default=10 ** 6)

    sp = add("find-c", cmd_find_c, help="search mu on the real ray for a target dimension")
    sp.add_argument("--s", type=float, required=False, default=1.05)
    sp.add_argument("--tol", type=float, default=0.02)
    sp.add_argument("--points-count", dest="n_points", type=int, default=2 * 10 ** 5)

    sp = add("fates", cmd_fates, help="fate statistics of random seeds in an annulus")
    sp.add_argument("--schedule")
    sp.add_argument("--ring-k", type=int, default=1)
    sp.add_argument("--ring-lo", type=float, default=2.0, help="inner radius in units of R_k")
    sp.add_argument("--ring-hi", type=float, default=2.0 * (1 + 1e-3))
    sp.add_argument("--count", type=int, default=4096)
    sp.add_argument("--max-iter", type=int, default=50)
    sp.add_argument("--fast", action="store_true", help="test fast escape against S_n")

    sp = add("s-seq", cmd_s_seq, help="S_n sequence from S_0 in B_1")
    sp.add_argument("--schedule")
    sp.add_argument("--S0", type=float)
    sp.add_argument("--length", type=int, default=8)
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = json.loads(Path(args.config).read_text())
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
        args = parser.parse_args(argv)
    run = Run(args)
    try:
        code = args.func(run)
    except OPERATION_ERRORS as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        run.manifest("error")
        return 1
    run.manifest("ok" if code == 0 else "failed")
    return code


if __name__ == "__main__":
    sys.exit(main())
