"""Command-line entry point: ``adiaq <command> [options]``.

Every command that computes something writes ``<name>.csv`` plus a
``<name>.meta`` sidecar (``key = value`` lines) into ``--out-dir``.
Exit status is 0 on success, 1 with a one-line diagnostic on a module
error, and 2 for malformed arguments.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from ._version import __version__
from .ec3 import generate_unique
from .evolution import EvolutionConfig, evolve, find_runtime
from .experiments import DEFAULT_TEMPERATURES, SweepPlan, provenance, run
from .operators import HamiltonianSpec, Perturbation
from .tables import write_csv, write_metadata

logger = logging.getLogger("adiaq")

SWEEP_KINDS = ("k1", "k2", "k3", "decoherence", "runtime")


def parse_grid(text: str) -> tuple[float, ...]:
    """``a,b,c`` (list), ``lo:hi:step`` (inclusive range) or ``log:lo:hi:num`` (geometric)."""
    text = text.strip()
    try:
        if text.startswith("log:"):
            lo, hi, num = text[4:].split(":")
            values = np.geomspace(float(lo), float(hi), int(num))
        elif ":" in text:
            lo, hi, step = (float(x) for x in text.split(":"))
            if step <= 0 or hi < lo:
                raise ValueError
            count = int(math.floor((hi - lo) / step + 1e-9)) + 1
            values = np.round(lo + step * np.arange(count), 12)
        else:
            values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None
    if len(values) == 0:
        raise argparse.ArgumentTypeError("grid is empty")
    return tuple(float(v) for v in values)


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad list {text!r}") from None


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad list {text!r}") from None


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0, help="instance generator seed (default 0)")
    g.add_argument("--out-dir", default=".", help="directory for CSV and metadata files")
    g.add_argument("--tol", type=float, default=1e-8,
                   help="integrator relative tolerance; the absolute tolerance is 1%% of it")
    g.add_argument("--grid", type=parse_grid, default=None,
                   help="sweep grid: a,b,c | lo:hi:step | log:lo:hi:num")
    g.add_argument("--n", type=int, default=None, help="bit count of a generated instance")
    g.add_argument("--instance", default=None, help="instance file (overrides --n/--seed)")
    g.add_argument("--big", action="store_true", help="allow dense work up to 14 bits")
    g.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="adiaq", description="Adiabatic EC3 simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a random unique-solution instance")
    g.add_argument("--output", default=None, help="file name (default ec3_n<N>_seed<S>.txt in --out-dir)")

    s = sub.add_parser("spectrum", parents=[common], help="low-lying spectrum and minimum gap")
    s.add_argument("--points", type=int, default=201, help="uniform s grid size")
    s.add_argument("--levels", type=int, default=None, help="levels per row (default all)")

    e = sub.add_parser("evolve", parents=[common], help="one closed-system run")
    when = e.add_mutually_exclusive_group(required=True)
    when.add_argument("--T", type=float, help="total run time")
    when.add_argument("--target", type=float, help="calibrate T to this success probability")
    e.add_argument("--target-tol", type=float, default=0.02)
    e.add_argument("--kind", choices=("K1", "K2", "K3"), default=None, help="control-error field")
    e.add_argument("--strength", type=float, default=0.0, help="C1, C2 or integer C3")
    e.add_argument("--direction-seed", type=int, default=0)
    e.add_argument("--swap-s", action="store_true", help="use 1-s in the K1 ramp")
    e.add_argument("--record", type=float, default=None, help="trajectory sampling interval")

    d = sub.add_parser("decohere", parents=[common], help="master-equation runs over T (n <= 4)")
    _decoherence_options(d)

    w = sub.add_parser("sweep", parents=[common], help="parameter sweep reproducing one experiment")
    w.add_argument("--kind", choices=SWEEP_KINDS, required=True)
    w.add_argument("--direction-seeds", type=_int_list, default=(0, 1, 2, 3))
    w.add_argument("--target", type=float, default=None, help="calibration target (1/2 or 1/8 by kind)")
    w.add_argument("--target-tol", type=float, default=0.02)
    w.add_argument("--run-time", type=float, default=None, help="skip calibration and use this T")
    w.add_argument("--points", type=int, default=201, help="s grid size for gap searches")
    w.add_argument("--c3-extent", type=float, default=2.0, help="default K3 grid end in units of nT/pi")
    _decoherence_options(w)
    return parser


def _decoherence_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--temperatures", type=_float_list, default=DEFAULT_TEMPERATURES)
    p.add_argument("--lambda-sq", type=_float_list, default=(0.0, 0.1))


def _plan(args, kind: str) -> SweepPlan:
    return SweepPlan(
        kind=kind,
        n=args.n,
        seed=args.seed,
        instance_path=args.instance,
        grid=args.grid,
        direction_seeds=getattr(args, "direction_seeds", (0,)),
        temperatures=getattr(args, "temperatures", DEFAULT_TEMPERATURES),
        lambda_sq=getattr(args, "lambda_sq", (0.0, 0.1)),
        target=getattr(args, "target", None),
        calibration_tol=getattr(args, "target_tol", 0.02),
        run_time=getattr(args, "run_time", None),
        rel_tol=args.tol,
        abs_tol=args.tol * 1e-2,
        grid_points=getattr(args, "points", 201),
        levels=getattr(args, "levels", None),
        c3_extent=getattr(args, "c3_extent", 2.0),
        big=args.big,
    )


def _emit(result, out_dir: str, stem: str | None = None) -> None:
    csv_path, meta_path = result.write(out_dir, stem)
    print(csv_path)


def cmd_generate(args) -> None:
    if args.n is None:
        raise ValueError("generate needs --n")
    inst = generate_unique(args.n, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = Path(args.output) if args.output else out / f"ec3_n{args.n}_seed{args.seed}.txt"
    if not path.is_absolute() and args.output:
        path = out / path
    inst.save(path)
    print(path)


def cmd_spectrum(args) -> None:
    _emit(run(_plan(args, "spectrum")), args.out_dir)


def cmd_evolve(args) -> None:
    plan = _plan(args, "runtime")
    inst = plan.instance()
    cfg = EvolutionConfig(rel_tol=plan.rel_tol, abs_tol=plan.abs_tol, record_stride=args.record)
    base = HamiltonianSpec.from_instance(inst)
    T = args.T if args.T is not None else find_runtime(base, args.target, args.target_tol, cfg)
    spec = base
    if args.kind is not None:
        strength = int(args.strength) if args.kind == "K3" and float(args.strength).is_integer() else args.strength
        pert = Perturbation.from_seed(args.kind, strength, inst.n, args.direction_seed)
        spec = HamiltonianSpec.from_instance(inst, pert, swap_s=args.swap_s)
    res = evolve(spec, T, cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = ("T", "success_prob", "norm_drift", "steps_taken", "steps_rejected")
    path = write_csv(out / "evolve.csv", header,
                     [(res.run_time, res.success_probability, res.norm_drift, res.steps_taken, res.steps_rejected)])
    meta = plan.metadata(inst)
    meta.pop("grid_points", None)
    meta["kind"] = "evolve"
    meta |= {"run_time": T, "perturbation": args.kind or "none", "strength": args.strength,
             "direction_seed": args.direction_seed, "swap_s": args.swap_s, "record_stride": args.record}
    write_metadata(out / "evolve.meta", meta | provenance())
    if res.trajectory is not None:
        write_csv(out / "trajectory.csv", res.TRAJECTORY_HEADER, res.trajectory)
    print(path)


def cmd_decohere(args) -> None:
    _emit(run(_plan(args, "decoherence")), args.out_dir)


def cmd_sweep(args) -> None:
    _emit(run(_plan(args, args.kind)), args.out_dir)


COMMANDS = {
    "generate": cmd_generate,
    "spectrum": cmd_spectrum,
    "evolve": cmd_evolve,
    "decohere": cmd_decohere,
    "sweep": cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (ValueError, RuntimeError, OSError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"adiaq: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
