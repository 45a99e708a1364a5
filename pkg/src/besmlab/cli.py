"""Command-line front end.

    besm simulate --d 2 --delta 2 --x0 identity --T 1 --dt 1e-3 \
                  --paths 100 --seed 7 --out runs/sim
    besm verify radon --alpha -0.5 --d 2 --samples 200000 --seed 1 --out runs/v
    besm report --run-dir runs/v

Exit codes: 0 success, 1 runtime failure, 2 bad configuration, 3 at least
one verifier failed (reports are still written).  A default master seed can
be supplied through the BESM_SEED environment variable; an explicit --seed
always wins.  Everything is deterministic under fixed flags, including
--workers.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import boundary, ibp, muckenhoupt, processes, reporting, weights
from .errors import BesmError
from .weights import BallSpec, WeightSpec

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_FAILED = 3

VERIFY_SUITES = (
    "radon",
    "muckenhoupt",
    "qr-claim",
    "ibp",
    "detgrowth",
    "capacity",
    "phi-energy",
    "coupling",
    "norm-law",
    "det-timechange",
    "girsanov",
)


def _default_seed() -> int:
    env = os.environ.get("BESM_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise SystemExit(f"besm: BESM_SEED={env!r} is not an integer")


def _parse_x0(text: str, d: int) -> np.ndarray:
    if text == "identity":
        return np.eye(d)
    if text.startswith("diag:"):
        vals = [float(v) for v in text.removeprefix("diag:").split(",")]
        if len(vals) != d:
            raise ValueError(f"diag spec needs {d} entries, got {len(vals)}")
        return np.diag(vals)
    x = np.loadtxt(text, delimiter=None)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape != (d, d):
        raise ValueError(f"matrix in {text} has shape {x.shape}, expected ({d}, {d})")
    return x


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="besm",
        description="simulate matrix Bessel processes and verify determinant-weight analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate a matrix Bessel ensemble")
    sim.add_argument("--d", type=int, required=True)
    sim.add_argument("--delta", type=float, required=True)
    sim.add_argument("--x0", default="identity", help="identity | diag:a,b,... | file")
    sim.add_argument("--T", type=float, required=True)
    sim.add_argument("--dt", type=float, required=True)
    sim.add_argument("--paths", type=int, required=True)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--scheme", choices=("euler", "tamed-euler"), default="euler")
    sim.add_argument("--workers", type=int, default=1)
    sim.add_argument("--out", required=True)

    ver = sub.add_parser("verify", help="run one verifier suite")
    ver.add_argument("suite", choices=VERIFY_SUITES)
    ver.add_argument("--seed", type=int, default=None)
    ver.add_argument("--out", default="besm-runs")
    ver.add_argument("--workers", type=int, default=1)
    ver.add_argument("--d", type=int, default=2)
    ver.add_argument("--alpha", type=float, default=-0.5)
    ver.add_argument("--delta", type=float, default=2.0)
    ver.add_argument("--samples", type=int, default=100_000)
    ver.add_argument("--trials", type=int, default=100_000)
    ver.add_argument("--k", type=int, default=1)
    ver.add_argument("--n", type=int, default=None, help="dominant diagonal count (qr-claim)")
    ver.add_argument("--r", type=float, default=1.0)
    ver.add_argument("--sigma-scale", type=float, default=None,
                     help="dominant diagonal size (default 100 * 18 d * r)")
    ver.add_argument("--f", dest="f_id", default="bump")
    ver.add_argument("--g", dest="g_id", default="scale")
    ver.add_argument("--eps", type=float, nargs="+", default=None)
    ver.add_argument("--balls", type=int, default=5)
    ver.add_argument("--radius", type=float, default=0.5)
    ver.add_argument("--T", type=float, default=1.0)
    ver.add_argument("--dt", type=float, default=1e-3)
    ver.add_argument("--paths", type=int, default=10_000)
    ver.add_argument("--u", type=float, default=0.5)

    rep = sub.add_parser("report", help="aggregate a run directory")
    rep.add_argument("--run-dir", required=True)
    return parser


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _cmd_simulate(args) -> int:
    seed = _default_seed() if args.seed is None else args.seed
    try:
        x0 = _parse_x0(args.x0, args.d)
        cfg = processes.SimConfig(
            d=args.d, delta=args.delta, x0=x0, horizon=args.T, dt=args.dt,
            seed=seed, n_paths=args.paths, scheme=args.scheme,
        )
    except (BesmError, ValueError, OSError) as exc:
        print(f"besm simulate: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    os.makedirs(args.out, exist_ok=True)
    times = cfg.times()

    def blocks():
        for block in processes._besm_blocks(cfg, keep_states=True):
            yield block["lo"], block["states"]

    archive = os.path.join(args.out, "paths.csv")
    reporting.write_path_archive(archive, times, blocks())

    # second pass over light summaries keeps memory flat
    terminal, blowups = processes.besm_terminal_states(cfg)
    dets = processes.batch_det(terminal)
    norms2 = np.einsum("nij,nij->n", terminal, terminal)
    summary = {
        "config": {
            "d": args.d, "delta": args.delta, "x0": args.x0, "T": args.T,
            "dt": args.dt, "paths": args.paths, "seed": seed, "scheme": args.scheme,
        },
        "blowup_fraction": blowups / args.paths,
        "terminal_det_mean": float(dets.mean()),
        "terminal_norm2_mean": float(norms2.mean()),
        "archive": os.path.basename(archive),
    }
    with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _verify_jobs(args, seed):
    d = args.d
    if args.suite == "radon":
        return [lambda: weights.radon_threshold_probe(
            WeightSpec(args.alpha), d, seed, args.samples)]
    if args.suite == "muckenhoupt":
        jobs = []
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 0xBA11))))
        for b in range(args.balls):
            if b % 2 == 0:
                center = rng.standard_normal((d, d))
            else:
                diag = np.sort(rng.uniform(0.0, 2.0, d))[::-1]
                diag[rng.integers(0, d)] = 0.0
                center = np.diag(np.sort(diag)[::-1])
            ball = BallSpec(center, args.radius)
            jobs.append(lambda ball=ball, b=b: muckenhoupt.muckenhoupt_a1_ratio(
                WeightSpec(args.alpha), ball, seed + b, args.samples))
        return jobs
    if args.suite == "qr-claim":
        n = d if args.n is None else args.n
        scale = args.sigma_scale
        if scale is None:
            scale = 100.0 * muckenhoupt.gap_factor(d) * args.r
        sigma = np.r_[np.full(n, scale), np.zeros(d - n)]
        ball = muckenhoupt.SigmaBall(sigma, args.r, n)
        return [lambda: muckenhoupt.qr_claim_check(ball, seed, args.samples)]
    if args.suite == "ibp":
        return [lambda: ibp.ibp_check(
            args.delta, args.f_id, args.g_id, seed, args.samples, d=d)]
    if args.suite == "detgrowth":
        return [lambda: boundary.det_growth_check(d, args.k, seed, args.trials)]
    if args.suite == "capacity":
        grid = boundary.DEFAULT_EPS_GRID if args.eps is None else tuple(args.eps)
        return [lambda: boundary.capacity_scaling_check(
            d, args.k, args.delta, grid, seed, args.samples)]
    if args.suite == "phi-energy":
        eps_list = args.eps if args.eps else [0.25]
        return [lambda e=e: boundary.phi_energy_check(e) for e in eps_list]
    if args.suite == "coupling":
        return [lambda: processes.coupling_check(
            args.delta, d, np.eye(d), args.T, args.dt, seed, args.paths)]
    if args.suite == "norm-law":
        return [lambda: processes.norm_law_check(
            args.delta, d, np.eye(d), args.T, args.dt, seed, args.paths)]
    if args.suite == "det-timechange":
        return [lambda: processes.det_timechange_check(
            args.delta, d, np.eye(d), args.T, args.dt, seed, args.paths, u=args.u)]
    if args.suite == "girsanov":
        return [lambda: processes.girsanov_det_martingale(
            d, args.T, args.dt, seed, args.paths)]
    raise AssertionError(args.suite)


def _cmd_verify(args) -> int:
    seed = _default_seed() if args.seed is None else args.seed
    try:
        jobs = _verify_jobs(args, seed)
    except (BesmError, ValueError) as exc:
        print(f"besm verify: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.workers > 1:
            with ThreadPoolExecutor(max_workers=args.workers) as pool:
                reports = list(pool.map(lambda job: job(), jobs))
        else:
            reports = [job() for job in jobs]
    except (BesmError, ValueError) as exc:
        print(f"besm verify: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    reporting.write_reports(args.out, reports)
    for rep in reports:
        status = "pass" if rep.passed else "FAIL"
        print(f"{rep.verifier_id}: {status} ({rep.inputs_digest})")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAILED


def _cmd_report(args) -> int:
    try:
        summary = reporting.aggregate_run(args.run_dir)
    except (FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"besm report: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_report(args)
    except BrokenPipeError:
        return EXIT_RUNTIME
    except Exception as exc:  # runtime failures distinct from config errors
        print(f"besm: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
