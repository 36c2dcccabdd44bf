"""``splitplan`` command line: plan, schedule, verify, sweep, gen-sample.

Option values resolve as command-line flag, then ``SPLITPLAN_<NAME>``
environment variable, then the built-in default.

Exit codes: 0 success, 2 bad input, 3 applicability failure,
4 verification failure, 5 resource limit.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from contextlib import contextmanager

import numpy as np

from . import __version__
from .cost import (
    CostInputs,
    corollary_failures,
    k_star_new,
    k_star_prev,
    n_new_bound,
    n_new_smooth,
    n_prev_bound,
    speedup_bound,
)
from .errors import InvalidInputError, SplitPlanError, VerificationError
from .io import fmt, load_schedule, load_sweep_spec, load_system, save_schedule, save_system, write_schedule
from .linalg import random_hermitian
from .schedule import full_schedule
from .simulator import lemma_check, lemma_limit, verify_plan
from .sweep import rows_to_csv, run_sweep

DEFAULTS = {"eps": 1e-4, "seed": 0, "workers": os.cpu_count() or 1, "nprev_norm": "h1"}
SAMPLE_KINDS = ("laplacian_potential", "random_pair", "random_m")


def resolve(args, name, conv=str):
    val = getattr(args, name, None)
    if val is not None:
        return val
    env = os.environ.get("SPLITPLAN_" + name.upper())
    if env:
        return conv(env)
    return DEFAULTS.get(name)


def parse_k_list(text):
    if text is None or text == "auto":
        return [None]
    return [int(x) for x in str(text).split(",")]


def _single_k(args):
    ks = parse_k_list(resolve(args, "k"))
    if len(ks) != 1:
        raise SystemExit("this command takes a single --k")
    return ks[0]


@contextmanager
def _collect_warnings(sink):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        yield
    for w in caught:
        sink.append(str(w.message))
        print(f"warning: {w.message}", file=sys.stderr)


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _opt(fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except SplitPlanError:
        return None


def cmd_plan(args):
    eps = resolve(args, "eps", float)
    norm = resolve(args, "nprev_norm")
    force = args.force_applicability
    system = load_system(args.system)
    notes = []
    with _collect_warnings(notes):
        inputs = CostInputs.from_system(system, eps)
        k = _single_k(args)
        schedule = full_schedule(system, k, eps, force)
        plan = schedule.plan
        k = schedule.k
        report = {
            "m": system.m,
            "dim": system.dim,
            "t": system.time,
            "eps": eps,
            "norms": list(system.norms),
            "permutation": list(system.permutation),
            "k": k,
            "k_star_new": k_star_new(inputs, force),
            "k_star_prev": _opt(k_star_prev, inputs, norm),
            "M": plan.M,
            "branch": plan.branch,
            "n_steps": schedule.n_steps,
            "dt_normalized": schedule.dt_normalized,
            "per_step": schedule.per_step,
            "total_exponentials": schedule.total_exponentials,
            "total_cross_merged": schedule.total_cross_merged,
            "N_new_bound": plan.N_bound,
            "N_new_smooth": _opt(n_new_smooth, k, inputs),
            "N_prev": n_prev_bound(k, inputs, norm),
            "nprev_norm": norm,
            "speedup_bound": speedup_bound(k, inputs),
            "flags": {
                "pair_condition": inputs.flag_thm1 if system.m == 2 else None,
                "general_condition": inputs.flag_thm2,
                "corollary": not corollary_failures(inputs),
                "weak_second_term": inputs.weak_second_term,
            },
        }
    report["warnings"] = notes
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return 0


def cmd_schedule(args):
    eps = resolve(args, "eps", float)
    system = load_system(args.system)
    with _collect_warnings([]):
        schedule = full_schedule(system, _single_k(args), eps, args.force_applicability)
    if args.out:
        save_schedule(args.out, schedule)
    else:
        write_schedule(sys.stdout, schedule)
    return 0


def cmd_verify(args):
    eps = resolve(args, "eps", float)
    system = load_system(args.system)
    force = args.force_applicability
    rows = ["kind,k,dt,measured,bound,satisfied"]
    ok = True
    with _collect_warnings([]):
        ks = parse_k_list(resolve(args, "k"))
        for k in ks:
            if args.schedule:
                schedule = load_schedule(args.schedule)
            else:
                schedule = full_schedule(system, k, eps, force)
            if args.inject_fault:
                first = schedule.step_ops[0]
                broken = (first._replace(coeff=first.coeff + args.inject_fault),) + schedule.step_ops[1:]
                schedule = type(schedule)(schedule.k, schedule.m, broken, schedule.n_steps,
                                          schedule.dt_normalized, schedule.plan)
            k = schedule.k
            limit = lemma_limit(k, system.m)
            dts = sorted({limit / 2, limit / 4, limit / 8, limit / 16, schedule.dt_normalized}, reverse=True)
            for dt in dts:
                rep = lemma_check(system, k, dt, schedule.step_ops)
                ok &= rep.bound_satisfied
                rows.append(f"lemma,{k},{fmt(dt)},{fmt(rep.measured_error)},{fmt(rep.analytic_bound)},"
                            f"{str(rep.bound_satisfied).lower()}")
            rep = verify_plan(system, k, eps, schedule=schedule)
            ok &= rep.bound_satisfied
            rows.append(f"plan,{k},{fmt(rep.dt_normalized)},{fmt(rep.measured_error)},{fmt(eps)},"
                        f"{str(rep.bound_satisfied).lower()}")
    _emit("\n".join(rows) + "\n", args.out)
    if not ok:
        print("error: a bound was violated", file=sys.stderr)
        return VerificationError.exit_code
    return 0


def cmd_sweep(args):
    spec = load_sweep_spec(args.spec)
    workers = int(resolve(args, "workers", int))
    rows = run_sweep(spec, workers)
    _emit(rows_to_csv(rows), args.out or spec.out)
    return 0


def gen_sample(kind, dim, seed=0, m=3, t=1.0, ratio=0.5):
    """Matrices for a sample system; the first term has the largest norm."""
    rng = np.random.default_rng(seed)
    if kind == "laplacian_potential":
        lap = (dim + 1) ** 2 * (2 * np.eye(dim) - np.eye(dim, k=1) - np.eye(dim, k=-1))
        return [lap, np.diag(rng.uniform(0.0, 1.0, dim))]
    if kind == "random_pair":
        return [random_hermitian(dim, 1.0, rng), random_hermitian(dim, ratio, rng)]
    if kind == "random_m":
        norms = np.sort(rng.uniform(0.1, 1.0, m - 1))[::-1]
        return [random_hermitian(dim, 1.0, rng)] + [random_hermitian(dim, float(n), rng) for n in norms]
    raise InvalidInputError(f"unknown sample kind {kind!r}")


def cmd_gen_sample(args):
    if args.dim < 2:
        raise SystemExit("--dim must be at least 2")
    seed = int(resolve(args, "seed", int))
    mats = gen_sample(args.kind, args.dim, seed, args.m, args.t, args.ratio)
    meta = {"label": args.kind, "seed": seed}
    if args.out:
        save_system(args.out, mats, args.t, **meta)
    else:
        from .io import system_to_dict

        sys.stdout.write(json.dumps(system_to_dict(mats, args.t, **meta)) + "\n")
    return 0


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--eps", type=float, help="target accuracy (default 1e-4)")
    common.add_argument("--k", help="splitting order k, a comma list for verify, or 'auto'")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--nprev-norm", dest="nprev_norm", choices=["h1", "hsum"])
    common.add_argument("--force-applicability", action="store_true",
                        help="evaluate bounds even when their preconditions fail")

    parser = argparse.ArgumentParser(prog="splitplan", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", parents=[common], help="print the plan and bound report as JSON")
    p.add_argument("system")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("schedule", parents=[common], help="write the unrolled exponential stream")
    p.add_argument("system")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("verify", parents=[common], help="measure errors against the bounds")
    p.add_argument("system")
    p.add_argument("--schedule", help="verify a previously written schedule file")
    p.add_argument("--inject-fault", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", parents=[common], help="CSV table over a parameter grid")
    p.add_argument("spec")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen-sample", parents=[common], help="write a sample system file")
    p.add_argument("kind", choices=SAMPLE_KINDS)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--ratio", type=float, default=0.5, help="||H2||/||H1|| for random_pair")
    p.set_defaults(func=cmd_gen_sample)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SplitPlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
