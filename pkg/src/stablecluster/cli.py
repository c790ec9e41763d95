"""Command-line interface: ``stablecluster <command> [options]``.

Exit codes: 0 success, 2 I/O or parse error, 3 precondition violation,
4 enumeration budget exceeded.  Output files are written to a temporary
file and renamed into place, so a failed command never leaves a partial
file behind.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench as _bench
from .exceptions import BudgetExceededError, GeneratorError, InstanceError, PreconditionError
from .generators import (
    METRIC_FAMILIES,
    gen_coverage_reduction,
    gen_fig2,
    gen_fig3,
    gen_resilient,
    read_set_system,
)
from .metric import (
    CUSTOM_MASK,
    DATA_CENTERS,
    EUCLIDEAN,
    RANDOM_UNIFORM,
    SQUARED_EUCLIDEAN,
    STEINER,
    WITHIN_CLUSTER,
    Instance,
    PerturbationSpec,
    build_from_points,
    instance_to_dict,
    load_instance,
    perturb,
)
from .objectives import Objective
from .oracle import default_budget, optimal_clustering
from .pruning import clustering_from_dict, make_clustering, naive_single_linkage_at_k, solve
from .stability import DEFAULT_EXACT_BUDGET, stability_report

DEFAULT_SEED = 20090101

EXIT_OK, EXIT_IO, EXIT_PRECONDITION, EXIT_BUDGET = 0, 2, 3, 4

_MODES = {"uniform": RANDOM_UNIFORM, "within_cluster": WITHIN_CLUSTER, "mask": CUSTOM_MASK}


# --------------------------------------------------------------------------
# I/O helpers


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent if str(path.parent) else ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def _emit(args, text: str) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2)


def _tsv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _load(args) -> Instance:
    inst = load_instance(args.instance)
    policy = getattr(args, "centers", None)
    if policy is None:
        return inst
    if policy == "steiner" and inst.center_policy != STEINER:
        if inst.points is None:
            raise PreconditionError("--centers steiner needs an instance with coordinates")
        return build_from_points(inst.points, SQUARED_EUCLIDEAN, name=inst.name, center_policy=STEINER)
    if policy == "data" and inst.center_policy == STEINER:
        return replace(inst, center_policy=DATA_CENTERS)
    return inst


def _objective(args) -> Objective:
    return Objective(args.objective)


def _check_k(args, inst: Instance) -> None:
    if not 1 <= args.k <= inst.n:
        raise PreconditionError(f"k must be in [1, {inst.n}], got {args.k}")


def _budget(args) -> int:
    return default_budget() if getattr(args, "budget", None) is None else args.budget


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


# --------------------------------------------------------------------------
# commands


def cmd_solve(args) -> int:
    inst = _load(args)
    _check_k(args, inst)
    _emit(args, solve(inst, _objective(args), args.k).to_json())
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst = _load(args)
    _check_k(args, inst)
    res = optimal_clustering(inst, _objective(args), args.k, _budget(args))
    out = res.clustering.to_dict()
    out.update(unique=res.unique, near_tie=res.near_tie, n_optimal=res.n_optimal, method=res.method)
    _emit(args, json.dumps(out))
    return EXIT_OK


def cmd_check(args) -> int:
    inst = _load(args)
    with open(args.clustering, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"{args.clustering}: invalid JSON ({exc})") from None
    clustering = clustering_from_dict(raw, inst)
    if args.trials and args.alpha is None:
        raise PreconditionError("--trials needs --alpha")
    if args.trials and clustering.objective is None:
        clustering = replace(clustering, objective=_objective(args))
    report = stability_report(
        inst,
        clustering,
        alpha=args.alpha,
        exact_budget=args.exact_budget,
        probe_trials=args.trials,
        seed=args.seed,
    )
    _emit(args, json.dumps(report.to_dict()))
    return EXIT_OK


def cmd_perturb(args) -> int:
    inst = _load(args)
    mode = _MODES[args.mode]
    members = mask = None
    if mode == WITHIN_CLUSTER:
        if not args.members:
            raise PreconditionError("--mode within_cluster needs --members")
        members = tuple(args.members)
    elif mode == CUSTOM_MASK:
        if not args.pairs or len(args.pairs) % 2:
            raise PreconditionError("--mode mask needs an even-length --pairs list")
        mask = np.asarray(args.pairs, dtype=np.intp).reshape(-1, 2)
    for idx in (members or ()) + tuple(np.ravel(mask) if mask is not None else ()):
        if not 0 <= idx < inst.n:
            raise PreconditionError(f"point index {idx} out of range")
    spec = PerturbationSpec(alpha=args.alpha, mode=mode, seed=args.seed, members=members, mask=mask)
    out = perturb(inst, spec)
    _emit(args, json.dumps({"name": out.name, "matrix": out.dist.tolist(), "center_policy": "data"}))
    return EXIT_OK


def cmd_generate(args) -> int:
    extra = None
    if args.family == "fig2":
        inst = gen_fig2()
    elif args.family == "fig3":
        inst = gen_fig3(args.size_big, args.size_small, args.eps, sizes=args.sizes, verify=not args.no_verify)
    elif args.family == "resilient":
        policy = STEINER if args.centers == "steiner" else DATA_CENTERS
        planted = gen_resilient(
            args.n, args.k, args.factor, policy, args.seed, metric=args.metric, dim=args.dim, tight=args.tight
        )
        inst = planted.instance
        extra = planted.clustering.to_dict()
    else:
        if args.sets is None or args.k is None:
            raise PreconditionError("coverage needs --sets and --k")
        sets, u = read_set_system(args.sets)
        inst = gen_coverage_reduction(sets, u, args.k)
    if extra is not None and args.clustering_out:
        write_atomic(args.clustering_out, json.dumps(extra) + "\n")
    _emit(args, json.dumps(instance_to_dict(inst)))
    return EXIT_OK


def cmd_compare(args) -> int:
    inst = _load(args)
    _check_k(args, inst)
    obj = _objective(args)
    tree = solve(inst, obj, args.k)
    naive = make_clustering(inst, naive_single_linkage_at_k(inst, args.k), obj)
    opt = None if args.no_oracle else optimal_clustering(inst, obj, args.k, _budget(args)).clustering
    rows = []
    for method, c in (("tree_dp", tree), ("naive_single_linkage", naive), ("oracle", opt)):
        if c is None:
            continue
        rows.append(
            {
                "method": method,
                "cost": float(c.total_cost),
                "equal_to_oracle": None if opt is None else c.same_partition(opt),
                "labels": [int(x) for x in c.labels],
            }
        )
    if args.format == "tsv":
        text = _tsv(
            ["method", "cost", "equal_to_oracle"],
            [[r["method"], repr(r["cost"]), "" if r["equal_to_oracle"] is None else r["equal_to_oracle"]] for r in rows],
        )
    else:
        text = _dump({"instance": inst.name, "objective": obj.short_name, "k": args.k, "rows": rows})
    _emit(args, text)
    return EXIT_OK


def cmd_bench(args) -> int:
    obj = _objective(args)
    if args.k_sweep:
        rows = _bench.bench_k(args.n, args.k_sweep, obj, args.seed, args.repeats)
        exponent = None
    else:
        rows, exponent = _bench.bench(args.sizes, args.k, obj, args.seed, args.repeats)
    if args.format == "tsv":
        text = _tsv(["n", "k", "seconds", "cost"], [[r.n, r.k, f"{r.seconds:.6f}", repr(r.cost)] for r in rows])
        if exponent is not None:
            text += f"# exponent\t{exponent:.4f}\n"
    else:
        text = _dump(
            {
                "objective": obj.short_name,
                "rows": [{"n": r.n, "k": r.k, "seconds": r.seconds, "cost": r.cost} for r in rows],
                "exponent": exponent,
            }
        )
    _emit(args, text)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stablecluster", description="Exact clustering of perturbation-resilient instances.")
    p.add_argument("--threads", type=_positive, default=None, help="cap on BLAS/OpenMP worker threads")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *, instance=True, objective=True, k=True):
        if instance:
            sp.add_argument("--instance", required=True, help="instance JSON file")
            sp.add_argument("--centers", choices=("data", "steiner"), default=None, help="override the center policy")
        if objective:
            sp.add_argument("--objective", choices=("kmedian", "kmeans", "kcenter"), default="kmedian")
        if k:
            sp.add_argument("--k", type=int, required=True)
        sp.add_argument("--out", default=None, help="output file (default: standard output)")

    sp = sub.add_parser("solve", help="tree + best k-pruning")
    common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("oracle", help="exhaustive optimum with a uniqueness flag")
    common(sp)
    sp.add_argument("--budget", type=int, default=None, help="max candidates (default: $STABLECLUSTER_BUDGET or 1e7)")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("check", help="stability report for a clustering")
    common(sp, k=False)
    sp.add_argument("--clustering", required=True, help="clustering JSON file")
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--exact-budget", type=int, default=DEFAULT_EXACT_BUDGET)
    sp.add_argument("--trials", type=int, default=0, help="random perturbation probes at --alpha")
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("perturb", help="write an alpha-perturbed matrix instance")
    common(sp, objective=False, k=False)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--mode", choices=tuple(_MODES), default="uniform")
    sp.add_argument("--members", type=_int_list, default=None, help="point ids for within_cluster")
    sp.add_argument("--pairs", type=_int_list, default=None, help="i,j,i,j,... for mask")
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.set_defaults(func=cmd_perturb)

    sp = sub.add_parser("generate", help="write a generated instance")
    sp.add_argument("family", choices=("fig2", "fig3", "resilient", "coverage"))
    sp.add_argument("--out", default=None)
    sp.add_argument("--size-big", type=int, default=100)
    sp.add_argument("--size-small", type=int, default=10)
    sp.add_argument("--sizes", type=_int_list, default=None, help="fig3 sizes |A|,|B|,|C|,|D|")
    sp.add_argument("--eps", type=float, default=0.01)
    sp.add_argument("--no-verify", action="store_true", help="skip the fig3 oracle self-check")
    sp.add_argument("--n", type=int, default=12)
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--factor", type=float, default=3.0)
    sp.add_argument("--centers", choices=("data", "steiner"), default="data")
    sp.add_argument("--metric", choices=METRIC_FAMILIES, default=EUCLIDEAN)
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--tight", action="store_true")
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--clustering-out", default=None, help="resilient: also write the planted clustering")
    sp.add_argument("--sets", default=None, help="coverage: set-system file")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("compare", help="tree DP vs naive single linkage vs oracle")
    common(sp)
    sp.add_argument("--no-oracle", action="store_true")
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--format", choices=("json", "tsv"), default="json")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("bench", help="solve() wall time over an n sweep")
    common(sp, instance=False, k=False)
    sp.add_argument("--sizes", type=_int_list, default=[250, 500, 1000, 2000])
    sp.add_argument("--k", type=int, default=10)
    sp.add_argument("--k-sweep", type=_int_list, default=None, help="time these k at fixed --n instead")
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--repeats", type=int, default=3)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--format", choices=("json", "tsv"), default="json")
    sp.set_defaults(func=cmd_bench)
    return p


def _thread_limit(n):
    if n is None:
        return contextlib.nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        return contextlib.nullcontext()
    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "generate" and args.family == "resilient" and args.k is None:
        args.k = 3
    try:
        with _thread_limit(args.threads):
            return args.func(args)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InstanceError, OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (PreconditionError, GeneratorError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
