"""Command-line front end.

Exit codes: 0 success, 1 runtime/solver failure, 2 usage or validation
error. Every command writes a manifest echoing its fully resolved
configuration next to its outputs (or to --manifest for stdout-only
runs); all randomness derives from the single --seed flag through named
Philox streams.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classify import METHODS, classify
from .errors import (
    DegreeTooSmallError,
    NoFerromagneticTransitionError,
    ParameterError,
    SolverConvergenceError,
    ToolkitError,
)
from .graphs import (
    Gaussian,
    PlusMinusJ,
    analytic_beta_n,
    balanced_labels,
    generate_er,
    generate_powerlaw,
    plant_labels,
    read_edgelist,
    read_features,
    read_labels,
    sample_weights,
    sparsify_kernel,
    write_edgelist,
    write_labels,
)
from .nishimori import estimate_beta_nishimori
from .sweeps import (
    EstimatorFigureParams,
    M0FigureParams,
    OverlapFigureParams,
    SCHEMA_VERSION,
    SpectrumFigureParams,
    reproduce_estimator_figure,
    reproduce_m0_figure,
    reproduce_overlap_figure,
    reproduce_spectrum_figure,
    run_grid_config,
    write_manifest,
)


def _emit(payload: dict, output: str | None) -> None:
    payload = {"schema": SCHEMA_VERSION, **payload}
    text = json.dumps(payload, indent=2)
    if output:
        Path(output).write_text(text + "\n")
    else:
        print(text)


def cmd_generate(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.model == "er":
        graph = generate_er(args.n, args.c, args.seed)
        labels = None
        beta_n = None
    else:
        if args.model == "powerlaw_gaussian":
            topo = generate_powerlaw(args.n, args.c, args.exponent, args.seed)
        else:
            topo = generate_er(args.n, args.c, args.seed)
        if args.model in ("gaussian", "powerlaw_gaussian"):
            dist = Gaussian(J0=args.J0, nu=args.nu)
        else:
            dist = PlusMinusJ(p=args.p, J0=args.J0)
        beta_n = analytic_beta_n(dist)
        raw = sample_weights(topo, dist, beta_n, args.seed)
        if args.no_plant:
            graph, labels = raw, None
        else:
            inst = plant_labels(raw, balanced_labels(args.n, args.seed))
            graph, labels = inst.graph, inst.labels
    edge_path = out_dir / "edges.tsv"
    write_edgelist(graph, edge_path)
    outputs = [edge_path.name]
    if labels is not None:
        write_labels(labels, out_dir / "labels.txt")
        outputs.append("labels.txt")
    params = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    params["true_beta_n"] = beta_n
    write_manifest(out_dir, "generate", params, outputs)
    print(f"wrote {edge_path} ({graph.m} edges, c = {graph.avg_degree:.3f})")
    return 0


def cmd_estimate(args) -> int:
    graph = read_edgelist(args.edges)
    est = estimate_beta_nishimori(graph, args.epsilon, seed=args.seed)
    _emit(est.to_dict(), args.output)
    if args.manifest:
        params = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
        write_manifest(Path(args.manifest), "estimate", params, [args.output or "-"])
    return 0


def cmd_classify(args) -> int:
    graph = read_edgelist(args.edges)
    truth = read_labels(args.labels, graph.n) if args.labels else None
    methods = list(METHODS) if args.method == "all" else [args.method]
    results = []
    for method in methods:
        res = classify(
            graph,
            method,
            truth=truth,
            epsilon=args.epsilon,
            beta=args.beta,
            shift=not args.no_shift,
            seed=args.seed,
        )
        results.append(res.to_dict())
    payload = {"results": results} if len(results) > 1 else results[0]
    _emit(payload, args.output)
    if args.labels_out and results:
        write_labels(np.asarray(results[-1]["labels"]), args.labels_out)
    if args.manifest:
        params = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
        write_manifest(Path(args.manifest), "classify", params, [args.output or "-"])
    return 0


def cmd_kernel(args) -> int:
    data = read_features(args.features, args.labels)
    graph = sparsify_kernel(data, args.kappa, args.c, args.seed)
    write_edgelist(graph, args.output)
    params = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    if args.manifest:
        write_manifest(Path(args.manifest), "kernel", params, [args.output])
    print(f"wrote {args.output} ({graph.m} edges, c = {graph.avg_degree:.3f})")
    return 0


def cmd_reproduce(args) -> int:
    out_dir = Path(args.out_dir)
    seeds = list(range(args.seeds))
    if args.figure == "spectrum-sparse":
        params = SpectrumFigureParams(seed=args.seed)
        if not args.full_size:
            params.n, params.c = 1000, 5.0
        if args.n:
            params.n = args.n
        reproduce_spectrum_figure(params, out_dir)
    elif args.figure == "spectrum-dense":
        params = SpectrumFigureParams(n=250, c=2 * np.log(250) ** 2, nu=4.0, beta=1.0, seed=args.seed)
        reproduce_spectrum_figure(params, out_dir)
    elif args.figure == "m0":
        params = M0FigureParams(seed=args.seed)
        if args.full_size:
            params.n = 1500
        if args.n:
            params.n = args.n
        reproduce_m0_figure(params, out_dir)
    elif args.figure == "estimator":
        params = EstimatorFigureParams(seeds=seeds)
        if args.n:
            params.n = args.n
        reproduce_estimator_figure(params, out_dir, threads=args.threads)
    elif args.figure == "overlap":
        params = OverlapFigureParams(seeds=seeds)
        if args.full_size:
            params.n = 30000
        if args.n:
            params.n = args.n
        reproduce_overlap_figure(params, out_dir, threads=args.threads)
    elif args.figure == "overlap-powerlaw":
        params = OverlapFigureParams(
            seeds=seeds,
            topology="powerlaw",
            c_values=[10.0],
            ratio_grid=[1.5, 2.0, 3.0, 3.6],
            methods=["nishimori", "spinglass"],
        )
        if args.full_size:
            params.n = 30000
        if args.n:
            params.n = args.n
        reproduce_overlap_figure(params, out_dir, threads=args.threads)
    elif args.figure == "grid":
        if not args.grid_config:
            raise ParameterError("--grid-config is required for figure id 'grid'")
        run_grid_config(args.grid_config, out_dir, threads=args.threads)
    else:
        raise ParameterError(f"unknown figure id {args.figure!r}")
    print(f"outputs in {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="betheclust",
        description="Nishimori-temperature estimation and Bethe-Hessian node classification",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate synthetic weighted graphs")
    g.add_argument("--model", required=True, choices=["er", "gaussian", "pmj", "powerlaw_gaussian"])
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--c", type=float, required=True)
    g.add_argument("--J0", type=float, default=1.0)
    g.add_argument("--nu", type=float, default=1.0)
    g.add_argument("--p", type=float, default=0.75, help="+J0 probability for the pmj model")
    g.add_argument("--exponent", type=float, default=3.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--no-plant", action="store_true", help="skip the label gauge (write raw J)")
    g.add_argument("--out-dir", default="generated")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("estimate", help="estimate the Nishimori temperature of an edge list")
    e.add_argument("edges")
    e.add_argument("--epsilon", type=float, default=1e-5)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--output", help="write the JSON report here instead of stdout")
    e.add_argument("--manifest", help="directory for a run manifest")
    e.set_defaults(func=cmd_estimate)

    c = sub.add_parser("classify", help="two-class node classification")
    c.add_argument("edges")
    c.add_argument("--method", default="nishimori", choices=list(METHODS) + ["all"])
    c.add_argument("--labels", help="ground-truth labels file (adds overlap to the report)")
    c.add_argument("--labels-out", help="write estimated labels, one +-1 per line")
    c.add_argument("--beta", type=float, help="temperature for the bp method")
    c.add_argument("--epsilon", type=float, default=1e-5)
    c.add_argument("--no-shift", action="store_true", help="skip the zero-mean weight shift")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--output")
    c.add_argument("--manifest")
    c.set_defaults(func=cmd_classify)

    k = sub.add_parser("kernel", help="two-level sparsified correlation kernel from features")
    k.add_argument("features")
    k.add_argument("--kappa", type=float, required=True)
    k.add_argument("--c", type=float, required=True)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--labels", help="optional labels file carried through for evaluation")
    k.add_argument("--output", default="kernel_edges.tsv")
    k.add_argument("--manifest")
    k.set_defaults(func=cmd_kernel)

    r = sub.add_parser("reproduce", help="figure-style reproductions (CSV + manifest)")
    r.add_argument(
        "figure",
        choices=[
            "spectrum-sparse",
            "spectrum-dense",
            "m0",
            "estimator",
            "overlap",
            "overlap-powerlaw",
            "grid",
        ],
    )
    r.add_argument("--out-dir", default="reproduction")
    r.add_argument("--n", type=int, help="override the instance size")
    r.add_argument("--seeds", type=int, default=10, help="number of seeds for grid figures")
    r.add_argument("--seed", type=int, default=0, help="seed for single-instance figures")
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--full-size", action="store_true", help="run at the original scale")
    r.add_argument("--grid-config", help="JSON grid spec for figure id 'grid'")
    r.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParameterError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (
        SolverConvergenceError,
        DegreeTooSmallError,
        NoFerromagneticTransitionError,
        ToolkitError,
    ) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
