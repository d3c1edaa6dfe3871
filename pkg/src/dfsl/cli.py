"""Command-line interface.

Subcommands cover the full pipeline: ``simulate`` writes a long-format CSV
plus a ground-truth JSON, ``fit`` produces model.json, ``tune`` emits the
selection grid as CSV, ``changepoints`` and ``cluster`` consume model.json,
and ``benchmark`` writes the comparison table.  All outputs are
deterministic for fixed inputs and seed; wall-clock timings are only
written when explicitly requested.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bench, changepoint, simulate, subspace, tuning
from .basis import bspline_basis, fourier_basis, orthogonalize, wavelet_basis
from .dataset import NoiseModel, read_csv, write_csv
from .solver import CoefficientPath, PenaltyConfig, fit_bcd, fit_dfsl


def _dump_json(obj, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def _load_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def _basis_to_json(basis) -> dict:
    return {"family": basis.family,
            "columns": [basis.columns[:, q].tolist()
                        for q in range(basis.columns.shape[1])]}


# ---------------------------------------------------------------------------
# simulate


def _ar_cov(m: int) -> np.ndarray:
    return 0.5 ** np.abs(np.subtract.outer(np.arange(m), np.arange(m)))


def _family_basis(family: str, length: int, wavelet_family: str):
    if family == "bspline":
        return orthogonalize(bspline_basis(length, order=3, selected=[1, 4, 7]))
    if family == "fourier":
        return orthogonalize(fourier_basis(length, q_max=3))
    if family == "wavelet":
        return orthogonalize(wavelet_basis(length, 3, wavelet_family))
    raise ValueError(f"unknown basis family {family!r}")


def _custom_specs(spec_file: str, wavelet_family: str):
    cfg = _load_json(spec_file)
    specs = []
    for seg in cfg["segments"]:
        subs = []
        for sub in seg["subspaces"]:
            m = int(sub.get("n_patterns", 2))
            subs.append(simulate.SubspaceSpec(
                _family_basis(sub["family"], int(seg["length"]), wavelet_family),
                tuple(int(c) for c in sub["channels"]), m, _ar_cov(m)))
        specs.append(simulate.SegmentSpec(int(seg["length"]), tuple(subs)))
    return specs, cfg.get("gamma", 0.2)


def _cmd_simulate(args) -> int:
    if args.model == "custom":
        if not args.spec:
            raise SystemExit("--spec is required with --model custom")
        specs, gamma = _custom_specs(args.spec, args.wavelet_family)
        data, truth = simulate.generate(specs, args.n_samples, args.sigma,
                                        gamma, args.seed)
    elif args.model == "I":
        data, truth = simulate.model_I(args.n_samples, args.sigma, args.seed)
    else:
        data, truth = simulate.model_II(args.n_samples, args.sigma, args.seed,
                                        wavelet_family=args.wavelet_family)
    write_csv(data, args.out)
    if args.truth:
        _dump_json({
            "change_points": list(truth.change_points),
            "assignment": [list(seg) for seg in truth.assignment],
            "bases": [[_basis_to_json(b) for b in seg] for seg in truth.bases],
            "channel_scales": truth.channel_scales.tolist(),
            "sigma": truth.noise.sigma.tolist(),
        }, args.truth)
    print(f"wrote {data.values.shape[0]} samples x {data.n_times} points x "
          f"{data.n_channels} channels to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# fit


def _noise_to_json(noise: NoiseModel | None):
    if noise is None:
        return None
    return {"sigma": noise.sigma.tolist(),
        "gamma_shape": list(noise.gamma.shape),
        "gamma": noise.gamma.ravel().tolist()}


def _noise_from_json(obj) -> NoiseModel | None:
    if obj is None:
        return None
    gamma = np.array(obj["gamma"], dtype=float).reshape(obj["gamma_shape"])
    return NoiseModel(np.array(obj["sigma"], dtype=float), gamma)


def _model_to_json(path: CoefficientPath, penalties: PenaltyConfig,
                   noise: NoiseModel | None) -> dict:
    p, _, n = path.values.shape
    return {
        "dims": {"p": p, "n": n},
        "path": path.values.ravel().tolist(),
        "penalties": {"lambda1": penalties.lambda1,
                      "lambda2": penalties.lambda2},
        "converged": [bool(c) for c in path.converged],
        "noise": _noise_to_json(noise),
    }


def load_model(path_file: str) -> tuple[CoefficientPath, PenaltyConfig,
                                        NoiseModel | None]:
    obj = _load_json(path_file)
    p, n = obj["dims"]["p"], obj["dims"]["n"]
    values = np.array(obj["path"], dtype=float).reshape(p, p, n)
    cpath = CoefficientPath(values, tuple(obj["converged"]))
    pen = PenaltyConfig(obj["penalties"]["lambda1"], obj["penalties"]["lambda2"])
    return cpath, pen, _noise_from_json(obj.get("noise"))


def _cmd_fit(args) -> int:
    data = read_csv(args.input)
    penalties = PenaltyConfig(args.lambda1, args.lambda2)
    if args.bcd:
        path, noise = fit_bcd(data, penalties, max_outer=args.max_outer,
                              tol=args.tol, max_iter=args.max_iter)
    else:
        path, noise = fit_dfsl(data, penalties, tol=args.tol,
                               max_iter=args.max_iter), None
    _dump_json(_model_to_json(path, penalties, noise), args.out)
    flat = "" if all(path.converged) else " (some channels not converged)"
    print(f"fit {data.n_channels} channels at lambda1={args.lambda1:g}, "
          f"lambda2={args.lambda2:g}{flat}; wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# tune


def _cmd_tune(args) -> int:
    data = read_csv(args.input)
    rhos = tuple(float(r) for r in args.rho_grid.split(","))
    spec = tuning.GridSpec(rho_values=rhos, n_lambda=args.n_lambda)
    best, grid = tuning.select(data, spec)
    eligible = [c for c in grid.cells if c.converged]
    best_cell = min(eligible, key=lambda c: (c.criterion, -c.lambda0, -c.rho))
    with open(args.out, "w") as fh:
        fh.write("rho,lambda0,criterion,n_nonzero,converged,selected\n")
        for cell in grid.cells:
            fh.write(f"{cell.rho!r},{cell.lambda0!r},{cell.criterion!r},"
                     f"{cell.n_nonzero},{int(cell.converged)},"
                     f"{int(cell is best_cell)}\n")
    print(f"selected rho={best_cell.rho:g}, lambda0={best_cell.lambda0!r} "
          f"(lambda1={best.lambda1!r}, lambda2={best.lambda2!r}); "
          f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# changepoints


def _parse_policy(text: str) -> changepoint.DetectionPolicy:
    name, _, value = text.partition(":")
    if name == "count":
        thresh = int(value) if value else 1
        return changepoint.DetectionPolicy(system_rule="count",
                                           count_threshold=thresh)
    if name == "sigma":
        mult = float(value) if value else 3.0
        return changepoint.DetectionPolicy(system_rule="sigma",
                                           sigma_multiplier=mult)
    raise SystemExit(f"unknown policy {text!r}; use count[:m] or sigma[:x]")


def _cmd_changepoints(args) -> int:
    cpath, _, _ = load_model(args.model)
    result = changepoint.detect(cpath, _parse_policy(args.policy))
    _dump_json({
        "channel_change_points": {str(j + 1): list(result.channel_flags[j])
                                  for j in range(len(result.channel_flags))},
        "channel_thresholds": result.thresholds.tolist(),
        "count_trace": result.system_counts.tolist(),
        "system_change_points": list(result.system_change_points),
    }, args.out)
    print(f"system change points: {list(result.system_change_points)}; "
          f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# cluster


def _parse_method(text: str) -> subspace.ClusteringConfig:
    name, _, value = text.partition(":")
    if name == "spectral":
        return subspace.ClusteringConfig(method="spectral",
                                         k=int(value) if value else 2)
    if name in ("hier", "hierarchical"):
        dist = float(value) if value else 1.4
        return subspace.ClusteringConfig(method="hierarchical",
                                         max_within_distance=dist)
    raise SystemExit(f"unknown method {text!r}; use spectral:k or hier:dist")


def _cmd_cluster(args) -> int:
    cpath, _, _ = load_model(args.model)
    data = read_csv(args.input)
    cps = _load_json(args.cps)["system_change_points"] if args.cps else []
    model = subspace.infer(cpath, cps, data, _parse_method(args.method),
                           lambda3=args.lambda3,
                           variance_target=args.variance, seed=args.seed)
    out = []
    for seg in model.segments:
        out.append({
            "start": seg.start,
            "stop": seg.stop,
            "affinity": seg.affinity.tolist(),
            "assignment": list(seg.assignment),
            "clusters": [{
                "id": c.cluster_id,
                "channels": list(c.channel_ids),
                "d": c.basis.shape[1],
                "basis": [c.basis[:, q].tolist()
                          for q in range(c.basis.shape[1])],
                "scores_shape": list(c.scores.shape),
                "scores": c.scores.ravel().tolist(),
                "explained": list(c.explained),
            } for c in seg.clusters],
        })
    _dump_json({"segments": out}, args.out)
    summary = ", ".join(
        f"[{seg.start},{seg.stop}): {max(seg.assignment)} clusters"
        for seg in model.segments)
    print(f"{summary}; wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# benchmark


def _cmd_benchmark(args) -> int:
    rows = bench.run_benchmark(
        model=args.model,
        sigmas=tuple(float(s) for s in args.sigmas.split(",")),
        n_samples=tuple(int(v) for v in args.n_samples.split(",")),
        replications=args.reps,
        seed=args.seed,
        policy=_parse_policy(args.policy),
        include_runtime=args.runtime,
    )
    bench.write_report(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dfsl",
        description="Dynamic functional subspace learning: time-varying "
                    "self-expressive fits, change points, and per-segment "
                    "subspace clustering.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a synthetic dataset")
    p.add_argument("--model", choices=["I", "II", "custom"], default="I")
    p.add_argument("--n-samples", type=int, default=500)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--wavelet-family", default="haar")
    p.add_argument("--spec", help="segment spec JSON (required for custom)")
    p.add_argument("--out", required=True)
    p.add_argument("--truth", help="also write ground truth JSON here")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="fit the time-varying coefficient path")
    p.add_argument("--input", required=True, help="long-format data CSV")
    p.add_argument("--lambda1", type=float, required=True,
                   help="fusion penalty weight")
    p.add_argument("--lambda2", type=float, required=True,
                   help="sparsity penalty weight")
    p.add_argument("--bcd", action="store_true",
                   help="alternate with noise covariance estimation")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--max-outer", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("tune", help="select penalties on a (rho, lambda0) grid")
    p.add_argument("--input", required=True)
    p.add_argument("--rho-grid", default="0.1,0.3,0.5,0.7,0.9")
    p.add_argument("--n-lambda", type=int, default=10)
    p.add_argument("--out", required=True, help="grid CSV output")
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("changepoints", help="detect cross-correlation breaks")
    p.add_argument("--model", required=True, help="model.json from fit")
    p.add_argument("--policy", default="count:1",
                   help="count[:m] or sigma[:x] system rule")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_changepoints)

    p = sub.add_parser("cluster", help="per-segment subspaces and bases")
    p.add_argument("--model", required=True, help="model.json from fit")
    p.add_argument("--input", required=True, help="long-format data CSV")
    p.add_argument("--cps", help="cps.json from changepoints (optional)")
    p.add_argument("--method", default="spectral:2",
                   help="spectral:k or hier:distance")
    p.add_argument("--lambda3", type=float, default=1.0,
                   help="basis smoothness weight")
    p.add_argument("--variance", type=float, default=0.95,
                   help="explained-variance target")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("benchmark", help="compare against the static baseline")
    p.add_argument("--model", choices=["I", "II"], default="I")
    p.add_argument("--sigmas", default="0.05,0.1,0.2,0.3,0.5")
    p.add_argument("--n-samples", default="500")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--policy", default="count:1")
    p.add_argument("--runtime", action="store_true",
                   help="include wall-clock timings (non-reproducible)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_benchmark)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
