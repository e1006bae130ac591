"""Command-line interface: ``hynb generate|spectrum|detect|validate|phase-diagram``.

Exit codes: 0 success, 1 error, 2 detection below threshold.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from . import plotting
from .config import ExperimentConfig, ModelConfig, load_config
from .detection import (DetectOptions, detect_alg1, detect_alg2,
                        empirical_overlap_vs_theory, overlap)
from .eigensolver import bulk_radius
from .gwtree import mc_moment_suite
from .hypergraph import read_hypergraph, write_hypergraph
from .ihara_bass import ihara_bass_residual
from .model import (ModelParams, assign_labels, read_labels, sample,
                    symmetric_from_degree, validate_params, write_labels)
from .nonbacktracking import (IdentityError, NBOperator, default_ell,
                              gram_diagnostics, pseudo_eigenvectors,
                              verify_identities)
from .signal import signal_spectrum

log = logging.getLogger("hynb")

EXIT_OK, EXIT_ERROR, EXIT_BELOW = 0, 1, 2


class CliError(Exception):
    pass


def _threads() -> int:
    raw = os.environ.get("HYNB_THREADS", "1")
    try:
        val = int(raw)
    except ValueError:
        raise CliError(f"HYNB_THREADS must be a positive integer, got {raw!r}") from None
    if val < 1:
        raise CliError(f"HYNB_THREADS must be a positive integer, got {raw!r}")
    return val


def _outdir(args, cfg: Optional[ExperimentConfig]) -> Path:
    out = Path(args.out or (cfg.out if cfg else "out"))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc.strerror}") from None
    return out


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror}") from None


def _json(path: Path, obj) -> None:
    _write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _config(args, required: bool = False) -> Optional[ExperimentConfig]:
    if not args.config:
        if required:
            raise CliError("--config is required for this command")
        return None
    return load_config(args.config)


def _params(cfg: ExperimentConfig) -> tuple[ModelParams, float]:
    params = cfg.model.to_params()
    return params, validate_params(params)


def _seed(args, cfg) -> int:
    if args.seed is not None:
        return args.seed
    return cfg.seeds[0] if cfg else 0


def _detect_opts(args, cfg, seed: int) -> DetectOptions:
    solver = dict(cfg.solver) if cfg else {}
    opts = DetectOptions(seed=seed)
    for key in ("tol", "max_restarts", "subspace_dim", "margin"):
        if key in solver:
            setattr(opts, key, solver[key])
    if "k" in solver:
        opts.k_eigs = int(solver["k"])
    if getattr(args, "margin", None) is not None:
        opts.margin = args.margin
    if getattr(args, "k", None) is not None:
        opts.k_eigs = args.k
    return opts


def _load_graph(args, cfg, seed):
    """Hypergraph from the positional file, or sampled from the config."""
    if getattr(args, "hypergraph", None):
        try:
            return read_hypergraph(args.hypergraph), None
        except OSError as exc:
            raise CliError(f"cannot read {args.hypergraph}: {exc.strerror}") from None
    if cfg is None:
        raise CliError("give a hypergraph file or --config")
    params, _ = _params(cfg)
    sigma = assign_labels(params, cfg.model.label_mode, seed)
    return sample(params, sigma, seed), sigma


# -- commands --------------------------------------------------------------

def cmd_generate(args) -> int:
    cfg = _config(args, required=True)
    params, d = _params(cfg)
    seed = _seed(args, cfg)
    sigma = assign_labels(params, cfg.model.label_mode, seed)
    G = sample(params, sigma, seed)
    out = _outdir(args, cfg)
    try:
        write_hypergraph(G, out / "hypergraph.txt")
        write_labels(sigma, out / "labels.txt")
    except OSError as exc:
        raise CliError(f"cannot write to {out}: {exc.strerror}") from None
    summary = {"n": G.n, "q": G.q, "m": G.m, "mean_degree": G.q * G.m / G.n, "d": d,
               "seed": seed}
    _json(out / "generate.json", summary)
    print(f"m={G.m} mean_degree={summary['mean_degree']:.4f} d={d:.4f}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    cfg = _config(args)
    seed = _seed(args, cfg)
    G, _ = _load_graph(args, cfg, seed)
    out = _outdir(args, cfg)
    header = "re,im,residual,informative\n"
    dbar = G.mean_degree()
    radius = bulk_radius(G.q, dbar)
    if G.m == 0:
        _write(out / "spectrum.csv", header)
        _json(out / "spectrum.json", {"bulk_radius": radius, "converged": True, "count": 0})
        print("empty hypergraph: empty spectrum")
        return EXIT_OK
    opts = _detect_opts(args, cfg, seed)
    from .detection import reduced_spectrum
    rep = reduced_spectrum(G, opts)
    info = set(rep.informative)
    rows = [f"{v.real:.12g},{v.imag:.12g},{res:.3e},{int(i in info)}\n"
            for i, (v, res) in enumerate(zip(rep.ritz_values, rep.residuals))]
    _write(out / "spectrum.csv", header + "".join(rows))
    meta = {"bulk_radius": radius, "margin": opts.margin, "mean_degree": dbar,
            "converged": bool(rep.converged), "count": len(rep),
            "informative": len(info), "restarts": rep.restarts, "matvecs": rep.matvecs}
    _json(out / "spectrum.json", meta)
    plotting.spectrum_figure(rep.ritz_values, radius, out / "spectrum.png", sorted(info))
    print(f"{len(rep)} eigenvalues, {len(info)} outside (1+{opts.margin})*{radius:.4f}")
    if not rep.converged:
        print("warning: eigensolver did not converge; output is partial", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def cmd_detect(args) -> int:
    cfg = _config(args)
    seed = _seed(args, cfg)
    G, sigma = _load_graph(args, cfg, seed)
    if args.labels:
        try:
            sigma = read_labels(args.labels)
        except OSError as exc:
            raise CliError(f"cannot read {args.labels}: {exc.strerror}") from None
        if len(sigma) != G.n:
            raise CliError(f"labels file has {len(sigma)} entries, hypergraph has n={G.n}")
    out = _outdir(args, cfg)
    opts = _detect_opts(args, cfg, seed)
    alg = args.alg or int((cfg.detect.get("alg", 2)) if cfg else 2)
    warnings = []
    if alg == 1:
        r = cfg.model.r if cfg else (int(sigma.max()) + 1 if sigma is not None else None)
        if r is not None and r > 2:
            msg = f"algorithm 1 splits into two groups but the model has r={r}; running on lambda_2"
            log.warning(msg)
            warnings.append(msg)
        K = args.K if args.K is not None else float(cfg.detect.get("K", 10.0) if cfg else 10.0)
        res = detect_alg1(G, K=K, seed=seed, opts=opts)
    else:
        k_hint = cfg.detect.get("k_hint") if cfg else None
        res = detect_alg2(G, k_hint=k_hint, opts=opts)
    warnings += res.warnings
    write_labels(res.partition, out / "partition.txt")
    summary = {
        "alg": alg, "seed": seed, "n": G.n, "m": G.m,
        "below_threshold": bool(res.below_threshold),
        "n_informative": res.n_informative,
        "eigenvalues": [[float(v.real), float(v.imag)] for v in res.report.ritz_values],
        "warnings": warnings,
    }
    if sigma is not None:
        summary["overlap"] = overlap(sigma, res.partition, int(sigma.max()) + 1)
        if cfg is not None:
            spec = signal_spectrum(cfg.model.to_params())
            pairs = []
            for i in range(min(spec.r0, len(res.report))):
                try:
                    meas, pred = empirical_overlap_vs_theory(G, spec, sigma, i, res.report)
                except ValueError as exc:
                    warnings.append(str(exc))
                    continue
                pairs.append({"i": i, "measured": meas, "predicted": pred})
            summary["eigenvector_overlaps"] = pairs
    _json(out / "detect.json", summary)
    if "overlap" in summary:
        phash = hashlib.sha256(cfg.dumps().encode()).hexdigest()[:12] if cfg else "none"
        r0 = len(summary.get("eigenvector_overlaps", [])) if cfg else res.n_informative
        eig = ";".join(f"{v.real:.6g}{v.imag:+.6g}j" for v in res.report.ritz_values)
        _write(out / "overlap.csv", "seed,n,params_hash,overlap,r0,eigenvalues\n"
               f"{seed},{G.n},{phash},{summary['overlap']:.6f},{r0},{eig}\n")
    if res.embedding.X.shape[1]:
        plotting.embedding_figure(res.embedding.X, res.partition, out / "embedding.png")
    msg = f"informative={res.n_informative}"
    if "overlap" in summary:
        msg += f" overlap={summary['overlap']:.4f}"
    print(msg)
    if res.below_threshold:
        print("below threshold: at most one eigenvalue outside the bulk", file=sys.stderr)
        return EXIT_BELOW
    return EXIT_OK


def _random_instances(count: int, n_max: int, seed: int, qs=(2, 3, 4, 5)):
    """Small random block-model hypergraphs for the exact suites."""
    rng = np.random.default_rng(seed)
    for k in range(count):
        q = int(qs[k % len(qs)])
        n = int(rng.integers(max(q + 2, n_max // 2), n_max + 1))
        d = float(rng.uniform(1.5, 4.0))
        params = ModelParams.symmetric(n, 2, q, *symmetric_from_degree(2, q, d, d / 2))
        sigma = assign_labels(params, seed=seed + k)
        yield sample(params, sigma, seed=seed + k)


def _suite_identities(args, cfg, seed):
    graphs = [read_hypergraph(args.hypergraph)] if args.hypergraph else \
        list(_random_instances(20, 200, seed))
    worst = {}
    ok = True
    for G in graphs:
        try:
            devs = verify_identities(G, seed=seed, raise_on_failure=False)
        except IdentityError:
            devs = {"error": 1}
        for key, val in devs.items():
            worst[key] = max(worst.get(key, 0), int(val))
            ok &= val == 0
    return ok, {"instances": len(graphs), "max_deviation": worst}


def _suite_ihara(args, cfg, seed):
    graphs = [read_hypergraph(args.hypergraph)] if args.hypergraph else \
        list(_random_instances(10, 30, seed, qs=(2, 3, 4)))
    rng = np.random.default_rng(seed)
    worst = 0.0
    for G in graphs:
        for _ in range(10):
            z = complex(rng.normal(0, 2), rng.normal(0, 2))
            worst = max(worst, ihara_bass_residual(G, z))
    return worst < 1e-6, {"instances": len(graphs), "max_residual": worst}


def _suite_gw(args, cfg, seed, out):
    mc = cfg.model if cfg else ModelConfig(100, 3, 2, symmetric=(12.0, 4.0))
    rep = mc_moment_suite(mc.to_params(), t_max=4, trials=args.trials, seed=seed)
    _write(out / "moments.csv", rep.to_csv())
    zmax = rep.max_abs_z()
    return zmax < 4, {"rows": len(rep.rows), "max_abs_z": zmax, "trials": rep.trials,
                      "increment_prefactor": {k: float(v) for k, v in
                                              rep.notes["increment_prefactor"].items()}}


def _suite_gram(args, cfg, seed):
    if cfg is None:
        raise CliError("the gram suite needs --config")
    params, d = _params(cfg)
    sigma = assign_labels(params, cfg.model.label_mode, seed)
    G = sample(params, sigma, seed)
    spec = signal_spectrum(params)
    ell = args.ell or cfg.ell or default_ell(G.n, G.q, d)
    op = NBOperator(G)
    diag = gram_diagnostics(pseudo_eigenvectors(G, spec, sigma, ell, op), op, spec)
    utv = diag.pop("UtV")
    dev = float(np.abs(utv - np.eye(len(utv))).max())
    info = {k: float(v) for k, v in diag.items()}
    info.update(ell=ell, max_UtV_deviation=dev)
    return dev < args.gram_tol, info


def cmd_validate(args) -> int:
    cfg = _config(args)
    seed = _seed(args, cfg)
    out = _outdir(args, cfg)
    suite = args.suite
    if suite == "identities":
        ok, info = _suite_identities(args, cfg, seed)
    elif suite == "ihara-bass":
        ok, info = _suite_ihara(args, cfg, seed)
    elif suite == "gw":
        ok, info = _suite_gw(args, cfg, seed, out)
    else:
        ok, info = _suite_gram(args, cfg, seed)
    info.update(suite=suite, passed=bool(ok))
    _json(out / f"validate-{suite}.json", info)
    print(f"{suite}: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_ERROR


def _phase_task(task):
    n, q, r, c_in, c_out, seed, opts = task
    params = ModelParams.symmetric(n, r, q, c_in, c_out)
    sigma = assign_labels(params, seed=seed)
    G = sample(params, sigma, seed)
    res = detect_alg2(G, k_hint=r, opts=opts)
    return overlap(sigma, res.partition, r)


def phase_grid(cfg: ExperimentConfig) -> list[dict]:
    """Grid points from ``[grid]``: mean degree ``d`` and a list of ratios
    (q-1) mu^2 / d for the symmetric model."""
    g = cfg.grid
    if "ratios" not in g or "d" not in g:
        raise CliError("[grid] needs 'd' and 'ratios'")
    q, r = cfg.model.q, cfg.model.r
    d = float(g["d"])
    points = []
    for ratio in g["ratios"]:
        ratio = float(ratio)
        if ratio < 0:
            raise CliError(f"grid ratio {ratio} is negative")
        mu2 = math.sqrt(ratio * d / (q - 1))
        c_in, c_out = symmetric_from_degree(r, q, d, mu2)
        points.append({"ratio": ratio, "c_in": c_in, "c_out": c_out})
    return points


def cmd_phase_diagram(args) -> int:
    cfg = _config(args, required=True)
    out = _outdir(args, cfg)
    seeds = cfg.seeds if args.seed is None else [args.seed]
    points = phase_grid(cfg)
    opts = _detect_opts(args, cfg, 0)
    m = cfg.model
    tasks, owners = [], []
    for p_idx, pt in enumerate(points):
        for s in seeds:
            o = DetectOptions(**{**opts.__dict__, "seed": s})
            tasks.append((m.n, m.q, m.r, pt["c_in"], pt["c_out"], s, o))
            owners.append(p_idx)
    workers = min(_threads(), len(tasks)) or 1
    results: list = [None] * len(tasks)
    errors: list = [None] * len(tasks)

    def run_serial(idx, task):
        try:
            results[idx] = _phase_task(task)
        except Exception as exc:  # per-point failures are recorded, the sweep continues
            errors[idx] = f"{type(exc).__name__}: {exc}"

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_phase_task, t) for t in tasks]
            for idx, f in enumerate(futs):
                try:
                    results[idx] = f.result()
                except Exception as exc:
                    errors[idx] = f"{type(exc).__name__}: {exc}"
    else:
        for idx, t in enumerate(tasks):
            run_serial(idx, t)

    lines = ["ratio,ks_margin,c_in,c_out,seeds,mean_overlap,stderr,median_overlap,errors\n"]
    ratios, means, ses = [], [], []
    for p_idx, pt in enumerate(points):
        vals = [results[i] for i, o in enumerate(owners) if o == p_idx and results[i] is not None]
        errs = [errors[i] for i, o in enumerate(owners) if o == p_idx and errors[i] is not None]
        mean = float(np.mean(vals)) if vals else float("nan")
        se = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else None
        med = float(np.median(vals)) if vals else float("nan")
        lines.append(f"{pt['ratio']:.6g},{pt['ratio'] - 1:.6g},{pt['c_in']:.10g},"
                     f"{pt['c_out']:.10g},{len(vals)},{mean:.6f},"
                     f"{'' if se is None else f'{se:.6f}'},{med:.6f},{len(errs)}\n")
        ratios.append(pt["ratio"]); means.append(mean); ses.append(np.nan if se is None else se)
        for e in errs:
            log.warning("grid point %s: %s", pt["ratio"], e)
    _write(out / "phase.csv", "".join(lines))
    plotting.phase_figure(ratios, means, ses, out / "phase.png")
    print(f"{len(points)} grid points x {len(seeds)} seeds -> {out / 'phase.csv'}")
    return EXIT_OK


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML experiment config")
    common.add_argument("--seed", type=int, help="random seed (non-negative)")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="hynb", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="sample a hypergraph and labels")

    sp = sub.add_parser("spectrum", parents=[common], help="leading eigenvalues of the reduced operator")
    sp.add_argument("hypergraph", nargs="?")
    sp.add_argument("--k", type=int, help="number of eigenvalues")
    sp.add_argument("--margin", type=float)

    dp = sub.add_parser("detect", parents=[common], help="community detection")
    dp.add_argument("hypergraph", nargs="?")
    dp.add_argument("--labels", help="ground-truth labels file")
    dp.add_argument("--alg", type=int, choices=(1, 2))
    dp.add_argument("--k", type=int)
    dp.add_argument("--margin", type=float)
    dp.add_argument("--K", type=float, help="truncation threshold for algorithm 1")

    vp = sub.add_parser("validate", parents=[common], help="identity and moment checks")
    vp.add_argument("hypergraph", nargs="?")
    vp.add_argument("--suite", required=True, choices=("identities", "ihara-bass", "gw", "gram"))
    vp.add_argument("--ell", type=int)
    vp.add_argument("--trials", type=int, default=10 ** 5)
    vp.add_argument("--gram-tol", type=float, default=0.25,
                    help="largest accepted |<u_i, v_j> - delta_ij| for the gram suite")

    pp = sub.add_parser("phase-diagram", parents=[common], help="overlap sweep across the threshold")
    pp.add_argument("--k", type=int)
    pp.add_argument("--margin", type=float)
    return p


COMMANDS = {"generate": cmd_generate, "spectrum": cmd_spectrum, "detect": cmd_detect,
            "validate": cmd_validate, "phase-diagram": cmd_phase_diagram}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be non-negative", file=sys.stderr)
        return EXIT_ERROR
    try:
        _threads()
        return COMMANDS[args.command](args)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
