"""Batch command line front end.

Subcommands: ``skeleton`` (generate or ingest a teacher curve), ``train``
(fit and serialise a model), ``analyze`` (closed-loop metrics, trace CSV,
SVG plots), ``scan`` (bifurcation sweeps over the spectral scale or the
washout length), ``search`` (edge -> supervised point -> interval scan).

Settings come from an INI config file with one section per module; any
command line flag overrides its config key.  Progress goes to stderr,
machine-readable results to files.  Exit codes: 0 success, 2 input error,
3 numeric error, 4 search-bracket error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, schemas, search, svgplot
from .errors import BracketError, NumericError
from .lyapunov import TangentSettings
from .reservoir import ReservoirSpec, build_reservoir
from .skeleton import (
    Skeleton,
    lissajous,
    load_csv,
    load_skeleton,
    rossler_cycle,
    save_skeleton,
    unit_circle,
    van_der_pol,
)
from .training import TrainingConfig, load_model, save_model, train

log = logging.getLogger("skelchaos")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_BRACKET = 4

_GENERATORS = ("lissajous", "circle", "vdp", "rossler", "csv")


# ---------------------------------------------------------------------------
# config plumbing


def _load_config(path):
    cp = configparser.ConfigParser()
    if path:
        if not Path(path).exists():
            raise ValueError(f"config file not found: {path}")
        cp.read(path)
    return cp


def _get(cp, section, key, cast, default):
    if cp.has_option(section, key):
        raw = cp.get(section, key)
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    return default


def _out_dir(args) -> Path:
    base = args.out or os.environ.get("SKELCHAOS_OUTDIR") or "."
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _reservoir_spec(cp, args) -> ReservoirSpec:
    seed = args.seed if args.seed is not None else _get(cp, "reservoir", "seed", int, 1)
    rho = args.rho if args.rho is not None else _get(
        cp, "reservoir", "spectral_scale", float, 1.1
    )
    return ReservoirSpec(
        n_nodes=_get(cp, "reservoir", "n_nodes", int, 1000),
        leak_rate=_get(cp, "reservoir", "leak_rate", float, 0.5),
        spectral_scale=rho,
        input_scale=_get(cp, "reservoir", "input_scale", float, 0.2),
        seed=seed,
        input_dim=_get(cp, "reservoir", "input_dim", int, 2),
    )


def _training_config(cp) -> TrainingConfig:
    return TrainingConfig(
        t_init=_get(cp, "training", "t_init", int, 1000),
        t_train=_get(cp, "training", "t_train", int, 2000),
        beta=_get(cp, "training", "beta", float, 1e-3),
    )


def _report_settings(cp) -> analysis.ReportSettings:
    return analysis.ReportSettings(
        mle=TangentSettings(
            steps=_get(cp, "analysis", "mle_steps", int, 10_000),
            transient=_get(cp, "analysis", "mle_transient", int, 2_000),
            renorm_every=_get(cp, "analysis", "renorm_every", int, 1),
        ),
        cle=TangentSettings(
            steps=_get(cp, "analysis", "cle_steps", int, 10_000),
            transient=_get(cp, "analysis", "cle_transient", int, 2_000),
            renorm_every=_get(cp, "analysis", "renorm_every", int, 1),
        ),
        rmse_steps=_get(cp, "analysis", "rmse_steps", int, 10_000),
        q_window=_get(cp, "analysis", "q_window", int, 2_000),
        q_threshold=_get(cp, "analysis", "q_threshold", float, 1e-2),
        shape_threshold=_get(cp, "analysis", "shape_threshold", float, 5e-2),
        mle_periodic_tol=_get(cp, "analysis", "mle_periodic_tol", float, 1e-3),
        include_cle=_get(cp, "analysis", "include_cle", bool, True),
    )


def _search_config(cp, args) -> search.SearchConfig:
    seeds = args.seeds if getattr(args, "seeds", None) else _get(
        cp, "search", "seeds", str, "1"
    )
    seed_tuple = tuple(int(s) for s in str(seeds).split(",") if s.strip())
    return search.SearchConfig(
        rho_lo=_get(cp, "search", "rho_lo", float, 1.0),
        rho_hi=_get(cp, "search", "rho_hi", float, 1.5),
        grid_step=_get(cp, "search", "grid_step", float, 5e-4),
        q_threshold=_get(cp, "search", "q_threshold", float, 1e-2),
        rmse_threshold=_get(cp, "search", "rmse_threshold", float, 1e-2),
        mle_periodic_tol=_get(cp, "search", "mle_periodic_tol", float, 1e-3),
        shape_threshold=_get(cp, "search", "shape_threshold", float, 5e-2),
        max_bisections=_get(cp, "search", "max_bisections", int, 20),
        seeds=seed_tuple,
        prescan_points=_get(cp, "search", "prescan_points", int, 16),
        extend_beyond=_get(cp, "search", "extend_beyond", int, 10),
    )


def _skeleton_from_args(cp, args) -> Skeleton:
    generator = getattr(args, "generator", None)
    if generator is None:
        generator = _get(cp, "skeleton", "generator", str, None)
    csv_path = getattr(args, "csv", None) or _get(cp, "skeleton", "csv", str, None)
    if generator is None and csv_path:
        generator = "csv"
    if generator is None:
        raise ValueError("no skeleton given: pass a generator flag or a config entry")
    steps = getattr(args, "steps", None) or _get(cp, "skeleton", "steps", int, 3000)
    if generator == "lissajous":
        return lissajous(steps)
    if generator == "circle":
        period = getattr(args, "period", None) or _get(cp, "skeleton", "period", int, 100)
        return unit_circle(steps, period)
    if generator == "vdp":
        return van_der_pol(
            mu=getattr(args, "mu", None) or _get(cp, "skeleton", "mu", float, 1.0),
            dt=getattr(args, "dt", None) or _get(cp, "skeleton", "dt", float, 0.1),
            steps=steps,
        )
    if generator == "rossler":
        return rossler_cycle(
            c=getattr(args, "c", None) or _get(cp, "skeleton", "c", float, 3.0),
            dt=getattr(args, "dt", None) or _get(cp, "skeleton", "dt", float, 0.2),
            steps=steps,
            literal_xy=bool(
                getattr(args, "literal_xy", False)
                or _get(cp, "skeleton", "literal_xy", bool, False)
            ),
        )
    if generator == "csv":
        if not csv_path:
            raise ValueError("csv generator needs a file path (--csv or [skeleton] csv)")
        return load_csv(
            csv_path,
            resample_to=getattr(args, "resample", None)
            or _get(cp, "skeleton", "resample", int, 400),
            close_curve=bool(
                getattr(args, "close", False) or _get(cp, "skeleton", "close", bool, False)
            ),
        )
    raise ValueError(f"unknown generator {generator!r}; expected one of {_GENERATORS}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_skeleton(args) -> int:
    cp = _load_config(args.config)
    sk = _skeleton_from_args(cp, args)
    out = _out_dir(args)
    save_skeleton(sk, out / "skeleton.csv")
    log.info("wrote %s (%d samples, dim %d)", out / "skeleton.csv", len(sk), sk.dim)
    return EXIT_OK


def _write_json(path, payload, schema=None) -> None:
    if schema is not None:
        schemas.validate(payload, schema)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_train(args) -> int:
    cp = _load_config(args.config)
    spec = _reservoir_spec(cp, args)
    train_cfg = _training_config(cp)
    settings = _report_settings(cp)
    if args.skeleton:
        sk = load_skeleton(args.skeleton)
    else:
        sk = _skeleton_from_args(cp, args)
    out = _out_dir(args)

    res = build_reservoir(spec)
    model = train(res, sk, train_cfg)
    model_dir = out / "model"
    save_model(model, model_dir, sk)

    from .reservoir import effective_radius_post, effective_radius_pre
    from .training import run_open_loop

    open_trace = run_open_loop(model, sk, settings.rmse_steps)
    rmse_vec = analysis.rmse_per_component(open_trace.outputs, sk, offset=open_trace.start_step)
    payload = {
        "rho": spec.spectral_scale,
        "rmse": [float(v) for v in rmse_vec],
        "rmse_x": float(rmse_vec[0]),
        "eff_radius_pre": effective_radius_pre(res),
        "eff_radius_post": effective_radius_post(res, model.w_hat),
    }
    _write_json(out / "train_report.json", payload, schemas.TRAIN_REPORT_SCHEMA)
    log.info("model in %s, open-loop rmse_x %.3g", model_dir, payload["rmse_x"])
    return EXIT_OK


def cmd_analyze(args) -> int:
    cp = _load_config(args.config)
    settings = _report_settings(cp)
    model, sk = load_model(args.model)
    if sk is None:
        raise ValueError(f"{args.model}: no skeleton stored; retrain with a skeleton")
    out = _out_dir(args)

    report, trace = analysis.build_report(model, sk, settings)
    _write_json(out / "report.json", report.to_dict(), schemas.ANALYSIS_REPORT_SCHEMA)

    settled = trace.states[settings.mle.transient :]
    proj = analysis.pca_projection(settled, k=2)
    pcs = np.full((trace.outputs.shape[0], 2), np.nan)
    pcs[settings.mle.transient :] = proj.coords

    with open(out / "closed_trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["step"]
            + [f"z_{d}" for d in range(sk.dim)]
            + ["pc1", "pc2"]
        )
        for k in range(trace.outputs.shape[0]):
            row = [k] + [format(v, ".10g") for v in trace.outputs[k]]
            row += ["" if np.isnan(v) else format(v, ".10g") for v in pcs[k]]
            writer.writerow(row)

    from .training import run_open_loop

    open_trace = run_open_loop(model, sk, settings.rmse_steps)
    targets = sk.tile(open_trace.start_step + settings.rmse_steps)[open_trace.start_step :]
    with open(out / "open_trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["step"]
            + [f"z_{d}" for d in range(sk.dim)]
            + [f"u_{d}" for d in range(sk.dim)]
        )
        for k in range(open_trace.outputs.shape[0]):
            writer.writerow(
                [k]
                + [format(v, ".10g") for v in open_trace.outputs[k]]
                + [format(v, ".10g") for v in targets[k]]
            )

    tail = trace.outputs[-settings.q_window :]
    svgplot.line_plot(
        out / "output_plane.svg",
        [(sk.samples[:, 0], sk.samples[:, 1]), (tail[:, 0], tail[:, 1])],
        title=f"closed-loop output, rho={report.rho:.4f}",
        xlabel="z_0",
        ylabel="z_1",
    )
    svgplot.line_plot(
        out / "pca_plane.svg",
        [(proj.coords[:, 0], proj.coords[:, 1])],
        title="internal state, top-2 principal components",
        xlabel="pc1",
        ylabel="pc2",
    )
    freqs, power = analysis.power_spectrum(trace.outputs[settings.mle.transient :, 0])
    floor = np.finfo(float).tiny
    svgplot.line_plot(
        out / "spectrum.svg",
        [(freqs[1:], np.log10(np.maximum(power[1:], floor)))],
        title="output power spectrum",
        xlabel="frequency [cycles/step]",
        ylabel="log10 power",
    )
    log.info(
        "analysis: mle=%.4g cle=%s classification=%s",
        report.mle,
        "n/a" if report.cle is None else f"{report.cle:.4g}",
        report.classification,
    )
    return EXIT_OK


def _parse_range(text: str, name: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"{name} must be lo:hi:step, got {text!r}")
    lo, hi, step = (float(p) for p in parts)
    if step <= 0 or hi < lo:
        raise ValueError(f"{name}: need lo <= hi and step > 0, got {text!r}")
    n = int(round((hi - lo) / step))
    return lo + step * np.arange(n + 1)


def _write_bifurcation(path_csv, path_svg, diagram: analysis.BifurcationDiagram,
                       xlabel: str) -> None:
    with open(path_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["parameter", "value", "phase"])
        for (param, value), phase in zip(diagram.points, diagram.phase):
            writer.writerow([format(param, ".10g"), format(value, ".10g"), phase])
    settled = diagram.phase == "settled"
    groups = []
    colors = []
    if np.any(diagram.phase == "transient"):
        groups.append(
            (diagram.points[~settled, 0], diagram.points[~settled, 1])
        )
        colors.append("#a8e6a1")  # light green transients
    groups.append((diagram.points[settled, 0], diagram.points[settled, 1]))
    colors.append("#1f77b4")
    svgplot.scatter_plot(
        path_svg,
        groups,
        title=f"bifurcation diagram ({diagram.source})",
        xlabel=xlabel,
        ylabel="value",
        colors=colors,
    )


def cmd_scan(args) -> int:
    cp = _load_config(args.config)
    spec = _reservoir_spec(cp, args)
    train_cfg = _training_config(cp)
    sk = load_skeleton(args.skeleton) if args.skeleton else _skeleton_from_args(cp, args)
    out = _out_dir(args)

    steps = args.traj_steps or _get(cp, "scan", "steps", int, 10_000)
    settle_after = _get(cp, "scan", "settle_after", int, 8_000)
    transient_split = _get(cp, "scan", "transient_split", int, 2_000)
    start = 0 if args.keep_transient else settle_after
    axis = _get(cp, "scan", "poincare_axis", int, 1)
    level = _get(cp, "scan", "poincare_level", float, 0.0)
    node = args.node if args.node is not None else _get(cp, "scan", "node", int, 0)

    if args.rho_range:
        grid = _parse_range(args.rho_range, "--rho-range")
        sweep = "rho"
    elif args.tinit_range:
        grid = _parse_range(args.tinit_range, "--tinit-range")
        sweep = "t_init"
    else:
        raise ValueError("scan needs --rho-range or --tinit-range")

    base = build_reservoir(spec)
    ext_rows, ext_phase = [], []
    poi_rows, poi_phase = [], []
    failures = 0
    for value in grid:
        try:
            if sweep == "rho":
                model = train(base.with_spectral_scale(float(value)), sk, train_cfg)
            else:
                cfg_k = TrainingConfig(
                    t_init=int(round(value)), t_train=train_cfg.t_train, beta=train_cfg.beta
                )
                model = train(base, sk, cfg_k)
            from .training import run_closed_loop

            trace = run_closed_loop(model, steps)
            series = trace.states.mean(axis=1)
            rows, phase = analysis.extrema_bifurcation_points(
                float(value), series, transient_split, start=start
            )
            ext_rows.append(rows)
            ext_phase.append(phase)
            rows, phase = analysis.poincare_bifurcation_points(
                float(value), trace.states, model.w_out, transient_split,
                axis=axis, level=level, node=node, start=start,
            )
            poi_rows.append(rows)
            poi_phase.append(phase)
        except NumericError as exc:
            failures += 1
            log.warning("scan point %s=%.6g failed: %s", sweep, value, exc)
            continue
        log.info("scan point %s=%.6g done", sweep, value)

    if not ext_rows:
        raise NumericError("every scan point failed")
    extrema = analysis.BifurcationDiagram(
        points=np.vstack(ext_rows),
        phase=np.concatenate(ext_phase),
        source="node-average-extrema",
        transient_split=transient_split,
    )
    poincare = analysis.BifurcationDiagram(
        points=np.vstack(poi_rows),
        phase=np.concatenate(poi_phase),
        source="poincare-section",
        transient_split=transient_split,
    )
    _write_bifurcation(
        out / "bifurcation_extrema.csv", out / "bifurcation_extrema.svg", extrema, sweep
    )
    _write_bifurcation(
        out / "bifurcation_poincare.csv", out / "bifurcation_poincare.svg", poincare, sweep
    )
    frac_ok = 1.0 - failures / len(grid)
    log.info("scan finished: %d/%d points succeeded", len(grid) - failures, len(grid))
    return EXIT_OK if frac_ok >= 0.9 else EXIT_NUMERIC


def _search_one_seed(payload):
    """Worker for one seed; returns (seed, status, result-or-message)."""
    seed, spec, sk, cfg, train_cfg, settings = payload
    spec_seeded = ReservoirSpec(
        n_nodes=spec.n_nodes,
        leak_rate=spec.leak_rate,
        spectral_scale=spec.spectral_scale,
        input_scale=spec.input_scale,
        seed=seed,
        input_dim=spec.input_dim,
    )
    try:
        result = search.run_search(spec_seeded, sk, cfg, train_cfg, settings)
        return seed, "ok", result
    except BracketError as exc:
        return seed, "bracket-error", str(exc)
    except NumericError as exc:
        return seed, "numeric-error", str(exc)


def cmd_search(args) -> int:
    cp = _load_config(args.config)
    spec = _reservoir_spec(cp, args)
    train_cfg = _training_config(cp)
    settings = _report_settings(cp)
    cfg = _search_config(cp, args)
    sk = load_skeleton(args.skeleton) if args.skeleton else _skeleton_from_args(cp, args)
    out = _out_dir(args)

    jobs = args.jobs or _get(cp, "search", "jobs", int, 1)
    payloads = [(seed, spec, sk, cfg, train_cfg, settings) for seed in cfg.seeds]
    if jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(payloads))) as pool:
            outcomes = list(pool.map(_search_one_seed, payloads))
    else:
        outcomes = [_search_one_seed(p) for p in payloads]
    outcomes.sort(key=lambda item: item[0])

    per_seed = []
    any_ok = False
    for seed, status, result in outcomes:
        if status != "ok":
            log.warning("seed %d: %s: %s", seed, status, result)
            per_seed.append(
                {
                    "seed": seed,
                    "status": status,
                    "rho_edge": None,
                    "rho_supervised": None,
                    "n_candidates": 0,
                    "candidate_rhos": [],
                    "message": str(result),
                }
            )
            continue
        any_ok = True
        search.save_search_result(
            result,
            out / f"search_seed{seed}.json",
            out / f"search_seed{seed}.csv",
        )
        with open(out / f"search_seed{seed}.json") as fh:
            schemas.validate(json.load(fh), schemas.SEARCH_RESULT_SCHEMA)
        per_seed.append(
            {
                "seed": seed,
                "status": "ok",
                "rho_edge": result.rho_edge,
                "rho_supervised": result.rho_supervised,
                "n_candidates": len(result.candidates),
                "candidate_rhos": [r.rho for r in result.candidates],
            }
        )
        if not result.candidates:
            log.info("seed %d: no semi-supervised candidates found", seed)
        for report in result.candidates[: args.max_candidate_plots]:
            base = build_reservoir(
                ReservoirSpec(
                    n_nodes=spec.n_nodes,
                    leak_rate=spec.leak_rate,
                    spectral_scale=report.rho,
                    input_scale=spec.input_scale,
                    seed=seed,
                    input_dim=spec.input_dim,
                )
            )
            model = train(base, sk, train_cfg)
            from .training import run_closed_loop

            trace = run_closed_loop(model, settings.mle.steps)
            tail = trace.outputs[-settings.q_window :]
            svgplot.line_plot(
                out / f"candidate_seed{seed}_rho{report.rho:.4f}.svg",
                [(sk.samples[:, 0], sk.samples[:, 1]), (tail[:, 0], tail[:, 1])],
                title=f"seed {seed}, rho={report.rho:.4f}, mle={report.mle:.3g}",
                xlabel="z_0",
                ylabel="z_1",
            )

    summary = {"seeds": list(cfg.seeds), "per_seed": per_seed}
    _write_json(out / "search_summary.json", summary, schemas.SEARCH_SUMMARY_SCHEMA)
    if not any_ok and all(p["status"] == "bracket-error" for p in per_seed):
        log.error("every seed failed with a bracket error")
        return EXIT_BRACKET
    if not any_ok:
        return EXIT_NUMERIC
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_common(p):
    p.add_argument("--config", help="INI config file")
    p.add_argument("--seed", type=int, help="reservoir seed (overrides config)")
    p.add_argument("--rho", type=float, help="spectral scale (overrides config)")
    p.add_argument("--out", help="output directory (default $SKELCHAOS_OUTDIR or .)")


def _add_skeleton_flags(p):
    group = p.add_mutually_exclusive_group()
    group.add_argument(
        "--lissajous", dest="generator", action="store_const", const="lissajous"
    )
    group.add_argument("--circle", dest="generator", action="store_const", const="circle")
    group.add_argument("--vdp", dest="generator", action="store_const", const="vdp")
    group.add_argument("--rossler", dest="generator", action="store_const", const="rossler")
    group.add_argument("--csv", help="CSV file with one sample per row")
    p.add_argument("--steps", type=int, help="number of samples to emit")
    p.add_argument("--period", type=int, help="circle period in steps")
    p.add_argument("--mu", type=float, help="Van der Pol nonlinearity")
    p.add_argument("--dt", type=float, help="integrator sampling step")
    p.add_argument("--c", type=float, help="Rossler parameter c")
    p.add_argument("--literal-xy", dest="literal_xy", action="store_true",
                   help="use the x*y variant of the Rossler third equation")
    p.add_argument("--resample", type=int, help="arc-length resampling count for CSV")
    p.add_argument("--close", action="store_true", help="close the CSV curve")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skelchaos",
        description="design chaotic attractors along a periodic skeleton",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("skeleton", help="generate or ingest a teacher curve")
    _add_common(p)
    _add_skeleton_flags(p)
    p.set_defaults(func=cmd_skeleton)

    p = sub.add_parser("train", help="teacher-force, fit, and serialise a model")
    _add_common(p)
    _add_skeleton_flags(p)
    p.add_argument("--skeleton", help="skeleton CSV written by the skeleton command")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("analyze", help="closed-loop metrics and plots for a model")
    _add_common(p)
    p.add_argument("--model", required=True, help="model directory from train")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("scan", help="bifurcation sweep over rho or the washout")
    _add_common(p)
    _add_skeleton_flags(p)
    p.add_argument("--skeleton", help="skeleton CSV path")
    p.add_argument("--rho-range", help="lo:hi:step sweep of the spectral scale")
    p.add_argument("--tinit-range", help="lo:hi:step sweep of the washout length")
    p.add_argument("--traj-steps", type=int, help="closed-loop steps per grid point")
    p.add_argument("--node", type=int, help="monitored node index")
    p.add_argument(
        "--keep-transient",
        action="store_true",
        help="collect points from step 0 and mark the transient phase",
    )
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("search", help="edge, supervised point, and interval scan")
    _add_common(p)
    _add_skeleton_flags(p)
    p.add_argument("--skeleton", help="skeleton CSV path")
    p.add_argument("--seeds", help="comma-separated reservoir seeds")
    p.add_argument("--jobs", type=int, help="parallel seed workers")
    p.add_argument(
        "--max-candidate-plots",
        type=int,
        default=5,
        help="cap on per-candidate SVG plots per seed",
    )
    p.set_defaults(func=cmd_search)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BracketError as exc:
        log.error("%s", exc)
        return EXIT_BRACKET
    except (NumericError, np.linalg.LinAlgError) as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    except (ValueError, OSError, KeyError, configparser.Error) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
