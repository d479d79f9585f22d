"""Command-line pipeline: simulate, fit, evaluate, compare, render.

Every command is driven by one JSON config file; selected keys can be
overridden by flags. Exit codes: 0 success, 1 validation error,
2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .comparison import (library_digest, render_census_table,
                         render_pairwise_table, repetition_census, support_of)
from .config import config_help, derive_seed, load_config
from .dataset import ingest_csv, normalize, split_311, write_csv
from .errors import ConfigError, NumericalError, ValidationError
from .estimator import SparseDynamicsRegressor
from .evaluation import compute_derivatives, evaluate, run_protocol_suite
from .plants import generate_signal, get_plant, simulate, write_truth_manifest
from .regression import SparseModel
from .render import render_equations
from .selection import SelectionReport


def _path(cfg, name):
    return os.path.join(cfg["workdir"], name)


def cmd_simulate(cfg):
    sim = cfg["simulate"]
    spec = get_plant(sim["plant"])
    bounds = sim["amplitude_bounds"] or spec.train_bounds
    signal = generate_signal(sim["span_hours"], sim["segment_hours"],
                             tuple(bounds), sim["kinds"],
                             derive_seed(cfg["seed"], "signal"))
    ds = simulate(spec, signal, sim["dt_hours"],
                  noise_sigma=sim["noise_sigma"],
                  seed=derive_seed(cfg["seed"], "noise"))
    os.makedirs(cfg["workdir"], exist_ok=True)
    write_csv(ds, _path(cfg, sim["dataset"]))
    write_truth_manifest(spec, _path(cfg, sim["truth"]))
    with open(_path(cfg, sim["signal"]), "w") as fh:
        json.dump(signal.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {sim['dataset']} ({ds.m} rows, {ds.n} states), "
          f"{sim['truth']}, {sim['signal']}")
    return 0


def cmd_fit(cfg):
    fit = cfg["fit"]
    ds = ingest_csv(_path(cfg, fit["dataset"]), fit["input_column"])
    est = SparseDynamicsRegressor(
        diff=fit["diff"], tv_reg=fit["tv_reg"], tv_iters=fit["tv_iters"],
        max_total_degree=fit["max_total_degree"],
        exponent_min=fit["exponent_min"], exponent_max=fit["exponent_max"],
        unary_fns=tuple(fit["unary_fns"]),
        include_constant=fit["include_constant"],
        n_lambdas=fit["n_lambdas"], lambda_min_ratio=fit["lambda_min_ratio"],
        refit=None if fit["refit"] in ("none", None) else fit["refit"],
        selection=fit["selection"], score_alpha=fit["score_alpha"],
        score_beta=fit["score_beta"],
        split_seed=derive_seed(cfg["seed"], "split"))
    est.fit(ds)
    est.model_.save(_path(cfg, fit["model"]))

    tables = []
    for path in est.paths_:
        tables.append({
            "state_index": path.state_index,
            "entries": [{"lambda": e.lambda_, "train_r2": e.train_r2,
                         "cv_r2": e.cv_r2, "term_count": e.term_count}
                        for e in path.entries],
        })
    with open(_path(cfg, fit["paths"]), "w") as fh:
        json.dump({"format": "odefind-paths", "states": tables}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
    for report in est.reports_:
        name = ds.names[report.state_index]
        peak = ("" if report.peak_found is None
                else f" peak_found={report.peak_found}")
        print(f"{name}: method={report.method} lambda={report.chosen_lambda:.4g} "
              f"terms={report.chosen_term_count} cv_r2={report.cv_r2:.6f}{peak}")
    print(f"wrote {fit['model']}, {fit['paths']}")
    return 0


def cmd_evaluate(cfg):
    ev = cfg["evaluate"]
    sim = cfg["simulate"]
    model = SparseModel.load(_path(cfg, ev["model"]))
    ds = ingest_csv(_path(cfg, ev["dataset"]),
                    model.norm_stats.names[-1])
    ds_n, _ = normalize(ds, model.norm_stats)
    derivs = compute_derivatives(ds_n, model.meta.get("diff", "central"),
                                 tv_reg=model.meta.get("tv_reg", 1e-3),
                                 tv_iters=model.meta.get("tv_iters", 100))
    split = split_311(ds.m, model.meta["split_seed"])

    plant_name = ev["plant"] or sim["plant"]
    spec = get_plant(plant_name)
    reports = run_protocol_suite(
        model, spec,
        span=ev["span_hours"] or sim["span_hours"],
        dt=ev["dt_hours"] or sim["dt_hours"],
        segment_duration=ev["segment_hours"] or sim["segment_hours"],
        kinds=ev["kinds"] or sim["kinds"],
        seed_outside=derive_seed(cfg["seed"], "outside"),
        seed_long=derive_seed(cfg["seed"], "long-time"),
        diff_method=model.meta.get("diff", "central"),
        tv_reg=model.meta.get("tv_reg", 1e-3),
        tv_iters=model.meta.get("tv_iters", 100),
        base_ds=ds, base_derivs=derivs, test_rows=split.test,
        long_time_factor=ev["long_time_factor"])
    for report in reports:
        stem = f"{ev['report_prefix']}-{report.protocol}"
        report.save(_path(cfg, stem + ".json"))
        with open(_path(cfg, stem + ".txt"), "w") as fh:
            fh.write(report.render())
        print(report.render(), end="")
    print(f"wrote {ev['report_prefix']}-*.json/.txt")
    return 0


def cmd_compare(cfg):
    comp = cfg["compare"]
    if len(comp["models"]) < 2:
        raise ConfigError("compare needs at least 2 model files")
    models = [SparseModel.load(_path(cfg, p)) for p in comp["models"]]
    labels = comp["labels"] or [os.path.splitext(os.path.basename(p))[0]
                                for p in comp["models"]]
    if len(labels) != len(models):
        raise ConfigError("labels must match models one-to-one")
    digests = {library_digest(m.library) for m in models}
    if len(digests) != 1:
        raise ConfigError("models use different library manifests; "
                          "comparison undefined")

    n = models[0].n
    order = models[0].library.display_names()
    text_parts, json_states = [], []
    for i in range(n):
        state = models[0].state_names[i]
        supports = [support_of(m, i, system_id=lab)
                    for m, lab in zip(models, labels)]
        census = repetition_census(supports, order=order)
        text_parts.append(f"== state {state} ==\n")
        text_parts.append(render_pairwise_table(supports))
        text_parts.append(render_census_table(census))
        json_states.append({
            "state": state,
            "supports": {lab: sorted(s.terms)
                         for lab, s in zip(labels, supports)},
            "census": [[t, c] for t, c in census],
        })
    text = "\n".join(text_parts)
    with open(_path(cfg, comp["output_prefix"] + ".txt"), "w") as fh:
        fh.write(text)
    with open(_path(cfg, comp["output_prefix"] + ".json"), "w") as fh:
        json.dump({"format": "odefind-compare", "labels": labels,
                   "states": json_states}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(text, end="")
    return 0


def cmd_render(cfg):
    ren = cfg["render"]
    model = SparseModel.load(_path(cfg, ren["model"]))
    text = render_equations(model)
    with open(_path(cfg, ren["output"]), "w") as fh:
        fh.write(text)
    print(text, end="")
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "render": cmd_render,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="odefind",
        description="Identify sparse forced ODEs from time-series data.",
        epilog=config_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} stage")
        p.add_argument("--config", required=True, help="JSON run config")
        p.add_argument("--workdir", help="override the config workdir")
        p.add_argument("--seed", type=int, help="override the config seed")
        if name == "fit":
            p.add_argument("--diff", choices=["tv", "central"],
                           help="differentiation method override")
            p.add_argument("--tv-reg", type=float, dest="tv_reg",
                           help="TV regularization weight override")
            p.add_argument("--tv-iters", type=int, dest="tv_iters",
                           help="TV iteration cap override")
            p.add_argument("--selection", choices=["cv-peak", "score"],
                           help="selection method override")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.workdir is not None:
            cfg["workdir"] = args.workdir
        if args.seed is not None:
            cfg["seed"] = args.seed
        for key in ("diff", "tv_reg", "tv_iters", "selection"):
            val = getattr(args, key, None)
            if val is not None:
                cfg["fit"][key] = val
        return COMMANDS[args.command](cfg)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
