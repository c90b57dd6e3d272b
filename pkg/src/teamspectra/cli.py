"""Command-line entry point.

``run`` drives the whole pipeline from a config file. The other analysis
subcommands work on single CSV files, so each step can be used on its own.

Exit codes: 0 success, 2 configuration or input error, 3 stage (runtime) error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .analytics import AUTO, FactorLabel, Level, efa, kruskal_wallis, label_factors
from .analytics.features import COLLECTIVE_COLUMNS, INDIVIDUAL_COLUMNS
from .errors import ConfigError, CrawlError, StageError, TeamSpectraError
from .ingest.corpus import load_timeline
from .ingest.model import Tier
from .learn import KINDS, Dataset, elbow, evaluate, kmeans, label_clusters, train
from .pipeline import (
    STAGES,
    PipelineConfig,
    crawl_config,
    graphs_from_timelines,
    read_csv,
    run_pipeline,
    write_csv,
    write_graphs,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3

KEY_COLUMNS = ("match_id", "team", "slot")
METRICS = ("egr", "c_in", "c_out")

logger = logging.getLogger("teamspectra")


class InputError(ConfigError):
    """A command-line input file is missing or lacks required columns."""


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="teamspectra", description="Team cooperation analytics for 5v5 match data.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the pipeline (all enabled stages, or one)")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--stage", choices=STAGES, help="run only this stage; earlier outputs must exist")
    run.add_argument("--report-svg", action="store_true", help="also write SVG figures")

    fetch = sub.add_parser("fetch", help="crawl the match API described in [fetch]")
    fetch.add_argument("--config", required=True, type=Path)
    fetch.add_argument("--resume", action="store_true", help="continue from the ledger in the output directory")

    synth = sub.add_parser("synth", help="write a synthetic corpus and its ground truth")
    synth.add_argument("--config", required=True, type=Path)
    synth.add_argument("--out", required=True, type=Path)

    g = sub.add_parser("graphs", help="assist-graph metrics for every timeline in a directory")
    g.add_argument("--in", dest="inp", required=True, type=Path, help="timeline directory or corpus root")
    g.add_argument("--out", required=True, type=Path)
    g.add_argument("--pressure-radius", default="2000", help="map units, or 'none' to skip map pressure")

    e = sub.add_parser("efa", help="factor analysis of a feature table")
    e.add_argument("--level", required=True, choices=[lv.value for lv in Level])
    e.add_argument("--in", dest="inp", required=True, type=Path)
    e.add_argument("--out", required=True, help="loadings.csv,scores.csv")
    e.add_argument("--n-factors", default="2", help="integer or 'auto'")
    e.add_argument("--rotation", default="varimax", choices=["varimax", "none"])
    e.add_argument("--strict", action="store_true", help="fail instead of warning on non-convergence")

    t = sub.add_parser("train", help="train and evaluate one classifier on a score table")
    t.add_argument("--level", required=True, choices=[lv.value for lv in Level])
    t.add_argument("--in", dest="inp", required=True, type=Path)
    t.add_argument("--algo", required=True, choices=KINDS)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--test-fraction", type=float, default=0.2)
    t.add_argument("--out", required=True, type=Path)
    t.add_argument("--summary-json", type=Path, help="also write a JSON model summary")

    c = sub.add_parser("cluster", help="k-means on a score table")
    c.add_argument("--level", required=True, choices=[lv.value for lv in Level])
    c.add_argument("--in", dest="inp", required=True, type=Path)
    c.add_argument("--k", default="3", help="integer or 'auto' (elbow)")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--k-max", type=int, default=10)
    c.add_argument("--out", required=True, type=Path)

    k = sub.add_parser("kwtest", help="Kruskal-Wallis test of a team metric across rank tiers")
    k.add_argument("--in", dest="inp", required=True, type=Path, help="rank_metrics.csv from the kwtest stage")
    k.add_argument("--metric", required=True, choices=METRICS)
    k.add_argument("--group-by", default="tier", choices=["tier"])
    k.add_argument("--out", type=Path)
    return ap


def _rows(path: Path, required=()) -> list[dict[str, str]]:
    if not path.is_file():
        raise InputError(f"input file {path} not found")
    rows = read_csv(path)
    if not rows:
        raise InputError(f"{path} has no data rows")
    missing = [c for c in required if c not in rows[0]]
    if missing:
        raise InputError(f"{path} lacks column(s) {missing}")
    return rows


def _value_columns(rows) -> list[str]:
    return [c for c in rows[0] if c not in KEY_COLUMNS and c != "won"]


def _cmd_graphs(args) -> int:
    root = args.inp
    tl_dir = root / "timelines" if (root / "timelines").is_dir() else root
    paths = sorted(tl_dir.glob("*.json"))
    if not paths:
        raise InputError(f"no timeline documents in {tl_dir}")
    radius = None if args.pressure_radius.strip().lower() == "none" else float(args.pressure_radius)
    graphs = graphs_from_timelines((load_timeline(p) for p in paths), radius)
    n = write_graphs(args.out, graphs)
    print(f"wrote {n} team graphs to {args.out}")
    return EXIT_OK


def _cmd_efa(args) -> int:
    level = Level(args.level)
    cols = INDIVIDUAL_COLUMNS if level is Level.Individual else COLLECTIVE_COLUMNS
    outs = [Path(p.strip()) for p in args.out.split(",")]
    if len(outs) != 2:
        raise InputError("--out takes two comma-separated paths: loadings.csv,scores.csv")
    rows = _rows(args.inp, cols)
    X = np.array([[float(r[c]) for c in cols] for r in rows])
    n = AUTO if args.n_factors == AUTO else int(args.n_factors)
    model = efa(X, n, cols, rotation=None if args.rotation == "none" else args.rotation, strict=args.strict)
    if model.n_factors == 2:
        model = label_factors(model, level)
        names = [lab.value for lab in model.factor_labels]
    else:
        names = [f"factor_{j + 1}" for j in range(model.n_factors)]
    write_csv(
        outs[0],
        ("factor", "label", "feature", "loading", "communality"),
        (
            (j + 1, names[j], f, model.loadings[i, j], model.communalities[i])
            for j in range(model.n_factors)
            for i, f in enumerate(cols)
        ),
    )
    keys = [c for c in (*KEY_COLUMNS, "won") if c in rows[0]]
    write_csv(outs[1], (*keys, *names), ((*(r[k] for k in keys), *s) for r, s in zip(rows, model.scores)))
    print(f"{model.n_factors} factors ({', '.join(names)}); converged={model.converged}")
    return EXIT_OK


def _scores(path: Path):
    rows = _rows(path, ("won",))
    cols = _value_columns(rows)
    X = np.array([[float(r[c]) for c in cols] for r in rows]).reshape(len(rows), len(cols))
    y = np.array([r["won"] in ("true", "1", "True") for r in rows], dtype=int)
    return rows, cols, X, y


def _cmd_train(args) -> int:
    _, cols, X, y = _scores(args.inp)
    data = Dataset.from_arrays(X, y, args.test_fraction, args.seed, cols)
    model = train(args.algo, data, seed=args.seed)
    rep = evaluate(model, data)
    header = ("level", "algorithm", "seed", "accuracy", "f1", "auc", "tn", "fp", "fn", "tp") + tuple(
        f"importance_{c}" for c in cols
    )
    row = (args.level, args.algo, args.seed, rep.accuracy, rep.f1, rep.auc, rep.tn, rep.fp, rep.fn, rep.tp)
    write_csv(args.out, header, [(*row, *rep.importances)])
    if args.summary_json:
        summary = {
            "level": args.level,
            "algorithm": args.algo,
            "seed": args.seed,
            "features": cols,
            "n_train": int(data.train.size),
            "n_test": int(data.test.size),
            "accuracy": rep.accuracy,
            "f1": rep.f1,
            "auc": rep.auc,
            "confusion": rep.confusion.tolist(),
            "importances": dict(zip(cols, map(float, rep.importances))),
            "flags": list(rep.flags),
        }
        coef = getattr(model, "coef_", None)
        if coef is not None:
            summary["coefficients"] = [float(v) for v in np.ravel(coef)]
        args.summary_json.write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    print(f"{args.level} {args.algo}: accuracy {rep.accuracy:.4f} f1 {rep.f1:.4f} auc {rep.auc:.4f}")
    return EXIT_OK


def _cmd_cluster(args) -> int:
    level = Level(args.level)
    rows, cols, X, _ = _scores(args.inp)
    if args.k == AUTO:
        eb = elbow(X, args.k_max, args.seed)
        k = eb.k
        print(f"elbow picked k={k}" + (" (flat inertia curve)" if eb.flat else ""))
    else:
        k = int(args.k)
    cl = kmeans(X, k, args.seed)
    labels = None
    known = {lab.value for lab in FactorLabel}
    if k == 3 and set(cols) <= known:
        labels = label_clusters(cl, {FactorLabel(c): j for j, c in enumerate(cols)}, level).labels
    keys = [c for c in KEY_COLUMNS if c in rows[0]]
    write_csv(
        args.out,
        (*keys, "cluster", "label"),
        ((*(r[c] for c in keys), a, None if labels is None else labels[a]) for r, a in zip(rows, cl.assignments)),
    )
    print(f"k={k} sizes={cl.sizes.tolist()} inertia={cl.inertia:.6g}")
    return EXIT_OK


def _cmd_kwtest(args) -> int:
    rows = _rows(args.inp, ("tier", args.metric))
    groups: dict[int, list[float]] = {}
    for r in rows:
        if r["tier"]:
            groups.setdefault(int(Tier[r["tier"].capitalize()]), []).append(float(r[args.metric]))
    tiers = sorted(groups)
    res = kruskal_wallis([groups[t] for t in tiers])
    if args.out:
        write_csv(
            args.out,
            ("metric", "groups", "n", "H", "df", "p_value", "log10_p", "all_tied"),
            [(args.metric, len(tiers), sum(res.group_sizes), res.H, res.df, res.p_value, res.log10_p, res.all_tied)],
        )
    print(f"{args.metric}: H={res.H:.6g} df={res.df} p={res.p_value:.6g} log10(p)={res.log10_p:.6g}")
    return EXIT_OK


def _cmd_fetch(args) -> int:
    from .client import crawl

    cfg = PipelineConfig.from_file(args.config)
    out = Path(cfg.fetch["output_dir"]) if cfg.fetch.get("output_dir") else cfg.corpus_root
    ledger = crawl(crawl_config(cfg, out), resume=args.resume)
    print(f"fetched {len(ledger.fetched_match_ids)} matches into {out}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    from .ingest import write_corpus
    from .synth import generate

    cfg = PipelineConfig.from_file(args.config)
    matches, timelines, truth = generate(cfg.synth_config())
    write_corpus(args.out, matches, timelines)
    truth.write_csv(args.out / "ground_truth.csv")
    print(f"wrote {len(matches)} synthetic matches to {args.out}")
    return EXIT_OK


def _cmd_run(args) -> int:
    cfg = PipelineConfig.from_file(args.config)
    if args.report_svg:
        cfg = replace(cfg, report_svg=True)
    out = run_pipeline(cfg, (args.stage,) if args.stage else None)
    print(f"report written to {out}")
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "fetch": _cmd_fetch,
    "synth": _cmd_synth,
    "graphs": _cmd_graphs,
    "efa": _cmd_efa,
    "train": _cmd_train,
    "cluster": _cmd_cluster,
    "kwtest": _cmd_kwtest,
}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except CrawlError as exc:
        print(f"fetch failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (TeamSpectraError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
