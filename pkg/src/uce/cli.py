"""Command-line frontend.

Subcommands: generate, detect, eval, verify-contraction, dump-validate.
Configs are JSON files; command-line flags override file values. Every
stochastic command requires --seed, and every output gets a sidecar
with the full config and seed so runs reproduce byte for byte.

Exit codes: 0 success, 1 validation failure, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import config as cfgjson
from .detectors import (
    ALL_DETECTORS,
    DetectorSettings,
    PerturbConfig,
    UceConfig,
    replace_infinite_sentinels,
    score_series,
)
from .dump import DistributionDump, load_dump, validate_dump, write_dump
from .errors import DumpFormatError, UnsupportedDetectorError, ValidationError
from .evaluation import (
    BenchmarkConfig,
    Candidate,
    TrajectoryConfig,
    hypothesis_trajectories,
    run_benchmark,
    vary_trend,
    write_report_json,
    write_scores_csv,
    write_sidecar,
    write_trajectories_csv,
)
from .forecaster import SyntheticIdealModel, generate
from .process import sample_series
from .seeding import rng_for
from .series_io import SeriesRecord, read_series_file, write_series_jsonl


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are validation failures
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(obj, dict):
        raise ValidationError(f"config file {path} must hold a JSON object")
    return obj


def _trends_from_config(cfg: dict) -> tuple:
    if "trends" in cfg:
        return tuple(cfgjson.trend_from_dict(t) for t in cfg["trends"])
    if "trend" in cfg:
        return (cfgjson.trend_from_dict(cfg["trend"]),)
    raise ValidationError("config is missing 'trend' or 'trends'")


def _require(cfg: dict, key: str) -> object:
    if key not in cfg:
        raise ValidationError(f"config is missing {key!r}")
    return cfg[key]


def _uce_from_config(cfg: dict) -> UceConfig:
    sub = cfg.get("uce", {})
    return UceConfig(
        start_fraction=float(sub.get("start_fraction", 0.75)),
        step=int(sub.get("step", 1)),
        radius=int(sub.get("radius", 50)),
    )


def _perturb_from_config(cfg: dict) -> PerturbConfig:
    sub = cfg.get("perturb", {})
    return PerturbConfig(
        ratio=float(sub.get("ratio", 0.3)),
        count=int(sub.get("count", 10)),
        window=int(sub.get("window", 2)),
    )


# ---------------------------------------------------------------------------
# generate


def _cmd_generate(args) -> int:
    cfg = _load_config(args.config)
    trends = _trends_from_config(cfg)
    noise = cfgjson.noise_from_dict(_require(cfg, "noise"))
    vocab = cfgjson.vocab_from_dict(cfg.get("vocab"))
    strategy = cfgjson.strategy_from_dict(cfg.get("strategy", {"kind": "identity"}))
    n_real = args.n_real if args.n_real is not None else int(cfg.get("n_real", 0))
    n_gen = args.n_gen if args.n_gen is not None else int(cfg.get("n_gen", 0))
    length = args.length if args.length is not None else int(cfg.get("length", 64))
    history_length = int(cfg.get("history_length", 32))
    min_history = int(cfg.get("min_history", 1))
    jitter = bool(cfg.get("jitter", True))
    if n_real + n_gen < 1:
        raise ValidationError("nothing to generate: n_real + n_gen must be >= 1")
    seed = args.seed

    records = []
    dumps: list[tuple[str, DistributionDump]] = []
    for i in range(n_real):
        base = trends[i % len(trends)]
        trend = vary_trend(base, rng_for(seed, "trend-real", i)) if jitter else base
        sample = sample_series(
            trend, noise, length, seed=int(rng_for(seed, "real", i).integers(2**32)),
            series_id=f"real-{i:04d}",
        )
        records.append(
            SeriesRecord(series_id=sample.series_id, label="real", values=sample.values)
        )
    for j in range(n_gen):
        base = trends[j % len(trends)]
        trend = vary_trend(base, rng_for(seed, "trend-gen", j)) if jitter else base
        model = SyntheticIdealModel(trend, noise, vocab, min_history=min_history)
        history = sample_series(
            trend, noise, history_length,
            seed=int(rng_for(seed, "gen-history", j).integers(2**32)),
            series_id=f"gen-{j:04d}-history",
        ).values
        result = generate(
            model, history, length, strategy, seed=int(rng_for(seed, "gen", j).integers(2**32))
        )
        series_id = f"gen-{j:04d}"
        records.append(
            SeriesRecord(series_id=series_id, label="generated", values=result.values)
        )
        if args.emit_dumps:
            dumps.append((series_id, DistributionDump.from_generation(result, model, series_id)))

    write_series_jsonl(records, args.out)
    if args.emit_dumps:
        os.makedirs(args.emit_dumps, exist_ok=True)
        for series_id, dump in dumps:
            write_dump(dump, Path(args.emit_dumps) / f"{series_id}.ucd.jsonl")
    snapshot = dict(cfg)
    snapshot.update(n_real=n_real, n_gen=n_gen, length=length)
    write_sidecar(snapshot, seed, f"{args.out}.sidecar.json")
    print(f"wrote {len(records)} series to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# detect


def _cmd_detect(args) -> int:
    if (args.model_config is None) == (args.dump is None):
        raise ValidationError("provide exactly one of --model-config or --dump")
    records = read_series_file(args.series, label=args.label)
    detectors = tuple(d.strip() for d in args.detectors.split(",") if d.strip())
    for d in detectors:
        if d not in ALL_DETECTORS:
            raise ValidationError(f"unknown detector {d!r}; expected one of {ALL_DETECTORS}")

    candidates = []
    if args.dump is not None:
        model = load_dump(args.dump)
        if len(records) != 1:
            raise ValidationError("a dump backs exactly one series; pass a one-series file")
        candidates.append(Candidate(record=records[0], model=model))
        cfg_snapshot: dict = {"dump": args.dump}
        mcfg: dict = {}
    else:
        mcfg = _load_config(args.model_config)
        trends = _trends_from_config(mcfg)
        if len(trends) != 1:
            raise ValidationError(
                "detect scores against one synthetic model; pass a single trend"
            )
        trend = trends[0]
        noise = cfgjson.noise_from_dict(_require(mcfg, "noise"))
        vocab = cfgjson.vocab_from_dict(mcfg.get("vocab"))
        model = SyntheticIdealModel(
            trend, noise, vocab, min_history=int(mcfg.get("min_history", 1))
        )
        for rec in records:
            candidates.append(Candidate(record=rec, model=model))
        cfg_snapshot = {"model_config": mcfg}

    settings = DetectorSettings(uce=_uce_from_config(mcfg), perturb=_perturb_from_config(mcfg))
    rows = []
    for cand in candidates:
        for det in detectors:
            row = {
                "series_id": cand.record.series_id,
                "label": cand.record.label,
                "detector": det,
                "score": None,
                "status": "ok",
            }
            try:
                row["score"] = score_series(
                    det, cand.model, cand.record.values, settings, args.seed,
                    cand.record.series_id,
                ).score
            except UnsupportedDetectorError as exc:
                row["status"] = f"unsupported: {exc}"
            rows.append(row)
    for det in detectors:
        idx = [i for i, r in enumerate(rows) if r["detector"] == det and r["score"] is not None]
        fixed = replace_infinite_sentinels([rows[i]["score"] for i in idx])
        for i, value in zip(idx, fixed):
            rows[i]["score"] = value

    write_scores_csv(rows, args.out)
    cfg_snapshot["detectors"] = list(detectors)
    cfg_snapshot["series"] = args.series
    write_sidecar(cfg_snapshot, args.seed, f"{args.out}.sidecar.json")
    print(f"wrote {len(rows)} score rows to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# eval


def _benchmark_config(cfg: dict, args) -> BenchmarkConfig:
    kwargs = dict(
        trends=_trends_from_config(cfg),
        noise=cfgjson.noise_from_dict(_require(cfg, "noise")),
        strategy=cfgjson.strategy_from_dict(cfg.get("strategy", {"kind": "temperature", "t": 0.7})),
        vocab=cfgjson.vocab_from_dict(cfg.get("vocab")),
        uce=_uce_from_config(cfg),
        perturb=_perturb_from_config(cfg),
    )
    for key in (
        "n_real", "n_gen", "series_length", "history_length", "min_history",
        "dna_regenerations", "jobs",
    ):
        if key in cfg:
            kwargs[key] = int(cfg[key])
    for key in ("dna_truncation", "fpr"):
        if key in cfg:
            kwargs[key] = float(cfg[key])
    if "detectors" in cfg:
        kwargs["detectors"] = tuple(cfg["detectors"])
    if "jitter" in cfg:
        kwargs["jitter"] = bool(cfg["jitter"])
    if args.jobs is not None:
        kwargs["jobs"] = args.jobs
    return BenchmarkConfig(**kwargs)


def _cmd_eval(args) -> int:
    cfg = _benchmark_config(_load_config(args.config), args)
    report, rows = run_benchmark(cfg, args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_scores_csv(rows, out_dir / "scores.csv")
    write_report_json(report, out_dir / "report.json")
    write_sidecar(cfg.to_dict(), args.seed, out_dir / "sidecar.json")
    for detector, entry in sorted(report.detectors.items()):
        if "auroc" in entry:
            print(f"{detector}: auroc={entry['auroc']:.4f} tpr@{entry['fpr']:g}={entry['tpr_at_fpr']:.4f}")
        else:
            print(f"{detector}: unsupported")
    return 0


# ---------------------------------------------------------------------------
# verify-contraction


def _cmd_verify_contraction(args) -> int:
    cfg = _load_config(args.config)
    trend = (
        cfgjson.trend_from_dict(cfg["trend"])
        if "trend" in cfg
        else cfgjson.trend_from_dict({"kind": "sine", "amplitude": 1.0, "period": 32.0})
    )
    noise = (
        cfgjson.noise_from_dict(cfg["noise"])
        if "noise" in cfg
        else cfgjson.noise_from_dict(
            {"family": "gaussian", "weights": [1.0], "seed_variances": [1.0]}
        )
    )
    strategy = cfgjson.strategy_from_dict(
        cfg.get("strategy", {"kind": "temperature", "t": 0.5})
    )
    tcfg = TrajectoryConfig(
        trend=trend,
        noise=noise,
        strategy=strategy,
        horizon=args.horizon if args.horizon is not None else int(cfg.get("horizon", 256)),
        n_runs=args.n_runs if args.n_runs is not None else int(cfg.get("n_runs", 8)),
        history_length=int(cfg.get("history_length", 32)),
        vocab=cfgjson.vocab_from_dict(cfg.get("vocab")),
        radius=int(cfg.get("radius", 50)),
        jitter=bool(cfg.get("jitter", True)),
    )
    report = hypothesis_trajectories(tcfg, args.seed)
    write_trajectories_csv(report, args.out)
    write_sidecar(tcfg.to_dict(), args.seed, f"{args.out}.sidecar.json")
    gen_var = report.mean[("generated", "variance_full")]
    real_var = report.mean[("real", "variance_full")]
    print(
        f"generated variance: start {gen_var[0]:.6g} end {gen_var[-1]:.6g}; "
        f"real variance: start {real_var[0]:.6g} end {real_var[-1]:.6g}"
    )
    print(f"wrote trajectories to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# dump-validate


def _cmd_dump_validate(args) -> int:
    rows = validate_dump(args.path)
    print(f"{args.path}: valid ucd-v1 dump with {rows} rows")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uce", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample real and generated series to JSONL")
    p.add_argument("--config", help="JSON config with trend(s), noise, strategy")
    p.add_argument("--out", required=True, help="output series JSONL path")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n-real", type=int, default=None)
    p.add_argument("--n-gen", type=int, default=None)
    p.add_argument("--length", type=int, default=None)
    p.add_argument("--emit-dumps", default=None, help="directory for per-series ucd-v1 dumps")
    p.set_defaults(fn=_cmd_generate)

    p = sub.add_parser("detect", help="score series with detectors")
    p.add_argument("--series", required=True, help="series JSONL (or one-column CSV)")
    p.add_argument("--model-config", default=None, help="synthetic model JSON config")
    p.add_argument("--dump", default=None, help="ucd-v1 dump backing the (single) series")
    p.add_argument("--detectors", default="uce_entropy", help="comma-separated detector ids")
    p.add_argument("--label", default="real", help="label for CSV series imports")
    p.add_argument("--out", required=True, help="output scores CSV path")
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(fn=_cmd_detect)

    p = sub.add_parser("eval", help="run the synthetic benchmark end to end")
    p.add_argument("--config", required=True, help="benchmark JSON config")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--jobs", type=int, default=None, help="parallel scoring workers")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser(
        "verify-contraction", help="record real vs generated uncertainty trajectories"
    )
    p.add_argument("--config", default=None, help="trajectory JSON config")
    p.add_argument("--out", required=True, help="output trajectories CSV path")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--n-runs", type=int, default=None)
    p.set_defaults(fn=_cmd_verify_contraction)

    p = sub.add_parser("dump-validate", help="validate a ucd-v1 dump file")
    p.add_argument("path")
    p.set_defaults(fn=_cmd_dump_validate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except (ValidationError, DumpFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
