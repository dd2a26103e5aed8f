"""Unified command-line surface: sample, residual, consistency, synth,
train, detect, and eval subcommands over the library modules.

Every flag can also come from a TOML or JSON config file (--config);
explicit flags win over config values, which win over defaults. The
MPFSCOPE_SEED environment variable is the seed fallback. Exit codes:
0 = completed (either verdict), 2 = input error, 3 = config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import consistency as consistency_mod
from . import evaluate, frames, microscope, residual, sentinel, synthgen
from .errors import ConfigError, InputError, MpfScopeError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONFIG = 3

SEED_ENV_VAR = "MPFSCOPE_SEED"

FINAL_AI = microscope.VERDICT_AI
FINAL_REAL = microscope.VERDICT_REAL


@dataclass(frozen=True)
class PipelineConfig:
    """Validated parameters of one detect run."""

    length: int = frames.DEFAULT_SEGMENT_LENGTH
    mode: str = "fixed"
    seed: int | None = None
    alpha: float = residual.DEFAULT_ALPHA
    mask_threshold: float = residual.DEFAULT_MASK_THRESHOLD
    tau: float = sentinel.DEFAULT_TAU
    model_path: str | None = None
    head_path: str | None = None

    def __post_init__(self):
        if self.length < 2:
            raise ConfigError(f"segment length must be >= 2, got {self.length}",
                              code="cli/length")
        if self.mode not in ("fixed", "stochastic"):
            raise ConfigError(f"unknown sampling mode {self.mode!r}", code="cli/mode")
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be > 0, got {self.alpha}", code="cli/alpha")
        if not 0 <= self.mask_threshold <= 255:
            raise ConfigError("mask threshold must be in [0, 255]", code="cli/threshold")


def stage1_decision(cfg: PipelineConfig, scores_path=None) -> sentinel.GateDecision:
    """Branch I: aggregate per-frame logits and gate against tau.

    Without a score file the built-in null scorer routes everything on to
    Branch II.
    """
    if scores_path is None:
        logits = sentinel.null_scores(cfg.length)
    else:
        score_file = sentinel.load_scores(scores_path)
        head = (sentinel.LinearHead.load(cfg.head_path)
                if cfg.head_path else None)
        logits = sentinel.frame_logits(score_file, head=head)
    s_agg = sentinel.aggregate_mean(logits)
    return sentinel.gate(s_agg, cfg.tau)


def stage2_decision(cfg: PipelineConfig, input_path) -> microscope.Classification:
    """Branch II: normalized residuals -> features -> classifier verdict."""
    if cfg.model_path is None:
        raise ConfigError("stage 2 requires --model", code="cli/model-missing")
    model = microscope.ClassifierModel.load(cfg.model_path)
    seq = frames.load_segment(input_path, length=cfg.length, mode=cfg.mode,
                              seed=cfg.seed)
    stack = residual.residual_normalized(seq, alpha=cfg.alpha)
    vector = microscope.featurize(stack, mask_threshold=cfg.mask_threshold)
    return microscope.classify(model, vector)


def run_pipeline(cfg: PipelineConfig, input_path=None, scores_path=None) -> dict:
    """Sequential two-stage detection; stage 1 OffManifold short-circuits."""
    decision = stage1_decision(cfg, scores_path)
    trace = {
        "input": str(input_path) if input_path is not None else None,
        "stage1": {"s_agg": decision.s_agg, "tau": decision.tau,
                   "verdict": decision.verdict},
        "stage2": None,
    }
    if decision.verdict == sentinel.VERDICT_OFF_MANIFOLD:
        trace["final"] = FINAL_AI
        return trace
    if input_path is None:
        raise ConfigError("on-manifold verdict needs --frames for stage 2",
                          code="cli/frames-missing")
    result = stage2_decision(cfg, input_path)
    trace["stage2"] = {"probability": result.probability,
                       "verdict": result.verdict}
    trace["final"] = result.verdict
    return trace


def _dump_json(data, out=None) -> str:
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    return text


def _load_config_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"no such config file: {path}", code="cli/config-file")
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ImportError:
            import tomli as tomllib
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"bad config file {path.name}: {exc}",
                          code="cli/config-parse") from exc


def _merge(args: argparse.Namespace, defaults: dict) -> argparse.Namespace:
    """Fill unset flags from --config, then from defaults, then env seed."""
    config = _load_config_file(args.config) if getattr(args, "config", None) else {}
    for key, value in config.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ConfigError(f"unknown config key {key!r}", code="cli/config-key")
        if getattr(args, attr) is None:
            setattr(args, attr, value)
    for key, value in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    if getattr(args, "seed", None) is None and os.environ.get(SEED_ENV_VAR):
        try:
            args.seed = int(os.environ[SEED_ENV_VAR])
        except ValueError as exc:
            raise ConfigError(f"bad {SEED_ENV_VAR}: {os.environ[SEED_ENV_VAR]!r}",
                              code="cli/env-seed") from exc
    return args


def _segment(args) -> frames.FrameSequence:
    return frames.load_segment(args.input, length=args.length, mode=args.mode,
                               seed=args.seed)


def _cmd_sample(args) -> int:
    args = _merge(args, {"length": frames.DEFAULT_SEGMENT_LENGTH, "mode": "fixed"})
    total = frames.count_frames(args.input)
    start = frames.sample_segment(total, args.length, mode=args.mode, seed=args.seed)
    seq = frames.load_frames(args.input,
                             frames.IngestSpec(length=args.length, start=start))
    if args.out:
        frames.write_raw(args.out, seq.frames, fps=seq.fps)
    info = {
        "input": str(args.input),
        "total_frames": total,
        "start_index": start,
        "length": len(seq),
        "short": seq.short,
        "shape": [int(v) for v in seq.shape],
        "fps": [seq.fps.numerator, seq.fps.denominator],
    }
    sys.stdout.write(_dump_json(info))
    return EXIT_OK


_STRATEGY_KWARGS = {
    residual.Strategy.NORMALIZED: ("alpha",),
    residual.Strategy.CHANGE_MASK: ("threshold",),
    residual.Strategy.LOG_SCALE: (),
    residual.Strategy.FREQUENCY: (),
    residual.Strategy.OPTICAL_FLOW: ("block", "radius"),
}


def _cmd_residual(args) -> int:
    args = _merge(args, {
        "length": frames.DEFAULT_SEGMENT_LENGTH, "mode": "fixed",
        "strategy": residual.Strategy.NORMALIZED.value,
        "alpha": residual.DEFAULT_ALPHA,
        "threshold": residual.DEFAULT_MASK_THRESHOLD,
        "block": residual.DEFAULT_FLOW_BLOCK,
        "radius": residual.DEFAULT_FLOW_RADIUS,
    })
    strategy = residual.Strategy(args.strategy)
    kwargs = {name: getattr(args, name) for name in _STRATEGY_KWARGS[strategy]}
    stack = residual.compute_residuals(_segment(args), strategy, **kwargs)
    manifest = residual.write_stack(stack, args.out)
    sys.stdout.write(_dump_json({
        "manifest": str(manifest),
        "strategy": stack.strategy.value,
        "count": len(stack),
    }))
    return EXIT_OK


def _cmd_consistency(args) -> int:
    args = _merge(args, {"w1": consistency_mod.DEFAULT_W1,
                         "w2": consistency_mod.DEFAULT_W2,
                         "threshold": residual.DEFAULT_MASK_THRESHOLD})
    stack = residual.read_stack(args.input)
    stats = consistency_mod.stack_stats(stack, mask_threshold=args.threshold)
    score = consistency_mod.consistency_score(stats, w1=args.w1, w2=args.w2)
    payload = {
        "c_qty": score.c_qty,
        "c_spa": score.c_spa,
        "s_cons": score.s_cons,
        "per_frame": [vars(s) for s in stats],
    }
    if args.json:
        sys.stdout.write(_dump_json(payload))
    else:
        sys.stdout.write(
            f"c_qty={score.c_qty:.6f} c_spa={score.c_spa:.6f} "
            f"s_cons={score.s_cons:.6f} over {len(stats)} residuals\n"
        )
    return EXIT_OK


def _cmd_synth(args) -> int:
    args = _merge(args, {
        "regime": "decoder", "count": synthgen.DEFAULT_COUNT,
        "height": 64, "width": 64, "channels": 3,
        "length": synthgen.DEFAULT_LENGTH, "seed": 0,
        "scene": "random-texture",
        "latent_dim": synthgen.DEFAULT_LATENT_DIM,
        "drift": synthgen.DEFAULT_DRIFT, "nonlinearity": "none",
        "jitter": 1, "noise": 0.3, "motion_prob": 0.5, "object_size": 10,
    })
    cfg = synthgen.SynthConfig(
        regime=args.regime, height=args.height, width=args.width,
        channels=args.channels, length=args.length, count=args.count,
        seed=args.seed, scene=args.scene, latent_dim=args.latent_dim,
        drift=args.drift, nonlinearity=args.nonlinearity,
        jitter_px=args.jitter, shot_noise_sigma=args.noise,
        motion_prob=args.motion_prob, object_size=args.object_size,
    )
    manifest = synthgen.generate_corpus(cfg, args.out)
    sys.stdout.write(_dump_json({
        "manifest": str(manifest),
        "count": cfg.count,
        "regime": cfg.regime,
        "config_hash": cfg.hash(),
    }))
    return EXIT_OK


def _corpus_features(manifest_path, alpha, threshold):
    """Featurize every sequence of a corpus manifest, preserving order."""
    manifest = synthgen.load_manifest(manifest_path)
    base = Path(manifest_path)
    base = base.parent if base.is_file() else base
    vectors, labels, names = [], [], []
    for entry in manifest["sequences"]:
        seq = frames.load_frames(base / entry["file"])
        stack = residual.residual_normalized(seq, alpha=alpha)
        vectors.append(microscope.featurize(stack, mask_threshold=threshold))
        labels.append(int(entry["label"]))
        names.append(entry["file"])
    return np.array(vectors), np.array(labels), names


def _cmd_train(args) -> int:
    args = _merge(args, {
        "alpha": residual.DEFAULT_ALPHA,
        "threshold": residual.DEFAULT_MASK_THRESHOLD,
        "epochs": microscope.DEFAULT_EPOCHS,
        "lr": microscope.DEFAULT_LR, "seed": 0,
    })
    features, labels, _ = _corpus_features(args.corpus, args.alpha, args.threshold)
    result = microscope.train(features, labels, epochs=args.epochs, lr=args.lr,
                              seed=args.seed)
    result.model.save(args.out)
    sys.stdout.write(_dump_json({
        "model": str(args.out),
        "examples": int(len(labels)),
        "final_loss": result.final_loss,
        "epochs_run": result.epochs_run,
    }))
    return EXIT_OK


def _cmd_detect(args) -> int:
    args = _merge(args, {
        "length": frames.DEFAULT_SEGMENT_LENGTH, "mode": "fixed",
        "alpha": residual.DEFAULT_ALPHA,
        "threshold": residual.DEFAULT_MASK_THRESHOLD,
        "tau": sentinel.DEFAULT_TAU, "jobs": 1,
    })
    cfg = PipelineConfig(length=args.length, mode=args.mode, seed=args.seed,
                         alpha=args.alpha, mask_threshold=args.threshold,
                         tau=args.tau, model_path=args.model, head_path=args.head)
    frame_inputs = list(args.frames or [])
    score_inputs = list(args.scores or [])

    if not args.pipeline:
        # stage 1 only, straight over the score files
        if not score_inputs:
            raise ConfigError("detect needs --scores (or --pipeline with --frames)",
                              code="cli/scores-missing")
        results = [_stage1_trace(cfg, s) for s in score_inputs]
    else:
        if not frame_inputs:
            raise ConfigError("--pipeline needs at least one --frames input",
                              code="cli/frames-missing")
        if score_inputs and len(score_inputs) != len(frame_inputs):
            raise ConfigError(
                f"{len(score_inputs)} score files for {len(frame_inputs)} inputs",
                code="cli/scores-count",
            )
        pairs = [
            (frame_inputs[i], score_inputs[i] if score_inputs else None)
            for i in range(len(frame_inputs))
        ]
        if args.jobs > 1:
            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(
                    lambda p: run_pipeline(cfg, p[0], p[1]), pairs))
        else:
            results = [run_pipeline(cfg, f, s) for f, s in pairs]

    payload = results[0] if len(results) == 1 else {"results": results}
    sys.stdout.write(_dump_json(payload, out=args.out))
    return EXIT_OK


def _stage1_trace(cfg: PipelineConfig, scores_path) -> dict:
    decision = stage1_decision(cfg, scores_path)
    final = (FINAL_AI if decision.verdict == sentinel.VERDICT_OFF_MANIFOLD
             else FINAL_REAL)
    return {
        "input": str(scores_path),
        "stage1": {"s_agg": decision.s_agg, "tau": decision.tau,
                   "verdict": decision.verdict},
        "stage2": None,
        "final": final,
    }


def _cmd_eval(args) -> int:
    args = _merge(args, {})
    manifest = synthgen.load_manifest(args.truth)
    truth_by_file = {e["file"]: e for e in manifest["sequences"]}

    pred_data = json.loads(Path(args.pred).read_text())
    results = pred_data["results"] if "results" in pred_data else [pred_data]

    cfg = manifest["config"]
    groups: dict[str, dict] = {}
    for r in results:
        name = Path(r["input"]).name
        entry = truth_by_file.get(name)
        if entry is None:
            raise InputError(f"prediction for unknown sequence {name}",
                             code="eval/unknown-sequence")
        subset = entry.get("subset", entry["regime"])
        g = groups.setdefault(subset, {"labels": [], "verdicts": [],
                                       "intercepted": 0, "s2_correct": 0,
                                       "s2_total": 0})
        label = int(entry["label"])
        verdict = evaluate.LABEL_AI if r["final"] == FINAL_AI else evaluate.LABEL_REAL
        g["labels"].append(label)
        g["verdicts"].append(verdict)
        if r.get("stage2") is None:
            g["intercepted"] += 1
        else:
            g["s2_total"] += 1
            if verdict == label:
                g["s2_correct"] += 1

    frame_bytes = cfg["height"] * cfg["width"] * cfg["channels"]
    fps = float(cfg.get("fps", 8))
    base_quality = {
        name: evaluate.QualityProfile(
            fps=fps,
            bitrate_mbps=evaluate.bitrate_proxy(frame_bytes, fps),
            resolution_n=cfg["height"] * cfg["width"],
        )
        for name in groups
    }
    quality = evaluate.quality_profiles(base_quality)

    report = evaluate.EvalReport()
    for name in sorted(groups):
        g = groups[name]
        report.subsets.append(evaluate.SubsetReport(
            name=name,
            metrics=evaluate.metrics(g["labels"], g["verdicts"]),
            quality=quality[name],
            stage1_intercepted=g["intercepted"],
            stage2_correct=g["s2_correct"],
            stage2_total=g["s2_total"],
        ))

    text = _dump_json(report.to_dict(), out=args.report)
    if args.csv:
        evaluate.write_correlation_csv(report, args.csv)
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpfscope",
        description="Signal-level forensics for AI-generated video.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="TOML or JSON file mirroring the flags")

    p = sub.add_parser("sample", help="extract a contiguous micro-segment")
    p.add_argument("--input", required=True)
    p.add_argument("--length", type=int)
    p.add_argument("--mode", choices=["fixed", "stochastic"])
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="write the segment as .mpfraw")
    add_common(p)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("residual", help="compute enhanced residual maps")
    p.add_argument("--input", required=True)
    p.add_argument("--strategy",
                   choices=[s.value for s in residual.Strategy])
    p.add_argument("--alpha", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--block", type=int)
    p.add_argument("--radius", type=int)
    p.add_argument("--length", type=int)
    p.add_argument("--mode", choices=["fixed", "stochastic"])
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    add_common(p)
    p.set_defaults(func=_cmd_residual)

    p = sub.add_parser("consistency", help="score temporal consistency")
    p.add_argument("--input", required=True, help="residual manifest or dir")
    p.add_argument("--w1", type=float)
    p.add_argument("--w2", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--json", action="store_true")
    add_common(p)
    p.set_defaults(func=_cmd_consistency)

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    p.add_argument("--regime", choices=["decoder", "physics"])
    p.add_argument("--count", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--channels", type=int)
    p.add_argument("--length", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--scene",
                   choices=["random-texture", "gradient", "checkerboard"])
    p.add_argument("--latent-dim", type=int, dest="latent_dim")
    p.add_argument("--drift", type=float)
    p.add_argument("--nonlinearity", choices=["none", "tanh"])
    p.add_argument("--jitter", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--motion-prob", type=float, dest="motion_prob")
    p.add_argument("--object-size", type=int, dest="object_size")
    p.add_argument("--out", required=True)
    add_common(p)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train the residual classifier")
    p.add_argument("--corpus", required=True, help="corpus manifest")
    p.add_argument("--out", required=True, help="model.json path")
    p.add_argument("--alpha", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int)
    add_common(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("detect", help="run the two-stage detection")
    p.add_argument("--scores", nargs="*")
    p.add_argument("--tau", type=float)
    p.add_argument("--head", help="linear head JSON for embedding scores")
    p.add_argument("--pipeline", action="store_true",
                   help="run both stages over --frames inputs")
    p.add_argument("--frames", nargs="*")
    p.add_argument("--model", help="classifier model.json")
    p.add_argument("--length", type=int)
    p.add_argument("--mode", choices=["fixed", "stochastic"])
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", help="write the JSON report here")
    add_common(p)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("eval", help="score verdicts against ground truth")
    p.add_argument("--pred", required=True, help="detect JSON output")
    p.add_argument("--truth", required=True, help="corpus manifest")
    p.add_argument("--report", help="write report JSON here")
    p.add_argument("--csv", help="write the quality/accuracy CSV here")
    add_common(p)
    p.set_defaults(func=_cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"error [{exc.code}]: {exc}\n")
        return EXIT_CONFIG
    except MpfScopeError as exc:
        sys.stderr.write(f"error [{exc.code}]: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
