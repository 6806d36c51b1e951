"""Command-line entry point for the full pipeline.

Subcommands: tokenize, train, train-prior, generate, transfer, eval,
export-latents, gradcheck, inspect-checkpoint. Exit codes: 0 success,
1 usage error, 2 data error, 3 numeric fault. Flags override config-file
values; every writing run echoes its resolved settings to a JSON manifest
next to its primary output. MUSER_THREADS caps BLAS threading.
"""

from __future__ import annotations

import os


def _cap_threads() -> None:
    cap = os.environ.get("MUSER_THREADS")
    if not cap:
        return
    for var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "VECLIB_MAXIMUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        os.environ.setdefault(var, cap)


_cap_threads()  # must run before numpy loads

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .cprepr import (
    CpSequence,
    ELEMENTS,
    EMOTION_NAMES,
    detokenize,
    emotion_index,
    load_corpus,
    load_event_stream,
    parse_midi,
    save_event_stream,
    tokenize,
    vocabulary,
    write_midi,
)
from .errors import DataError, MuserError, NumericFault, ShapeError, UsageError
from .evaluation import (
    element_histograms,
    format_metrics_table,
    histogram_figure,
    metrics_figure,
    metrics_report,
    pair_silhouettes,
    pca_2d,
    pooled_latents,
    projection_figure,
    write_histogram_csv,
    write_latent_csv,
    write_metrics_csv,
    write_metrics_json,
    write_silhouette_csv,
)
from .pipeline import (
    MusErModel,
    PriorModel,
    TOLERANCE,
    TrainConfig,
    apply_overrides,
    base_config,
    build_corpus,
    gradcheck_suite,
    load_config,
    load_model,
    load_prior,
    make_overfit_corpus,
    make_planted_corpus,
    sample_codes,
    save_model,
    save_prior,
    train,
    train_prior,
    transfer_sequence,
)

ELEMENT_LETTERS = {name[0]: name for name in ELEMENTS}
ELEMENT_LETTERS["b"] = "bar_beat"  # f/b/t/c/p/d/v


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with code 2
        raise UsageError(message)


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------


def _parse_emotion(label: str) -> int:
    if label.lstrip("-").isdigit():
        value = int(label)
        if not 0 <= value < len(EMOTION_NAMES):
            raise DataError(f"emotion label {value} out of range 0..4")
        return value
    return emotion_index(label)


def _parse_elements(spec: str) -> set[str]:
    chosen = set()
    for item in spec.split(","):
        item = item.strip()
        if not item:
            continue
        name = ELEMENT_LETTERS.get(item, item)
        if name not in ELEMENTS:
            raise UsageError(
                f"unknown element {item!r}; use full names or letters "
                f"{sorted(ELEMENT_LETTERS)}"
            )
        chosen.add(name)
    return chosen


def _load_sequences(spec: str) -> list[CpSequence]:
    """A corpus argument: a JSON file path or synth:planted|overfit[:n[:seed]]."""
    if spec.startswith("synth:"):
        fields = spec.split(":")
        kind = fields[1] if len(fields) > 1 else ""
        makers = {"planted": make_planted_corpus, "overfit": make_overfit_corpus}
        if kind not in makers or len(fields) > 4:
            raise UsageError(
                f"bad synthetic corpus {spec!r}; use synth:planted[:n[:seed]] "
                "or synth:overfit[:n[:seed]]"
            )
        try:
            count = int(fields[2]) if len(fields) > 2 else (64 if kind == "planted" else 8)
            seed = int(fields[3]) if len(fields) > 3 else 0
        except ValueError as e:
            raise UsageError(f"bad synthetic corpus {spec!r}: {e}") from e
        made = makers[kind](count, seed=seed)
        return made[0] if kind == "planted" else made
    return load_corpus(spec)


def _load_piece(path: str, emotion: int, vocab_preset: str,
                n_max: int | None) -> CpSequence:
    """One input piece: .json event stream or .mid (tokenized on the fly)."""
    if path.endswith(".json"):
        return load_event_stream(path)
    score = parse_midi(_read_bytes(path))
    return tokenize(score, emotion, vocabulary(vocab_preset), n_max=n_max)


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except FileNotFoundError as e:
        raise DataError(f"input file not found: {path}") from e


def _check_vocab(seqs: list[CpSequence], expected: str) -> None:
    for i, seq in enumerate(seqs):
        if seq.vocab_preset != expected:
            raise DataError(
                f"sequence {i} uses vocab preset {seq.vocab_preset!r}, "
                f"model expects {expected!r}"
            )


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _write_manifest(path: str, command: str, seed, config: TrainConfig | None,
                    inputs, outputs, details=None) -> None:
    payload = {
        "command": command,
        "library_version": __version__,
        "seed": seed,
        "config": config.to_dict() if config is not None else None,
        "inputs": list(inputs),
        "outputs": list(outputs),
        "details": _jsonable(details or {}),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"manifest: {path}")


def _manifest_path(args, primary_out: str) -> str:
    return args.manifest or f"{primary_out}.manifest.json"


def _resolve_config(args) -> TrainConfig:
    """Config file or preset, then flag overrides on top."""
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = base_config(args.preset)
    overrides = {}
    for pair in args.set or ():
        key, sep, raw = pair.partition("=")
        if not sep:
            raise UsageError(f"--set needs key=value, got {pair!r}")
        overrides[key] = yaml.safe_load(raw)
    if args.steps is not None:
        overrides["steps"] = args.steps
    if args.seed is not None:
        overrides["seed"] = args.seed
    return apply_overrides(cfg, overrides) if overrides else cfg


def _echo_run(command: str, cfg: TrainConfig | None, seed) -> None:
    if cfg is not None:
        print(f"{command}: preset={cfg.preset} seed={seed}")
        print("config: " + json.dumps(cfg.to_dict(), sort_keys=True))
    else:
        print(f"{command}: seed={seed}")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_tokenize(args) -> int:
    emotion = _parse_emotion(args.emotion)
    vocab = vocabulary(args.vocab)
    score = parse_midi(_read_bytes(args.midi))
    seq = tokenize(score, emotion, vocab, n_max=args.n_max)
    save_event_stream(seq, args.out)
    stats = seq.stats
    print(f"tokenize: {args.midi} -> {args.out} "
          f"({len(seq)} tokens, emotion {EMOTION_NAMES[emotion]})")
    if stats is not None:
        clamped = (stats.clamped_pitch + stats.clamped_velocity
                   + stats.clamped_duration + stats.clamped_tempo)
        print(f"clamped values: {clamped}, truncated: {stats.truncated}")
    _write_manifest(_manifest_path(args, args.out), "tokenize", args.seed,
                    None, [args.midi], [args.out],
                    {"vocab": args.vocab, "emotion": emotion,
                     "tokens": len(seq)})
    return 0


def cmd_train(args) -> int:
    if args.resume:
        if args.config or args.set:
            raise UsageError("--resume takes its config from the checkpoint")
        model, _ = load_model(args.resume)
        cfg = model.config
        if args.seed is not None:
            cfg = apply_overrides(cfg, {"seed": args.seed})
            model.config = cfg
        if args.steps is not None:
            cfg = apply_overrides(cfg, {"steps": args.steps})
            model.config = cfg
    else:
        cfg = _resolve_config(args)
        model = MusErModel(cfg)
    _echo_run("train", cfg, cfg.seed)

    seqs = _load_sequences(args.corpus)
    _check_vocab(seqs, cfg.vocab_preset)
    corpus = build_corpus(seqs, cfg.n_max)
    history = train(
        model, corpus,
        rng=np.random.default_rng(cfg.seed + 1),
        finetune=args.finetune,
        log_every=args.log_every,
    )
    save_model(model, args.out, rng=np.random.default_rng(cfg.seed + 9))
    first = history[0].total if history else float("nan")
    last = history[-1].total if history else float("nan")
    skipped = sum(1 for r in history if not r.applied)
    print(f"trained {len(history)} steps on {len(corpus)} sequences: "
          f"loss {first:.4f} -> {last:.4f} ({skipped} skipped)")
    print(f"model: {args.out}")
    _write_manifest(_manifest_path(args, args.out), "train", cfg.seed, cfg,
                    [args.corpus], [args.out],
                    {"steps": len(history), "initial_loss": first,
                     "final_loss": last, "skipped": skipped})
    return 0


def cmd_train_prior(args) -> int:
    model, _ = load_model(args.ckpt)
    cfg = model.config
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.steps is not None:
        overrides["steps"] = args.steps
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    _echo_run("train-prior", cfg, cfg.seed)

    seqs = _load_sequences(args.corpus)
    _check_vocab(seqs, cfg.vocab_preset)
    corpus = build_corpus(seqs, cfg.n_max)
    prior = PriorModel(cfg)
    history = train_prior(
        model, prior, corpus,
        rng=np.random.default_rng(cfg.seed + 3),
        log_every=args.log_every,
    )
    save_prior(prior, args.out, rng=np.random.default_rng(cfg.seed + 11))
    first = history[0].total if history else float("nan")
    last = history[-1].total if history else float("nan")
    print(f"trained prior {len(history)} steps: loss {first:.4f} -> {last:.4f}")
    print(f"prior: {args.out}")
    _write_manifest(_manifest_path(args, args.out), "train-prior", cfg.seed,
                    cfg, [args.ckpt, args.corpus], [args.out],
                    {"steps": len(history), "initial_loss": first,
                     "final_loss": last})
    return 0


def cmd_generate(args) -> int:
    model, _ = load_model(args.ckpt)
    prior, _ = load_prior(args.prior)
    for field in ("k", "l", "n_max", "vocab_preset"):
        if getattr(prior.config, field) != getattr(model.config, field):
            raise DataError(
                f"prior/model checkpoints disagree on {field}: "
                f"{getattr(prior.config, field)!r} vs "
                f"{getattr(model.config, field)!r}"
            )
    emotion = _parse_emotion(args.emotion)
    if emotion == 0:
        raise DataError("generation needs an emotion quadrant Q1..Q4")
    seed = 0 if args.seed is None else args.seed
    _echo_run("generate", model.config, seed)

    rng = np.random.default_rng(seed)
    codes = sample_codes(prior, emotion, args.length, rng,
                         temperature=args.code_temperature)
    tokens, info = model.generate_from_codes(codes, emotion, rng)
    seq = CpSequence(tokens=tokens, vocab_preset=model.config.vocab_preset,
                     emotion=emotion)
    vocab = vocabulary(model.config.vocab_preset)
    seq.validate(vocab)
    score = detokenize(seq, vocab)
    Path(args.out).write_bytes(write_midi(score))
    outputs = [args.out]
    if args.tokens_out:
        save_event_stream(seq, args.tokens_out)
        outputs.append(args.tokens_out)
    print(f"generated {info['length']} tokens, {len(score.notes)} notes "
          f"(eos: {info['ended_by_eos']}, forced: {info['forced_eos']})")
    print(f"midi: {args.out}")
    _write_manifest(_manifest_path(args, args.out), "generate", seed,
                    model.config, [args.ckpt, args.prior], outputs,
                    {"emotion": emotion, "length": args.length, "info": info})
    return 0


def cmd_transfer(args) -> int:
    model, _ = load_model(args.ckpt)
    cfg = model.config
    elements = _parse_elements(args.elements)
    seq_a = _load_piece(args.a, _parse_emotion(args.emotion_a),
                        cfg.vocab_preset, cfg.n_max)
    seq_b = _load_piece(args.b, _parse_emotion(args.emotion_b),
                        cfg.vocab_preset, cfg.n_max)
    _check_vocab([seq_a, seq_b], cfg.vocab_preset)
    seed = 0 if args.seed is None else args.seed
    _echo_run("transfer", cfg, seed)

    out_seq, report = transfer_sequence(
        model, seq_a, seq_b, elements, np.random.default_rng(seed)
    )
    vocab = vocabulary(cfg.vocab_preset)
    score = detokenize(out_seq, vocab)
    Path(args.out).write_bytes(write_midi(score))
    outputs = [args.out]
    if args.tokens_out:
        save_event_stream(out_seq, args.tokens_out)
        outputs.append(args.tokens_out)
    report_path = args.report or f"{args.out}.report.json"
    with open(report_path, "w") as fh:
        json.dump(_jsonable({"elements": sorted(elements), **report}), fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
    outputs.append(report_path)
    donors = {name: src for name, src in report["sources"].items()}
    print(f"transferred {sorted(elements)}: sources "
          + ", ".join(f"{n}<-{donors[n]}" for n in ELEMENTS))
    print(f"midi: {args.out}\nreport: {report_path}")
    _write_manifest(_manifest_path(args, args.out), "transfer", seed,
                    cfg, [args.a, args.b, args.ckpt], outputs,
                    {"elements": sorted(elements)})
    return 0


def cmd_eval(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scores, ids, seqs = [], [], []
    for path in args.inputs or ():
        if path.endswith(".json"):
            for seq in _load_sequences(path):
                seqs.append(seq)
        else:
            scores.append(parse_midi(_read_bytes(path)))
            ids.append(path)
    if args.corpus:
        seqs.extend(_load_sequences(args.corpus))
    if seqs:
        preset = seqs[0].vocab_preset
        _check_vocab(seqs, preset)
        vocab = vocabulary(preset)
        for i, seq in enumerate(seqs):
            score = detokenize(seq, vocab)
            if score.notes:
                scores.append(score)
                ids.append(f"seq{i}")
    if not scores:
        raise DataError("nothing to evaluate: no inputs with notes")

    report = metrics_report(scores, ids)
    write_metrics_csv(str(out_dir / "metrics.csv"), report)
    write_metrics_json(str(out_dir / "metrics.json"), report)
    metrics_figure(str(out_dir / "metrics.png"), report)
    outputs = ["metrics.csv", "metrics.json", "metrics.png"]
    print(format_metrics_table(report))
    if seqs:
        hists = element_histograms(seqs, vocab)
        write_histogram_csv(str(out_dir / "distributions.csv"), hists)
        histogram_figure(str(out_dir / "distributions.png"), hists)
        outputs += ["distributions.csv", "distributions.png"]
    _write_manifest(str(out_dir / "manifest.json"), "eval", args.seed, None,
                    list(args.inputs or ()) + ([args.corpus] if args.corpus else []),
                    outputs, {"pieces": len(scores)})
    return 0


def cmd_export_latents(args) -> int:
    model, _ = load_model(args.ckpt)
    cfg = model.config
    seqs = _load_sequences(args.corpus)
    _check_vocab(seqs, cfg.vocab_preset)
    corpus = build_corpus(seqs, cfg.n_max)
    _echo_run("export-latents", cfg, args.seed)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pooled = pooled_latents(model, corpus)
    write_latent_csv(str(out_dir / "latents.csv"), pooled, corpus.emotions)
    projections = {name: pca_2d(pooled[name]) for name in ELEMENTS}
    projection_figure(str(out_dir / "projections.png"), projections,
                      corpus.emotions)
    outputs = ["latents.csv", "projections.png"]
    labels = sorted(set(int(e) for e in corpus.emotions))
    if len(labels) >= 2:
        sil = {name: pair_silhouettes(pooled[name], corpus.emotions)
               for name in ELEMENTS}
        write_silhouette_csv(str(out_dir / "silhouette.csv"), sil)
        outputs.append("silhouette.csv")
    else:
        print("silhouette skipped: corpus has a single emotion label")
    print(f"exported {len(corpus)} pieces x {len(ELEMENTS)} elements "
          f"to {out_dir}")
    _write_manifest(str(out_dir / "manifest.json"), "export-latents",
                    args.seed, cfg, [args.ckpt, args.corpus], outputs,
                    {"pieces": len(corpus), "emotions": labels})
    return 0


def cmd_gradcheck(args) -> int:
    worst, rows = gradcheck_suite(args.preset, seed=args.seed or 0,
                                  probes_per_tensor=args.probes)
    rows.sort(key=lambda item: item[1], reverse=True)
    for name, err in rows[:5]:
        print(f"{err:.3e}  {name}")
    print(f"checked {len(rows)} gradients")
    print(f"max relative error: {worst:.6e}")
    if not worst < TOLERANCE:
        raise NumericFault(
            f"gradient check failed: {worst:.3e} >= {TOLERANCE:.0e}"
        )
    return 0


# Architecture and run-policy fields a preset pins; steps/seed are per-run.
PRESET_FIELDS = tuple(
    f.name for f in dataclasses.fields(TrainConfig)
    if f.name not in ("steps", "seed")
)


def cmd_inspect(args) -> int:
    from .pipeline.checkpoint import load_checkpoint

    payload = load_checkpoint(args.ckpt)
    cfg = payload["config"]
    arrays = payload["arrays"]
    n_values = sum(arr.size for arr in arrays.values())
    print(f"kind: {payload['kind']}")
    print(f"arrays: {len(arrays)} ({n_values} values)")
    for key, value in sorted(cfg.to_dict().items()):
        print(f"config.{key}: {value}")
    vocab = vocabulary(cfg.vocab_preset)
    print("vocab sizes: " + json.dumps(vocab.sizes, sort_keys=True))
    from .decode import sampling_policies

    pol = sampling_policies(cfg.sampling_preset)
    print("sampling: " + json.dumps(
        {name: [p.temperature, p.top_p] for name, p in pol.items()},
        sort_keys=True))
    extra = {k: v for k, v in payload["extra"].items() if k != "rng_state"}
    if extra:
        print("extra: " + json.dumps(_jsonable(extra), sort_keys=True))

    if args.expect_preset:
        want = base_config(args.expect_preset).to_dict()
        got = cfg.to_dict()
        bad = [f"{name}: {got[name]!r} != {want[name]!r}"
               for name in PRESET_FIELDS if got[name] != want[name]]
        if bad:
            raise DataError(
                f"checkpoint does not match preset {args.expect_preset!r}: "
                + "; ".join(bad)
            )
        print(f"preset check passed: {args.expect_preset}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="muser", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--seed", type=int, default=None,
                       help="rng seed (default: config seed or 0)")
        p.add_argument("--manifest", default=None,
                       help="manifest path (default: next to the output)")
        return p

    p = add("tokenize", cmd_tokenize, "MIDI file to event-stream JSON")
    p.add_argument("--midi", required=True)
    p.add_argument("--emotion", required=True, help="Q1..Q4 or 0..4")
    p.add_argument("--out", required=True)
    p.add_argument("--vocab", default="desk", help="vocabulary preset")
    p.add_argument("--n-max", type=int, default=None)

    def add_train_flags(p):
        p.add_argument("--config", default=None, help="YAML config file")
        p.add_argument("--preset", default="desk",
                       help="base preset when no --config is given")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config field (repeatable)")
        p.add_argument("--steps", type=int, default=None)
        p.add_argument("--log-every", type=int, default=0)

    p = add("train", cmd_train, "fit the tokenizer-to-latents model")
    add_train_flags(p)
    p.add_argument("--corpus", required=True,
                   help="corpus JSON or synth:planted|overfit[:n[:seed]]")
    p.add_argument("--out", required=True)
    p.add_argument("--resume", default=None, help="continue from a checkpoint")
    p.add_argument("--finetune", action="store_true",
                   help="use the finetune learning rate")

    p = add("train-prior", cmd_train_prior, "fit the code prior on a model")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--log-every", type=int, default=0)

    p = add("generate", cmd_generate, "sample a piece for an emotion")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--prior", required=True)
    p.add_argument("--emotion", required=True)
    p.add_argument("--length", type=int, required=True,
                   help="number of latent codes to sample")
    p.add_argument("--out", required=True, help="MIDI output path")
    p.add_argument("--tokens-out", default=None)
    p.add_argument("--code-temperature", type=float, default=1.0)

    p = add("transfer", cmd_transfer, "splice elements of B into A, re-decode")
    p.add_argument("--a", required=True, help="receiving piece (.mid/.json)")
    p.add_argument("--b", required=True, help="donor piece (.mid/.json)")
    p.add_argument("--elements", required=True,
                   help="comma list, full names or letters f,b,t,c,p,d,v")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tokens-out", default=None)
    p.add_argument("--report", default=None)
    p.add_argument("--emotion-a", default="Q1")
    p.add_argument("--emotion-b", default="Q1")

    p = add("eval", cmd_eval, "objective metrics and element distributions")
    p.add_argument("--inputs", nargs="*", default=None,
                   help="piece files (.mid or .json)")
    p.add_argument("--corpus", default=None)
    p.add_argument("--out-dir", required=True)

    p = add("export-latents", cmd_export_latents,
            "pooled element latents, PCA figures, silhouette scores")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out-dir", required=True)

    p = add("gradcheck", cmd_gradcheck, "finite-difference gradient audit")
    p.add_argument("--preset", default="desk")
    p.add_argument("--probes", type=int, default=2,
                   help="coordinates probed per parameter tensor")

    p = add("inspect-checkpoint", cmd_inspect, "print checkpoint contents")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--expect-preset", default=None,
                   help="fail unless the config matches this preset")

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except (DataError, ShapeError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2
    except NumericFault as e:
        print(f"numeric fault: {e}", file=sys.stderr)
        return 3
    except MuserError as e:  # base-class fallback
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
