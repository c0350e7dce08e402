"""Command-line pipeline: pair / split / melspec / train / eval.

Structured JSON-lines logs go to stderr; results go to named files (or
stdout where noted). Every error class maps to a distinct exit code, and
exit 0 means the command's postcondition held.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dsp, nets
from .config import PipelineConfig, apply_overrides, load_config
from .embeddings import load_embeddings
from .errors import XmAudioError
from .metrics import evaluate_manifest
from .pairing import (
    greedy_pair,
    load_manifest,
    save_manifest,
    similarity_stats,
    stratified_split,
)


def _log(event: str, **kw):
    print(json.dumps({"event": event, **kw}), file=sys.stderr)


def _load_cfg(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    overrides = {
        k: v
        for k, v in vars(args).items()
        if k not in ("config", "command", "func") and hasattr(cfg, k)
    }
    return apply_overrides(cfg, overrides)


def cmd_pair(args) -> int:
    cfg = _load_cfg(args)
    artworks = load_embeddings(cfg.artworks)
    music = load_embeddings(cfg.music)
    manifest = greedy_pair(artworks, music)
    manifest.created_from = [cfg.artworks, cfg.music]
    for r in manifest.records:
        r.prompt = cfg.prompt
        r.negative_prompt = cfg.negative_prompt
    manifest.validate()
    save_manifest(manifest, args.out_manifest)
    stats = similarity_stats([r.similarity for r in manifest.records])
    with open(args.out_stats, "w", encoding="utf-8") as fh:
        fh.write(stats.to_json() + "\n")
    _log("paired", pairs=len(manifest), avg_sim=stats.avg)
    return 0


def cmd_split(args) -> int:
    cfg = _load_cfg(args)
    manifest = load_manifest(args.manifest)
    out = stratified_split(manifest, cfg.train_fraction, cfg.val_count, cfg.seed)
    save_manifest(out, args.out)
    counts = {s: sum(1 for r in out.records if r.split == s) for s in ("train", "test", "val")}
    _log("split", **counts)
    return 0


def cmd_melspec(args) -> int:
    cfg = _load_cfg(args)
    wav_dir = Path(cfg.wav_dir or args.wav_dir)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params = dsp.StftParams(n_fft=cfg.n_fft, hop=cfg.hop)
    ok = skipped = 0
    for wav in sorted(wav_dir.glob("*.wav")):
        try:
            buf = dsp.load_wav(wav, cfg.sample_rate)
            mel = dsp.log_mel(buf, params, cfg.n_mels, cfg.fmin, cfg.fmax)
            dsp.save_melspec(mel, out_dir / (wav.stem + ".emb1"),
                             out_dir / (wav.stem + ".json"))
            ok += 1
            _log("melspec", file=wav.name, frames=int(mel.values.shape[0]))
        except XmAudioError as e:
            skipped += 1
            _log("excluded", file=wav.name, reason=str(e))
    _log("melspec_done", ok=ok, skipped=skipped)
    return 0 if ok >= 1 else 1


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    tc = nets.TrainConfig(
        steps=args.steps, batch_size=cfg.batch_size, accumulation=cfg.accumulation,
        lr=cfg.lr, warmup_steps=cfg.warmup_steps, seed=cfg.seed,
        T=cfg.T, beta_start=cfg.beta_start, beta_end=cfg.beta_end, gamma=cfg.gamma,
    )
    dataset = nets.make_synthetic_dataset(
        args.dataset_size, tc.cond_dim, tc.latent_dim, seed=cfg.seed)
    report = nets.train_toy(dataset, tc)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    nets.save_checkpoint(report.params, out_dir / "checkpoint.emb1",
                         out_dir / "checkpoint_shapes.json")
    report.write_jsonl(out_dir / "train_report.jsonl")
    _log("trained", steps=tc.steps, final_loss=report.losses[-1])
    return 0


def cmd_eval(args) -> int:
    cfg = _load_cfg(args)
    manifest = load_manifest(args.manifest)
    report = evaluate_manifest(
        manifest,
        generated=load_embeddings(args.generated),
        groundtruth=load_embeddings(args.groundtruth),
        artworks=load_embeddings(cfg.artworks or args.artworks),
    )
    payload = report.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    else:
        print(payload)
    _log("evaluated", pairs=len(manifest))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="xmaudio",
        description="Artwork/music pairing, spectrogram extraction, toy "
                    "diffusion training, and objective evaluation.",
    )
    ap.add_argument("--config", help="JSON config file; flags override it")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pair", help="greedy max-similarity pairing")
    p.add_argument("--artworks", help="artwork EMB1 store")
    p.add_argument("--music", help="music EMB1 store")
    p.add_argument("--out-manifest", required=True)
    p.add_argument("--out-stats", required=True)
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser("split", help="stratified train/test/val split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--val-count", dest="val_count", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("melspec", help="extract log-mel spectrograms from WAVs")
    p.add_argument("--wav-dir", dest="wav_dir")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--sample-rate", dest="sample_rate", type=int)
    p.add_argument("--n-mels", dest="n_mels", type=int)
    p.set_defaults(func=cmd_melspec)

    p = sub.add_parser("train", help="toy training loop on a synthetic task")
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--dataset-size", dest="dataset_size", type=int, default=256)
    p.add_argument("--seed", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="objective metric report for a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--generated", required=True)
    p.add_argument("--groundtruth", required=True)
    p.add_argument("--artworks")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except XmAudioError as e:
        _log("error", kind=type(e).__name__, message=str(e))
        return type(e).exit_code
    except OSError as e:
        _log("error", kind="OSError", message=str(e))
        return 2


if __name__ == "__main__":
    sys.exit(main())
