"""Command-line entry points.

    sta-lstm train            --data FILE [--config FILE] [--variant sta] ...
    sta-lstm eval             --checkpoint FILE --data FILE [--fold N|all|none]
    sta-lstm export-attention --checkpoint FILE --data FILE --out DIR [--index I]
    sta-lstm gen-synth        --out FILE [--n 20] [--classes 2] [--joints 8] ...
    sta-lstm grad-check       [--joints 4] [--hidden 4] [--frames 5] ...

Every run with the same config, seed, and data writes byte-identical traces
and checkpoints. All output files are written atomically.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .autodiff import backward
from .checkpoint import atomic_write_text, load_checkpoint
from .config import RunConfig, VARIANTS, make_config
from .data import (
    SkeletonSequence,
    center_normalize,
    gen_synthetic,
    load_generic,
    load_sbu,
    save_generic,
    smooth,
    split_folds,
)
from .errors import ContractError, StaLstmError
from .losses import LossConfig, total_loss
from .model import ModelShape, forward, predict
from .training import init_params, joint_train, trace_to_csv

__all__ = ["main"]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--data", help="dataset path (file for generic, directory for sbu)")
    p.add_argument("--format", choices=("generic", "sbu"), help="dataset format")
    p.add_argument("--seed", type=int, help="run seed")
    p.add_argument("--out", help="output directory")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sta-lstm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="run the staged training schedule")
    _add_common(t)
    t.add_argument("--variant", choices=VARIANTS, help="architecture variant")
    t.add_argument("--no-spatial-reg", action="store_true", help="drop the joint-gate coverage term")
    t.add_argument("--no-temporal-reg", action="store_true", help="drop the frame-gate magnitude term")
    t.add_argument("--fold", help="hold out this fold index during training ('none' trains on everything)")
    t.add_argument("--hidden", type=int, help="hidden units per layer")
    t.add_argument("--batch-size", type=int, dest="batch_size")
    t.add_argument("--n1", type=int, help="long-stage iteration budget")
    t.add_argument("--n2", type=int, help="fine-tune-stage iteration budget")
    t.add_argument("--dropout", type=float, help="inter-layer dropout rate")

    e = sub.add_parser("eval", help="evaluate a checkpoint")
    _add_common(e)
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--fold", help="evaluate this fold only, 'all' for per-fold + mean, 'none' for everything")

    x = sub.add_parser("export-attention", help="write per-frame gate values as CSV")
    _add_common(x)
    x.add_argument("--checkpoint", required=True)
    x.add_argument("--index", type=int, default=0, help="sequence index within the data file")

    g = sub.add_parser("gen-synth", help="write a synthetic dataset in the generic format")
    g.add_argument("--out", required=True, help="output file")
    g.add_argument("--n", type=int, default=20)
    g.add_argument("--classes", type=int, default=2)
    g.add_argument("--joints", type=int, default=8)
    g.add_argument("--t-min", type=int, default=10, dest="t_min")
    g.add_argument("--t-max", type=int, default=20, dest="t_max")
    g.add_argument("--noise", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("grad-check", help="compare backprop against central differences on a tiny model")
    c.add_argument("--joints", type=int, default=4)
    c.add_argument("--classes", type=int, default=2)
    c.add_argument("--hidden", type=int, default=4)
    c.add_argument("--attn-hidden", type=int, default=4, dest="attn_hidden")
    c.add_argument("--frames", type=int, default=5)
    c.add_argument("--eps", type=float, default=1e-5)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--threshold", type=float, default=1e-5)
    return parser


def _load_data(cfg: RunConfig) -> list[SkeletonSequence]:
    if not cfg.data:
        raise ContractError("no dataset given; pass --data or set it in the config file")
    seqs = load_sbu(cfg.data) if cfg.format == "sbu" else load_generic(cfg.data)
    if cfg.smooth_window > 1:
        seqs = [smooth(s, cfg.smooth_window) for s in seqs]
    if cfg.center:
        seqs = [center_normalize(s) for s in seqs]
    return seqs


def _config_from_args(args) -> RunConfig:
    overrides = {}
    for key in ("data", "format", "seed", "out", "variant", "fold", "hidden", "batch_size", "n1", "n2", "dropout"):
        if hasattr(args, key) and getattr(args, key) is not None:
            overrides[key] = getattr(args, key)
    if getattr(args, "no_spatial_reg", False):
        overrides["spatial_reg"] = False
    if getattr(args, "no_temporal_reg", False):
        overrides["temporal_reg"] = False
    return make_config(args.config, overrides)


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    seqs = _load_data(cfg)
    fold = cfg.fold_index()
    if fold is not None:
        train_seqs, _ = split_folds(seqs, 5, cfg.seed).split(seqs, fold)
    else:
        train_seqs = seqs
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = joint_train(train_seqs, cfg, cfg.seed, out_dir=out_dir)
    atomic_write_text(out_dir / "loss_trace.csv", trace_to_csv(result.trace))
    correct = sum(1 for s in train_seqs if predict(result.model, s) == s.label)
    print(f"trained variant={cfg.variant} stages={len(result.stages)} iterations={len(result.trace)}")
    print(f"final training accuracy {correct}/{len(train_seqs)} = {correct / len(train_seqs):.4f}")
    print(f"wrote {out_dir / 'final.ckpt'} and {out_dir / 'loss_trace.csv'}")
    return 0


def _evaluate(model, seqs) -> tuple[float, np.ndarray]:
    if not seqs:
        raise ContractError("evaluation set is empty")
    classes = model.classes
    confusion = np.zeros((classes, classes), dtype=int)
    for s in seqs:
        if s.label >= classes:
            raise ContractError(f"sequence {s.seq_id} has label {s.label}, model only has {classes} classes")
        confusion[s.label, predict(model, s)] += 1
    accuracy = float(np.trace(confusion)) / len(seqs)
    return accuracy, confusion


def _print_report(accuracy: float, confusion: np.ndarray) -> None:
    classes = confusion.shape[0]
    print(f"overall accuracy {accuracy:.4f} ({int(np.trace(confusion))}/{int(confusion.sum())})")
    for c in range(classes):
        total = int(confusion[c].sum())
        hit = int(confusion[c, c])
        rate = hit / total if total else float("nan")
        print(f"  class {c}: {hit}/{total} = {rate:.4f}" if total else f"  class {c}: no samples")
    print("confusion matrix (rows = truth, cols = prediction):")
    for c in range(classes):
        print("  " + " ".join(f"{int(v):4d}" for v in confusion[c]))


def cmd_eval(args) -> int:
    cfg = _config_from_args(args)
    model, _ = load_checkpoint(args.checkpoint)
    seqs = _load_data(cfg)
    if cfg.fold == "all":
        folds = split_folds(seqs, 5, cfg.seed)
        accs = []
        for f in range(folds.k):
            _, test = folds.split(seqs, f)
            acc, confusion = _evaluate(model, test)
            print(f"fold {f}:")
            _print_report(acc, confusion)
            accs.append(acc)
        print(f"mean accuracy over {folds.k} folds: {float(np.mean(accs)):.4f}")
    else:
        fold = cfg.fold_index()
        if fold is not None:
            _, seqs = split_folds(seqs, 5, cfg.seed).split(seqs, fold)
        acc, confusion = _evaluate(model, seqs)
        _print_report(acc, confusion)
    return 0


def cmd_export_attention(args) -> int:
    cfg = _config_from_args(args)
    model, _ = load_checkpoint(args.checkpoint)
    seqs = _load_data(cfg)
    if not 0 <= args.index < len(seqs):
        raise ContractError(f"--index {args.index} out of range for {len(seqs)} sequences")
    seq = seqs[args.index]
    _, _, trace = forward(model, seq, training=False)
    alphas = trace.alpha_array()
    betas = trace.beta_array()

    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    alpha_rows = ["frame,joint,alpha"]
    for t in range(alphas.shape[0]):
        for k in range(alphas.shape[1]):
            alpha_rows.append(f"{t + 1},{k + 1},{alphas[t, k]:.17g}")
    beta_rows = ["frame,beta,delta_beta"]
    prev = 0.0  # the first frame's change is the gate itself
    for t in range(betas.shape[0]):
        beta_rows.append(f"{t + 1},{betas[t]:.17g},{betas[t] - prev:.17g}")
        prev = betas[t]
    atomic_write_text(out_dir / "alpha.csv", "\n".join(alpha_rows) + "\n")
    atomic_write_text(out_dir / "beta.csv", "\n".join(beta_rows) + "\n")
    print(f"wrote {out_dir / 'alpha.csv'} and {out_dir / 'beta.csv'} for sequence {seq.seq_id}")
    return 0


def cmd_gen_synth(args) -> int:
    seqs = gen_synthetic(
        n_sequences=args.n,
        n_classes=args.classes,
        joints=args.joints,
        t_range=(args.t_min, args.t_max),
        noise_sigma=args.noise,
        seed=args.seed,
    )
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    save_generic(seqs, out)
    print(f"wrote {len(seqs)} sequences ({args.classes} classes, {args.joints} joints) to {out}")
    return 0


def cmd_grad_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    shape = ModelShape(
        joints=args.joints,
        classes=args.classes,
        hidden=args.hidden,
        attn_hidden=args.attn_hidden,
        main_layers=3,
        dropout=0.0,
    )
    model = init_params(shape, rng)
    frames = rng.normal(0.0, 1.0, (args.frames, args.joints, 3))
    seq = SkeletonSequence(frames, label=0, valid_len=args.frames, seq_id="gradcheck")
    cfg = LossConfig()

    def loss_value() -> float:
        _, probs, tr = forward(model, seq, training=False)
        return total_loss(probs, seq.label, tr, model, cfg).item()

    params = list(model.named_parameters())
    for _, t in params:
        t.zero_grad()
    _, probs, tr = forward(model, seq, training=False)
    backward(total_loss(probs, seq.label, tr, model, cfg))
    analytic = {name: t.grad.copy() for name, t in params}

    worst = 0.0
    eps = args.eps
    for name, t in params:
        flat = t.data.reshape(-1)
        ana = analytic[name].reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + eps
            f_plus = loss_value()
            flat[i] = saved - eps
            f_minus = loss_value()
            flat[i] = saved
            numeric = (f_plus - f_minus) / (2 * eps)
            err = abs(ana[i] - numeric) / max(1.0, abs(ana[i]), abs(numeric))
            worst = max(worst, err)
    print(f"max relative gradient error: {worst:.3e} over {sum(t.size for _, t in params)} coordinates")
    ok = worst < args.threshold
    print("PASS" if ok else f"FAIL (threshold {args.threshold:g})")
    return 0 if ok else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "train": cmd_train,
        "eval": cmd_eval,
        "export-attention": cmd_export_attention,
        "gen-synth": cmd_gen_synth,
        "grad-check": cmd_grad_check,
    }
    try:
        return handlers[args.command](args)
    except StaLstmError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
