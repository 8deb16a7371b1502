"""Command line entry points.

Verbs: synth-data, train, eval, edit, serve, ablate.  Usage errors exit
with status 2 (argparse's convention); runtime failures print a diagnostic
and exit 1.  Report-producing verbs write figures next to the delimited
output so a run can be inspected without loading anything into Python.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # file output only; no display in scope
import matplotlib.pyplot as plt
import numpy as np

from .data import EDIT_MODES, SceneSpec, synth_scene
from .data.io import image_to_uint8, load_png, save_png, write_dataset
from .training import TrainConfig, train_loop


def _spec_from_args(args) -> SceneSpec:
    return SceneSpec(height=args.height, width=args.width)


def cmd_synth_data(args) -> int:
    out = Path(args.out)
    rng = np.random.default_rng(args.seed)
    manifest = write_dataset(out, _spec_from_args(args), args.count, rng)
    print(f"wrote {manifest['count']} scenes to {out}")
    return 0


def _load_config(args) -> TrainConfig:
    from dataclasses import asdict

    cfg = TrainConfig.load(args.config) if args.config else TrainConfig()
    overrides = {
        name: getattr(args, name)
        for name in ("epochs", "steps_per_epoch", "batch_size", "seed")
        if getattr(args, name, None) is not None
    }
    if overrides:
        cfg = TrainConfig(**{**asdict(cfg), **overrides})
    return cfg


def _plot_loss_curves(jsonl_path: Path, fig_path: Path) -> None:
    records = [json.loads(line) for line in jsonl_path.read_text().splitlines()]
    if not records:
        return
    steps = [r["step"] for r in records]
    fig, axes = plt.subplots(2, 1, figsize=(8, 7), sharex=True)
    for key in ("L_D", "L_G"):
        axes[0].plot(steps, [r[key] for r in records], label=key)
    axes[0].set_ylabel("adversarial loss")
    axes[0].legend()
    for key in ("L_FM", "L_perc"):
        axes[1].plot(steps, [r[key] for r in records], label=key)
    axes[1].set_ylabel("auxiliary loss")
    axes[1].set_xlabel("step")
    axes[1].legend()
    fig.tight_layout()
    fig.savefig(fig_path, dpi=110)
    plt.close(fig)


def cmd_train(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    state = train_loop(cfg, out, max_steps=args.steps, resume_from=args.resume)
    _plot_loss_curves(out / "metrics.jsonl", out / "loss_curves.png")
    print(f"trained to step {state.step}; checkpoint at {out / 'final.ckpt'}")
    return 0


def _gated_segmenter(spec: SceneSpec, steps: int, seed: int = 0):
    from .metrics import pixel_accuracy_on_scenes, train_segmenter

    seg = train_segmenter(spec, steps=steps, seed=seed)
    acc = pixel_accuracy_on_scenes(seg, spec)
    if acc < 0.9:
        raise RuntimeError(
            f"segmenter gate failed: held-out pixel accuracy {acc:.3f} < 0.9; "
            f"raise --segmenter-steps"
        )
    return seg


def _report_figure(report, fig_path: Path) -> None:
    from .metrics import REPORT_HEADERS

    fig, (ax_frac, ax_fid) = plt.subplots(
        1, 2, figsize=(8, 4), gridspec_kw={"width_ratios": [3, 1]}
    )
    fracs = [report.ssim_masked, report.pixel_accuracy, report.miou]
    ax_frac.bar(REPORT_HEADERS[:3], fracs, color="tab:blue")
    ax_frac.set_ylim(0, 1.05)
    ax_frac.set_title(f"quality over {report.sample_count} edits")
    ax_fid.bar([REPORT_HEADERS[3]], [report.fid], color="tab:orange")
    ax_fid.set_title("FID")
    fig.tight_layout()
    fig.savefig(fig_path, dpi=110)
    plt.close(fig)


def _sample_grid(generator, spec: SceneSpec, fig_path: Path, seed: int) -> None:
    """A few real/masked/edited triplets for eyeballing a checkpoint."""
    import torch

    from .data import sample_for_mode
    from .models import generate_edit

    rng = np.random.default_rng(seed)
    rows = []
    for mode in ("freeform", "removal"):
        for _ in range(2):
            try:
                scene = synth_scene(spec, rng)
                sample = sample_for_mode(scene, spec, mode, rng)
            except Exception:
                continue
            out = generate_edit(
                generator,
                torch.from_numpy(sample.image_masked[None]).float(),
                torch.from_numpy(sample.mask.mask[None]).float(),
                torch.from_numpy(sample.semantics[None]).float(),
                image_real=torch.from_numpy(sample.image_real[None]).float(),
            )[0].numpy()
            rows.append((sample.image_real, sample.image_masked, out))
    if not rows:
        return
    fig, axes = plt.subplots(len(rows), 3, figsize=(7, 2.3 * len(rows)))
    axes = np.atleast_2d(axes)
    for r, (real, masked, edited) in enumerate(rows):
        for c, (img, title) in enumerate(
            zip((real, masked, edited), ("real", "masked", "edited"))
        ):
            axes[r, c].imshow(image_to_uint8(img))
            axes[r, c].set_axis_off()
            if r == 0:
                axes[r, c].set_title(title)
    fig.tight_layout()
    fig.savefig(fig_path, dpi=110)
    plt.close(fig)


def cmd_eval(args) -> int:
    from .metrics import evaluate_suite, write_report_csv, write_report_json
    from .service import load_generator

    generator, cfg, version = load_generator(args.ckpt)
    spec = cfg.scene_spec()
    segmenter = None
    if args.segmenter_steps > 0:
        segmenter = _gated_segmenter(spec, args.segmenter_steps)
    report = evaluate_suite(
        generator, spec, n_samples=args.samples, seed=args.seed,
        modes=tuple(args.modes), segmenter=segmenter,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_report_csv(report, out / "report.csv")
    write_report_json(report, out / "report.json")
    _report_figure(report, out / "report.png")
    _sample_grid(generator, spec, out / "samples.png", args.seed)
    print(f"model {version}: "
          f"SSIM {report.ssim_masked:.4f}  accu {report.pixel_accuracy:.4f}  "
          f"mIoU {report.miou:.4f}  FID {report.fid:.4f}")
    return 0


def cmd_edit(args) -> int:
    from .service import apply_painted_edit, load_generator, validate_paint

    generator, cfg, _ = load_generator(args.ckpt)
    image = load_png(args.image)
    painted = load_png(args.labels)
    if image.ndim != 3 or image.shape[2] != 3:
        raise RuntimeError("image: expected an RGB PNG")
    if painted.ndim != 2:
        raise RuntimeError("labels: expected a single-channel PNG")
    try:
        mask = validate_paint(image, painted, cfg.num_classes)
    except ValueError as e:
        raise RuntimeError(str(e))
    out = apply_painted_edit(generator, cfg.num_classes, image, painted, mask)
    save_png(args.out, out)
    print(f"edited {int(mask.sum())} pixels -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.ckpt, manifest_dir=args.manifest,
                     queue_cap=args.queue_cap)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


_ABLATION_AXES = {
    "merge": ("merge", ("sum_pool_scale", "concat", "product")),
    "scope": ("semantics_scope", ("full", "bbox")),
    "discriminator": ("discriminator", ("two_stream", "patchgan")),
}


def cmd_ablate(args) -> int:
    from dataclasses import asdict

    from .metrics import evaluate_suite, write_report_json
    from .service import load_generator

    field, variants = _ABLATION_AXES[args.axis]
    base = TrainConfig.load(args.config) if args.config else TrainConfig(
        epochs=2, steps_per_epoch=max(1, args.steps // 2), decay_start=2
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    segmenter = _gated_segmenter(base.scene_spec(), args.segmenter_steps) \
        if args.segmenter_steps > 0 else None

    rows = []
    for variant in variants:
        cfg = TrainConfig(**{**asdict(base), field: variant})
        run_dir = out / variant
        train_loop(cfg, run_dir, max_steps=args.steps)
        generator, gcfg, _ = load_generator(run_dir / "final.ckpt")
        report = evaluate_suite(
            generator, gcfg.scene_spec(), n_samples=args.samples,
            seed=args.seed, segmenter=segmenter,
        )
        write_report_json(report, run_dir / "report.json")
        rows.append((variant, report))
        print(f"{args.axis}={variant}: SSIM {report.ssim_masked:.4f} "
              f"FID {report.fid:.4f}")

    with open(out / "ablation.csv", "w") as fh:
        fh.write(f"{args.axis},SSIM,accu,mIoU,FID\n")
        for variant, rep in rows:
            fh.write(f"{variant}," + ",".join(f"{v:.6f}" for v in rep.row()) + "\n")

    fig, (ax_ssim, ax_fid) = plt.subplots(1, 2, figsize=(9, 4))
    names = [v for v, _ in rows]
    ax_ssim.bar(names, [r.ssim_masked for _, r in rows], color="tab:blue")
    ax_ssim.set_title("masked SSIM")
    ax_fid.bar(names, [r.fid for _, r in rows], color="tab:orange")
    ax_fid.set_title("FID")
    for ax in (ax_ssim, ax_fid):
        ax.tick_params(axis="x", rotation=20)
    fig.tight_layout()
    fig.savefig(out / "ablation.png", dpi=110)
    plt.close(fig)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semedit",
        description="Semantic image editing: synthesize data, train, "
                    "evaluate, edit, serve.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("synth-data", help="write a synthetic scene dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=64)
    p.set_defaults(func=cmd_synth_data)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--config", help="JSON config file (TrainConfig fields)")
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, help="hard step budget")
    p.add_argument("--resume", help="checkpoint to continue from")
    p.add_argument("--epochs", type=int)
    p.add_argument("--steps-per-epoch", dest="steps_per_epoch", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint; write report + figures")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--samples", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--modes", nargs="+", default=list(EDIT_MODES),
                   choices=list(EDIT_MODES))
    p.add_argument("--segmenter-steps", dest="segmenter_steps", type=int,
                   default=300, help="0 disables the mIoU block")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("edit", help="apply a painted label edit to one image")
    p.add_argument("--image", required=True)
    p.add_argument("--labels", required=True,
                   help="single-channel PNG, 255 = untouched")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_edit)

    p = sub.add_parser("serve", help="HTTP edit service")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--manifest", help="dataset dir providing names/palette")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int,
                   default=int(os.environ.get("SEMEDIT_PORT", "8000")))
    p.add_argument("--queue-cap", dest="queue_cap", type=int, default=16)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("ablate", help="sweep one config axis, train + score each")
    p.add_argument("--axis", required=True, choices=sorted(_ABLATION_AXES))
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="base JSON config")
    p.add_argument("--steps", type=int, default=40, help="train budget per variant")
    p.add_argument("--samples", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--segmenter-steps", dest="segmenter_steps", type=int, default=0)
    p.set_defaults(func=cmd_ablate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130
    except Exception as e:  # runtime failure: diagnostic + exit 1
        print(f"semedit {args.verb}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
