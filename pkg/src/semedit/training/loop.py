"""Adversarial training loop: alternating updates on two learning rates.

The discriminator steps first on the hinge objective, then the generator
steps on weighted perceptual + feature-matching + adversarial terms.  The
semantics-stream features are computed once per batch: with autograd graph
for the discriminator phase, then detached and reused as constants for the
generator phase.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from ..data.samples import batch_arrays, sample_for_mode
from ..data.scenes import synth_scene
from ..errors import NonFiniteLossError, PlacementError, SamplingError
from ..losses import (
    FeatureExtractor,
    feature_matching_loss,
    generator_total_loss,
    hinge_loss_d,
    perceptual_loss,
)
from ..models import (
    DiscConfig,
    Generator,
    PatchDiscriminator,
    SemCache,
    TwoStreamDiscriminator,
    composite,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .config import TrainConfig

METRIC_FIELDS = ("step", "epoch", "L_D", "L_G", "L_FM", "L_perc", "lr_g", "lr_d")


def lr_at(epoch: int, base_lr: float, cfg: TrainConfig) -> float:
    """Constant until decay_start, then linear to exactly 0 at cfg.epochs."""
    if not 0 <= epoch <= cfg.epochs:
        raise ValueError(f"epoch {epoch} outside [0, {cfg.epochs}]")
    if epoch < cfg.decay_start:
        return base_lr
    return base_lr * (cfg.epochs - epoch) / (cfg.epochs - cfg.decay_start)


@dataclass
class TrainState:
    cfg: TrainConfig
    generator: Generator
    discriminator: torch.nn.Module
    opt_g: torch.optim.Adam
    opt_d: torch.optim.Adam
    extractor: FeatureExtractor
    rng: np.random.Generator
    epoch: int = 0
    step: int = 0


def build_discriminator(cfg: TrainConfig) -> torch.nn.Module:
    if cfg.discriminator == "patchgan":
        return PatchDiscriminator(cfg.num_classes, use_spectral_norm=cfg.use_spectral_norm,
                                  head_kernel=cfg.head_kernel)
    return TwoStreamDiscriminator(DiscConfig(
        num_classes=cfg.num_classes, merge=cfg.merge,
        head_kernel=cfg.head_kernel, use_spectral_norm=cfg.use_spectral_norm,
    ))


def init_state(cfg: TrainConfig) -> TrainState:
    torch.manual_seed(cfg.seed)
    gen = Generator(cfg.num_classes)
    disc = build_discriminator(cfg)
    betas = (cfg.adam_beta1, cfg.adam_beta2)
    opt_g = torch.optim.Adam(gen.parameters(), lr=cfg.lr_gen, betas=betas)
    opt_d = torch.optim.Adam(disc.parameters(), lr=cfg.lr_disc, betas=betas)
    extractor = FeatureExtractor(seed=cfg.extractor_seed)
    rng = np.random.default_rng(cfg.seed)
    return TrainState(cfg, gen, disc, opt_g, opt_d, extractor, rng)


def sample_batch(state: TrainState) -> dict:
    """Draw a fresh batch of scenes+masks according to the configured mode mix."""
    cfg = state.cfg
    spec = cfg.scene_spec()
    modes = sorted(cfg.mode_mix)
    probs = np.array([cfg.mode_mix[m] for m in modes], dtype=np.float64)
    probs = probs / probs.sum()
    samples = []
    failures = 0
    while len(samples) < cfg.batch_size:
        mode = str(state.rng.choice(modes, p=probs))
        try:
            scene = synth_scene(spec, state.rng)
            samples.append(sample_for_mode(scene, spec, mode, state.rng,
                                           cfg.semantics_scope))
        except (SamplingError, PlacementError):
            failures += 1
            if failures > 50 * cfg.batch_size:
                raise  # scene spec and canvas are fundamentally incompatible
    return batch_arrays(samples)


def _to_tensors(batch: dict) -> tuple:
    return tuple(torch.from_numpy(batch[k]) for k in
                 ("image_real", "image_masked", "mask", "semantics"))


def _assert_finite(value: float, name: str, metrics: dict):
    if not math.isfinite(value):
        raise NonFiniteLossError(f"{name} is {value} at step {metrics.get('step')}", metrics)


def discriminator_phase(state: TrainState, tensors: tuple):
    """One D update on hinge loss; fake branch detached from the generator.

    Returns (loss_d, sem_cache) — the cache still carries its autograd graph
    here, but the backward pass has consumed it; only the feature values
    remain valid for reuse.
    """
    real, masked, mask, sem = tensors
    disc, gen = state.discriminator, state.generator
    state.opt_d.zero_grad(set_to_none=True)
    with torch.no_grad():
        fake = composite(gen(masked, mask, sem), real, mask)
    sem_cache = None
    if hasattr(disc, "compute_sem_cache"):
        sem_cache = disc.compute_sem_cache(sem, with_graph=True)
        out_real = disc(real, mask, sem, sem_cache=sem_cache)
        out_fake = disc(fake, mask, sem, sem_cache=sem_cache)
    else:
        out_real = disc(real, mask, sem)
        out_fake = disc(fake, mask, sem)
    loss_d = hinge_loss_d(out_real.scores, out_fake.scores)
    loss_d.backward()
    if state.cfg.grad_clip > 0:
        torch.nn.utils.clip_grad_norm_(disc.parameters(), state.cfg.grad_clip)
    state.opt_d.step()
    return loss_d, sem_cache


def generator_phase(state: TrainState, tensors: tuple, sem_cache=None):
    """One G update on perceptual + feature-matching + adversarial terms."""
    cfg = state.cfg
    real, masked, mask, sem = tensors
    disc, gen = state.discriminator, state.generator
    state.opt_g.zero_grad(set_to_none=True)
    fake_g = composite(gen(masked, mask, sem), real, mask)
    if sem_cache is not None:
        cache_g = SemCache(
            features=[f.detach() for f in sem_cache.features],
            checksum=sem_cache.checksum, with_graph=False,
        )
        out_fake_g = disc(fake_g, mask, sem, sem_cache=cache_g)
        with torch.no_grad():
            out_real_g = disc(real, mask, sem, sem_cache=cache_g)
    else:
        out_fake_g = disc(fake_g, mask, sem)
        with torch.no_grad():
            out_real_g = disc(real, mask, sem)
    loss_fm = feature_matching_loss(out_real_g.rgb_features, out_fake_g.rgb_features,
                                    cfg.fm_scale_reduction)
    loss_perc = perceptual_loss(fake_g, real, state.extractor)
    loss_g = generator_total_loss(loss_perc, loss_fm, out_fake_g.scores,
                                  cfg.loss_weights)
    loss_g.backward()
    if cfg.grad_clip > 0:
        torch.nn.utils.clip_grad_norm_(gen.parameters(), cfg.grad_clip)
    state.opt_g.step()
    # clear discriminator grads accumulated through the generator backward
    state.opt_d.zero_grad(set_to_none=True)
    return loss_g, loss_fm, loss_perc


def train_step(state: TrainState, batch: dict) -> dict:
    """One discriminator update, then one generator update; returns metrics."""
    tensors = _to_tensors(batch)
    disc = state.discriminator
    has_counters = hasattr(disc, "reset_counters")
    if has_counters:
        disc.reset_counters()

    loss_d, sem_cache = discriminator_phase(state, tensors)
    d_counters = dict(disc.counters) if has_counters else {}
    loss_g, loss_fm, loss_perc = generator_phase(state, tensors, sem_cache)

    state.step += 1
    metrics = {
        "step": state.step,
        "epoch": state.epoch,
        "L_D": float(loss_d.item()),
        "L_G": float(loss_g.item()),
        "L_FM": float(loss_fm.item()),
        "L_perc": float(loss_perc.item()),
        "lr_g": state.opt_g.param_groups[0]["lr"],
        "lr_d": state.opt_d.param_groups[0]["lr"],
    }
    if has_counters:
        metrics["sem_evals_d_phase"] = d_counters["sem_evals"]
        metrics["rgb_evals_d_phase"] = d_counters["rgb_evals"]
        metrics["sem_evals_total"] = disc.counters["sem_evals"]
        metrics["rgb_evals_total"] = disc.counters["rgb_evals"]
    for key in ("L_D", "L_G", "L_FM", "L_perc"):
        _assert_finite(metrics[key], key, metrics)
    return metrics


def _apply_lr(state: TrainState):
    lr_g = lr_at(state.epoch, state.cfg.lr_gen, state.cfg)
    lr_d = lr_at(state.epoch, state.cfg.lr_disc, state.cfg)
    for group in state.opt_g.param_groups:
        group["lr"] = lr_g
    for group in state.opt_d.param_groups:
        group["lr"] = lr_d


def save_state(state: TrainState, path):
    save_checkpoint(
        path,
        config_json=state.cfg.to_json(),
        gen_state=state.generator.state_dict(),
        disc_state=state.discriminator.state_dict(),
        optg_state=state.opt_g.state_dict(),
        optd_state=state.opt_d.state_dict(),
        np_rng_state=state.rng.bit_generator.state,
        epoch=state.epoch,
        step=state.step,
    )


def restore_state(path, expect_num_classes: int = None) -> TrainState:
    ckpt = load_checkpoint(path, expect_num_classes=expect_num_classes)
    cfg = TrainConfig.from_json(ckpt["config_json"])
    state = init_state(cfg)
    state.generator.load_state_dict(ckpt["gen_state"])
    state.discriminator.load_state_dict(ckpt["disc_state"])
    state.opt_g.load_state_dict(ckpt["optg_state"])
    state.opt_d.load_state_dict(ckpt["optd_state"])
    state.rng.bit_generator.state = ckpt["np_rng_state"]
    torch.set_rng_state(ckpt["torch_rng_state"].to(torch.uint8))
    state.epoch = ckpt["epoch"]
    state.step = ckpt["step"]
    return state


def train_loop(cfg: TrainConfig, out_dir, max_steps: int = None,
               resume_from=None) -> TrainState:
    """Run (or continue) training; writes metrics.jsonl and checkpoints in out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if resume_from:
        state = restore_state(resume_from, expect_num_classes=cfg.num_classes)
        state.cfg = cfg  # the caller's schedule governs the continued run
    else:
        state = init_state(cfg)
    log_path = out / "metrics.jsonl"
    mode = "a" if resume_from else "w"
    budget = max_steps if max_steps is not None else cfg.epochs * cfg.steps_per_epoch

    with open(log_path, mode) as log:
        try:
            while state.epoch < cfg.epochs and state.step < budget:
                _apply_lr(state)
                for _ in range(cfg.steps_per_epoch):
                    if state.step >= budget:
                        break
                    metrics = train_step(state, sample_batch(state))
                    log.write(json.dumps(metrics) + "\n")
                state.epoch += 1
                every = cfg.checkpoint_every_epochs
                if every and state.epoch % every == 0 and state.epoch < cfg.epochs:
                    save_state(state, out / f"epoch_{state.epoch:04d}.ckpt")
        except NonFiniteLossError as err:
            (out / "diagnostic.json").write_text(json.dumps(err.metrics, indent=2))
            raise
    save_state(state, out / "final.ckpt")
    return state
