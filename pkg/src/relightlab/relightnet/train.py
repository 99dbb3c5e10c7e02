"""Adversarial training loop for the translator.

Alternates discriminator and generator updates over seeded minibatches of
training pairs. Reversed pairs need no special handling here: the corpus
already stores them input/target-swapped with negated modulation, so both
directions flow through the same loss forms.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import torch

from ..checkpoint import save_checkpoint
from ..pairgen import TrainingPair
from .arch import PatchDiscriminator, RelightModel, Translator, TranslatorConfig
from .losses import d_step_loss, feature_matching_loss, g_gan_loss


class TrainError(RuntimeError):
    def __init__(self, step: int, what: str):
        super().__init__(f"translator training failed at step {step}: {what}")
        self.step = step


def _stack_corpus(pairs: list[TrainingPair], cfg: TranslatorConfig):
    """Pack the corpus into uint8 tensors (images are 8-bit on disk anyway)."""
    if not pairs:
        raise TrainError(0, "empty training corpus")
    shape = pairs[0].input_image.shape
    for i, p in enumerate(pairs):
        if p.input_image.shape != shape or p.target_image.shape != shape:
            raise TrainError(0, f"pair {i} image shape differs from pair 0")
        if p.m.width != cfg.cond_width:
            raise TrainError(
                0,
                f"pair {i} modulation width {p.m.width} != model width "
                f"{cfg.cond_width}",
            )
        if not cfg.masked and p.mask is not None:
            raise TrainError(
                0, f"pair {i} carries a mask but the model is not mask-conditioned"
            )

    def quanta(img):
        return torch.from_numpy(
            np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
        )

    x = torch.stack([quanta(p.input_image) for p in pairs]).permute(0, 3, 1, 2)
    y = torch.stack([quanta(p.target_image) for p in pairs]).permute(0, 3, 1, 2)
    m = torch.tensor([list(p.m.values) for p in pairs], dtype=torch.float32)
    masks = None
    if cfg.masked:
        h, w = shape[:2]
        ones = np.ones((h, w), dtype=np.float32)
        masks = torch.stack(
            [quanta(p.mask if p.mask is not None else ones) for p in pairs]
        ).unsqueeze(1)
    return x, y, m, masks


def train_translator(
    pairs: list[TrainingPair],
    config: TranslatorConfig,
    log_sink=None,
    snapshot_every: int = 0,
    snapshot_dir=None,
) -> RelightModel:
    """Train from scratch on the given pairs; fully seeded.

    log_sink receives one "step\tL_GAN\tL_FM\tL" line per log_every steps.
    steps == 0 returns the freshly initialized translator unchanged.
    """
    torch.manual_seed(config.seed)
    net = Translator(config)
    if config.steps == 0:
        return RelightModel(config, net)

    disc = PatchDiscriminator(config.ndf)
    opt_g = torch.optim.Adam(net.parameters(), lr=config.lr,
                             betas=(config.beta1, config.beta2))
    opt_d = torch.optim.Adam(disc.parameters(), lr=config.lr,
                             betas=(config.beta1, config.beta2))
    x_all, y_all, m_all, mask_all = _stack_corpus(pairs, config)
    sampler = torch.Generator().manual_seed(config.seed + 1)

    net.train()
    disc.train()
    for step in range(1, config.steps + 1):
        idx = torch.randint(0, x_all.shape[0], (config.batch_size,),
                            generator=sampler)
        cond_img = x_all[idx].float() / 255.0
        y = y_all[idx].float() / 255.0
        m = m_all[idx]
        if mask_all is not None:
            x = torch.cat([cond_img, mask_all[idx].float() / 255.0], dim=1)
        else:
            x = cond_img

        with torch.no_grad():
            fake_d = net(x, m)
        d_loss = d_step_loss(disc(cond_img, y), disc(cond_img, fake_d))
        opt_d.zero_grad(set_to_none=True)
        d_loss.backward()
        opt_d.step()

        fake = net(x, m)
        gan = g_gan_loss(disc(cond_img, fake))
        fm = feature_matching_loss(disc, cond_img, y.detach(), fake)
        loss = gan + config.lam * fm
        opt_g.zero_grad(set_to_none=True)
        loss.backward()
        opt_g.step()

        gl, fl, tl, dl = gan.item(), fm.item(), loss.item(), d_loss.item()
        if not all(map(math.isfinite, (gl, fl, tl, dl))):
            raise TrainError(
                step, f"non-finite loss (L_GAN={gl} L_FM={fl} L={tl} D={dl})"
            )
        if log_sink is not None and step % config.log_every == 0:
            log_sink(f"{step}\t{gl:.6f}\t{fl:.6f}\t{tl:.6f}")
        if snapshot_every and snapshot_dir is not None and step % snapshot_every == 0:
            Path(snapshot_dir).mkdir(parents=True, exist_ok=True)
            tensors = {k: v.detach().numpy() for k, v in net.state_dict().items()}
            save_checkpoint(
                Path(snapshot_dir) / f"step{step:06d}.rlck",
                "relight", config.to_dict(), tensors,
            )

    net.eval()
    return RelightModel(config, net)
