"""Adversarial training of the toy style generator on lampworld renders.

Non-saturating logistic loss with R1 gradient regularization on real images.
Everything is seeded; on a fixed machine two runs with the same config
produce identical weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .. import lampworld
from ..checkpoint import save_checkpoint
from .arch import ArchConfig, StyleGenerator, ToyStyleNet


class DivergenceError(RuntimeError):
    def __init__(self, step: int, what: str):
        super().__init__(f"training diverged at step {step}: {what}")
        self.step = step


@dataclass(frozen=True)
class GanTrainConfig:
    steps: int = 3000
    batch_size: int = 16
    lr: float = 1e-3
    beta1: float = 0.0
    beta2: float = 0.99
    r1_gamma: float = 5.0
    seed: int = 0
    data_seed: int = 1
    disc_channels: int = 32
    max_lights: int = 4
    log_every: int = 1

    def to_dict(self) -> dict:
        return asdict(self)


class Critic(nn.Module):
    def __init__(self, nf: int = 32, image_size: int = 64):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(3, nf, 3, 2, 1), nn.LeakyReLU(0.2),
            nn.Conv2d(nf, nf * 2, 3, 2, 1), nn.LeakyReLU(0.2),
            nn.Conv2d(nf * 2, nf * 4, 3, 2, 1), nn.LeakyReLU(0.2),
            nn.Conv2d(nf * 4, nf * 4, 3, 2, 1), nn.LeakyReLU(0.2),
        )
        side = image_size // 16
        self.head = nn.Linear(nf * 4 * side * side, 1)

    def forward(self, x):
        return self.head(self.net(x).flatten(1))


def _batch_from_stream(stream, batch_size: int) -> torch.Tensor:
    imgs = [next(stream) for _ in range(batch_size)]
    arr = np.stack(imgs).astype(np.float32)
    return torch.from_numpy(arr).permute(0, 3, 1, 2)


def train_generator(
    arch: ArchConfig,
    config: GanTrainConfig,
    log_sink=None,
    snapshot_every: int = 0,
    snapshot_dir=None,
) -> StyleGenerator:
    """Train from scratch; returns an inference handle over the final weights.

    log_sink, if given, receives one "step\tg_loss\td_loss" line per step.
    With steps == 0 the freshly initialized weights are returned unchanged.
    snapshot_every > 0 writes intermediate checkpoints without perturbing the
    run (pure reads of the weights).
    """
    torch.manual_seed(config.seed)
    gen = ToyStyleNet(arch)
    if config.steps == 0:
        return StyleGenerator(arch, gen)

    critic = Critic(config.disc_channels, arch.image_size)
    # fast style drift is the main instability here: a runaway style scale
    # amplifies every block, so the style pathway learns at a tenth the rate
    style_params = list(gen.mapping.parameters()) + list(gen.affine.parameters())
    opt_g = torch.optim.Adam(
        [
            {"params": list(gen.synthesis.parameters())},
            {"params": style_params, "lr": config.lr * 0.1},
        ],
        lr=config.lr,
        betas=(config.beta1, config.beta2),
    )
    opt_d = torch.optim.Adam(critic.parameters(), lr=config.lr,
                             betas=(config.beta1, config.beta2))
    stream = lampworld.training_image_stream(
        config.data_seed, arch.image_size, max_lights=config.max_lights
    )
    z_rng = torch.Generator().manual_seed(config.seed + 1)

    gen.train()
    critic.train()
    for step in range(1, config.steps + 1):
        real = _batch_from_stream(stream, config.batch_size)
        z = torch.randn(config.batch_size, arch.z_dim, generator=z_rng)

        # critic update with R1 on real images
        real_req = real.detach().requires_grad_(True)
        d_real = critic(real_req)
        grad = torch.autograd.grad(d_real.sum(), real_req, create_graph=True)[0]
        r1 = grad.pow(2).sum(dim=(1, 2, 3)).mean()
        with torch.no_grad():
            fake = gen(z)
        d_fake = critic(fake)
        d_loss = (
            F.softplus(-d_real).mean()
            + F.softplus(d_fake).mean()
            + (config.r1_gamma / 2.0) * r1
        )
        opt_d.zero_grad(set_to_none=True)
        d_loss.backward()
        opt_d.step()

        # generator update, non-saturating
        z2 = torch.randn(config.batch_size, arch.z_dim, generator=z_rng)
        g_loss = F.softplus(-critic(gen(z2))).mean()
        opt_g.zero_grad(set_to_none=True)
        g_loss.backward()
        opt_g.step()

        gl, dl = g_loss.item(), d_loss.item()
        if not (math.isfinite(gl) and math.isfinite(dl)):
            raise DivergenceError(step, f"g_loss={gl} d_loss={dl}")
        if log_sink is not None and step % config.log_every == 0:
            log_sink(f"{step}\t{gl:.6f}\t{dl:.6f}")
        if snapshot_every and snapshot_dir is not None and step % snapshot_every == 0:
            Path(snapshot_dir).mkdir(parents=True, exist_ok=True)
            tensors = {k: v.detach().numpy() for k, v in gen.state_dict().items()}
            save_checkpoint(
                Path(snapshot_dir) / f"step{step:06d}.rlck",
                "stylegen", arch.to_dict(), tensors,
            )

    gen.eval()
    return StyleGenerator(arch, gen)
