"""Adversarial value and feature-matching losses for the translator.

gan_value is the two-term log-likelihood value the adversarial game is played
over; the per-player training objectives derive from it with opposing signs
(the generator uses the standard non-saturating variant). All log terms are
computed from logits via logsigmoid, so probabilities never underflow.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F


class LossError(RuntimeError):
    pass


def gan_value(disc, cond: torch.Tensor, target: torch.Tensor,
              generated: torch.Tensor) -> torch.Tensor:
    """E[log D(x, x')] + E[log(1 - D(x, G(x)))] over the batch."""
    real = disc(cond, target)
    fake = disc(cond, generated)
    return F.logsigmoid(real).mean() + F.logsigmoid(-fake).mean()


# the translator role name for the same quantity
gan_loss = gan_value


def feature_matching_loss(disc, cond: torch.Tensor, target: torch.Tensor,
                          generated: torch.Tensor) -> torch.Tensor:
    """Sum over discriminator layers of the size-normalized L1 feature gap.

    Each layer contributes ||D_i(x, x') - D_i(x, G(x))||_1 / N_i with N_i the
    per-sample element count of that layer's activation; the sum is averaged
    over the batch.
    """
    f_real = disc.features(cond, target)
    f_fake = disc.features(cond, generated)
    if not f_real:
        raise LossError("discriminator exposes no feature layers")
    batch = cond.shape[0]
    total = torch.zeros(batch, dtype=f_real[0].dtype)
    for fr, ff in zip(f_real, f_fake):
        n = fr[0].numel()
        total = total + (fr - ff).abs().reshape(batch, -1).sum(dim=1) / n
    return total.mean()


def total_loss(gan: torch.Tensor, fm: torch.Tensor, lam: float) -> torch.Tensor:
    """L = L_GAN + lam * L_FM."""
    return gan + lam * fm


def d_step_loss(real_logits: torch.Tensor, fake_logits: torch.Tensor
                ) -> torch.Tensor:
    """Discriminator minimizes the negated value function."""
    return F.softplus(-real_logits).mean() + F.softplus(fake_logits).mean()


def g_gan_loss(fake_logits: torch.Tensor) -> torch.Tensor:
    """Non-saturating generator objective: -E[log D(x, G(x))]."""
    return F.softplus(-fake_logits).mean()
