"""Fixed feature embedder behind the perceptual and Fréchet metrics.

Pretrained perceptual networks are out of scope, so the embedder is the
encoder of a small convolutional autoencoder trained briefly on renders.
It is checkpointed and versioned; scores are only comparable between runs
using the same embedder checkpoint. Reported as "perceptual (substituted)".
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import torch
import torch.nn as nn

from .. import lampworld
from ..checkpoint import load_checkpoint, save_checkpoint
from .metrics import EvalError

VERSION = "ae-enc-v1"


@dataclass(frozen=True)
class EmbedderConfig:
    channels: tuple[int, int, int] = (16, 32, 64)
    image_size: int = 64
    steps: int = 400
    batch_size: int = 16
    lr: float = 1e-3
    seed: int = 0
    data_seed: int = 7
    max_lights: int = 4
    log_every: int = 50

    def to_dict(self) -> dict:
        d = asdict(self)
        d["channels"] = list(self.channels)
        d["version"] = VERSION
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EmbedderConfig":
        d = {k: v for k, v in d.items() if k != "version"}
        d["channels"] = tuple(d["channels"])
        return cls(**d)


class _Encoder(nn.Module):
    def __init__(self, channels):
        super().__init__()
        c1, c2, c3 = channels
        self.stages = nn.ModuleList([
            nn.Sequential(nn.Conv2d(3, c1, 3, 2, 1), nn.ReLU()),
            nn.Sequential(nn.Conv2d(c1, c2, 3, 2, 1), nn.ReLU()),
            nn.Sequential(nn.Conv2d(c2, c3, 3, 2, 1), nn.ReLU()),
        ])

    def forward(self, x):
        acts = []
        for stage in self.stages:
            x = stage(x)
            acts.append(x)
        return acts


class _Decoder(nn.Module):
    def __init__(self, channels):
        super().__init__()
        c1, c2, c3 = channels
        self.net = nn.Sequential(
            nn.ConvTranspose2d(c3, c2, 4, 2, 1), nn.ReLU(),
            nn.ConvTranspose2d(c2, c1, 4, 2, 1), nn.ReLU(),
            nn.ConvTranspose2d(c1, 3, 4, 2, 1), nn.Sigmoid(),
        )

    def forward(self, x):
        return self.net(x)


class FeatureEmbedder:
    """Inference handle over the trained encoder; read-only and thread-safe."""

    def __init__(self, cfg: EmbedderConfig, encoder: _Encoder):
        self.cfg = cfg
        self._enc = encoder
        self._enc.eval()

    @classmethod
    def from_checkpoint(cls, path) -> "FeatureEmbedder":
        kind, config, tensors = load_checkpoint(path)
        if kind != "embedder":
            raise EvalError(f"{path} is a {kind!r} checkpoint, expected embedder")
        cfg = EmbedderConfig.from_dict(config)
        enc = _Encoder(cfg.channels)
        enc.load_state_dict({k: torch.from_numpy(v) for k, v in tensors.items()})
        return cls(cfg, enc)

    def save(self, path) -> None:
        tensors = {k: v.detach().numpy() for k, v in self._enc.state_dict().items()}
        save_checkpoint(path, "embedder", self.cfg.to_dict(), tensors)

    @property
    def dim(self) -> int:
        return self.cfg.channels[-1]

    def _check(self, images: np.ndarray) -> torch.Tensor:
        if images.ndim != 4 or images.shape[3] != 3:
            raise EvalError(f"expected (N, H, W, 3) images, got {images.shape}")
        if images.shape[1] < 8 or images.shape[2] < 8:
            raise EvalError("images must be at least 8x8")
        t = torch.from_numpy(np.ascontiguousarray(images, dtype=np.float32))
        return t.permute(0, 3, 1, 2)

    def features(self, image: np.ndarray) -> list[np.ndarray]:
        """Per-stage activation maps for one (H, W, 3) image, each (C, h, w)."""
        x = self._check(np.asarray(image)[None])
        with torch.no_grad():
            acts = self._enc(x)
        return [a[0].numpy() for a in acts]

    def embed(self, images: np.ndarray) -> np.ndarray:
        """(N, H, W, 3) images -> (N, dim) pooled top-stage features."""
        x = self._check(np.asarray(images))
        with torch.no_grad():
            top = self._enc(x)[-1]
        return top.mean(dim=(2, 3)).numpy()


def perceptual_distance(a, b, embedder: FeatureEmbedder) -> float:
    """L2 distance between unit-normalized features, averaged over stages."""
    total = 0.0
    feats_a = embedder.features(np.asarray(a))
    feats_b = embedder.features(np.asarray(b))
    for fa, fb in zip(feats_a, feats_b):
        va = fa.astype(np.float64).ravel()
        vb = fb.astype(np.float64).ravel()
        va /= max(float(np.linalg.norm(va)), 1e-12)
        vb /= max(float(np.linalg.norm(vb)), 1e-12)
        total += float(np.linalg.norm(va - vb))
    return total / len(feats_a)


def train_embedder(config: EmbedderConfig = EmbedderConfig(), log_sink=None) -> FeatureEmbedder:
    """Train the autoencoder on renders and return its encoder.

    Deterministic for a fixed config; the decoder is discarded after
    training.
    """
    torch.manual_seed(config.seed)
    enc = _Encoder(config.channels)
    dec = _Decoder(config.channels)
    if config.steps == 0:
        return FeatureEmbedder(config, enc)

    opt = torch.optim.Adam(
        list(enc.parameters()) + list(dec.parameters()), lr=config.lr
    )
    stream = lampworld.training_image_stream(
        config.data_seed, config.image_size, max_lights=config.max_lights
    )
    for step in range(1, config.steps + 1):
        batch = np.stack([next(stream) for _ in range(config.batch_size)])
        x = torch.from_numpy(batch.astype(np.float32)).permute(0, 3, 1, 2)
        recon = dec(enc(x)[-1])
        loss = torch.mean((recon - x) ** 2)
        opt.zero_grad(set_to_none=True)
        loss.backward()
        opt.step()
        val = loss.item()
        if not math.isfinite(val):
            raise EvalError(f"embedder training diverged at step {step}")
        if log_sink is not None and step % config.log_every == 0:
            log_sink(f"{step}\t{val:.6f}")
    return FeatureEmbedder(config, enc)
