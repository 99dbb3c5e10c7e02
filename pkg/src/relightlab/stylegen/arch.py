"""Toy style-based generator with an explicit style bottleneck.

A mapping MLP turns a latent into an intermediate vector, a single affine
layer expands that into one flat style vector covering every styled
convolution block, and the synthesis net scales each block's input feature
maps by its slice of the style. Because the style is an explicit flat vector,
single channels can be overridden and styles can be mixed per spatial
location under a soft mask.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..checkpoint import load_checkpoint, save_checkpoint


class GeneratorError(RuntimeError):
    pass


@dataclass(frozen=True)
class ArchConfig:
    """Shape of the toy generator; image_size = 4 * 2**len(block_channels)."""

    z_dim: int = 64
    w_dim: int = 128
    mapping_hidden: int = 128
    block_channels: tuple[int, ...] = (160, 128, 128, 96)  # styled (input) widths
    block_outputs: tuple[int, ...] = (128, 128, 96, 64)

    @property
    def style_channels(self) -> int:
        return sum(self.block_channels)

    @property
    def image_size(self) -> int:
        return 4 * 2 ** len(self.block_channels)

    @property
    def layer_offsets(self) -> tuple[tuple[int, int], ...]:
        offsets, start = [], 0
        for c in self.block_channels:
            offsets.append((start, start + c))
            start += c
        return tuple(offsets)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ArchConfig":
        d = dict(d)
        d["block_channels"] = tuple(d["block_channels"])
        d["block_outputs"] = tuple(d["block_outputs"])
        return cls(**d)


@dataclass(frozen=True)
class LatentCode:
    """Seeded standard-normal latent; the seed alone reproduces z."""

    z: np.ndarray
    seed: int

    @classmethod
    def from_seed(cls, seed: int, z_dim: int) -> "LatentCode":
        rng = np.random.default_rng(seed)
        return cls(z=rng.standard_normal(z_dim).astype(np.float32), seed=seed)


@dataclass(frozen=True)
class StyleVector:
    """Flat style vector over all styled layers plus the layer partition."""

    values: np.ndarray  # (C,) float32
    layer_offsets: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.layer_offsets[-1][1] != len(self.values):
            raise GeneratorError("layer offsets do not partition the style vector")


@dataclass(frozen=True)
class MaskedStyle:
    """Spatial mix of two styles: override where mask=1, base where mask=0."""

    base: StyleVector
    override: StyleVector
    mask: np.ndarray  # (H, W) float32 in [0, 1] at image resolution


def override_channel(style: StyleVector, channel: int, m: float) -> StyleVector:
    """Copy of the style with one channel set to m; everything else untouched."""
    if not (0 <= channel < len(style.values)):
        raise GeneratorError(f"style channel {channel} out of range")
    values = style.values.copy()
    values[channel] = m
    return StyleVector(values=values, layer_offsets=style.layer_offsets)


class _Mapping(nn.Module):
    def __init__(self, cfg: ArchConfig):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(cfg.z_dim, cfg.mapping_hidden),
            nn.LeakyReLU(0.2),
            nn.Linear(cfg.mapping_hidden, cfg.w_dim),
            nn.LeakyReLU(0.2),
        )

    def forward(self, z):
        return self.net(z)


class _Synthesis(nn.Module):
    def __init__(self, cfg: ArchConfig):
        super().__init__()
        self.cfg = cfg
        self.const = nn.Parameter(torch.randn(1, cfg.block_channels[0], 4, 4))
        self.convs = nn.ModuleList(
            nn.Conv2d(cin, cout, 3, padding=1)
            for cin, cout in zip(cfg.block_channels, cfg.block_outputs)
        )
        self.to_rgb = nn.Conv2d(cfg.block_outputs[-1], 3, 1)
        # damp the output head so tanh starts (and trains) in its linear
        # region; full-gain init saturates to black within a few hundred steps
        with torch.no_grad():
            self.to_rgb.weight.mul_(0.1)
            nn.init.zeros_(self.to_rgb.bias)

    def forward(self, style_maps: list[torch.Tensor]) -> torch.Tensor:
        """style_maps[b] has shape (B, C_b, H_b, W_b) at block b's grid."""
        x = self.const.expand(style_maps[0].shape[0], -1, -1, -1)
        for conv, smap in zip(self.convs, style_maps):
            x = F.interpolate(x, scale_factor=2, mode="nearest")
            x = x * smap
            x = F.leaky_relu(conv(x), 0.2)
        return (torch.tanh(self.to_rgb(x)) + 1.0) / 2.0


class ToyStyleNet(nn.Module):
    """mapping -> affine -> flat style; synthesis consumes per-block slices."""

    def __init__(self, cfg: ArchConfig):
        super().__init__()
        self.cfg = cfg
        self.mapping = _Mapping(cfg)
        self.affine = nn.Linear(cfg.w_dim, cfg.style_channels)
        # styles start near 1 so blocks begin roughly unmodulated
        nn.init.ones_(self.affine.bias)
        self.synthesis = _Synthesis(cfg)

    def style_of(self, z: torch.Tensor) -> torch.Tensor:
        return self.affine(self.mapping(z))

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        styles = self.style_of(z)
        maps = []
        for (start, end) in self.cfg.layer_offsets:
            s = styles[:, start:end]
            res = self._block_res(len(maps))
            maps.append(s[:, :, None, None].expand(-1, -1, res, res))
        return self.synthesis(maps)

    def _block_res(self, b: int) -> int:
        return 4 * 2 ** (b + 1)


class StyleGenerator:
    """Numpy-facing inference handle over the torch generator.

    map_latent and synthesize are deterministic and read-only over the
    weights, so one instance can serve many threads.
    """

    def __init__(self, cfg: ArchConfig, module: ToyStyleNet | None = None):
        self.cfg = cfg
        self._net = module
        if self._net is not None:
            self._net.eval()

    @classmethod
    def fresh(cls, cfg: ArchConfig, seed: int = 0) -> "StyleGenerator":
        torch.manual_seed(seed)
        return cls(cfg, ToyStyleNet(cfg))

    @classmethod
    def from_checkpoint(cls, path) -> "StyleGenerator":
        kind, config, tensors = load_checkpoint(path)
        if kind != "stylegen":
            raise GeneratorError(f"{path} is a {kind!r} checkpoint, expected stylegen")
        cfg = ArchConfig.from_dict(config)
        net = ToyStyleNet(cfg)
        net.load_state_dict({k: torch.from_numpy(v) for k, v in tensors.items()})
        return cls(cfg, net)

    def save(self, path) -> None:
        self._require_net()
        tensors = {k: v.detach().numpy() for k, v in self._net.state_dict().items()}
        save_checkpoint(path, "stylegen", self.cfg.to_dict(), tensors)

    @property
    def module(self) -> ToyStyleNet:
        self._require_net()
        return self._net

    def _require_net(self):
        if self._net is None:
            raise GeneratorError("generator weights not initialized")

    def latent(self, seed: int) -> LatentCode:
        return LatentCode.from_seed(seed, self.cfg.z_dim)

    def map_latent(self, z: LatentCode) -> StyleVector:
        self._require_net()
        with torch.no_grad():
            t = torch.from_numpy(np.asarray(z.z, dtype=np.float32)).unsqueeze(0)
            styles = self._net.style_of(t)[0].numpy()
        return StyleVector(values=styles.copy(), layer_offsets=self.cfg.layer_offsets)

    def synthesize(self, style: StyleVector | MaskedStyle) -> np.ndarray:
        if isinstance(style, MaskedStyle):
            maps = self._masked_style_maps(style)
        else:
            maps = self._plain_style_maps(style.values[None, :])
        return self._run(maps)[0]

    def synthesize_batch(self, styles: np.ndarray) -> np.ndarray:
        """(B, C) style values -> (B, H, W, 3) images."""
        return self._run(self._plain_style_maps(styles))

    def _run(self, maps: list[torch.Tensor]) -> np.ndarray:
        self._require_net()
        with torch.no_grad():
            img = self._net.synthesis(maps)
        return img.permute(0, 2, 3, 1).numpy()

    def _plain_style_maps(self, styles: np.ndarray) -> list[torch.Tensor]:
        self._require_net()
        t = torch.from_numpy(np.ascontiguousarray(styles, dtype=np.float32))
        if t.shape[1] != self.cfg.style_channels:
            raise GeneratorError(
                f"style length {t.shape[1]} does not match architecture "
                f"({self.cfg.style_channels})"
            )
        maps = []
        for b, (start, end) in enumerate(self.cfg.layer_offsets):
            res = self._net._block_res(b)
            maps.append(t[:, start:end, None, None].expand(-1, -1, res, res))
        return maps

    def _masked_style_maps(self, ms: MaskedStyle) -> list[torch.Tensor]:
        self._require_net()
        if ms.mask.shape != (self.cfg.image_size, self.cfg.image_size):
            raise GeneratorError("mask must be at image resolution")
        base = torch.from_numpy(np.asarray(ms.base.values, dtype=np.float32))
        over = torch.from_numpy(np.asarray(ms.override.values, dtype=np.float32))
        if len(base) != self.cfg.style_channels or len(over) != self.cfg.style_channels:
            raise GeneratorError("style length does not match architecture")
        mask = torch.from_numpy(np.asarray(ms.mask, dtype=np.float32))[None, None]
        maps = []
        for b, (start, end) in enumerate(self.cfg.layer_offsets):
            res = self._net._block_res(b)
            factor = self.cfg.image_size // res
            m = mask if factor == 1 else F.avg_pool2d(mask, factor)
            s0 = base[start:end][None, :, None, None]
            sm = over[start:end][None, :, None, None]
            # override where mask=1, base where mask=0; exact at both ends
            maps.append(sm * m + s0 * (1.0 - m))
        return maps
