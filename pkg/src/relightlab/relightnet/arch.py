"""Conditional translator and its patch discriminator.

The translator is a 2-down / 2-up encoder-decoder around a bottleneck of
modulated residual blocks. Each block scales its input features per channel
by 1 + A(m) before the convolutional mapping:

    out = r + F(r * (1 + A(m)))

A is a zero-initialized affine map from the modulation vector, so an
untrained block is exactly the plain residual block r + F(r) for every m.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..checkpoint import load_checkpoint, save_checkpoint


class TranslatorError(RuntimeError):
    pass


@dataclass(frozen=True)
class TranslatorConfig:
    blocks: int = 9
    cond_width: int = 1  # modulation scalars: 1 (lamp) or 2 (lamp + window)
    masked: bool = False  # adds a mask input channel
    image_size: int = 64
    ngf: int = 32
    ndf: int = 32
    lam: float = 10.0  # feature-matching weight
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    steps: int = 4000
    batch_size: int = 8
    seed: int = 0
    log_every: int = 10
    m_low: float = 0.5  # advertised modulation range the corpus covered
    m_high: float = 3.0

    def __post_init__(self):
        if self.blocks < 1:
            raise TranslatorError("at least one bottleneck block required")
        if self.lam <= 0:
            raise TranslatorError("loss weight must be positive")
        if self.cond_width not in (1, 2):
            raise TranslatorError("conditioning width must be 1 or 2")

    @property
    def in_channels(self) -> int:
        return 4 if self.masked else 3

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TranslatorConfig":
        return cls(**d)


class ModulatedResBlock(nn.Module):
    def __init__(self, dim: int, cond_width: int):
        super().__init__()
        self.dim = dim
        self.cond_width = cond_width
        self.mapping = nn.Sequential(
            nn.Conv2d(dim, dim, 3, padding=1, padding_mode="reflect"),
            nn.InstanceNorm2d(dim),
            nn.ReLU(inplace=True),
            nn.Conv2d(dim, dim, 3, padding=1, padding_mode="reflect"),
            nn.InstanceNorm2d(dim),
        )
        self.affine = nn.Linear(cond_width, dim)
        # zero A: the block starts as (and stays testable against) r + F(r)
        nn.init.zeros_(self.affine.weight)
        nn.init.zeros_(self.affine.bias)

    def forward(self, r: torch.Tensor, m: torch.Tensor) -> torch.Tensor:
        if r.shape[1] != self.dim:
            raise TranslatorError(
                f"block expects {self.dim} channels, got {r.shape[1]}"
            )
        if m.shape != (r.shape[0], self.cond_width):
            raise TranslatorError(
                f"modulation shape {tuple(m.shape)} does not match "
                f"(batch, {self.cond_width})"
            )
        scale = 1.0 + self.affine(m)[:, :, None, None]
        return r + self.mapping(r * scale)


class Translator(nn.Module):
    def __init__(self, cfg: TranslatorConfig):
        super().__init__()
        self.cfg = cfg
        ngf = cfg.ngf
        self.encode = nn.Sequential(
            nn.Conv2d(cfg.in_channels, ngf, 7, padding=3, padding_mode="reflect"),
            nn.InstanceNorm2d(ngf),
            nn.ReLU(inplace=True),
            nn.Conv2d(ngf, ngf * 2, 3, stride=2, padding=1),
            nn.InstanceNorm2d(ngf * 2),
            nn.ReLU(inplace=True),
            nn.Conv2d(ngf * 2, ngf * 4, 3, stride=2, padding=1),
            nn.InstanceNorm2d(ngf * 4),
            nn.ReLU(inplace=True),
        )
        self.blocks = nn.ModuleList(
            ModulatedResBlock(ngf * 4, cfg.cond_width) for _ in range(cfg.blocks)
        )
        self.decode = nn.Sequential(
            nn.ConvTranspose2d(ngf * 4, ngf * 2, 3, stride=2, padding=1,
                               output_padding=1),
            nn.InstanceNorm2d(ngf * 2),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(ngf * 2, ngf, 3, stride=2, padding=1,
                               output_padding=1),
            nn.InstanceNorm2d(ngf),
            nn.ReLU(inplace=True),
        )
        self.to_rgb = nn.Conv2d(ngf, 3, 7, padding=3, padding_mode="reflect")
        # start at a flat 0.5 image so shape bugs can't hide behind noise
        nn.init.zeros_(self.to_rgb.weight)
        nn.init.zeros_(self.to_rgb.bias)

    def forward(self, x: torch.Tensor, m: torch.Tensor) -> torch.Tensor:
        if x.shape[2] % 4 or x.shape[3] % 4:
            raise TranslatorError(
                f"spatial size {tuple(x.shape[2:])} not divisible by 4"
            )
        h = self.encode(x)
        for block in self.blocks:
            h = block(h, m)
        h = self.decode(h)
        return (torch.tanh(self.to_rgb(h)) + 1.0) / 2.0


class PatchDiscriminator(nn.Module):
    """4 strided/dilated conv layers over (condition, candidate) stacks.

    features() exposes the per-layer activations for feature matching;
    forward() returns patch logits.
    """

    def __init__(self, ndf: int = 32):
        super().__init__()
        self.layers = nn.ModuleList([
            nn.Sequential(nn.Conv2d(6, ndf, 4, stride=2, padding=1),
                          nn.LeakyReLU(0.2, inplace=True)),
            nn.Sequential(nn.Conv2d(ndf, ndf * 2, 4, stride=2, padding=1),
                          nn.InstanceNorm2d(ndf * 2),
                          nn.LeakyReLU(0.2, inplace=True)),
            nn.Sequential(nn.Conv2d(ndf * 2, ndf * 4, 4, stride=2, padding=1),
                          nn.InstanceNorm2d(ndf * 4),
                          nn.LeakyReLU(0.2, inplace=True)),
            nn.Sequential(nn.Conv2d(ndf * 4, ndf * 4, 4, stride=1, padding=1),
                          nn.InstanceNorm2d(ndf * 4),
                          nn.LeakyReLU(0.2, inplace=True)),
        ])
        self.head = nn.Conv2d(ndf * 4, 1, 4, stride=1, padding=1)

    def features(self, cond: torch.Tensor, img: torch.Tensor) -> list[torch.Tensor]:
        h = torch.cat([cond, img], dim=1)
        feats = []
        for layer in self.layers:
            h = layer(h)
            feats.append(h)
        return feats

    def forward(self, cond: torch.Tensor, img: torch.Tensor) -> torch.Tensor:
        return self.head(self.features(cond, img)[-1])


class RelightModel:
    """Numpy-facing inference handle; read-only over frozen weights."""

    def __init__(self, cfg: TranslatorConfig, module: Translator | None = None):
        self.cfg = cfg
        self._net = module
        if self._net is not None:
            self._net.eval()

    @classmethod
    def fresh(cls, cfg: TranslatorConfig, seed: int = 0) -> "RelightModel":
        torch.manual_seed(seed)
        return cls(cfg, Translator(cfg))

    @classmethod
    def from_checkpoint(cls, path) -> "RelightModel":
        kind, config, tensors = load_checkpoint(path)
        if kind != "relight":
            raise TranslatorError(f"{path} is a {kind!r} checkpoint, expected relight")
        cfg = TranslatorConfig.from_dict(config)
        net = Translator(cfg)
        net.load_state_dict({k: torch.from_numpy(v) for k, v in tensors.items()})
        return cls(cfg, net)

    def save(self, path) -> None:
        self._require_net()
        tensors = {k: v.detach().numpy() for k, v in self._net.state_dict().items()}
        save_checkpoint(path, "relight", self.cfg.to_dict(), tensors)

    @property
    def module(self) -> Translator:
        self._require_net()
        return self._net

    def _require_net(self):
        if self._net is None:
            raise TranslatorError("translator weights not initialized")

    def descriptor(self) -> dict:
        return {
            "conditioning_width": self.cfg.cond_width,
            "masked": self.cfg.masked,
            "image_size": self.cfg.image_size,
            "m_range": [self.cfg.m_low, self.cfg.m_high],
        }

    def translate(self, image: np.ndarray, m, mask: np.ndarray | None = None
                  ) -> np.ndarray:
        """Relight one (H, W, 3) image in [0, 1] to modulation m."""
        self._require_net()
        m_arr = np.atleast_1d(np.asarray(m, dtype=np.float32))
        if m_arr.shape != (self.cfg.cond_width,):
            raise TranslatorError(
                f"modulation width {m_arr.shape} does not match model "
                f"conditioning width {self.cfg.cond_width}"
            )
        if not np.all(np.isfinite(m_arr)):
            raise TranslatorError("modulation values must be finite")
        img = np.asarray(image, dtype=np.float32)
        if img.ndim != 3 or img.shape[2] != 3:
            raise TranslatorError("expected an (H, W, 3) image")
        planes = [torch.from_numpy(img).permute(2, 0, 1)]
        if self.cfg.masked:
            if mask is None:
                raise TranslatorError("this model requires a mask input")
            if mask.shape != img.shape[:2]:
                raise TranslatorError("mask dimensions do not match the image")
            planes.append(
                torch.from_numpy(np.asarray(mask, dtype=np.float32))[None]
            )
        elif mask is not None:
            raise TranslatorError("this model takes no mask input")
        x = torch.cat(planes, dim=0).unsqueeze(0)
        with torch.no_grad():
            out = self._net(x, torch.from_numpy(m_arr).unsqueeze(0))
        return out[0].permute(1, 2, 0).numpy()
