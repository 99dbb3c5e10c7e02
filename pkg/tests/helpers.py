"""Shared test constructions.

PlantedGenerator is the analytic stand-in for the style generator: the image
is a deterministic base plus per-channel contributions from a small set of
planted maps. Zeroing any unplanted channel leaves the image untouched, so
channel attribution has an exact ground truth.
"""

from __future__ import annotations

import numpy as np

from relightlab.stylegen import LatentCode, StyleVector


class PlantedGenerator:
    """image(style) = base(z) + sum_c style[c] * map_c, no clamping.

    ``maps`` assigns a (H, W, 3) contribution map to each planted channel.
    Style values are standard normal, derived from the latent seed alone.
    """

    def __init__(self, n_channels: int, image_size: int, maps: dict[int, np.ndarray]):
        self.n_channels = n_channels
        self.image_size = image_size
        self.maps = {c: np.asarray(m, dtype=np.float64) for c, m in maps.items()}
        self._base_cache: dict[int, np.ndarray] = {}
        # mimic StyleGenerator's layer partition with a single styled layer
        self._offsets = ((0, n_channels),)

    def latent(self, seed: int) -> LatentCode:
        return LatentCode.from_seed(seed, 8)

    def map_latent(self, z: LatentCode) -> StyleVector:
        rng = np.random.default_rng(z.seed)
        values = rng.standard_normal(self.n_channels).astype(np.float32)
        return StyleVector(values=values, layer_offsets=self._offsets)

    def _base(self, seed: int) -> np.ndarray:
        if seed not in self._base_cache:
            rng = np.random.default_rng(seed + 77)
            self._base_cache[seed] = rng.uniform(
                0.2, 0.8, size=(self.image_size, self.image_size, 3)
            )
        return self._base_cache[seed]

    def synthesize(self, style: StyleVector, seed: int | None = None) -> np.ndarray:
        return self.synthesize_batch(style.values[None, :], seed)[0]

    def synthesize_batch(self, styles: np.ndarray, seed: int | None = None) -> np.ndarray:
        base = self._base(seed if seed is not None else 0)
        out = np.tile(base, (styles.shape[0], 1, 1, 1))
        for c, m in self.maps.items():
            out += styles[:, c, None, None, None] * m[None]
        return out


class SeedBoundPlanted:
    """PlantedGenerator bound to one base seed so the sweep sees a fixed x."""

    def __init__(self, inner: PlantedGenerator, seed: int):
        self.inner = inner
        self.seed = seed

    def latent(self, seed: int) -> LatentCode:
        return self.inner.latent(seed)

    def map_latent(self, z: LatentCode) -> StyleVector:
        return self.inner.map_latent(z)

    def synthesize(self, style: StyleVector) -> np.ndarray:
        return self.inner.synthesize(style, self.seed)

    def synthesize_batch(self, styles: np.ndarray) -> np.ndarray:
        return self.inner.synthesize_batch(styles, self.seed)


def random_light_map(rng: np.random.Generator, size: int) -> np.ndarray:
    """Random compact positive blob with hard support, as (H, W, 3)."""
    margin = max(2, size // 8)
    cy, cx = rng.integers(margin, size - margin, size=2)
    r = rng.uniform(size / 16 + 1, size / 6 + 1)
    ys, xs = np.mgrid[0:size, 0:size]
    d = np.sqrt((ys - cy) ** 2 + (xs - cx) ** 2)
    blob = np.clip(1.0 - d / r, 0.0, 1.0)
    tint = rng.uniform(0.5, 1.0, size=3)
    return blob[..., None] * tint


def planted_setup(rng: np.random.Generator, n_channels: int = 512, size: int = 64,
                  n_distractors: int = 2):
    """Random planted configuration: (generator, planted channel, region mask).

    Distractor channels get maps whose support is disjoint from the planted
    light map's support.
    """
    light = random_light_map(rng, size)
    support = light.sum(axis=2) > 0
    channels = rng.choice(n_channels, size=n_distractors + 1, replace=False)
    planted = int(channels[0])
    maps = {planted: light}
    for c in channels[1:]:
        m = random_light_map(rng, size)
        m[support] = 0.0
        maps[int(c)] = m
    gen = PlantedGenerator(n_channels, size, maps)
    return gen, planted, support.astype(np.float32)
