"""Procedural scene world with analytically known lighting.

Scenes are flat 2D compositions: an albedo map of rectangular patches lit by
an ambient term plus additive Gaussian falloffs, one per light source. The
renderer is a pure function of (scene, intensity vector), which makes it
usable in three roles at once: training-image source for the toy generator,
ground-truth relighting oracle, and synthetic benchmark source.

Two kinds of light exist: "lamp" (small warm fixture, may sit anywhere in the
lower part of the frame) and "window" (single, larger, cool, upper part of
the frame). Light ids are consecutive from 0 ordered by increasing center x.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LAMP = "lamp"
WINDOW = "window"

# Fraction of nominal intensity added flat over the fixture body so the
# fixture itself visibly changes state when switched.
FIXTURE_GLOW = 0.5

# Soft selection masks extend this factor beyond the fixture bbox size.
MASK_RADIUS_FACTOR = 1.5


class SceneError(ValueError):
    pass


@dataclass(frozen=True)
class LightSource:
    """One light: Gaussian falloff of scale ``radius`` centered at ``center``.

    ``center`` is (x, y) in pixel coordinates, ``intensity`` is the nominal
    "on" level used by combination enumeration, ``color`` the RGB tint.
    """

    id: int
    kind: str
    center: tuple[float, float]
    radius: float
    intensity: float
    color: tuple[float, float, float]

    def __post_init__(self):
        if self.kind not in (LAMP, WINDOW):
            raise SceneError(f"unknown light kind {self.kind!r}")
        if self.intensity < 0:
            raise SceneError("light intensity must be >= 0")
        if self.radius <= 0:
            raise SceneError("light radius must be > 0")


@dataclass(frozen=True)
class SceneSpec:
    """Parametric scene description; rendering is a pure function of it."""

    seed: int
    image_size: int
    albedo_map: np.ndarray  # (H, W, 3) in [0, 1]
    ambient: float
    lights: list[LightSource]
    lamp_body_regions: list[np.ndarray] = field(default_factory=list)  # (H, W) bool

    def __post_init__(self):
        h, w, _ = self.albedo_map.shape
        if h != self.image_size or w != self.image_size:
            raise SceneError("albedo map does not match image_size")
        if len(self.lamp_body_regions) != len(self.lights):
            raise SceneError("one body region required per light")
        for light, body in zip(self.lights, self.lamp_body_regions):
            x, y = light.center
            if not (0 <= x < w and 0 <= y < h):
                raise SceneError(f"light {light.id} center outside image bounds")
            if not body.any():
                raise SceneError(f"light {light.id} has an empty body region")
            if not body[int(round(y)), int(round(x))]:
                raise SceneError(f"light {light.id} body does not contain its center")
        xs = [l.center[0] for l in self.lights]
        ids = [l.id for l in self.lights]
        if ids != sorted(ids) or ids != list(range(len(ids))):
            raise SceneError("light ids must be consecutive from 0")
        if xs != sorted(xs):
            raise SceneError("light ids must follow increasing center x")

    @property
    def n_lights(self) -> int:
        return len(self.lights)

    def nominal_intensities(self) -> np.ndarray:
        return np.array([l.intensity for l in self.lights], dtype=np.float64)


@dataclass(frozen=True)
class RenderedImage:
    """Rendered pixels plus the provenance that produced them."""

    pixels: np.ndarray  # (H, W, 3) float32 in [0, 1]
    scene: SceneSpec
    intensities: np.ndarray


def _falloff(scene: SceneSpec, light: LightSource) -> np.ndarray:
    h = w = scene.image_size
    ys, xs = np.mgrid[0:h, 0:w]
    cx, cy = light.center
    d2 = (xs - cx) ** 2 + (ys - cy) ** 2
    return np.exp(-d2 / (2.0 * light.radius**2))


def render(scene: SceneSpec, intensities) -> RenderedImage:
    """Render the scene with the given per-light intensities.

    pixels = clamp(albedo * (ambient + sum_i I_i * falloff_i * color_i)
                   + fixture_glow, 0, 1)

    with fixture_glow adding a flat FIXTURE_GLOW * I_i over light i's body.
    """
    intensities = np.asarray(intensities, dtype=np.float64)
    if intensities.shape != (scene.n_lights,):
        raise SceneError(
            f"expected {scene.n_lights} intensities, got shape {intensities.shape}"
        )
    if (intensities < 0).any():
        raise SceneError("intensities must be >= 0")

    shading = np.full(
        (scene.image_size, scene.image_size, 3), scene.ambient, dtype=np.float64
    )
    glow = np.zeros_like(shading)
    for light, body, inten in zip(scene.lights, scene.lamp_body_regions, intensities):
        if inten == 0.0:
            continue
        fall = _falloff(scene, light)
        shading += inten * fall[..., None] * np.asarray(light.color)
        glow += (FIXTURE_GLOW * inten) * body[..., None]

    pixels = np.clip(scene.albedo_map * shading + glow, 0.0, 1.0).astype(np.float32)
    return RenderedImage(pixels=pixels, scene=scene, intensities=intensities)


def enumerate_light_combinations(scene: SceneSpec) -> list[np.ndarray]:
    """All 2^n - 1 non-empty on/off subsets, ordered by subset bitmask.

    Bit i of the mask corresponds to light id i; an "on" light runs at its
    nominal intensity.
    """
    n = scene.n_lights
    if n == 0:
        raise SceneError("scene has no lights")
    nominal = scene.nominal_intensities()
    combos = []
    for mask in range(1, 2**n):
        vec = np.array(
            [nominal[i] if (mask >> i) & 1 else 0.0 for i in range(n)],
            dtype=np.float64,
        )
        combos.append(vec)
    return combos


def fading_mask_from_bbox(
    shape: tuple[int, int], bbox: tuple[int, int, int, int]
) -> np.ndarray:
    """Soft selection mask from a region bounding box.

    Centered at the bbox centroid with radius MASK_RADIUS_FACTOR times the
    larger bbox side; fades linearly with distance: clamp(1 - d/R, 0, 1).
    bbox is (y0, y1, x0, x1) inclusive-exclusive.
    """
    y0, y1, x0, x1 = bbox
    if y1 <= y0 or x1 <= x0:
        raise SceneError("empty bounding box")
    # snap to a pixel so the mask attains exactly 1.0 at its center
    cy = round((y0 + y1 - 1) / 2.0)
    cx = round((x0 + x1 - 1) / 2.0)
    radius = MASK_RADIUS_FACTOR * max(y1 - y0, x1 - x0)
    ys, xs = np.mgrid[0 : shape[0], 0 : shape[1]]
    d = np.sqrt((ys - cy) ** 2 + (xs - cx) ** 2)
    return np.clip(1.0 - d / radius, 0.0, 1.0).astype(np.float32)


def region_bbox(region: np.ndarray) -> tuple[int, int, int, int]:
    ys, xs = np.nonzero(region)
    if len(ys) == 0:
        raise SceneError("empty region")
    return int(ys.min()), int(ys.max()) + 1, int(xs.min()), int(xs.max()) + 1


def oracle_lamp_mask(scene: SceneSpec, light_id: int) -> np.ndarray:
    """Soft mask over light ``light_id`` built from its known fixture geometry."""
    if not (0 <= light_id < scene.n_lights):
        raise SceneError(f"invalid light id {light_id}")
    body = scene.lamp_body_regions[light_id]
    return fading_mask_from_bbox(body.shape, region_bbox(body))


def lighting_region(scene: SceneSpec, threshold: float = 0.2) -> np.ndarray:
    """Boolean mask of pixels meaningfully reached by any light's falloff.

    Used when comparing edits inside vs outside lit areas.
    """
    h = w = scene.image_size
    reach = np.zeros((h, w), dtype=np.float64)
    for light in scene.lights:
        reach = np.maximum(reach, _falloff(scene, light))
    return reach >= threshold


def luminance(img: np.ndarray) -> np.ndarray:
    """Mean over RGB; images here are synthetic so no perceptual weighting."""
    return img.mean(axis=-1)


# place categories for the synthetic benchmark manifest, mirroring the kind of
# labels an indoor-scene collection would carry
CATEGORIES = (
    "bathroom",
    "bedroom",
    "corridor",
    "dining_room",
    "entrance",
    "kitchen",
    "living_room",
    "storage_room",
    "studio",
)


def scene_category(scene: SceneSpec) -> str:
    return CATEGORIES[scene.seed % len(CATEGORIES)]


def _disk(h: int, w: int, cx: float, cy: float, r: float) -> np.ndarray:
    ys, xs = np.mgrid[0:h, 0:w]
    return (xs - cx) ** 2 + (ys - cy) ** 2 <= r**2


def _rect(h: int, w: int, x0: int, y0: int, x1: int, y1: int) -> np.ndarray:
    m = np.zeros((h, w), dtype=bool)
    m[max(y0, 0) : min(y1, h), max(x0, 0) : min(x1, w)] = True
    return m


def random_scene(
    seed: int,
    image_size: int = 64,
    max_lights: int = 4,
    window_prob: float = 0.5,
) -> SceneSpec:
    """Draw a scene from the seed: patchwork albedo, 1..max_lights lights.

    At most one window; windows live in the upper part of the frame with a
    cool tint, lamps in the lower part with a warm tint. All geometry scales
    with image_size so the same seed yields the same scene at 64 or 256.
    """
    rng = np.random.default_rng(seed)
    s = image_size
    unit = s / 64.0  # geometry reference scale

    base = rng.uniform(0.25, 0.55, size=3)
    albedo = np.tile(base, (s, s, 1))
    for _ in range(rng.integers(2, 6)):
        x0, y0 = rng.integers(0, s, size=2)
        pw = int(rng.integers(int(8 * unit), int(28 * unit) + 1))
        ph = int(rng.integers(int(8 * unit), int(28 * unit) + 1))
        color = rng.uniform(0.15, 0.9, size=3)
        albedo[y0 : min(y0 + ph, s), x0 : min(x0 + pw, s)] = color
    albedo = albedo.astype(np.float32)

    ambient = float(rng.uniform(0.1, 0.3))

    n_lights = int(rng.integers(1, max_lights + 1))
    has_window = bool(rng.random() < window_prob)

    raw = []
    margin = 6 * unit
    if has_window:
        cx = float(rng.uniform(margin, s - margin))
        cy = float(rng.uniform(4 * unit, 0.35 * s))
        raw.append(
            dict(
                kind=WINDOW,
                center=(cx, cy),
                radius=float(rng.uniform(10 * unit, 16 * unit)),
                intensity=float(rng.uniform(0.8, 1.4)),
                color=(
                    float(rng.uniform(0.65, 0.8)),
                    float(rng.uniform(0.78, 0.92)),
                    1.0,
                ),
            )
        )
    n_lamps = max(n_lights - len(raw), 1)
    for _ in range(n_lamps):
        cx = float(rng.uniform(margin, s - margin))
        cy = float(rng.uniform(0.45 * s, s - margin))
        raw.append(
            dict(
                kind=LAMP,
                center=(cx, cy),
                radius=float(rng.uniform(5 * unit, 10 * unit)),
                intensity=float(rng.uniform(0.8, 1.4)),
                color=(
                    1.0,
                    float(rng.uniform(0.72, 0.9)),
                    float(rng.uniform(0.45, 0.7)),
                ),
            )
        )

    raw.sort(key=lambda d: d["center"][0])
    lights, bodies = [], []
    for i, d in enumerate(raw):
        lights.append(LightSource(id=i, **d))
        cx, cy = d["center"]
        if d["kind"] == WINDOW:
            half_w = int(round(5 * unit))
            half_h = int(round(4 * unit))
            body = _rect(
                s,
                s,
                int(round(cx)) - half_w,
                int(round(cy)) - half_h,
                int(round(cx)) + half_w + 1,
                int(round(cy)) + half_h + 1,
            )
        else:
            body = _disk(s, s, cx, cy, 2.5 * unit)
        # at very small sizes a thin body can miss every pixel center
        body[int(round(cy)), int(round(cx))] = True
        bodies.append(body)

    return SceneSpec(
        seed=seed,
        image_size=s,
        albedo_map=albedo,
        ambient=ambient,
        lights=lights,
        lamp_body_regions=bodies,
    )


def random_intensity_state(scene: SceneSpec, rng: np.random.Generator) -> np.ndarray:
    """Random on/off state with jittered levels, for generator training images."""
    nominal = scene.nominal_intensities()
    on = rng.random(scene.n_lights) < 0.7
    jitter = rng.uniform(0.3, 1.3, size=scene.n_lights)
    return np.where(on, nominal * jitter, 0.0)


def training_image_stream(seed: int, image_size: int = 64, max_lights: int = 4):
    """Infinite deterministic stream of rendered training images (H, W, 3)."""
    rng = np.random.default_rng(seed)
    scene_seed_base = seed * 1_000_003
    idx = 0
    while True:
        scene = random_scene(scene_seed_base + idx, image_size, max_lights=max_lights)
        yield render(scene, random_intensity_state(scene, rng)).pixels
        idx += 1
