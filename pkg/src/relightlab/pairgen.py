"""Training corpus for the translator, synthesized in pairs.

Each pair comes from one latent: the input is the generator's own image, the
target the same image with the lighting channel(s) overridden to a drawn
modulation value. Half the corpus is stored reversed (bright image as input,
original as target, negated modulation) so the translator also learns to turn
lights off without inventing dark patches. Selective-edit pairs override the
style only under a soft mask and carry that mask with them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict, replace
from pathlib import Path

import numpy as np

from . import imgio
from .channelid import ChannelMap
from .lampworld import fading_mask_from_bbox, region_bbox
from .stylegen import MaskedStyle, StyleGenerator, StyleVector

FORWARD = "forward"
REVERSED = "reversed"

# pixels responding below this fraction of the peak swing are background
RESPONSE_THRESHOLD = 0.2

MANIFEST_NAME = "manifest.tsv"
_HEADER = "# pair manifest v1"
_COLUMNS = "# index\tseed\tdirection\tm\tinput\ttarget\tmask"


class PairGenError(RuntimeError):
    pass


@dataclass(frozen=True)
class ModulationVector:
    """Per-kind modulation values, ordered by the channel map's sorted kinds.

    Positive values brighten, negative dim.
    """

    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) not in (1, 2):
            raise PairGenError("modulation must cover one or two light kinds")
        if not all(np.isfinite(v) for v in self.values):
            raise PairGenError("modulation values must be finite")

    @property
    def width(self) -> int:
        return len(self.values)

    def negated(self) -> "ModulationVector":
        return ModulationVector(tuple(-v for v in self.values))


@dataclass(frozen=True)
class TrainingPair:
    input_image: np.ndarray  # (H, W, 3) float32 in [0, 1]
    target_image: np.ndarray
    m: ModulationVector
    seed: int
    direction: str = FORWARD
    mask: np.ndarray | None = None  # (H, W) float32, selective pairs only

    def __post_init__(self):
        if self.direction not in (FORWARD, REVERSED):
            raise PairGenError(f"unknown pair direction {self.direction!r}")


def _overridden_values(style: StyleVector, channel_map: ChannelMap,
                       m: ModulationVector) -> np.ndarray:
    values = style.values.copy()
    for kind, mv in zip(channel_map.kinds(), m.values):
        entry = channel_map.entries[kind]
        values[entry.channel] = entry.override_value(mv)
    return values


def _draw_m(channel_map: ChannelMap, seed: int,
            m_range: tuple[float, float]) -> ModulationVector:
    # separate stream from the latent's so z and m stay independent
    rng = np.random.default_rng([seed, 17])
    lo, hi = m_range
    return ModulationVector(
        tuple(float(rng.uniform(lo, hi)) for _ in channel_map.kinds())
    )


def generate_pair(
    gen: StyleGenerator,
    channel_map: ChannelMap,
    seed: int,
    m: ModulationVector | None = None,
    m_range: tuple[float, float] = (0.5, 3.0),
) -> TrainingPair:
    """Forward pair: the latent's own image -> same image relit to m."""
    if channel_map.width == 0:
        raise PairGenError("channel map is empty")
    if m is None:
        m = _draw_m(channel_map, seed, m_range)
    if m.width != channel_map.width:
        raise PairGenError(
            f"modulation width {m.width} != channel map width {channel_map.width}"
        )
    style = gen.map_latent(gen.latent(seed))
    x = gen.synthesize(style)
    x_mod = gen.synthesize(
        StyleVector(_overridden_values(style, channel_map, m), style.layer_offsets)
    )
    return TrainingPair(input_image=x, target_image=x_mod, m=m, seed=seed)


def reverse_pair(p: TrainingPair) -> TrainingPair:
    """Bright image becomes the input, original the target, m flips sign."""
    if p.direction != FORWARD:
        raise PairGenError("only forward pairs can be reversed")
    return replace(
        p,
        input_image=p.target_image,
        target_image=p.input_image,
        m=p.m.negated(),
        direction=REVERSED,
    )


def response_mask(gen: StyleGenerator, style: StyleVector,
                  channel_map: ChannelMap, probe: float = 3.0) -> np.ndarray:
    """Soft mask over the pixels the lighting channels actually move.

    Swings every mapped channel from -probe to +probe (in brightening
    orientation), keeps pixels above RESPONSE_THRESHOLD of the peak response,
    and fades out from that region's bounding box.
    """
    up = ModulationVector(tuple(probe for _ in channel_map.kinds()))
    hi = gen.synthesize(
        StyleVector(_overridden_values(style, channel_map, up), style.layer_offsets)
    )
    lo = gen.synthesize(
        StyleVector(
            _overridden_values(style, channel_map, up.negated()),
            style.layer_offsets,
        )
    )
    response = np.abs(hi.astype(np.float64) - lo.astype(np.float64)).sum(axis=2)
    peak = float(response.max())
    if peak <= 1e-6:
        raise PairGenError("lighting channels produce no detectable response")
    hot = response >= RESPONSE_THRESHOLD * peak
    return fading_mask_from_bbox(hot.shape, region_bbox(hot))


def generate_masked_pair(
    gen: StyleGenerator,
    channel_map: ChannelMap,
    seed: int,
    m: ModulationVector | None = None,
    m_range: tuple[float, float] = (0.5, 3.0),
    mask: np.ndarray | None = None,
) -> TrainingPair:
    """Selective-edit pair: the override only applies under a soft mask.

    The mask defaults to the generator's own lighting response region; pixels
    outside it keep the original style, so the target differs from the input
    only locally.
    """
    if m is None:
        m = _draw_m(channel_map, seed, m_range)
    if m.width != channel_map.width:
        raise PairGenError(
            f"modulation width {m.width} != channel map width {channel_map.width}"
        )
    style = gen.map_latent(gen.latent(seed))
    if mask is None:
        mask = response_mask(gen, style, channel_map)
    x = gen.synthesize(style)
    over = StyleVector(
        _overridden_values(style, channel_map, m), style.layer_offsets
    )
    x_mod = gen.synthesize(MaskedStyle(base=style, override=over, mask=mask))
    return TrainingPair(
        input_image=x,
        target_image=x_mod,
        m=m,
        seed=seed,
        mask=np.asarray(mask, dtype=np.float32),
    )


@dataclass(frozen=True)
class PairGenConfig:
    count: int = 5000
    seed_base: int = 0
    reversal_ratio: float = 0.5
    masked_fraction: float = 0.0
    m_low: float = 0.5
    m_high: float = 3.0

    def __post_init__(self):
        if self.count < 0:
            raise PairGenError("count must be >= 0")
        if not (0.0 <= self.reversal_ratio <= 1.0):
            raise PairGenError("reversal_ratio must be in [0, 1]")
        if not (0.0 <= self.masked_fraction <= 1.0):
            raise PairGenError("masked_fraction must be in [0, 1]")
        if not (0.0 < self.m_low <= self.m_high):
            raise PairGenError("m range must be positive and ordered")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PairGenConfig":
        return cls(**d)


def _quota_hit(i: int, ratio: float) -> bool:
    # exact proportioning: selects floor(n * ratio) of the first n indices
    return int((i + 1) * ratio) - int(i * ratio) == 1


@dataclass(frozen=True)
class PairRecord:
    index: int
    seed: int
    direction: str
    m: tuple[float, ...]
    input_path: str
    target_path: str
    mask_path: str | None


def build_dataset(
    gen: StyleGenerator,
    channel_map: ChannelMap,
    config: PairGenConfig,
    out_dir,
    log_sink=None,
) -> list[PairRecord]:
    """Write ``config.count`` pairs under ``out_dir`` plus a manifest.

    Seeds advance from seed_base; a seed whose masked pair has no usable
    light region is logged and skipped, so the corpus stays at full count.
    """
    out = Path(out_dir)
    (out / "pairs").mkdir(parents=True, exist_ok=True)
    m_range = (config.m_low, config.m_high)

    records: list[PairRecord] = []
    seed = config.seed_base
    attempts = 0
    try:
        while len(records) < config.count:
            i = len(records)
            attempts += 1
            if attempts > max(4 * config.count, 64):
                raise PairGenError(
                    f"too many skipped seeds ({attempts - i} skips for {i} pairs)"
                )
            masked = _quota_hit(i, config.masked_fraction)
            try:
                if masked:
                    pair = generate_masked_pair(
                        gen, channel_map, seed, m_range=m_range
                    )
                else:
                    pair = generate_pair(gen, channel_map, seed, m_range=m_range)
            except PairGenError as e:
                if log_sink is not None:
                    log_sink(f"skip seed {seed}: {e}")
                seed += 1
                continue
            if _quota_hit(i, config.reversal_ratio):
                pair = reverse_pair(pair)

            stem = f"pairs/pair{i:06d}"
            imgio.save_png(out / f"{stem}_in.png", pair.input_image)
            imgio.save_png(out / f"{stem}_tg.png", pair.target_image)
            mask_path = None
            if pair.mask is not None:
                mask_path = f"{stem}_mk.png"
                imgio.save_png(out / mask_path, pair.mask)
            records.append(
                PairRecord(
                    index=i,
                    seed=pair.seed,
                    direction=pair.direction,
                    m=pair.m.values,
                    input_path=f"{stem}_in.png",
                    target_path=f"{stem}_tg.png",
                    mask_path=mask_path,
                )
            )
            seed += 1
    except OSError as e:
        raise PairGenError(
            f"failed after writing {len(records)} pairs: {e}"
        ) from e

    write_pair_manifest(out / MANIFEST_NAME, records)
    (out / "config.json").write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    return records


def write_pair_manifest(path, records: list[PairRecord]) -> None:
    lines = [_HEADER, _COLUMNS]
    for r in records:
        m_csv = ",".join(repr(v) for v in r.m)
        mask = r.mask_path if r.mask_path is not None else "-"
        lines.append(
            f"{r.index}\t{r.seed}\t{r.direction}\t{m_csv}\t"
            f"{r.input_path}\t{r.target_path}\t{mask}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def read_pair_manifest(path) -> list[PairRecord]:
    records = []
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        idx, seed, direction, m_csv, inp, tgt, mask = line.split("\t")
        records.append(
            PairRecord(
                index=int(idx),
                seed=int(seed),
                direction=direction,
                m=tuple(float(v) for v in m_csv.split(",")),
                input_path=inp,
                target_path=tgt,
                mask_path=None if mask == "-" else mask,
            )
        )
    return records


def load_pair(record: PairRecord, root) -> TrainingPair:
    root = Path(root)
    mask = None
    if record.mask_path is not None:
        mask = imgio.load_png(root / record.mask_path)
        if mask.ndim == 3:
            mask = mask[:, :, 0]
    return TrainingPair(
        input_image=imgio.load_png(root / record.input_path),
        target_image=imgio.load_png(root / record.target_path),
        m=ModulationVector(record.m),
        seed=record.seed,
        direction=record.direction,
        mask=mask,
    )
