"""Discovery of the style channel that controls lighting.

Given one annotated image (a soft target region over the lit area), every
style channel is knocked out to zero in turn and ranked by how much the
regenerated image changes inside the region. The single top channel is the
lighting channel. The same sweep run on separately annotated lamp and window
regions yields one channel per light kind.

The sweep also measures the channel's orientation: whether larger channel
values brighten or darken the region. Downstream modulation follows the
convention that positive values brighten, so the orientation sign is stored
alongside the channel index and applied when overriding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .lampworld import luminance

KNOCKOUT_VALUE = 0.0  # channels are probed by zeroing, no other values swept


class ChannelIdError(RuntimeError):
    pass


class NoControllingChannelError(ChannelIdError):
    pass


class DisentanglementError(ChannelIdError):
    pass


@dataclass(frozen=True)
class TargetRegion:
    """Soft annotation mask over the lit area of one generated image.

    A useful region has positive total weight; an all-zero region makes the
    sweep degenerate and is rejected at selection time.
    """

    mask: np.ndarray  # (H, W) float in [0, 1]
    source_image_seed: int


@dataclass(frozen=True)
class ChannelRanking:
    """All swept channels with their knockout scores, best first."""

    entries: tuple[tuple[int, float], ...]  # (channel, score), score non-increasing
    score_definition: str
    checkpoint_id: str
    created_at: str = ""

    def __post_init__(self):
        scores = [s for _, s in self.entries]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ChannelIdError("ranking scores must be non-increasing")

    def top(self, k: int) -> list[tuple[int, float]]:
        return list(self.entries[:k])


def rank_channels(
    gen,
    z,
    region: TargetRegion,
    channels=None,
    batch_size: int = 64,
    checkpoint_id: str = "",
) -> ChannelRanking:
    """Exhaustive knockout sweep scored inside the target region.

    score(c) = sum over pixels and RGB of |original - knockout(c)| * mask.
    ``gen`` must expose map_latent / synthesize_batch; ``channels`` defaults
    to every style channel. Ties sort by lower channel index.
    """
    style = gen.map_latent(z)
    base = gen.synthesize_batch(style.values[None, :])[0].astype(np.float64)
    if region.mask.shape != base.shape[:2]:
        raise ChannelIdError(
            f"region shape {region.mask.shape} does not match generator "
            f"output {base.shape[:2]}"
        )
    weights = np.asarray(region.mask, dtype=np.float64)

    if channels is None:
        channels = range(len(style.values))
    channels = list(channels)

    scores = np.empty(len(channels), dtype=np.float64)
    for i0 in range(0, len(channels), batch_size):
        chunk = channels[i0 : i0 + batch_size]
        styles = np.tile(style.values, (len(chunk), 1))
        for row, c in enumerate(chunk):
            styles[row, c] = KNOCKOUT_VALUE
        imgs = gen.synthesize_batch(styles).astype(np.float64)
        diff = np.abs(imgs - base[None]).sum(axis=3)
        scores[i0 : i0 + len(chunk)] = (diff * weights[None]).sum(axis=(1, 2))

    order = sorted(range(len(channels)), key=lambda i: (-scores[i], channels[i]))
    entries = tuple((int(channels[i]), float(scores[i])) for i in order)
    return ChannelRanking(
        entries=entries,
        score_definition="sum |original - knockout| * region, over pixels and RGB",
        checkpoint_id=checkpoint_id,
        created_at=datetime.now(timezone.utc).isoformat(),
    )


def select_lighting_channel(ranking: ChannelRanking) -> int:
    """Single highest-ranking channel; degenerate all-zero sweeps are errors."""
    if not ranking.entries:
        raise NoControllingChannelError("empty ranking")
    channel, score = ranking.entries[0]
    if score <= 0.0:
        raise NoControllingChannelError(
            "no channel influences the target region (all knockout scores 0)"
        )
    return channel


def measure_orientation(gen, z, channel: int, region: TargetRegion,
                        probe: float = 3.0) -> int:
    """+1 if raising the channel brightens the region, else -1."""
    style = gen.map_latent(z)
    hi = style.values.copy()
    hi[channel] = probe
    lo = style.values.copy()
    lo[channel] = -probe
    imgs = gen.synthesize_batch(np.stack([hi, lo]))
    w = np.asarray(region.mask, dtype=np.float64)
    total = w.sum()
    if total <= 0:
        raise ChannelIdError("cannot orient against an empty region")
    bright_hi = float((luminance(imgs[0]) * w).sum() / total)
    bright_lo = float((luminance(imgs[1]) * w).sum() / total)
    return 1 if bright_hi >= bright_lo else -1


@dataclass(frozen=True)
class ChannelMapEntry:
    channel: int
    orientation: int  # +1: positive override values brighten; -1: inverted

    def override_value(self, m: float) -> float:
        return self.orientation * m


@dataclass(frozen=True)
class ChannelMap:
    """Lighting channel per light kind, with orientation."""

    entries: dict[str, ChannelMapEntry] = field(default_factory=dict)

    def kinds(self) -> list[str]:
        return sorted(self.entries)

    @property
    def width(self) -> int:
        return len(self.entries)

    def save(self, path) -> None:
        data = {
            kind: {"channel": e.channel, "orientation": e.orientation}
            for kind, e in self.entries.items()
        }
        Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "ChannelMap":
        data = json.loads(Path(path).read_text())
        return cls(
            entries={
                kind: ChannelMapEntry(int(v["channel"]), int(v["orientation"]))
                for kind, v in data.items()
            }
        )


def select_multi_channels(
    gen,
    annotated: list[tuple[object, TargetRegion, str]],
    batch_size: int = 64,
    checkpoint_id: str = "",
) -> ChannelMap:
    """One sweep per (latent, region, kind); errors if two kinds collide.

    With one entry this reduces to select_lighting_channel plus orientation.
    """
    entries: dict[str, ChannelMapEntry] = {}
    chosen: dict[int, str] = {}
    for z, region, kind in annotated:
        ranking = rank_channels(
            gen, z, region, batch_size=batch_size, checkpoint_id=checkpoint_id
        )
        channel = select_lighting_channel(ranking)
        if channel in chosen:
            raise DisentanglementError(
                f"channel {channel} won both {chosen[channel]!r} and {kind!r}; "
                "the generator does not separate these light kinds"
            )
        chosen[channel] = kind
        orientation = measure_orientation(gen, z, channel, region)
        entries[kind] = ChannelMapEntry(channel=channel, orientation=orientation)
    return ChannelMap(entries=entries)


def save_ranking(path, ranking: ChannelRanking, top_report: int = 5) -> None:
    """Plain text: header comments, then one "channel<TAB>score" line each.

    The top-5 block is repeated in the header for quick inspection.
    """
    lines = [
        "# channel ranking v1",
        f"# score: {ranking.score_definition}",
        f"# checkpoint: {ranking.checkpoint_id}",
        f"# generated_at: {ranking.created_at}",
    ]
    for c, s in ranking.top(top_report):
        lines.append(f"# top: {c}\t{s:.6f}")
    for c, s in ranking.entries:
        lines.append(f"{c}\t{s:.10g}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_ranking(path) -> ChannelRanking:
    definition = ""
    ckpt = ""
    created = ""
    entries = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# score: "):
            definition = line[len("# score: "):]
        elif line.startswith("# checkpoint: "):
            ckpt = line[len("# checkpoint: "):]
        elif line.startswith("# generated_at: "):
            created = line[len("# generated_at: "):]
        elif line and not line.startswith("#"):
            c, s = line.split("\t")
            entries.append((int(c), float(s)))
    return ChannelRanking(
        entries=tuple(entries),
        score_definition=definition,
        checkpoint_id=ckpt,
        created_at=created,
    )


def auto_annotate(
    gen,
    kind: str,
    candidate_seeds,
    brightness_quantile: float = 0.7,
) -> tuple[object, TargetRegion]:
    """Desk-scale stand-in for hand-annotating a generated image.

    Scans candidate latents, restricts each sample to the vertical band where
    the given light kind lives (windows upper ~40%, lamps lower ~55%), and
    picks the sample whose band is brightest. The region is the band's
    above-quantile luminance mask, softened by its own normalized luminance.
    """
    best = None
    for seed in candidate_seeds:
        z = gen.latent(seed)
        img = gen.synthesize(gen.map_latent(z))
        lum = luminance(img)
        h = lum.shape[0]
        band = np.zeros_like(lum, dtype=bool)
        if kind == "window":
            band[: int(0.4 * h)] = True
        else:
            band[int(0.45 * h):] = True
        band_lum = lum[band]
        peak = float(band_lum.max())
        if best is None or peak > best[0]:
            thresh = float(np.quantile(band_lum, brightness_quantile))
            hot = (lum >= thresh) & band
            if hot.any():
                soft = np.where(hot, lum, 0.0)
                soft = (soft / max(peak, 1e-8)).astype(np.float32)
                best = (peak, z, TargetRegion(mask=soft, source_image_seed=seed))
    if best is None:
        raise ChannelIdError(f"no candidate image shows a bright {kind} region")
    return best[1], best[2]
