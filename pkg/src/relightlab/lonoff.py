"""Benchmark export in the lights-on/off directory convention.

Layout: ``<out_dir>/<category>/place<seed>/<code>.png`` where ``code`` names
the switched-on sources: a leading ``e`` when the window ("external") light
is on, followed by the ids of the switched-on lamps in ascending order.
``e23.png`` is window plus lamps 2 and 3; ``0.png`` is lamp 0 alone.

A manifest text file accompanies the images, one record per image.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import imgio
from .lampworld import (
    WINDOW,
    SceneSpec,
    enumerate_light_combinations,
    render,
    scene_category,
)

MANIFEST_NAME = "manifest.tsv"
_HEADER = "# minilonoff manifest v1"
_COLUMNS = "# scene\tcategory\tfile\tintensities"


class ExportError(RuntimeError):
    pass


def combo_code(scene: SceneSpec, intensities) -> str:
    """Filename stem encoding which sources are on in this intensity vector."""
    intensities = np.asarray(intensities, dtype=np.float64)
    window_ids = [l.id for l in scene.lights if l.kind == WINDOW]
    if len(window_ids) > 1:
        raise ExportError("filename convention supports at most one window per scene")
    if any(l.id > 9 for l in scene.lights):
        raise ExportError("filename convention supports single-digit lamp ids")
    on = [l.id for l in scene.lights if intensities[l.id] > 0]
    if not on:
        raise ExportError("all-off combination has no filename")
    code = ""
    if any(i in window_ids for i in on):
        code += "e"
    code += "".join(str(i) for i in sorted(i for i in on if i not in window_ids))
    return code


def parse_combo_code(code: str) -> tuple[bool, list[int]]:
    """Inverse of combo_code: (window on?, sorted lamp ids on)."""
    window_on = code.startswith("e")
    digits = code[1:] if window_on else code
    if not all(c.isdigit() for c in digits):
        raise ExportError(f"malformed combination code {code!r}")
    lamp_ids = [int(c) for c in digits]
    if lamp_ids != sorted(lamp_ids) or len(set(lamp_ids)) != len(lamp_ids):
        raise ExportError(f"malformed combination code {code!r}")
    if not window_on and not lamp_ids:
        raise ExportError("empty combination code")
    return window_on, lamp_ids


@dataclass(frozen=True)
class ManifestRecord:
    scene: str
    category: str
    path: str  # relative to the manifest's directory
    intensities: tuple[float, ...]


def export_minilonoff(scenes: list[SceneSpec], out_dir: str | os.PathLike) -> list[ManifestRecord]:
    """Render every non-empty light combination of every scene to PNG.

    Returns the manifest records, which are also written to
    ``out_dir/manifest.tsv``. Raises ExportError with the offending path on
    I/O failure.
    """
    out = Path(out_dir)
    records: list[ManifestRecord] = []
    for scene in scenes:
        category = scene_category(scene)
        place = f"place{scene.seed}"
        scene_dir = out / category / place
        try:
            scene_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ExportError(f"cannot create {scene_dir}: {e}") from e
        for intensities in enumerate_light_combinations(scene):
            code = combo_code(scene, intensities)
            rel = f"{category}/{place}/{code}.png"
            img = render(scene, intensities).pixels
            try:
                imgio.save_png(out / rel, img)
            except OSError as e:
                raise ExportError(f"cannot write {out / rel}: {e}") from e
            records.append(
                ManifestRecord(
                    scene=place,
                    category=category,
                    path=rel,
                    intensities=tuple(float(v) for v in intensities),
                )
            )
    write_manifest(out / MANIFEST_NAME, records)
    return records


def write_manifest(path: str | os.PathLike, records: list[ManifestRecord]) -> None:
    lines = [_HEADER, _COLUMNS]
    for r in records:
        # repr round-trips float64 exactly
        csv = ",".join(repr(v) for v in r.intensities)
        lines.append(f"{r.scene}\t{r.category}\t{r.path}\t{csv}")
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as e:
        raise ExportError(f"cannot write manifest {path}: {e}") from e


def read_manifest(path: str | os.PathLike) -> list[ManifestRecord]:
    records = []
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        scene, category, rel, csv = line.split("\t")
        intensities = tuple(float(v) for v in csv.split(","))
        records.append(ManifestRecord(scene, category, rel, intensities))
    return records
