import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relightlab import imgio, lonoff
from relightlab.lampworld import (
    WINDOW,
    enumerate_light_combinations,
    random_scene,
    render,
    scene_category,
)
from relightlab.lonoff import (
    ExportError,
    combo_code,
    export_minilonoff,
    parse_combo_code,
    read_manifest,
)


def _scene_with_window_and_lamps(min_lamps: int = 2):
    for seed in range(500):
        scene = random_scene(seed)
        kinds = [l.kind for l in scene.lights]
        if WINDOW in kinds and len(kinds) - 1 >= min_lamps:
            return scene
    raise AssertionError("no suitable scene in seed range")


class TestComboCode:
    def test_window_plus_lamps(self):
        scene = _scene_with_window_and_lamps()
        window_id = next(l.id for l in scene.lights if l.kind == WINDOW)
        lamp_ids = [l.id for l in scene.lights if l.kind != WINDOW]
        vec = np.zeros(scene.n_lights)
        vec[window_id] = 1.0
        for i in lamp_ids:
            vec[i] = 1.0
        code = combo_code(scene, vec)
        assert code == "e" + "".join(str(i) for i in lamp_ids)

    def test_lamps_only_no_e_prefix(self):
        scene = _scene_with_window_and_lamps()
        lamp_ids = [l.id for l in scene.lights if l.kind != WINDOW]
        vec = np.zeros(scene.n_lights)
        vec[lamp_ids[0]] = 0.9
        assert combo_code(scene, vec) == str(lamp_ids[0])

    def test_all_off_rejected(self):
        scene = random_scene(0)
        with pytest.raises(ExportError):
            combo_code(scene, np.zeros(scene.n_lights))

    def test_ids_always_ascend(self):
        scene = _scene_with_window_and_lamps()
        vec = scene.nominal_intensities()
        code = combo_code(scene, vec)
        digits = code.lstrip("e")
        assert list(digits) == sorted(digits)

    @given(seed=st.integers(0, 2_000), mask=st.integers(1, 15))
    @settings(max_examples=40, deadline=None)
    def test_round_trip(self, seed, mask):
        scene = random_scene(seed)
        vec = np.array(
            [1.0 if (mask >> i) & 1 else 0.0 for i in range(scene.n_lights)]
        )
        if not vec.any():
            return
        window_on, lamp_ids = parse_combo_code(combo_code(scene, vec))
        expect_window = any(
            l.kind == WINDOW and vec[l.id] > 0 for l in scene.lights
        )
        expect_lamps = [
            l.id for l in scene.lights if l.kind != WINDOW and vec[l.id] > 0
        ]
        assert window_on == expect_window
        assert lamp_ids == expect_lamps


class TestParse:
    @pytest.mark.parametrize(
        "code,window,lamps",
        [("e23", True, [2, 3]), ("0", False, [0]), ("e", True, []), ("013", False, [0, 1, 3])],
    )
    def test_examples(self, code, window, lamps):
        assert parse_combo_code(code) == (window, lamps)

    @pytest.mark.parametrize("code", ["", "x1", "e21", "00", "2e"])
    def test_malformed(self, code):
        with pytest.raises(ExportError):
            parse_combo_code(code)


class TestExport:
    def test_layout_and_count(self, tmp_path):
        scenes = [random_scene(s) for s in (0, 1, 2)]
        records = export_minilonoff(scenes, tmp_path)
        expected = sum(2**s.n_lights - 1 for s in scenes)
        assert len(records) == expected
        for rec in records:
            p = tmp_path / rec.path
            assert p.is_file()
            cat, place, name = rec.path.split("/")
            assert cat == rec.category
            assert place == rec.scene
            parse_combo_code(name.removesuffix(".png"))

    def test_pixels_match_rerender(self, tmp_path):
        scene = random_scene(4)
        records = export_minilonoff([scene], tmp_path)
        combos = enumerate_light_combinations(scene)
        for rec, vec in zip(records, combos):
            on_disk = imgio.load_png(tmp_path / rec.path)
            fresh = imgio.from_uint8(imgio.to_uint8(render(scene, vec).pixels))
            assert np.array_equal(on_disk, fresh)

    def test_manifest_round_trip(self, tmp_path):
        scenes = [random_scene(s) for s in (5, 6)]
        records = export_minilonoff(scenes, tmp_path)
        loaded = read_manifest(tmp_path / lonoff.MANIFEST_NAME)
        assert loaded == records

    def test_category_from_scene(self, tmp_path):
        scene = random_scene(13)
        records = export_minilonoff([scene], tmp_path)
        assert all(r.category == scene_category(scene) for r in records)

    def test_unwritable_dir_raises_with_path(self, tmp_path):
        target = tmp_path / "blocked"
        target.write_text("a file, not a directory")
        scene = random_scene(1)
        with pytest.raises(ExportError) as err:
            export_minilonoff([scene], target)
        assert "blocked" in str(err.value)

    def test_three_lights_make_seven_images(self, tmp_path):
        scene = None
        for seed in range(300):
            cand = random_scene(seed)
            if cand.n_lights == 3:
                scene = cand
                break
        assert scene is not None
        records = export_minilonoff([scene], tmp_path)
        assert len(records) == 7
