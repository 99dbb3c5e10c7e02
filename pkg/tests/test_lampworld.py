import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relightlab import lampworld
from relightlab.lampworld import (
    SceneError,
    enumerate_light_combinations,
    fading_mask_from_bbox,
    lighting_region,
    oracle_lamp_mask,
    random_scene,
    render,
)


def dim_scene(seed: int, scale: float = 0.05):
    """Scene dimmed far enough that clamping provably never triggers."""
    scene = random_scene(seed)
    lights = [
        dataclasses.replace(l, intensity=l.intensity * scale) for l in scene.lights
    ]
    return dataclasses.replace(scene, ambient=scene.ambient * scale, lights=lights)


class TestRender:
    def test_all_off_zero_ambient_is_black(self):
        scene = dataclasses.replace(random_scene(1), ambient=0.0)
        img = render(scene, np.zeros(scene.n_lights)).pixels
        assert np.all(img == 0.0)

    def test_doubling_intensity_strictly_brightens(self):
        scene = dim_scene(2)
        base = scene.nominal_intensities()
        lo = render(scene, base).pixels.astype(np.float64)
        hi = render(scene, 2 * base).pixels.astype(np.float64)
        light = scene.lights[0]
        # threshold keeps the per-pixel delta above float32 resolution
        fall = lampworld._falloff(scene, light)
        sel = (fall > 1e-2) & (scene.albedo_map.min(axis=2) > 0)
        assert np.all(hi[sel] > lo[sel])

    def test_deterministic(self):
        scene = random_scene(7)
        vec = scene.nominal_intensities()
        a = render(scene, vec).pixels
        b = render(scene, vec).pixels
        assert a.tobytes() == b.tobytes()

    def test_length_mismatch_rejected(self):
        scene = random_scene(3)
        with pytest.raises(SceneError):
            render(scene, np.zeros(scene.n_lights + 1))

    def test_negative_intensity_rejected(self):
        scene = random_scene(3)
        with pytest.raises(SceneError):
            render(scene, -scene.nominal_intensities())

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=20, deadline=None)
    def test_additivity_preclamp(self, seed):
        # render(a) + render(b) - render(0) == render(a+b) while nothing clamps
        scene = dim_scene(seed)
        rng = np.random.default_rng(seed)
        a = rng.uniform(0, 0.05, scene.n_lights)
        b = rng.uniform(0, 0.05, scene.n_lights)
        ra = render(scene, a).pixels.astype(np.float64)
        rb = render(scene, b).pixels.astype(np.float64)
        r0 = render(scene, np.zeros(scene.n_lights)).pixels.astype(np.float64)
        rab = render(scene, a + b).pixels.astype(np.float64)
        assert np.allclose(ra + rb - r0, rab, atol=2e-7)

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=20, deadline=None)
    def test_subset_monotonicity(self, seed):
        scene = random_scene(seed)
        rng = np.random.default_rng(seed + 1)
        u = rng.uniform(0, 1.5, scene.n_lights)
        v = u + rng.uniform(0, 1.5, scene.n_lights)
        assert np.all(render(scene, u).pixels <= render(scene, v).pixels)


class TestCombinations:
    @pytest.mark.parametrize("n,expected", [(3, 7), (1, 1), (4, 15)])
    def test_count(self, n, expected):
        scene = _scene_with_n_lights(n)
        combos = enumerate_light_combinations(scene)
        assert len(combos) == expected
        # derived oracle: enumerate bitmasks directly
        seen = {tuple(v > 0) for v in combos}
        expected_sets = {
            tuple((mask >> i) & 1 == 1 for i in range(n)) for mask in range(1, 2**n)
        }
        assert seen == expected_sets

    def test_bitmask_ascending_order(self):
        scene = _scene_with_n_lights(3)
        combos = enumerate_light_combinations(scene)
        masks = [sum(1 << i for i, v in enumerate(vec) if v > 0) for vec in combos]
        assert masks == list(range(1, 8))

    def test_no_lights_is_error(self):
        scene = random_scene(5)
        broken = dataclasses.replace(scene, lights=[], lamp_body_regions=[])
        with pytest.raises(SceneError):
            enumerate_light_combinations(broken)


def _scene_with_n_lights(n: int):
    for seed in range(200):
        scene = random_scene(seed)
        if scene.n_lights == n:
            return scene
    raise AssertionError(f"no random scene with {n} lights in seed range")


class TestOracleMask:
    def test_radius_is_1p5_of_bbox_max_side(self):
        scene = random_scene(11)
        body = scene.lamp_body_regions[0]
        y0, y1, x0, x1 = lampworld.region_bbox(body)
        radius = 1.5 * max(y1 - y0, x1 - x0)
        mask = oracle_lamp_mask(scene, 0)
        cy = round((y0 + y1 - 1) / 2.0)
        cx = round((x0 + x1 - 1) / 2.0)
        ys, xs = np.mgrid[0 : mask.shape[0], 0 : mask.shape[1]]
        d = np.sqrt((ys - cy) ** 2 + (xs - cx) ** 2)
        assert np.all(mask[d >= radius] == 0.0)
        inside = d < radius
        assert np.allclose(mask[inside], 1.0 - d[inside] / radius, atol=1e-6)

    def test_peak_one_at_center(self):
        scene = random_scene(11)
        for i in range(scene.n_lights):
            mask = oracle_lamp_mask(scene, i)
            assert mask.max() == pytest.approx(1.0)

    def test_invalid_id(self):
        scene = random_scene(11)
        with pytest.raises(SceneError):
            oracle_lamp_mask(scene, scene.n_lights)

    def test_fading_mask_center_snapped_to_pixel(self):
        mask = fading_mask_from_bbox((32, 32), (10, 15, 10, 14))
        assert mask.max() == 1.0


class TestSceneValidation:
    def test_ids_must_follow_x_order(self):
        scene = random_scene(0)
        if scene.n_lights < 2:
            scene = _scene_with_n_lights(3)
        lights = list(scene.lights)
        lights[0], lights[1] = (
            dataclasses.replace(lights[1], id=0),
            dataclasses.replace(lights[0], id=1),
        )
        bodies = list(scene.lamp_body_regions)
        bodies[0], bodies[1] = bodies[1], bodies[0]
        with pytest.raises(SceneError):
            dataclasses.replace(scene, lights=lights, lamp_body_regions=bodies)

    def test_random_scene_respects_invariants(self):
        for seed in range(50):
            scene = random_scene(seed)
            assert 1 <= scene.n_lights <= 4
            windows = [l for l in scene.lights if l.kind == lampworld.WINDOW]
            assert len(windows) <= 1
            for light, body in zip(scene.lights, scene.lamp_body_regions):
                assert body.any()
                x, y = light.center
                assert body[int(round(y)), int(round(x))]

    def test_same_seed_same_scene_across_sizes(self):
        a = random_scene(9, image_size=64)
        b = random_scene(9, image_size=256)
        assert a.n_lights == b.n_lights
        assert [l.kind for l in a.lights] == [l.kind for l in b.lights]
        for la, lb in zip(a.lights, b.lights):
            assert lb.center[0] / la.center[0] == pytest.approx(4.0, rel=0.01)


def test_lighting_region_covers_light_centers():
    scene = random_scene(21)
    region = lighting_region(scene)
    for light in scene.lights:
        x, y = light.center
        assert region[int(round(y)), int(round(x))]


def test_training_stream_deterministic():
    a = lampworld.training_image_stream(5)
    b = lampworld.training_image_stream(5)
    for _ in range(3):
        assert np.array_equal(next(a), next(b))
