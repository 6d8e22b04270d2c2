import dataclasses
import math

import numpy as np
import pytest

from beamcov.coverage import RadioParams, RangeMode
from beamcov.env_stats import EnvParams, blockage_params, p_los
from beamcov.geometry import BeamSpec, OrientedRect, PolarPoint
from beamcov.scene_sim import (
    MCEstimate,
    PlacementPolicy,
    Scene,
    SimConfig,
    direct_covered,
    drop_outcomes,
    generate_scene,
    line_of_sight,
    mc_cell_coverage,
    mc_coverage,
    mc_coverage_many,
    reflected_covered,
    specular_paths,
)

from conftest import beam

ENV = EnvParams(2e-4)
RADIO = RadioParams(1.0, 10 ** 0.1, 30e9, 10 ** -11.5, 1.0, 10 ** 0.3)
USER = PolarPoint.from_degrees(90, 50)

WALL = OrientedRect((0.0, 45.0), 40.0, 30.0, 0.0)  # near edge y = 30, x in [-20, 20]
HAND_USER = PolarPoint.from_cartesian(10.0, 20.0)
HAND_BEAM = BeamSpec.from_degrees(75.96, 10.0, 36.0)


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(n_drops=0)
    with pytest.raises(ValueError):
        SimConfig(area_side=-1.0)
    cfg = SimConfig(range_mode="friis", placement_policy="reject_overlap")
    assert cfg.range_mode is RangeMode.FRIIS and cfg.placement_policy is PlacementPolicy.REJECT_OVERLAP


def test_scene_determinism():
    cfg = SimConfig(base_seed=123)
    a = generate_scene(ENV, cfg, 17)
    b = generate_scene(ENV, cfg, 17)
    assert a == b and a.data.tobytes() == b.data.tobytes()
    assert generate_scene(ENV, cfg, 18) != a
    assert generate_scene(ENV, dataclasses.replace(cfg, base_seed=124), 17) != a


def test_scene_contents():
    cfg = SimConfig(base_seed=5)
    s = generate_scene(ENV, cfg, 0)
    d = s.data
    assert np.all(np.abs(d[:, :2]) <= 250.0)
    assert np.all((d[:, 2] >= 40) & (d[:, 2] <= 60) & (d[:, 3] >= 30) & (d[:, 3] <= 50))
    assert np.all((d[:, 4] >= 0) & (d[:, 4] < math.pi))
    assert len(generate_scene(ENV.with_density(0.0), cfg, 3)) == 0


def test_building_count_is_poisson():
    cfg = SimConfig(base_seed=2024)
    counts = np.array([len(generate_scene(ENV, cfg, i)) for i in range(10_000)])
    # mean and variance 50; stderr of the mean 0.0707, of the variance about 0.71
    assert abs(counts.mean() - 50.0) < 3 * math.sqrt(50 / 10_000)
    assert abs(counts.var(ddof=1) - 50.0) < 3 * math.sqrt((50 + 2 * 50 ** 2) / 10_000)


def test_scene_dump_roundtrip():
    s = generate_scene(ENV, SimConfig(base_seed=9), 4)
    text = s.dumps()
    assert text.startswith("# base_seed=9 index=4\n")
    assert Scene.loads(text) == s
    assert Scene.loads(Scene.from_rects([WALL]).dumps()).rects == [WALL]
    with pytest.raises(ValueError):
        Scene.loads("1 2 3\n")


def test_direct_covered_examples():
    empty = Scene.from_rects([])
    assert direct_covered(empty, RADIO, beam(90), USER)
    assert not direct_covered(empty, RADIO, beam(100), USER)
    straddle = Scene.from_rects([OrientedRect((0, 25), 10, 10, 0.3)])
    assert not direct_covered(straddle, RADIO, beam(90), USER)


def test_direct_covered_ignores_off_path_buildings():
    rng = np.random.default_rng(0)
    base = [OrientedRect((0, 25), 10, 10, 0.0)]
    for scene_rects in (base, []):
        before = direct_covered(Scene.from_rects(scene_rects), RADIO, beam(90), USER)
        extra = list(scene_rects)
        while len(extra) < len(scene_rects) + 20:
            r = OrientedRect(tuple(rng.uniform(-200, 200, 2)), 20, 20, rng.uniform(0, math.pi))
            if abs(r.center[0]) > 30 or r.center[1] < -30 or r.center[1] > 80:
                extra.append(r)
        assert direct_covered(Scene.from_rects(extra), RADIO, beam(90), USER) == before


def test_reflected_hand_example():
    assert not reflected_covered(Scene.from_rects([]), RADIO, HAND_BEAM, HAND_USER)
    scene = Scene.from_rects([WALL])
    theta_v, d_v = specular_paths(scene, *HAND_USER.to_cartesian())
    assert len(d_v) == 1
    assert d_v[0] == pytest.approx(math.hypot(10, 40), abs=1e-9)  # 41.23 m
    assert math.degrees(theta_v[0]) == pytest.approx(75.964, abs=1e-3)
    q = 30.0 / math.sin(theta_v[0]) * np.array([math.cos(theta_v[0]), math.sin(theta_v[0])])
    assert q == pytest.approx([7.5, 30.0], abs=1e-9)
    assert reflected_covered(scene, RADIO, HAND_BEAM, HAND_USER)
    # beam pointing elsewhere does not cover
    assert not reflected_covered(scene, RADIO, BeamSpec.from_degrees(100, 10, 36), HAND_USER)


def test_reflected_blocked_after_bounce():
    # sits on Q -> user only; none of its own edges can bounce into the sector
    blocker = OrientedRect((9.5, 22.0), 0.6, 0.6, 0.0)
    assert reflected_covered(Scene.from_rects([WALL]), RADIO, HAND_BEAM, HAND_USER)
    assert not reflected_covered(Scene.from_rects([WALL, blocker]), RADIO, HAND_BEAM, HAND_USER)


def test_reflected_blocked_before_bounce():
    blocker = OrientedRect((3.75, 15.0), 1.0, 1.0, 0.0)  # on BS -> Q only
    assert not reflected_covered(Scene.from_rects([WALL, blocker]), RADIO, HAND_BEAM, HAND_USER)


def test_reflection_needs_hit_inside_edge():
    short = OrientedRect((-10.0, 45.0), 15.0, 30.0, 0.0)  # front edge x in [-17.5, -2.5]
    assert not reflected_covered(Scene.from_rects([short]), RADIO, HAND_BEAM, HAND_USER)


def test_reflection_respects_range():
    radio = dataclasses.replace(RADIO, gamma=1e8)  # shrinks d0v below the 41 m path
    assert not reflected_covered(Scene.from_rects([WALL]), radio, HAND_BEAM, HAND_USER)


def test_reflection_ignores_back_side_of_own_building():
    # user inside the building's shadow side: the far wall cannot be used
    inside_user = PolarPoint.from_cartesian(0.0, 70.0)
    theta_v, _ = specular_paths(Scene.from_rects([WALL]), *inside_user.to_cartesian())
    assert theta_v.size == 0


def test_mc_empty_environment():
    cfg = SimConfig(n_drops=50)
    est = mc_coverage(ENV.with_density(0.0), RADIO, beam(90), USER, cfg)
    assert est.p_hat == 1.0 and est.stderr == 0.0 and est.ci95 == (1.0, 1.0)
    est = mc_coverage(ENV.with_density(0.0), RADIO, beam(95), USER, cfg)
    assert est.p_hat == 0.0


def test_mc_estimate_from_counts():
    est = MCEstimate.from_counts(100, 30, 10)
    assert est.p_hat == 0.4
    assert est.stderr == pytest.approx(math.sqrt(0.4 * 0.6 / 100))
    lo, hi = est.ci95
    assert lo < 0.4 < hi


def test_mc_direct_and_reflected_small_run():
    cfg = SimConfig(n_drops=2000, base_seed=1)
    direct, refl = mc_coverage_many(ENV, RADIO, [beam(90), beam(95)], USER, cfg)
    assert abs(direct.p_hat - 0.37796) < 3 * direct.stderr
    # a blocked in-sector user can still be reached by a bounce; that is rare
    assert direct.n_reflected < 0.01 * cfg.n_drops
    assert 0.0 < refl.p_hat < direct.p_hat and refl.n_direct == 0


def test_exclusive_counting():
    cfg = SimConfig(n_drops=300, base_seed=4)
    b = BeamSpec.from_degrees(90, 30, 12)
    direct, reflected = drop_outcomes(ENV, RADIO, [b], USER, cfg)
    est = mc_coverage(ENV, RADIO, b, USER, cfg)
    assert est.n_direct == direct[:, 0].sum()
    assert est.n_reflected == (reflected[:, 0] & ~direct[:, 0]).sum()


def test_cell_superset_and_single_beam():
    cfg = SimConfig(n_drops=300, base_seed=8)
    user = PolarPoint.from_degrees(90, 150)
    beams = [beam(10 * k) for k in range(36)]
    direct, reflected = drop_outcomes(ENV, RADIO, beams, user, cfg)
    assert np.all(direct.any(axis=1) <= (direct | reflected).any(axis=1))
    cell = mc_cell_coverage(ENV, RADIO, beams, user, cfg)
    assert cell.direct_only.p_hat <= cell.with_reflections.p_hat
    single = mc_cell_coverage(ENV, RADIO, [beam(95)], user, cfg)
    assert single.with_reflections == mc_coverage(ENV, RADIO, beam(95), user, cfg)
    with pytest.raises(ValueError):
        mc_cell_coverage(ENV, RADIO, [], user, cfg)


def test_parallel_matches_serial():
    cfg = SimConfig(n_drops=120, base_seed=42)
    beams = [beam(90), beam(95), beam(105, 30)]
    a = drop_outcomes(ENV, RADIO, beams, USER, cfg)
    b = drop_outcomes(ENV, RADIO, beams, USER, dataclasses.replace(cfg, workers=3))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_los_frequency_matches_closed_form():
    cfg = SimConfig(n_drops=3000, base_seed=77)
    env = ENV.with_density(5e-4)
    ux, uy = PolarPoint.from_degrees(30, 80).to_cartesian()
    hits = sum(line_of_sight(generate_scene(env, cfg, i), ux, uy) for i in range(cfg.n_drops))
    expect = p_los(blockage_params(env), 80.0)
    se = math.sqrt(expect * (1 - expect) / cfg.n_drops)
    assert abs(hits / cfg.n_drops - expect) < 3 * se


def test_reject_overlap_keeps_endpoints_outdoors():
    cfg = SimConfig(n_drops=1, base_seed=3, placement_policy=PlacementPolicy.REJECT_OVERLAP)
    env = ENV.with_density(1e-3)
    for i in range(200):
        s = generate_scene(env, cfg, i, USER)
        for r in s.rects:
            assert not r.contains((0.0, 0.0), strict=True)
            assert not r.contains(USER.to_cartesian(), strict=True)
    assert generate_scene(env, cfg, 7, USER) == generate_scene(env, cfg, 7, USER)
