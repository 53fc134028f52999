import numpy as np
import pytest

from multigait.sim import terrain as tr
from multigait.sim.env import (
    RUNNING,
    TERMINATED,
    TIMEOUT,
    QuadrupedBatch,
    SimConfig,
    gravity_in_base,
    quat_from_axis_angle,
)
from multigait.sim.randomization import RandomizationProfile, apply_randomization

ZERO = np.zeros((1, 12))


def test_held_above_ground_has_no_contact_force():
    env = QuadrupedBatch(1, fixed_base=True)
    env.state.pos[0, 2] = 1.0
    for _ in range(10):
        env.step(ZERO)
    assert np.all(env.state.foot_force == 0.0)
    assert np.all(env.observe_privileged()[0, 3:15] == 0.0)


def test_static_stand_force_balance():
    env = QuadrupedBatch(2, seed=3)
    for _ in range(150):
        info = env.step(np.zeros((2, 12)))
        assert np.all(info.status == RUNNING)
    total = env.state.foot_force[..., 2].sum(axis=1)
    assert np.all(np.abs(total / (12.0 * 9.81) - 1.0) < 0.05)
    assert np.all(env.state.foot_force[..., 2] >= 0)


def test_pd_settles_to_nominal_within_half_second():
    env = QuadrupedBatch(1, fixed_base=True)
    env.state.pos[0, 2] = 1.0
    env.state.q[0] += np.random.default_rng(0).uniform(-0.3, 0.3, 12)
    env.state.q[0] = np.clip(env.state.q[0], -0.79, None)
    for _ in range(25):
        env.step(ZERO)
    assert np.max(np.abs(env.state.q[0] - env.nominal)) < 1e-3


def test_ballistic_motion_matches_closed_form():
    env = QuadrupedBatch(1)
    env.state.pos[0] = (0.0, 0.0, 5.0)
    v0 = np.array([0.3, -0.2, 1.0])
    env.state.lin_vel[0] = v0
    for _ in range(5):
        env.step(ZERO)
    t = 0.1
    expected = np.array([0.0, 0.0, 5.0]) + v0 * t + np.array([0, 0, -0.5 * 9.81 * t * t])
    assert np.max(np.abs(env.state.pos[0] - expected)) < 1e-6


def test_gravity_observation():
    env = QuadrupedBatch(1)
    env.reset([0], yaw=0.0)
    np.testing.assert_allclose(env.observe_partial()[0, :3], (0, 0, -1), atol=1e-12)
    roll = quat_from_axis_angle([1.0, 0.0, 0.0], np.pi / 2)
    # gravity seen from a body rolled +90 degrees about x points along -y
    np.testing.assert_allclose(gravity_in_base(roll), (0, -1, 0), atol=1e-12)


def test_observation_dimensions_every_step():
    env = QuadrupedBatch(3, randomization=RandomizationProfile(), seed=1)
    for _ in range(5):
        env.step(np.random.default_rng(0).uniform(-1, 1, (3, 12)))
        assert env.observe_partial().shape == (3, 42)
        assert env.observe_privileged().shape == (3, 21)
        assert env.heightmap_scan().shape == (3, 187)
        assert env.camp_state().shape == (3, 30)
        assert np.abs(np.linalg.norm(env.state.quat, axis=1) - 1).max() < 1e-9


def test_no_push_means_no_external_force():
    env = QuadrupedBatch(1)
    env.step(ZERO)
    assert np.all(env.observe_privileged()[0, 15:] == 0.0)


def test_scan_flat_and_translation_invariance():
    env = QuadrupedBatch(1, fixed_base=True)
    env.state.pos[0] = (0.0, 0.0, 0.3)
    np.testing.assert_allclose(env.heightmap_scan(), -0.3)
    field = tr.generate_terrain("discrete", 9, seed=2)
    env.set_terrain([0], field)
    env.state.pos[0] = (0.5, -0.25, 0.4)
    env.state.quat[0] = quat_from_axis_angle([0, 0, 1.0], 0.3)
    scan = env.heightmap_scan()
    shifted = tr.TerrainField(field.heights + 0.7, field.spacing, (field.origin[0] + 1.0, field.origin[1] - 0.5),
                              field.kind, field.level)
    env.set_terrain([0], shifted)
    env.state.pos[0] = (1.5, -0.75, 1.1)
    np.testing.assert_allclose(env.heightmap_scan(), scan, atol=1e-12)


def test_termination_and_timeout():
    env = QuadrupedBatch(1, fixed_base=True)
    env.state.pos[0, 2] = 0.3
    assert env.check_termination()[0] == RUNNING
    env.state.pos[0, 2] = 0.04
    assert env.check_termination()[0] == TERMINATED
    env.state.pos[0, 2] = 0.3
    env.elapsed[0] = 20.0
    assert env.check_termination()[0] == TIMEOUT


def test_contact_forces_respect_friction_cone():
    env = QuadrupedBatch(4, randomization=RandomizationProfile(push_interval_s=0.2), seed=5)
    rng = np.random.default_rng(1)
    for _ in range(60):
        env.step(rng.uniform(-1, 1, (4, 12)))
        f = env.state.foot_force
        assert np.all(f[..., 2] >= 0)
        ft = np.linalg.norm(f[..., :2], axis=-1)
        assert np.all(ft <= env.physics.friction[:, None] * f[..., 2] + 1e-9)


def test_determinism():
    def run():
        env = QuadrupedBatch(3, randomization=RandomizationProfile(), seed=9)
        rng = np.random.default_rng(2)
        for _ in range(30):
            env.step(rng.uniform(-1, 1, (3, 12)))
        return env.state.pos.copy(), env.state.q.copy()

    a, b = run(), run()
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_rejects_bad_actions():
    env = QuadrupedBatch(1)
    with pytest.raises(ValueError):
        env.step(np.full((1, 12), np.nan))
    with pytest.raises(ValueError):
        env.step(np.zeros((2, 12)))


def test_state_dict_roundtrip_reproduces_trajectory():
    env = QuadrupedBatch(2, randomization=RandomizationProfile(), seed=4)
    for _ in range(5):
        env.step(np.full((2, 12), 0.1))
    snap = env.state_dict()
    rng_state = env.rng.bit_generator.state
    env.step(np.full((2, 12), -0.2))
    ref = env.state.pos.copy()
    env.load_state_dict(snap)
    env.rng.bit_generator.state = rng_state
    env.step(np.full((2, 12), -0.2))
    assert np.array_equal(env.state.pos, ref)


# ---------------------------------------------------------------- terrain
def test_terrain_examples():
    rough = tr.generate_terrain("rough_flat", 9, seed=0)
    assert np.abs(rough.heights).max() <= 0.03
    for kind in tr.TERRAIN_TYPES:
        assert np.ptp(tr.generate_terrain(kind, 0).heights) <= 0.01
    stairs = tr.generate_terrain("stairs", 9)
    steps = np.unique(np.round(np.diff(np.unique(stairs.heights)), 12))
    assert steps.tolist() == [0.2]
    # tread: height profile along +x holds for 0.25 m (5 cells at 0.05 m)
    row = stairs.heights[:, stairs.heights.shape[1] // 2]
    change = np.nonzero(np.diff(row[row.size // 2:]))[0]
    assert np.allclose(np.diff(change) * stairs.spacing, 0.25)
    with pytest.raises(ValueError):
        tr.generate_terrain("lava", 0)
    with pytest.raises(ValueError):
        tr.generate_terrain("slope", 10)


def test_slope_angle_and_course():
    slope = tr.generate_terrain("slope", 9)
    row = slope.heights[:, slope.heights.shape[1] // 2]
    grad = np.max(np.diff(row)) / slope.spacing
    assert grad == pytest.approx(np.tan(np.radians(40)))
    course = tr.staircase_course()
    assert course.height_at(0.0, 0.0) == 0.0 and course.height_at(1.05, 0.0) == pytest.approx(0.2)
    assert course.height_at(1.30, 0.0) == pytest.approx(0.4)


def test_heightfield_roundtrip(tmp_path):
    field = tr.generate_terrain("wave", 5, seed=1)
    path = tr.save_heightfield(field, tmp_path / "w.hf")
    back = tr.load_heightfield(path)
    assert np.array_equal(back.heights, field.heights)
    assert (back.spacing, back.origin, back.kind, back.level) == (field.spacing, field.origin, "wave", 5)
    (tmp_path / "bad.hf").write_bytes(b"nope")
    with pytest.raises(ValueError):
        tr.load_heightfield(tmp_path / "bad.hf")
    small = tr.flat(size=0.1, resolution=0.05)
    text = tr.export_csv(small, tmp_path / "f.csv").read_text().splitlines()
    assert text[0] == "x,y,height" and len(text) == 1 + 9


def test_border_clamp():
    field = tr.generate_terrain("slope", 5)
    x0, x1, _, _ = field.extent
    assert field.height_at(x1 + 50, 0.0) == field.height_at(x1, 0.0)


# ---------------------------------------------------------------- randomization
def test_randomization_ranges_and_reproducibility():
    prof = RandomizationProfile()
    a = apply_randomization(prof, np.random.default_rng(0), 10_000)
    assert a.friction.min() >= 0.4 and a.friction.max() <= 1.25
    assert a.added_mass.min() >= -1 and a.added_mass.max() <= 3
    assert a.motor_strength.min() >= 0.9 and a.motor_strength.max() <= 1.1
    assert set(np.unique(a.latency)) <= {0, 1}
    b = apply_randomization(prof, np.random.default_rng(0), 10_000)
    assert np.array_equal(a.friction, b.friction) and np.array_equal(a.latency, b.latency)
    d = apply_randomization(RandomizationProfile.disabled(), np.random.default_rng(5), 3)
    assert np.all(d.friction == 0.8) and np.all(d.latency == 0)
    with pytest.raises(ValueError):
        RandomizationProfile(friction=(1.0, 0.5))
