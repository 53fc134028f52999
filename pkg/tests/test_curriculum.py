import numpy as np
import pytest

from multigait import curriculum as cu
from multigait.rewards import ADAPTIVE, COMMON


def test_gait_sampling_distribution():
    ep = cu.sample_gait_episode(np.random.default_rng(0), 100_000)
    freq = np.bincount(ep.gait_index, minlength=5) / 100_000
    assert np.all(np.abs(freq - 0.2) < 0.01)
    assert ep.frequency.min() >= 1 and ep.frequency.max() <= 4
    assert ep.height.min() >= 0.1 and ep.height.max() <= 0.4
    assert ep.stance.min() >= 0.25 and ep.stance.max() <= 0.75
    assert ep.phi1.min() >= 0 and ep.phi1.max() < 1


def test_grid_growth_examples():
    g = cu.CommandGrid.initial()
    g.update([0.9, 0.0, 0.0], 0.9)
    assert g.hi[0] == 1.5 and g.lo[0] == -1.0
    g.update([1.4, 0.0, 0.0], 0.2)
    assert g.hi[0] == 1.5
    for _ in range(20):
        g.update([g.hi[0], g.hi[1], g.lo[2]], 1.0)
    assert g.hi[0] == 4.0 and g.hi[1] == 1.0 and g.lo[2] == -3.0
    samples = g.sample(np.random.default_rng(0), 1000)
    assert np.all(samples >= g.lo) and np.all(samples <= g.hi)


def test_terrain_level_rules():
    assert cu.terrain_promote_demote(9, 0.95, 10.0) == 9
    assert cu.terrain_promote_demote(3, 0.2) == 2
    assert cu.terrain_promote_demote(0, 0.0) == 0
    assert cu.terrain_promote_demote(3, 0.9, 10.0) == 4
    assert cu.terrain_promote_demote(3, 0.9, 1.0) == 3
    assert cu.terrain_promote_demote(3, 0.0, 100.0) == 2


def test_group_assignment():
    groups, terrain = cu.assign_groups(4096)
    assert np.sum(groups == COMMON) == 2048
    counts = np.bincount(terrain[groups == ADAPTIVE], minlength=5)
    assert counts.max() - counts.min() <= 1 and counts.sum() == 2048
    groups, terrain = cu.assign_groups(10)
    assert np.sum(groups == COMMON) == 5
    assert sorted(terrain[groups == ADAPTIVE]) == [0, 1, 2, 3, 4]
    with pytest.raises(ValueError):
        cu.assign_groups(7)
    groups, _ = cu.assign_groups(7, common_fraction=1.0)
    assert np.all(groups == COMMON)


def test_roughest_flat_graduates_to_grid_commands():
    st = cu.CurriculumState.create(10)
    i = int(np.nonzero((st.groups == ADAPTIVE) & (st.terrain_type == 0))[0][0])
    st.level[i] = 9
    st.end_episode(i, 0, [0.5, 0, 0], 0.9, 5.0)
    assert st.grid_mode[i] and st.level[i] == 9
    j = int(np.nonzero((st.groups == ADAPTIVE) & (st.terrain_type == 1))[0][0])
    st.level[j] = 9
    st.end_episode(j, 0, [0.5, 0, 0], 0.9, 5.0)
    assert not st.grid_mode[j]


def test_zero_reward_never_promotes():
    st = cu.CurriculumState.create(10)
    ids = np.nonzero(st.groups == ADAPTIVE)[0]
    for i in ids:
        st.end_episode(int(i), 0, [0, 0, 0], 0.0, 100.0)
    assert np.all(st.level[ids] == 0)


def test_state_roundtrip():
    st = cu.CurriculumState.create(6)
    st.level[:] = [0, 0, 0, 3, 4, 5]
    st.grids["trotting"].update([1.0, 0, 0], 1.0)
    other = cu.CurriculumState.create(6)
    other.load_state_dict(st.state_dict())
    assert np.array_equal(other.level, st.level)
    assert np.array_equal(other.grids["trotting"].hi, st.grids["trotting"].hi)
