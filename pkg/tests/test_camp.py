import numpy as np
import pytest

from multigait import autodiff as ad
from multigait import camp
from multigait import gait_phase as gp
from multigait.autodiff import Tensor
from multigait.nn import Mlp, MlpSpec


@pytest.fixture(scope="module")
def dataset():
    return camp.build_dataset()


def test_dataset_shape_and_table(dataset):
    assert len(dataset) == 10
    for m in dataset:
        assert m.states.shape == (100, 30)
        assert np.all(np.isfinite(m.states))
        offsets, stance = gp.named_gait(m.gait)
        np.testing.assert_array_equal(m.partial_gait, [*offsets, stance, m.frequency])
        assert m.partial_gait[3] == (0.75 if m.gait == "walking" else 0.5)
    assert sorted({m.frequency for m in dataset}) == [2.0, 4.0]


def test_trot_diagonals_and_pronk_synchrony(dataset):
    by_name = {m.name: m for m in dataset}
    c = by_name["trotting_2hz"].kinematic_contacts()
    assert np.array_equal(c[:, 0], c[:, 3]) and np.array_equal(c[:, 1], c[:, 2])
    assert not np.array_equal(c[:, 0], c[:, 1])
    c = by_name["pronking_4hz"].kinematic_contacts()
    assert all(np.array_equal(c[:, 0], c[:, k]) for k in range(1, 4))
    assert c[:, 0].any() and not c[:, 0].all()


def test_stance_feet_stationary(dataset):
    for m in dataset:
        c = m.kinematic_contacts()
        both = c[:-1] & c[1:]
        step = np.linalg.norm(np.diff(m.foot_world, axis=0), axis=-1)
        assert np.max(step[both]) < 1e-12


def test_swing_apex(dataset):
    m = dataset[0]
    assert np.max(m.foot_world[..., 2]) <= 0.09 + 1e-12
    assert np.max(m.foot_world[..., 2]) > 0.08


def test_base_velocity_features(dataset):
    for m in dataset:
        assert np.all(m.states[:, 24] == m.speed) and np.all(m.states[:, 25:] == 0.0)


def test_unreachable_target_rejected():
    from multigait.sim.kinematics import KinematicsError

    with pytest.raises(KinematicsError):
        camp.generate_reference_motion("trotting", 2.0, speed=0.5, height=0.6)


def test_sample_real_adjacent_and_reproducible(dataset):
    table = camp.dataset_transitions(dataset)
    assert table.shape == (990, 65)
    rows = camp.sample_real(table, 64, np.random.default_rng(0))
    again = camp.sample_real(table, 64, np.random.default_rng(0))
    assert np.array_equal(rows, again)
    for row in rows[:16]:
        src = [m for m in dataset if np.array_equal(m.partial_gait, row[60:]) ]
        assert len(src) == 1
        st = src[0].states
        k = np.nonzero(np.all(st == row[:30], axis=1))[0]
        assert any(np.array_equal(st[i + 1], row[30:60]) for i in k if i + 1 < len(st))
    with pytest.raises(ValueError):
        camp.sample_real(np.zeros((0, 65)), 4, np.random.default_rng(0))


def test_loss_constant_discriminators():
    real, fake = np.zeros((4, 65)), np.ones((4, 65))

    def perfect(x):
        x = ad.as_tensor(x)
        return 1.0 - 2.0 * x.mean(axis=1)

    loss, parts = camp.discriminator_loss(perfect, real, fake, alpha_gp=0.0)
    assert parts["ls_real"] == 0.0 and parts["ls_fake"] == 0.0

    def zero(x):
        return ad.as_tensor(x).sum(axis=1) * 0.0

    loss, _ = camp.discriminator_loss(zero, real, fake, alpha_gp=0.0)
    assert loss.item() == 2.0


def test_penalty_on_linear_discriminator():
    w = np.random.default_rng(1).normal(size=65)
    real = np.random.default_rng(2).normal(size=(8, 65))

    def linear(x):
        return ad.as_tensor(x) @ Tensor(w[:, None])

    pen = camp.gradient_penalty(lambda x: linear(x).reshape(-1), real)
    assert pen.item() == pytest.approx(np.linalg.norm(w), rel=1e-12)
    loss, parts = camp.discriminator_loss(lambda x: linear(x).reshape(-1), real, real, alpha_gp=10.0)
    assert loss.item() - parts["ls_real"] - parts["ls_fake"] == pytest.approx(5.0 * np.linalg.norm(w), rel=1e-12)


def test_param_penalty_mode_is_differentiable():
    net = Mlp(MlpSpec(65, (8,), 1), seed=0)
    real = np.random.default_rng(3).normal(size=(5, 65))
    fake = real + 1.0
    loss, _ = camp.discriminator_loss(lambda x: net(x).reshape(-1), real, fake, 10.0, "param", net.parameters)
    grads = ad.grad(loss, net.parameters)
    assert all(np.all(np.isfinite(g.data)) for g in grads)
    with pytest.raises(ValueError):
        camp.gradient_penalty(lambda x: net(x).reshape(-1), real, None, "param")
    with pytest.raises(ValueError):
        camp.DiscriminatorTrainer(camp.Discriminator(), penalty_mode="weights")


def test_discriminator_dims_and_determinism(dataset):
    d = camp.Discriminator.for_dataset(camp.dataset_transitions(dataset), seed=4)
    m = dataset[0]
    a = d.score_transition(m.states[0], m.states[1], m.partial_gait)
    assert a.shape == (1,) and np.array_equal(a, d.score_transition(m.states[0], m.states[1], m.partial_gait))
    with pytest.raises(ValueError):
        d.score(np.zeros((2, 64)))


def test_loss_decreases_on_separable_data():
    rng = np.random.default_rng(0)
    trainer = camp.DiscriminatorTrainer(camp.Discriminator(seed=1), lr=1e-4)
    losses = []
    for _ in range(200):
        real = rng.normal(size=(64, 65))
        losses.append(trainer.update(real, rng.normal(size=(64, 65)) + 2.0)["loss"])
    windows = np.array(losses).reshape(2, 100).mean(axis=1)
    assert windows[1] < windows[0]


def test_export_import_roundtrip(dataset, tmp_path):
    files = camp.export_dataset(dataset, tmp_path)
    assert len(files) == 11
    back = camp.import_dataset(tmp_path)
    for a, b in zip(dataset, back):
        assert a.gait == b.gait
        np.testing.assert_array_equal(a.states, b.states)
        np.testing.assert_array_equal(a.partial_gait, b.partial_gait)
    first = (tmp_path / "walking_2hz.csv").read_bytes()
    camp.export_dataset(dataset, tmp_path)
    assert (tmp_path / "walking_2hz.csv").read_bytes() == first


def test_ring_buffer():
    buf = camp.TransitionBuffer(capacity=5, width=2)
    buf.add(np.arange(6).reshape(3, 2))
    buf.add(np.arange(6, 14).reshape(4, 2))
    assert buf.size == 5 and buf.total_added == 7
    rows = {tuple(r) for r in buf.data}
    assert (0.0, 1.0) not in rows and (12.0, 13.0) in rows
    state = buf.state_dict()
    other = camp.TransitionBuffer(capacity=1, width=2)
    other.load_state_dict(state)
    assert np.array_equal(other.data, buf.data) and other.head == buf.head
    with pytest.raises(ValueError):
        camp.TransitionBuffer(3).sample(1, np.random.default_rng(0))


def test_mismatch_conditions_swaps_gait_only(dataset):
    table = camp.dataset_transitions(dataset)
    rows = camp.sample_real(table, 50, np.random.default_rng(5))
    mis = camp.mismatch_conditions(rows, np.random.default_rng(6))
    assert np.array_equal(mis[:, :60], rows[:, :60])
    assert not np.any(np.all(mis[:, 60:] == rows[:, 60:], axis=1))
    known = {tuple(m.partial_gait) for m in dataset}
    assert all(tuple(r) in known for r in mis[:, 60:])
    with pytest.raises(ValueError):
        camp.mismatch_conditions(rows[:1], np.random.default_rng(0))
