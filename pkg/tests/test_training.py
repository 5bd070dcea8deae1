"""Data collection and the two training stages at small scale."""

import numpy as np
import pytest

from styleforge.errors import ConfigurationError, DataError, TrainingError
from styleforge.models import (BdmConfig, PbConfig, bdm_forward, model_digest,
                               pb_forward, weights_digest)
from styleforge.simcore import CameraConfig, build_track, parse_track
from styleforge.training import (Dataset, TrainConfig, bdm_dataset_loss,
                                 collect_mixed, collect_preset,
                                 pb_dataset_loss, precompute_bdm_outputs,
                                 split_indices, train_bdm, train_pb)

SMALL = BdmConfig(image_height=32, image_width=32, conv_channels=(4,) * 5,
                  conv_kernels=(5, 5, 3, 3, 1), conv_strides=(2, 2, 1, 1, 1),
                  dense_sizes=(16, 8))
SMALL_PB = PbConfig(feature_length=SMALL.phi_length(), action_embed=4,
                    feature_embed=8, speed_embed=4, gap_embed=4,
                    fusion_sizes=(16, 8))
CAM32 = CameraConfig(width=32, height=32)


def synth_dataset(n=64, seed=3, constant=False):
    rng = np.random.default_rng(seed)
    if constant:
        images = np.tile(rng.integers(0, 3, size=(1, 32, 32)), (n, 1, 1))
        scalars = np.zeros((n, 6))
        scalars[:, 0] = 12.0
        scalars[:, 1] = 0.3
        scalars[:, 2] = 0.6
        scalars[:, 4] = 20.0
    else:
        images = rng.integers(0, 3, size=(n, 32, 32))
        scalars = np.zeros((n, 6))
        scalars[:, 0] = rng.uniform(0.0, 25.0, n)
        scalars[:, 1] = rng.uniform(-0.5, 0.5, n)
        scalars[:, 2] = rng.uniform(0.0, 1.0, n)
        scalars[:, 4] = 20.0
        scalars[:, 5] = np.arange(n) * 0.05
    return Dataset(camera=CAM32, track="synth", driver="synth", dt=0.05,
                   images=images.astype(np.uint8), scalars=scalars,
                   sections=np.zeros(n, dtype=np.uint8))


@pytest.fixture(scope="module")
def trained_small():
    ds = synth_dataset()
    res = train_bdm(ds, TrainConfig(epochs=3, batch_size=16, seed=5,
                                    val_fraction=0.25), model_config=SMALL)
    return ds, res


# -- configuration and split -------------------------------------------------

def test_train_config_validation():
    with pytest.raises(ConfigurationError):
        TrainConfig(epochs=0)
    with pytest.raises(ConfigurationError):
        TrainConfig(val_fraction=0.5)
    with pytest.raises(ConfigurationError):
        TrainConfig(learning_rate=0.0)
    cfg = TrainConfig(epochs=4, seed=9)
    assert TrainConfig.from_dict(cfg.to_dict()) == cfg


def test_split_indices_properties():
    tr, va = split_indices("ab12cd34ef56ab78", seed=1, n=100, val_fraction=0.2)
    assert len(va) == 20 and len(tr) == 80
    assert set(tr) | set(va) == set(range(100))
    assert set(tr) & set(va) == set()
    assert np.array_equal(tr, np.sort(tr)) and np.array_equal(va, np.sort(va))
    # keyed by both digest and seed
    tr2, _ = split_indices("ab12cd34ef56ab78", seed=1, n=100, val_fraction=0.2)
    assert np.array_equal(tr, tr2)
    tr3, _ = split_indices("ab12cd34ef56ab78", seed=2, n=100, val_fraction=0.2)
    assert not np.array_equal(tr, tr3)
    tr4, _ = split_indices("ffffcd34ef56ab78", seed=1, n=100, val_fraction=0.2)
    assert not np.array_equal(tr, tr4)


# -- base-model training -----------------------------------------------------

def test_degenerate_fit_drives_loss_to_zero():
    # one repeated sample: optimization must be able to nail it
    ds = synth_dataset(n=32, constant=True)
    res = train_bdm(ds, TrainConfig(epochs=120, batch_size=32,
                                    learning_rate=1e-2, seed=0,
                                    val_fraction=0.0, patience=120),
                    model_config=SMALL)
    assert res.train_losses[-1] < 1e-3
    assert res.model.trained


def test_loss_decreases(trained_small):
    _, res = trained_small
    assert res.train_losses[-1] < res.train_losses[0]
    assert len(res.val_losses) == res.epochs_run
    assert 0 <= res.best_epoch < res.epochs_run


def test_training_is_bit_reproducible():
    ds = synth_dataset()
    cfg = TrainConfig(epochs=2, batch_size=16, seed=5, val_fraction=0.25)
    r1 = train_bdm(ds, cfg, model_config=SMALL)
    r2 = train_bdm(ds, cfg, model_config=SMALL)
    assert weights_digest(r1.model) == weights_digest(r2.model)
    assert model_digest(r1.model) == model_digest(r2.model)
    assert r1.train_losses == r2.train_losses
    assert r1.val_losses == r2.val_losses


def test_seed_changes_weights():
    ds = synth_dataset()
    r1 = train_bdm(ds, TrainConfig(epochs=1, batch_size=16, seed=5,
                                   val_fraction=0.0), model_config=SMALL)
    r2 = train_bdm(ds, TrainConfig(epochs=1, batch_size=16, seed=6,
                                   val_fraction=0.0), model_config=SMALL)
    assert weights_digest(r1.model) != weights_digest(r2.model)


def test_camera_model_size_mismatch_rejected():
    ds = synth_dataset()
    with pytest.raises(ConfigurationError, match="do not match"):
        train_bdm(ds, TrainConfig(epochs=1), model_config=BdmConfig())


def test_nonfinite_loss_raises():
    ds = synth_dataset()
    ds.scalars[7, 0] = np.nan  # poisoned speed propagates to a NaN loss
    with pytest.raises(TrainingError, match="diverged"):
        with np.errstate(invalid="ignore"):
            train_bdm(ds, TrainConfig(epochs=1, batch_size=16,
                                      val_fraction=0.0), model_config=SMALL)


def test_bdm_dataset_loss_matches_manual(trained_small):
    ds, res = trained_small
    pred, _ = bdm_forward(res.model, ds.observations(np.arange(len(ds))),
                          ds.speeds)
    manual = float(np.mean((pred - ds.actions) ** 2))
    assert bdm_dataset_loss(res.model, ds) == pytest.approx(manual, rel=1e-12)
    # batch size only changes summation order
    assert bdm_dataset_loss(res.model, ds, batch_size=7) == pytest.approx(
        manual, rel=1e-12)


# -- adapter training --------------------------------------------------------

def test_adapter_refuses_untrained_base():
    from styleforge.models import BdmModel
    ds = synth_dataset()
    fresh = BdmModel.initialize(SMALL, seed=0)
    with pytest.raises(TrainingError, match="train the base model first"):
        train_pb(ds, fresh, TrainConfig(epochs=1), pb_config=SMALL_PB)


def test_adapter_training_freezes_base(trained_small):
    ds, res = trained_small
    before = model_digest(res.model)
    pb_res = train_pb(ds, res.model, TrainConfig(epochs=2, batch_size=16,
                                                 seed=1, val_fraction=0.25),
                      pb_config=SMALL_PB)
    assert model_digest(res.model) == before
    assert pb_res.model.meta["bdm_digest"] == weights_digest(res.model)
    assert pb_res.model.trained


def test_adapter_learns_systematic_offset(trained_small):
    # labels = base prediction shifted in steering: the adapter must beat
    # the base model on its own residual task
    ds, res = trained_small
    pred, _ = bdm_forward(res.model, ds.observations(np.arange(len(ds))),
                          ds.speeds)
    shifted = ds.scalars.copy()
    shifted[:, 1] = np.clip(pred[:, 0] + 0.3, -1.0, 1.0)
    shifted[:, 2] = np.clip(pred[:, 1], 0.0, 1.0)
    shifted[:, 3] = np.clip(pred[:, 2], 0.0, 1.0)
    ds2 = Dataset(camera=ds.camera, track=ds.track, driver="shifted", dt=ds.dt,
                  images=ds.images, scalars=shifted, sections=ds.sections)
    base_loss = bdm_dataset_loss(res.model, ds2)
    pb_res = train_pb(ds2, res.model,
                      TrainConfig(epochs=40, batch_size=16, seed=2,
                                  learning_rate=3e-3, val_fraction=0.0,
                                  patience=40), pb_config=SMALL_PB)
    adapted = pb_dataset_loss(pb_res.model, res.model, ds2)
    assert adapted < 0.5 * base_loss


def test_precompute_matches_per_sample(trained_small):
    ds, res = trained_small
    actions, features = precompute_bdm_outputs(res.model, ds, batch_size=17)
    for i in (0, 9, len(ds) - 1):
        a, f = bdm_forward(res.model, ds.sample(i).observation, ds.speeds[i])
        assert np.array_equal(features[i], f)      # conv path is batch-exact
        np.testing.assert_allclose(actions[i], a, rtol=0, atol=1e-14)


def test_pb_dataset_loss_precomputed_equivalence(trained_small):
    ds, res = trained_small
    pb_res = train_pb(ds, res.model, TrainConfig(epochs=1, batch_size=16,
                                                 seed=1, val_fraction=0.0),
                      pb_config=SMALL_PB)
    pre = precompute_bdm_outputs(res.model, ds)
    a = pb_dataset_loss(pb_res.model, res.model, ds)
    b = pb_dataset_loss(pb_res.model, res.model, ds, precomputed=pre)
    assert a == pytest.approx(b, rel=1e-12)


def test_mismatched_precomputed_rejected(trained_small):
    ds, res = trained_small
    pre = precompute_bdm_outputs(res.model, ds)
    with pytest.raises(ConfigurationError, match="do not match"):
        train_pb(ds, res.model, TrainConfig(epochs=1), pb_config=SMALL_PB,
                 precomputed=(pre[0][:-1], pre[1][:-1]))


# -- scripted collection -----------------------------------------------------

def test_collect_preset_basics(train_geom, preset_a):
    ds, rep = collect_preset(train_geom, preset_a, CAM32, episodes=2,
                             steps_per_episode=30, seed=11)
    assert rep.episodes_kept == 2 and rep.samples == len(ds) == 60
    assert ds.track == train_geom.name
    assert ds.driver == "style-A"
    assert ds.episode_starts == [0, 30]
    assert ds.meta["episode_labels"] == ["A@15", "A@20"]  # cycling targets
    assert set(ds.target_speeds) == {15.0, 20.0}
    # timestamps advance by dt within an episode
    t = ds.timestamps
    assert np.allclose(np.diff(t[:30]), 0.05)


def test_collect_is_deterministic(train_geom, preset_a):
    d1, _ = collect_preset(train_geom, preset_a, CAM32, episodes=1,
                           steps_per_episode=20, seed=11)
    d2, _ = collect_preset(train_geom, preset_a, CAM32, episodes=1,
                           steps_per_episode=20, seed=11)
    d3, _ = collect_preset(train_geom, preset_a, CAM32, episodes=1,
                           steps_per_episode=20, seed=12)
    assert d1.digest() == d2.digest()
    assert d1.digest() != d3.digest()


def test_collect_mixed_alternates_presets(train_geom, preset_a, preset_b):
    ds, rep = collect_mixed(train_geom, (preset_a, preset_b), CAM32,
                            episodes=2, steps_per_episode=20, seed=11)
    assert ds.driver == "mixed"
    assert ds.meta["episode_labels"] == ["mixed-A@15", "mixed-B@15"]
    assert rep.episodes_kept == 2


def test_collect_labels_are_clean_actions(train_geom, preset_a):
    # labels must be the controller's clean output: valid ranges and not
    # saturated at the steering clamp (noise is applied, not recorded)
    ds, _ = collect_preset(train_geom, preset_a, CAM32, episodes=2,
                           steps_per_episode=40, seed=11, steering_noise=0.5)
    assert np.all(np.abs(ds.actions[:, 0]) <= 1.0)
    assert np.mean(np.abs(ds.actions[:, 0]) > 0.9) < 0.2


def test_collect_discards_episodes_that_leave_lane(preset_a):
    # a one-lane-wide ring: spawn jitter alone pushes some episodes out
    geom = build_track(parse_track(
        "version 1\nname ring\nlane_half_width 1.0\nclosed true\n"
        "segment arc 40 360 left\n"))
    ds, rep = collect_preset(geom, preset_a, CAM32, episodes=6,
                             steps_per_episode=10, seed=0)
    assert rep.episodes_kept + rep.episodes_discarded == 6
    assert rep.episodes_discarded > 0
    assert len(rep.discard_reasons) == rep.episodes_discarded
    assert len(ds) == rep.episodes_kept * 10


def test_collect_raises_when_nothing_survives(preset_a):
    geom = build_track(parse_track(
        "version 1\nname ring\nlane_half_width 1.0\nclosed true\n"
        "segment arc 40 360 left\n"))
    with pytest.raises(DataError, match="all episodes were discarded"):
        collect_preset(geom, preset_a, CAM32, episodes=3,
                       steps_per_episode=200, seed=0, steering_noise=3.0)


def test_collect_validates_args(train_geom, preset_a):
    with pytest.raises(DataError):
        collect_preset(train_geom, preset_a, CAM32, episodes=0,
                       steps_per_episode=10, seed=0)
