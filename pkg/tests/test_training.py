import numpy as np

from alphabpp import datagen, mcts, sim, training

CFG = sim.SimConfig()


def _run(augment, episodes=3):
    seqs = [r.items for r in datagen.generate_dataset("cut1", 2, master_seed=5).records]
    tcfg = training.TrainConfig(episodes=episodes, augment=augment, lr=0.05, seed=1)
    return training.train(seqs, CFG, mcts.SearchConfig(simulations=4), tcfg)


def test_train_is_deterministic_and_logs_every_episode():
    a, b = _run(False), _run(False)
    assert np.array_equal(a.params.flat(), b.params.flat())
    assert a.curve == b.curve
    assert [r["episode"] for r in a.curve] == [0, 1, 2]
    assert len(a.losses) == 3 * training.TrainConfig().updates_per_episode
    assert all(np.isfinite(r["loss"]) and np.isfinite(r["fresh_loss"]) for r in a.curve)


def test_augmentation_multiplies_samples_and_keeps_sequence_order():
    plain, aug = _run(False, 1), _run(True, 1)
    assert aug.curve[0]["samples"] == 8 * plain.curve[0]["samples"]
    # the first episode is played before any update, so both runs see the same game
    assert aug.curve[0]["reward"] == plain.curve[0]["reward"]
    assert aug.curve[0]["fresh_loss"] == plain.curve[0]["fresh_loss"]


def test_episodes_to_threshold():
    curve = [{"episode": i, "loss": v} for i, v in enumerate([5, 4, 3, 2, 1, 1])]
    assert training.episodes_to_threshold(curve, 3.0, window=1) == 2
    assert training.episodes_to_threshold(curve, 2.0, window=2) == 4
    assert training.episodes_to_threshold(curve, 0.5) is None
