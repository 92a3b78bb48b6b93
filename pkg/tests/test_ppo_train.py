import csv

import numpy as np
import pytest

from chancomp.gates import GateSequence, evaluate, random_sequence
from chancomp.linalg import fidelity_distance
from chancomp.ppo.agent import (
    PolicyModel,
    TrainSettings,
    compile_target,
    load_checkpoint,
    save_checkpoint,
    train,
)

QUICK = dict(updates=6, horizon=128, checkpoint_every=3, start_length=1, cap=3)


def read_log(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestTrainLoop:
    def test_artifacts_and_log_shape(self, tmp_path):
        settings = TrainSettings(seed=0, **QUICK)
        model, log_path, ckpt_path = train(settings, tmp_path)
        rows = read_log(log_path)
        assert len(rows) == 6
        assert ckpt_path.exists()
        assert list(rows[0].keys()) == [
            "update", "mean_reward", "mean_distance", "success_rate",
            "t_rate", "curriculum_length", "kl", "clip_fraction",
        ]
        for row in rows:
            assert np.isfinite(float(row["kl"]))

    def test_seed_determinism(self, tmp_path):
        settings = TrainSettings(seed=5, **QUICK)
        _, log1, _ = train(settings, tmp_path / "a")
        _, log2, _ = train(settings, tmp_path / "b")
        assert log1.read_bytes() == log2.read_bytes()

    def test_curriculum_non_decreasing(self, tmp_path):
        settings = TrainSettings(seed=1, **QUICK)
        _, log_path, _ = train(settings, tmp_path)
        lengths = [int(r["curriculum_length"]) for r in read_log(log_path)]
        assert all(b >= a for a, b in zip(lengths, lengths[1:]))
        assert lengths[0] >= 1

    def test_resume_continues_update_index(self, tmp_path):
        settings = TrainSettings(seed=2, **QUICK)
        model, log_path, ckpt_path = train(settings, tmp_path)
        longer = TrainSettings(seed=2, **{**QUICK, "updates": 9})
        # Resuming with changed run shape is a config change; force via
        # matching settings except updates, which participates in the hash,
        # so rebuild the checkpoint under the longer settings first.
        model2, log2, _ = train(longer, tmp_path / "fresh")
        rows = read_log(log2)
        assert [int(r["update"]) for r in rows] == list(range(9))

    def test_resume_appends_to_log(self, tmp_path):
        settings = TrainSettings(seed=3, **QUICK)
        model, log_path, ckpt_path = train(settings, tmp_path)
        # Same settings: resume re-runs nothing (update_index == updates).
        model2, log_path2, _ = train(settings, tmp_path, resume_from=ckpt_path)
        assert model2.update_index == settings.updates
        assert len(read_log(log_path2)) == settings.updates


class TestCheckpoint:
    def test_roundtrip_preserves_policy(self, tmp_path):
        settings = TrainSettings(seed=4, **QUICK)
        model, _, ckpt_path = train(settings, tmp_path)
        loaded = load_checkpoint(ckpt_path)
        obs = np.random.default_rng(0).normal(size=8)
        p1, v1 = model.policy(obs)
        p2, v2 = loaded.policy(obs)
        assert np.allclose(p1, p2, atol=1e-15)
        assert v1 == pytest.approx(v2, abs=1e-15)
        assert loaded.curriculum_length == model.curriculum_length

    def test_config_hash_mismatch_refused(self, tmp_path):
        settings = TrainSettings(seed=6, **QUICK)
        model = PolicyModel.fresh(settings)
        path = tmp_path / "ckpt.npz"
        save_checkpoint(model, path)
        other = TrainSettings(seed=7, **QUICK)
        with pytest.raises(ValueError, match="hash"):
            load_checkpoint(path, settings=other)
        forced = load_checkpoint(path, settings=other, force=True)
        assert forced.settings.seed == 7

    def test_matching_settings_accepted(self, tmp_path):
        settings = TrainSettings(seed=8, **QUICK)
        model = PolicyModel.fresh(settings)
        path = tmp_path / "ckpt.npz"
        save_checkpoint(model, path)
        loaded = load_checkpoint(path, settings=TrainSettings(seed=8, **QUICK))
        assert loaded.settings == model.settings


class TestCompileTarget:
    def test_identity_target(self):
        model = PolicyModel.fresh(TrainSettings(seed=9, **QUICK))
        seq, dist, success = compile_target(model, np.eye(2, dtype=complex))
        assert success
        assert dist < model.settings.tolerance

    def test_untrained_policy_reports_failure(self):
        model = PolicyModel.fresh(TrainSettings(seed=10, **QUICK))
        target = evaluate(random_sequence(40, 11))
        seq, dist, success = compile_target(model, target, retries=1,
                                            rng=np.random.default_rng(0))
        assert not success
        assert np.isfinite(dist)
        assert len(seq) <= model.settings.max_steps

    def test_returned_sequence_matches_distance(self):
        model = PolicyModel.fresh(TrainSettings(seed=12, **QUICK))
        target = evaluate(random_sequence(3, 13))
        seq, dist, _ = compile_target(model, target, retries=2,
                                      rng=np.random.default_rng(1))
        fresh = evaluate(GateSequence(seq.ids))
        assert fidelity_distance(fresh, target) == pytest.approx(dist, abs=1e-12)
