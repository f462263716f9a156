"""Smoke tests for the python bindings."""

import math

import numpy as np
import pytest

import acgm


def test_fixed_baseline_graph():
    g = acgm.fixed_baseline_dag()
    assert g.shape == (10, 10)
    assert acgm.edge_count(g) == 28
    assert acgm.is_acyclic(g)
    assert acgm.nilpotent_index(g) == acgm.longest_path_edges(g) + 1


def test_acyclicity_matches_cycle_detection():
    chain = np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]], dtype=float)
    assert acgm.acyclicity_value(chain) == 0.0
    assert acgm.topological_order(chain) == [0, 1, 2]
    assert acgm.parents_of(chain, 2) == [1]

    two_cycle = np.array([[0, 1], [1, 0]], dtype=float)
    assert not acgm.is_acyclic(two_cycle)
    assert acgm.acyclicity_value(two_cycle) > 1.0
    assert acgm.matexp_trace(two_cycle) == pytest.approx(2 * math.cosh(1.0), rel=1e-6)
    with pytest.raises(acgm.CyclicGraphError):
        acgm.topological_order(two_cycle)


def test_depth_and_gradients():
    w = np.array([[0, 0.5, 0.2], [0.0, 0, 0.7], [0.1, 0.3, 0]])
    k = 2
    h = 1e-5
    grad = acgm.depth_grad(w, k)
    for i in range(3):
        for j in range(3):
            up = w.copy()
            dn = w.copy()
            up[i, j] += h
            dn[i, j] -= h
            fd = (acgm.depth_value(up, k) - acgm.depth_value(dn, k)) / (2 * h)
            assert grad[i, j] == pytest.approx(fd, rel=1e-4, abs=1e-6)


def test_repair_produces_dags():
    rng = np.random.default_rng(0)
    for _ in range(20):
        w = rng.uniform(size=(4, 4))
        np.fill_diagonal(w, 0.0)
        sampled = (rng.uniform(size=(4, 4)) < w).astype(float)
        np.fill_diagonal(sampled, 0.0)
        dag = acgm.repair_to_dag(sampled, w)
        assert acgm.is_acyclic(dag)
        assert (dag <= sampled).all()


def test_cgs_env_reward():
    assert acgm.cgs_reward(0.0) == 0.0
    assert acgm.cgs_reward(5.0) == pytest.approx(5.0, abs=1e-12)
    env = acgm.CgsEnv(agents=4, episode_len=3, seed=1)
    obs = env.reset()
    assert len(obs) == 4 and obs[0].shape == (2,)
    obs, reward, done = env.step([10, 10, 10, 10])
    assert reward == 0.0 and not done


def test_training_entry_point(tmp_path):
    cfg = f"""
env.name = coordgame
gen.attn_layers = 1
gen.heads = 2
gen.hidden = 8
gen.feature_hidden = 8
policy.hidden = 8
policy.critic_hidden = 8
train.episodes = 25
train.warmup_episodes = 5
train.batch_episodes = 4
run.outdir = {tmp_path}/out
run.seed = 3
"""
    result = acgm.train_config_text(cfg)
    assert result["episodes_run"] == 25
    assert not result["aborted_nan"]
    summary = acgm.evaluate_checkpoint(result["checkpoint_path"], episodes=20)
    assert summary["episodes"] == 20
    assert 0.0 <= summary["mean_return"] <= 1.0

    with pytest.raises(acgm.ConfigError):
        acgm.train_config_text("train.episodes = 5\n")
