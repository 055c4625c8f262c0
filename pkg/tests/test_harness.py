import json
import math

import numpy as np
import pytest
from suite_cache import ensure_suite

from curiosity_critic import cli
from curiosity_critic import harness as H
from curiosity_critic.rewards import CuriosityV1
from curiosity_critic.world_model import wm_eval_deterministic


def run(method="cc-tabular", seed=0, steps=300, **kw):
    return H.run_experiment(H.RunConfig(method, seed, total_steps=steps, **kw))


@pytest.fixture(scope="module")
def tabular():
    return run(steps=600, keep_reward_trace=True)


@pytest.mark.parametrize(
    "kw",
    [
        {"method": "nope"},
        {"total_steps": 0},
        {"total_steps": 150},
        {"warmup_steps": -1},
        {"stochastic_col": 16},
        {"normalizer": "minmax"},
    ],
)
def test_config_validation(kw):
    args = {"method": "v1", "seed": 0, **kw}
    with pytest.raises(ValueError):
        H.RunConfig(**args)


def test_eval_schedule():
    r = run("random", steps=200)
    assert [s for s, _ in r.eval_curve] == [100, 200]
    assert r.final_error == r.eval_curve[-1][1]


def test_same_seed_is_bitwise_reproducible(tabular):
    again = run(steps=600, keep_reward_trace=True)
    assert json.dumps(again.to_dict()) == json.dumps(tabular.to_dict())


def test_different_seeds_differ():
    assert run("v1", 0, 200).eval_curve != run("v1", 1, 200).eval_curve


def test_round_trip(tabular):
    back = H.RunResult.from_dict(json.loads(json.dumps(tabular.to_dict())))
    assert back == tabular


def test_visit_accounting(tabular):
    counts = np.array(tabular.visit_log["windows"][0]["counts"])
    assert counts.sum() == 600
    assert np.array_equal(counts, np.array(tabular.visit_log["last5k"]))
    det = counts[:, :15].sum() / 600
    assert tabular.det_fraction["last5k"] == pytest.approx(det, abs=1e-12)
    assert tabular.det_fraction["early"] == pytest.approx(det, abs=1e-12)
    assert tabular.det_fraction["mid"] is None and tabular.det_fraction["late"] is None
    curve = tabular.det_fraction["curve"]
    assert [s for s, _ in curve] == list(range(100, 700, 100))
    assert np.mean([f for _, f in curve]) == pytest.approx(det, abs=1e-12)
    assert all(0.0 <= f <= 1.0 for _, f in curve)


def test_window_split():
    r = run("random", steps=5100)
    wins = r.visit_log["windows"]
    assert [(w["start"], w["end"]) for w in wins] == [(0, 5000), (5000, 5100)]
    assert sum(np.sum(w["counts"]) for w in wins) == 5100
    assert np.sum(r.visit_log["last5k"]) == 5000


def test_reward_trace_and_blocks(tabular):
    trace = np.array(tabular.per_step_rewards["trace"])
    assert trace.shape == (600,)
    np.testing.assert_allclose(tabular.per_step_rewards["block_mean"], trace.reshape(6, 100).mean(axis=1), rtol=1e-12)


def test_random_method_has_zero_reward_and_no_critic():
    r = run("random", steps=200, keep_reward_trace=True)
    assert not any(r.per_step_rewards["trace"])
    assert r.critic_curves == []


def test_v1_rewards_positive():
    r = run("v1", steps=200, keep_reward_trace=True)
    assert min(r.per_step_rewards["trace"]) > 0.0


def test_critic_curves(tabular):
    assert [c[0] for c in tabular.critic_curves] == [s for s, _ in tabular.eval_curve]
    assert all(c[1] >= 0 and c[2] >= 0 for c in tabular.critic_curves)


def test_oracle_critic_curve_is_flat():
    r = run("cc-oracle", steps=200)
    for _, det, stoch in r.critic_curves:
        assert det == 0.0
        assert stoch == pytest.approx(math.sqrt(50.0), abs=1e-12)


def test_eval_hook_does_not_perturb_run():
    probes = []

    def hook(step, wm, env):
        probes.append((step, wm_eval_deterministic(wm, env)))
        env.deterministic_pattern((0, 0))

    plain = run("cc-neural", steps=300)
    hooked = H.run_experiment(H.RunConfig("cc-neural", 0, total_steps=300), eval_hook=hook)
    assert hooked.to_dict() == plain.to_dict()
    assert [p[1] for p in probes] == [e for _, e in plain.eval_curve]


def test_all_noise_grid():
    r = run("v2", steps=200, stochastic_col=0)
    assert all(math.isnan(e) for _, e in r.eval_curve)
    assert r.det_fraction["last5k"] == 0.0


def test_warmup_changes_model_not_schedule():
    a, b = run("random", steps=200, warmup_steps=0), run("random", steps=200)
    assert [s for s, _ in a.eval_curve] == [s for s, _ in b.eval_curve]
    assert a.eval_curve != b.eval_curve
    # Policy stream is untouched by warmup, so the random walk is identical.
    assert a.visit_log == b.visit_log


def test_non_finite_reward_aborts(monkeypatch):
    calls = {"n": 0}

    def bad(self, ctx):
        calls["n"] += 1
        return float("nan") if calls["n"] == 7 else ctx.e_before

    monkeypatch.setattr(CuriosityV1, "compute", bad)
    with pytest.raises(H.RunAborted) as info:
        run("v1", steps=100)
    assert info.value.step == 7


@pytest.mark.parametrize(
    "curve, thr, expected",
    [
        ([[100, 5.0], [200, 2.9], [300, 2.0]], 3.0, 200),
        ([[100, 5.0], [200, 3.0], [300, 2.99]], 3.0, 300),
        ([[100, 5.0], [200, 4.0]], 3.0, None),
        ([[100, 1.0]], 0.0, None),
        ([[100, 2.0], [200, 9.0]], 2.5, 100),
        ([], 3.0, None),
    ],
)
def test_first_crossing(curve, thr, expected):
    assert H.first_crossing(curve, thr) == expected


def test_suite_shape():
    seen = []
    suite = H.run_suite(["random", "v2"], [0, 1], total_steps=200, progress=lambda m, s, r: seen.append((m, s)))
    assert sorted(suite.runs) == [("random", 0), ("random", 1), ("v2", 0), ("v2", 1)]
    assert sorted(seen) == sorted(suite.runs)
    assert suite.complete
    summ = suite.summaries["v2"]
    finals = [suite.runs[("v2", s)].final_error for s in (0, 1)]
    assert summ.finals == finals
    assert summ.mean == pytest.approx(np.mean(finals), abs=1e-12)
    assert summ.std == pytest.approx(np.std(finals, ddof=0), abs=1e-12)
    assert [row[0] for row in summ.mean_curve] == [100, 200]
    assert set(summ.crossings) == set(H.THRESHOLDS)
    assert all(len(v) == 2 for v in summ.crossings_per_seed.values())


def test_suite_needs_methods_and_seeds():
    with pytest.raises(ValueError):
        H.run_suite([], [1])
    with pytest.raises(ValueError):
        H.run_suite(["v1"], [])


def test_summary_records_failed_seed():
    ok = run("v1", 2, 100)
    summ = H.summarize("v1", [1, 2], {("v1", 2): ok})
    assert summ.finals == [None, ok.final_error]
    assert summ.mean == ok.final_error and summ.std == 0.0


def test_every_method_builds():
    for m in H.METHODS:
        method = H.make_method(m, 0)
        assert method.drives_policy == (m != "random")


# Full-length examples; these read the cached 9 x 5 suite.


@pytest.fixture(scope="module")
def full_runs():
    return cli.load_runs(ensure_suite())


def seed_mean(runs, method):
    return float(np.mean([r.final_error for r in runs[method]]))


@pytest.mark.slow
def test_full_suite_arity(full_runs):
    assert sorted(full_runs) == sorted(H.METHODS)
    assert sum(len(rs) for rs in full_runs.values()) == 45


@pytest.mark.slow
def test_full_v1_collapses(full_runs):
    assert 6.5 <= seed_mean(full_runs, "v1") <= 7.6
    for r in full_runs["v1"]:
        assert r.det_fraction["last5k"] < 0.05


@pytest.mark.slow
def test_full_neural_critic_beats_rnd_state(full_runs):
    assert seed_mean(full_runs, "cc-neural") < seed_mean(full_runs, "rnd-state")


@pytest.mark.slow
def test_full_oracle_at_most_neural(full_runs):
    assert seed_mean(full_runs, "cc-oracle") <= seed_mean(full_runs, "cc-neural")


@pytest.mark.slow
def test_full_neural_crosses_well_before_v2(full_runs):
    def crossing(method):
        curve = np.mean([[e for _, e in r.eval_curve] for r in full_runs[method]], axis=0)
        steps = [s for s, _ in full_runs[method][0].eval_curve]
        return H.first_crossing(list(zip(steps, curve)), 3.0)

    neural, v2 = crossing("cc-neural"), crossing("v2")
    assert neural is not None
    assert v2 is None or v2 - neural >= 5000
