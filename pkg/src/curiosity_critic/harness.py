"""Seeded runs of the exploration loop and multi-seed suites."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from curiosity_critic import critics
from curiosity_critic.env import (
    GRID,
    START,
    STOCHASTIC_COL,
    NoisyTvEnv,
    encode_state,
    step,
    valid_actions,
)
from curiosity_critic.policy import RewardNormalizer, VTable
from curiosity_critic.rewards import (
    CuriosityCritic,
    CuriosityV1,
    CuriosityV2,
    RandomReward,
    RewardMethod,
    RndPair,
    RndReward,
    StepContext,
    VisitCount,
)
from curiosity_critic.rng import substream
from curiosity_critic.tensor_nn import NumericalError
from curiosity_critic.world_model import WorldModel

log = logging.getLogger(__name__)

METHODS = (
    "random",
    "v1",
    "v2",
    "visit-count",
    "rnd-state",
    "rnd-obs",
    "cc-tabular",
    "cc-neural",
    "cc-oracle",
)

WINDOW = 5000
THRESHOLDS = (3.0, 2.5, 2.0)


class RunAborted(RuntimeError):
    def __init__(self, step: int, reason: str):
        super().__init__(f"run aborted at step {step}: {reason}")
        self.step = step
        self.reason = reason


def make_method(name: str, seed: int) -> RewardMethod:
    if name == "random":
        return RandomReward()
    if name == "v1":
        return CuriosityV1()
    if name == "v2":
        return CuriosityV2()
    if name == "visit-count":
        return VisitCount()
    if name in ("rnd-state", "rnd-obs"):
        mode = "state" if name == "rnd-state" else "obs"
        pair = RndPair(mode, substream(seed, "rnd_target"), substream(seed, "rnd_predictor"))
        return RndReward(pair, name=name)
    if name == "cc-neural":
        return CuriosityCritic(critics.NeuralCritic(substream(seed, "critic_init")), name=name)
    if name == "cc-tabular":
        return CuriosityCritic(critics.TabularCritic(), name=name)
    if name == "cc-oracle":
        return CuriosityCritic(critics.OracleCritic(), name=name)
    raise ValueError(f"unknown method {name!r}; expected one of {', '.join(METHODS)}")


NORMALIZERS = ("centered", "rms")


@dataclass
class RunConfig:
    method: str
    seed: int
    total_steps: int = 35_000
    warmup_steps: int = 100
    eval_every: int = 100
    # Columns >= stochastic_col are noisy; 0 gives an all-noise grid.
    stochastic_col: int = STOCHASTIC_COL
    keep_reward_trace: bool = False
    # "centered" subtracts a running mean inside the spread estimate; "rms" does not.
    normalizer: str = "centered"
    # Recorded for provenance only; the values are fixed by the model code.
    constants: dict = field(
        default_factory=lambda: {
            "grid": GRID,
            "obs_dim": 200,
            "world_model": [60, 1024, 200],
            "critic": [60, 128, 1],
            "rnd": ["in", 128, 128],
            "adam": {"lr": 1e-3, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8},
            "v_init": 3.0,
            "v_alpha": 0.05,
            "epsilon": 0.3,
            "normalizer_decay": 0.99,
            "tabular_decay": 0.9,
        }
    )

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.total_steps <= 0 or self.eval_every <= 0 or self.total_steps % self.eval_every:
            raise ValueError("eval_every must divide a positive total_steps")
        if self.warmup_steps < 0:
            raise ValueError("warmup_steps must be >= 0")
        if self.normalizer not in NORMALIZERS:
            raise ValueError(f"normalizer must be one of {NORMALIZERS}")
        if not 0 <= self.stochastic_col <= STOCHASTIC_COL:
            raise ValueError(f"stochastic_col must be in [0, {STOCHASTIC_COL}]")


@dataclass
class RunResult:
    method: str
    seed: int
    total_steps: int
    eval_curve: list  # [step, mean_det_error]
    visit_log: dict  # windowed 30x30 visit histograms
    det_fraction: dict  # named windows plus a per-eval-block curve
    critic_curves: list  # [step, mean_det_estimate, mean_stoch_estimate]
    final_error: float
    per_step_rewards: dict

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> RunResult:
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


def _window_fraction(det_steps: np.ndarray, start: int, end: int):
    end = min(end, det_steps.size)
    if end <= start:
        return None
    return float(det_steps[start:end].mean())


def run_experiment(cfg: RunConfig, eval_hook=None) -> RunResult:
    """Run one method for one seed.

    ``eval_hook(step, wm, env)``, if given, is called at every evaluation point;
    tests use it to probe the model mid-run.
    """
    seed = cfg.seed
    env = NoisyTvEnv(seed, stochastic_cols=cfg.stochastic_col)
    wm = WorldModel(substream(seed, "wm_init"))
    method = make_method(cfg.method, seed)
    estimator = method.estimator
    policy_rng = substream(seed, "policy")
    warmup_rng = substream(seed, "warmup")
    norm = RewardNormalizer(centered=cfg.normalizer == "centered")
    vtable = VTable()
    visits = np.ones((GRID, GRID), dtype=np.int64)

    eval_cells = env.eval_cells()
    eval_inputs = np.stack([encode_state(c) for c in eval_cells]) if eval_cells else None
    eval_targets = env.eval_targets() if eval_cells else None
    det_grid = [(r, c) for r in range(GRID) for c in range(STOCHASTIC_COL)]
    stoch_grid = [(r, c) for r in range(GRID) for c in range(STOCHASTIC_COL, GRID)]

    def evaluate():
        if eval_inputs is None:
            return float("nan")
        return float(wm.eval_errors(eval_inputs, eval_targets).mean())

    cell = START
    for _ in range(cfg.warmup_steps):
        wm.update(cell, env.observe(cell))
        acts = valid_actions(cell)
        cell = step(cell, acts[warmup_rng.integers(len(acts))])
    cell = START

    n = cfg.total_steps
    det_steps = np.zeros(n, dtype=bool)
    rewards = np.zeros(n)
    n_windows = -(-n // WINDOW)
    hists = np.zeros((n_windows, GRID, GRID), dtype=np.int64)
    last5k = np.zeros((GRID, GRID), dtype=np.int64)
    eval_curve, critic_curves = [], []

    for t in range(n):
        obs = env.observe(cell)
        try:
            e_before, e_after = wm.update(cell, obs)
            r_idx, c_idx = cell
            visits[r_idx, c_idx] += 1
            if estimator is not None:
                estimator.observe(cell, e_after)
            ctx = StepContext(cell, obs, e_before, e_after, int(visits[r_idx, c_idx]))
            r = method.compute(ctx)
            if not np.isfinite(r):
                raise NumericalError(f"non-finite reward {r}")
            if method.drives_policy:
                vtable.update(cell, norm.normalize(r))
                action = vtable.select_action(cell, policy_rng)
            else:
                acts = valid_actions(cell)
                action = acts[policy_rng.integers(len(acts))]
        except (NumericalError, FloatingPointError) as exc:
            raise RunAborted(t + 1, str(exc)) from exc
        rewards[t] = r
        det_steps[t] = not env.is_stochastic(cell)
        hists[t // WINDOW, r_idx, c_idx] += 1
        if t >= n - WINDOW:
            last5k[r_idx, c_idx] += 1
        cell = step(cell, action)

        done = t + 1
        if done % cfg.eval_every == 0:
            eval_curve.append([done, evaluate()])
            if estimator is not None:
                critic_curves.append(
                    [
                        done,
                        float(estimator.estimate_many(det_grid).mean()),
                        float(estimator.estimate_many(stoch_grid).mean()),
                    ]
                )
            if eval_hook is not None:
                eval_hook(done, wm, env)

    blocks = det_steps.reshape(-1, cfg.eval_every).mean(axis=1)
    det_fraction = {
        "early": _window_fraction(det_steps, 0, 5000),
        "mid": _window_fraction(det_steps, 15000, 20000),
        "late": _window_fraction(det_steps, 30000, 35000),
        "last5k": _window_fraction(det_steps, max(0, n - WINDOW), n),
        "curve": [[(i + 1) * cfg.eval_every, float(f)] for i, f in enumerate(blocks)],
    }
    visit_log = {
        "window": WINDOW,
        "windows": [
            {"start": k * WINDOW, "end": min((k + 1) * WINDOW, n), "counts": hists[k].tolist()}
            for k in range(n_windows)
        ],
        "last5k": last5k.tolist(),
    }
    per_step_rewards = {
        "block": cfg.eval_every,
        "block_mean": [float(x) for x in rewards.reshape(-1, cfg.eval_every).mean(axis=1)],
    }
    if cfg.keep_reward_trace:
        per_step_rewards["trace"] = rewards.tolist()

    return RunResult(
        method=cfg.method,
        seed=seed,
        total_steps=n,
        eval_curve=eval_curve,
        visit_log=visit_log,
        det_fraction=det_fraction,
        critic_curves=critic_curves,
        final_error=eval_curve[-1][1],
        per_step_rewards=per_step_rewards,
    )


def first_crossing(curve, threshold: float):
    """Earliest step whose error is strictly below ``threshold``.

    Accepts a :class:`RunResult` or a list of ``[step, error]`` pairs.
    """
    if threshold <= 0:
        return None
    if isinstance(curve, RunResult):
        curve = curve.eval_curve
    for step_, err in curve:
        if err < threshold:
            return int(step_)
    return None


@dataclass
class MethodSummary:
    method: str
    seeds: list
    finals: list  # None where the run failed
    mean: float | None
    std: float | None
    mean_curve: list  # [step, mean, std] over successful seeds
    crossings: dict  # threshold -> step on the seed-averaged curve
    crossings_per_seed: dict  # threshold -> list per seed


@dataclass
class SuiteResult:
    runs: dict  # (method, seed) -> RunResult
    failures: dict  # (method, seed) -> message
    summaries: dict  # method -> MethodSummary

    @property
    def complete(self) -> bool:
        return not self.failures


def _run_job(args):
    method, seed, steps, normalizer = args
    try:
        return method, seed, run_experiment(RunConfig(method, seed, total_steps=steps, normalizer=normalizer)), None
    except RunAborted as exc:
        return method, seed, None, str(exc)


def summarize(method: str, seeds, runs: dict) -> MethodSummary:
    done = [runs[(method, s)] for s in seeds if (method, s) in runs]
    finals = [runs[(method, s)].final_error if (method, s) in runs else None for s in seeds]
    ok = [f for f in finals if f is not None]
    mean = float(np.mean(ok)) if ok else None
    std = float(np.std(ok)) if ok else None
    mean_curve, crossings = [], {}
    if done:
        errs = np.array([[e for _, e in r.eval_curve] for r in done])
        steps_ = [s for s, _ in done[0].eval_curve]
        mu, sd = errs.mean(axis=0), errs.std(axis=0)
        mean_curve = [[int(s), float(m), float(d)] for s, m, d in zip(steps_, mu, sd)]
        crossings = {th: first_crossing([[s, m] for s, m, _ in mean_curve], th) for th in THRESHOLDS}
    per_seed = {th: [first_crossing(r, th) for r in done] for th in THRESHOLDS}
    return MethodSummary(method, list(seeds), finals, mean, std, mean_curve, crossings, per_seed)


def run_suite(
    methods, seeds, total_steps: int = 35_000, jobs: int = 1, progress=None, normalizer: str = "centered"
) -> SuiteResult:
    """Run every (method, seed) pair and aggregate per method.

    Runs are independent; with ``jobs > 1`` they execute in worker processes.
    ``progress(method, seed, result_or_None)`` is called as each run finishes.
    """
    methods, seeds = list(methods), list(seeds)
    if not methods or not seeds:
        raise ValueError("methods and seeds must be non-empty")
    todo = [(m, s, total_steps, normalizer) for m in methods for s in seeds]
    runs, failures = {}, {}

    def collect(out):
        method, seed, result, err = out
        if result is None:
            failures[(method, seed)] = err
            log.warning("%s seed %s failed: %s", method, seed, err)
        else:
            runs[(method, seed)] = result
        if progress is not None:
            progress(method, seed, result)

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for out in pool.map(_run_job, todo):
                collect(out)
    else:
        for job in todo:
            collect(_run_job(job))
    summaries = {m: summarize(m, seeds, runs) for m in methods}
    return SuiteResult(runs, failures, summaries)
