"""Numerical checks of the cumulative-improvement algebra.

An error matrix ``E`` of shape ``(T+2, T+2)`` holds ``E[t, k]``, the error of
the model after ``t`` updates on the transition visited at step ``k``. Only
the lower triangle (k <= t) and the last row are ever read.

Sums go through :func:`math.fsum` so that identities which hold exactly in
real arithmetic also hold to the last bit where the terms cancel exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from curiosity_critic import critics
from curiosity_critic.rewards import (
    CuriosityCritic,
    CuriosityV1,
    CuriosityV2,
    StepContext,
)


class TheoryViolation(AssertionError):
    def __init__(self, check: str, detail: str, matrix=None):
        super().__init__(f"{check}: {detail}")
        self.check = check
        self.matrix = matrix


def _as_matrix(E) -> np.ndarray:
    E = np.asarray(E, dtype=np.float64)
    if E.ndim != 2 or E.shape[0] != E.shape[1] or E.shape[0] < 2:
        raise ValueError(f"error matrix must be square with side >= 2, got {E.shape}")
    if not np.all(np.isfinite(E)) or np.any(E < 0):
        raise ValueError("error matrix entries must be finite and non-negative")
    return E


def _check_gamma(gamma: float, allow_one: bool) -> None:
    hi_ok = gamma <= 1.0 if allow_one else gamma < 1.0
    if not (gamma > 0.0 and hi_ok):
        raise ValueError(f"gamma {gamma} outside {'(0, 1]' if allow_one else '(0, 1)'}")


def cumulative_C(E, gamma: float) -> float:
    """Discounted sum over t of the one-update change in error on every
    transition seen so far; the direct O(T^2) double sum."""
    _check_gamma(gamma, allow_one=True)
    E = _as_matrix(E)
    T = E.shape[0] - 2
    terms = []
    for t in range(T + 1):
        w = gamma**t
        for k in range(t + 1):
            terms.append(w * E[t, k])
            terms.append(-w * E[t + 1, k])
    return math.fsum(terms)


def decomposed_C(E, gamma: float) -> tuple[float, float]:
    """Split ``cumulative_C`` into (history term, per-step term)."""
    _check_gamma(gamma, allow_one=False)
    E = _as_matrix(E)
    T = E.shape[0] - 2
    hist = math.fsum(gamma**t * E[t, k] for t in range(T + 1) for k in range(t + 1))
    history = (1.0 - 1.0 / gamma) * hist
    tail = gamma ** (T + 1)
    per_step = math.fsum(
        term
        for t in range(T + 2)
        for term in (gamma**t * E[t, t], -tail * E[T + 1, t])
    ) / gamma
    return history, per_step


def per_step_gamma1(E) -> float:
    """Undiscounted per-step form: each transition's error when visited minus
    its error under the final model."""
    E = _as_matrix(E)
    T = E.shape[0] - 2
    terms = []
    for t in range(T + 1):
        terms.append(E[t, t])
        terms.append(-E[T + 1, t])
    return math.fsum(terms)


def upper_bound_slack(E, gamma: float) -> float:
    """Gap between the per-step term and the exact cumulative value (>= 0)."""
    history, _ = decomposed_C(E, gamma)
    return -history


def jensen_check(samples) -> tuple[float, float]:
    """(mean distance to the sample mean, root of the summed variances)."""
    X = np.asarray(samples, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least two equal-length samples")
    mu = X.mean(axis=0)
    lhs = float(np.linalg.norm(X - mu, axis=1).mean())
    rhs = float(np.sqrt(X.var(axis=0).sum()))
    return lhs, rhs


def adversarial_matrices(T: int = 8) -> dict[str, np.ndarray]:
    n = T + 2
    spike = np.zeros((n, n))
    spike[n // 2, n // 3] = 5.0
    const_rows = np.repeat(np.linspace(1.0, 4.0, n)[:, None], n, axis=1)
    geo = 10.0 * 0.5 ** np.arange(n)[:, None] * np.ones((1, n))
    return {
        "zeros": np.zeros((n, n)),
        "constant": np.full((n, n), 3.0),
        "single_spike": spike,
        "constant_rows": const_rows,
        "geometric_rows": geo,
        "last_row_zero": np.vstack([np.full((n - 1, n), 2.0), np.zeros((1, n))]),
    }


def random_matrix(rng: np.random.Generator, tmax: int) -> np.ndarray:
    T = int(rng.integers(0, tmax + 1))
    return rng.uniform(0.0, 10.0, size=(T + 2, T + 2))


@dataclass
class CheckReport:
    name: str
    max_deviation: float
    tolerance: float
    cases: int
    passed: bool
    note: str = ""
    offending: list | None = field(default=None, repr=False)


def _matrices(rng, trials, tmax):
    for name, E in adversarial_matrices().items():
        yield name, E
    for i in range(trials):
        yield f"random[{i}]", random_matrix(rng, tmax)


def check_telescoping(rng, trials=1000, tmax=32, tol=1e-12) -> CheckReport:
    worst, bad, n = 0.0, None, 0
    for _, E in _matrices(rng, trials, tmax):
        dev = abs(per_step_gamma1(E) - cumulative_C(E, 1.0))
        n += 1
        worst = max(worst, dev)
        if dev > tol and bad is None:
            bad = E
    return _report("telescoping (gamma=1)", worst, tol, n, bad)


def check_decomposition(rng, trials=1000, tmax=32, gammas=(0.5, 0.9, 0.99, 0.999), tol=1e-9):
    worst, bad, n = 0.0, None, 0
    for _, E in _matrices(rng, trials, tmax):
        for g in gammas:
            h, p = decomposed_C(E, g)
            dev = abs(h + p - cumulative_C(E, g))
            n += 1
            worst = max(worst, dev)
            if dev > tol and bad is None:
                bad = E
    return _report("decomposition", worst, tol, n, bad)


def check_upper_bound(rng, trials=1000, tmax=32, gammas=(0.5, 0.9, 0.99, 0.999)):
    """per-step term >= C for every matrix and gamma; slack shrinks toward gamma=1.

    Reported deviation is the largest amount by which the bound is violated.
    """
    worst, bad, n = 0.0, None, 0
    monotone_failures = 0
    ladder = [1.0 - 10.0**-k for k in range(1, 7)]
    for _, E in _matrices(rng, trials, tmax):
        for g in gammas:
            _, p = decomposed_C(E, g)
            viol = cumulative_C(E, g) - p
            n += 1
            worst = max(worst, viol)
            if viol > 1e-9 and bad is None:
                bad = E
        if np.any(E[:-1] > 0):
            slacks = [upper_bound_slack(E, g) for g in ladder]
            if not all(a > b for a, b in zip(slacks, slacks[1:])):
                monotone_failures += 1
                if bad is None:
                    bad = E
    rep = _report("upper bound", max(worst, 0.0), 1e-9, n, bad)
    rep.note = f"slack not strictly decreasing on {monotone_failures} matrices"
    rep.passed = rep.passed and monotone_failures == 0
    return rep


def check_special_cases(rng, trials=10_000) -> CheckReport:
    """Zero baseline reproduces raw error; post-update baseline reproduces
    the one-step improvement. Both must match bit for bit."""
    zero = CuriosityCritic(critics.ZeroBaseline())
    post = CuriosityCritic(critics.PostUpdateBaseline())
    v1, v2 = CuriosityV1(), CuriosityV2()
    worst = 0.0
    for _ in range(trials):
        e_b, e_a = rng.uniform(0.0, 15.0, size=2)
        cell = (int(rng.integers(30)), int(rng.integers(30)))
        ctx = StepContext(cell, None, float(e_b), float(e_a), 1)
        post.estimator.observe(cell, float(e_a))
        worst = max(
            worst,
            abs(zero.compute(ctx) - v1.compute(ctx)),
            abs(post.compute(ctx) - v2.compute(ctx)),
            abs(zero.compute(ctx) - e_b),
            abs(post.compute(ctx) - (e_b - e_a)),
        )
    return _report("special cases", worst, 0.0, trials, None)


def check_jensen(rng, trials=1000) -> CheckReport:
    worst, n = 0.0, 0
    for _ in range(trials):
        k = int(rng.integers(2, 50))
        d = int(rng.integers(1, 40))
        X = rng.normal(size=(k, d)) * rng.uniform(0.1, 5.0)
        if rng.random() < 0.5:
            X = (X > 0).astype(np.float64)
        lhs, rhs = jensen_check(X)
        worst = max(worst, lhs - rhs)
        n += 1
    eq_dev = 0.0
    for a in rng.uniform(-5, 5, size=100):
        w = rng.uniform(0.1, 5.0)
        lhs, rhs = jensen_check(np.array([[a - w], [a + w]]))
        eq_dev = max(eq_dev, abs(lhs - rhs))
        n += 1
    rep = _report("jensen", max(worst, 0.0), 1e-12, n, None)
    rep.note = f"two-point 1-D equality max |lhs-rhs| = {eq_dev:.3e}"
    rep.passed = rep.passed and eq_dev <= 1e-12
    return rep


def _report(name, worst, tol, n, bad) -> CheckReport:
    return CheckReport(
        name=name,
        max_deviation=float(worst),
        tolerance=tol,
        cases=n,
        passed=worst <= tol and bad is None,
        offending=None if bad is None else np.asarray(bad).tolist(),
    )


def run_all(trials: int = 1000, tmax: int = 32, seed: int = 0) -> list[CheckReport]:
    rng = np.random.default_rng(seed)
    return [
        check_telescoping(rng, trials, tmax),
        check_decomposition(rng, trials, tmax),
        check_upper_bound(rng, trials, tmax),
        check_special_cases(rng, trials=10 * trials),
        check_jensen(rng, trials),
    ]
