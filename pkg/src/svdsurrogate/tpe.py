"""Tree-structured Parzen estimator search over network hyperparameters.

The space is conditional: the third hidden width only exists for
three-layer networks and is recorded as 0 otherwise. Suggestions start
random, then model good/bad trial densities per dimension (smoothed
categoricals for the discrete dims, truncated-Gaussian mixtures for the
learning rate) and keep the candidate maximizing the density ratio.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtr, ndtri


@dataclass(frozen=True)
class SearchSpace:
    depth_choices: tuple[int, ...] = (2, 3)
    width_choices: tuple[int, ...] = (10, 20, 40, 60, 80, 100)
    lr_low: float = 0.001
    lr_high: float = 0.1


@dataclass(frozen=True)
class Hyperparams:
    """One point of the search space; width3 is 0 for two-layer networks."""

    depth: int
    width1: int
    width2: int
    width3: int
    learning_rate: float

    def validate(self, space: SearchSpace) -> None:
        if self.depth not in space.depth_choices:
            raise ValueError(f"depth {self.depth} not in {space.depth_choices}")
        if self.width1 not in space.width_choices or self.width2 not in space.width_choices:
            raise ValueError("hidden widths outside the search space")
        if self.depth == 3:
            if self.width3 not in space.width_choices:
                raise ValueError("three-layer networks need a positive third width")
        elif self.width3 != 0:
            raise ValueError("two-layer networks must record width3 = 0")
        if not space.lr_low <= self.learning_rate <= space.lr_high:
            raise ValueError(f"learning rate {self.learning_rate} outside bounds")

    def hidden_widths(self) -> tuple[int, ...]:
        if self.depth == 3:
            return (self.width1, self.width2, self.width3)
        return (self.width1, self.width2)


@dataclass(frozen=True)
class Trial:
    params: Hyperparams
    objective: float  # best validation MSE; +inf for failed runs
    seed: int
    duration: float


@dataclass(frozen=True)
class TpeConfig:
    n_trials: int = 100
    gamma: float = 0.25
    n_startup: int = 20
    n_ei_candidates: int = 24
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must be in (0, 1)")
        if self.n_startup >= self.n_trials:
            raise ValueError("n_startup must be smaller than n_trials")
        if self.n_ei_candidates < 1:
            raise ValueError("need at least one candidate draw")


def sample_random(space: SearchSpace, rng: np.random.Generator) -> Hyperparams:
    """Uniform draw over the conditional space."""
    depth = int(space.depth_choices[rng.integers(len(space.depth_choices))])
    width1 = int(space.width_choices[rng.integers(len(space.width_choices))])
    width2 = int(space.width_choices[rng.integers(len(space.width_choices))])
    width3 = int(space.width_choices[rng.integers(len(space.width_choices))]) if depth == 3 else 0
    lr = float(rng.uniform(space.lr_low, space.lr_high))
    return Hyperparams(depth, width1, width2, width3, lr)


def split_history(history: list[Trial], gamma: float) -> tuple[list[Trial], list[Trial]]:
    """Lowest ceil(gamma*N) objectives are good, rest bad; ties keep trial order."""
    if not history:
        raise ValueError("cannot split an empty history")
    n_good = math.ceil(gamma * len(history))
    order = sorted(range(len(history)), key=lambda i: (history[i].objective, i))
    good_idx = set(order[:n_good])
    good = [t for i, t in enumerate(history) if i in good_idx]
    bad = [t for i, t in enumerate(history) if i not in good_idx]
    return good, bad


class _CategoricalDensity:
    """Add-one smoothed categorical over a fixed choice set."""

    def __init__(self, observed: list[int], choices: tuple[int, ...]):
        counts = {c: 1.0 for c in choices}
        for v in observed:
            counts[v] += 1.0
        total = sum(counts.values())
        self.choices = choices
        self.probs = np.array([counts[c] / total for c in choices])

    def sample(self, rng: np.random.Generator) -> int:
        u = rng.uniform()
        return int(self.choices[int(np.searchsorted(np.cumsum(self.probs), u))])

    def log_pdf(self, value: int) -> float:
        return float(np.log(self.probs[self.choices.index(value)]))


class _LrDensity:
    """Mixture of truncated Gaussians at observed rates plus a uniform prior.

    Component bandwidths use the larger gap to the adjacent observation in
    sorted order (the interval bounds count as virtual neighbors), floored
    at 2% of the range.
    """

    def __init__(self, observed: list[float], low: float, high: float):
        self.low = low
        self.high = high
        span = high - low
        centers = np.sort(np.asarray(observed, dtype=np.float64))
        if centers.size:
            padded = np.concatenate([[low], centers, [high]])
            left = padded[1:-1] - padded[:-2]
            right = padded[2:] - padded[1:-1]
            bw = np.maximum(np.maximum(left, right), 0.02 * span)
        else:
            bw = np.empty(0)
        self.centers = centers
        self.bandwidths = bw
        # Precompute truncation masses for each component.
        if centers.size:
            self._cdf_low = ndtr((low - centers) / bw)
            self._cdf_high = ndtr((high - centers) / bw)
        self.n_components = centers.size + 1  # + uniform prior

    def sample(self, rng: np.random.Generator) -> float:
        idx = int(rng.integers(self.n_components))
        if idx == self.centers.size:
            return float(rng.uniform(self.low, self.high))
        u = rng.uniform()
        mass = self._cdf_low[idx] + u * (self._cdf_high[idx] - self._cdf_low[idx])
        x = self.centers[idx] + self.bandwidths[idx] * ndtri(mass)
        return float(min(max(x, self.low), self.high))

    def log_pdf(self, x: float) -> float:
        dens = 1.0 / (self.high - self.low)  # prior component
        if self.centers.size:
            z = (x - self.centers) / self.bandwidths
            phi = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
            dens += float(np.sum(phi / (self.bandwidths * (self._cdf_high - self._cdf_low))))
        return math.log(dens / self.n_components)


class _ParzenModel:
    """Per-dimension densities fitted to one side (good or bad) of the history."""

    def __init__(self, trials: list[Trial], space: SearchSpace):
        self.space = space
        self.depth = _CategoricalDensity([t.params.depth for t in trials], space.depth_choices)
        self.width1 = _CategoricalDensity([t.params.width1 for t in trials], space.width_choices)
        self.width2 = _CategoricalDensity([t.params.width2 for t in trials], space.width_choices)
        deep = [t for t in trials if t.params.depth == 3]
        self.width3 = _CategoricalDensity([t.params.width3 for t in deep], space.width_choices)
        self.lr = _LrDensity([t.params.learning_rate for t in trials], space.lr_low, space.lr_high)

    def sample(self, rng: np.random.Generator) -> Hyperparams:
        depth = self.depth.sample(rng)
        width1 = self.width1.sample(rng)
        width2 = self.width2.sample(rng)
        width3 = self.width3.sample(rng) if depth == 3 else 0
        lr = self.lr.sample(rng)
        return Hyperparams(depth, width1, width2, width3, lr)

    def log_pdf(self, p: Hyperparams) -> float:
        total = (
            self.depth.log_pdf(p.depth)
            + self.width1.log_pdf(p.width1)
            + self.width2.log_pdf(p.width2)
            + self.lr.log_pdf(p.learning_rate)
        )
        if p.depth == 3:
            total += self.width3.log_pdf(p.width3)
        return total


def suggest(
    history: list[Trial],
    space: SearchSpace,
    config: TpeConfig,
    rng: np.random.Generator,
) -> Hyperparams:
    """Next configuration to evaluate: random during startup, then the
    candidate (drawn from the good-trial density) with the best good/bad
    density ratio."""
    if len(history) < config.n_startup:
        return sample_random(space, rng)
    good, bad = split_history(history, config.gamma)
    good_model = _ParzenModel(good, space)
    bad_model = _ParzenModel(bad, space)
    best: Hyperparams | None = None
    best_score = -np.inf
    for _ in range(config.n_ei_candidates):
        cand = good_model.sample(rng)
        score = good_model.log_pdf(cand) - bad_model.log_pdf(cand)
        if score > best_score:
            best, best_score = cand, score
    assert best is not None
    return best


def _run_loop(objective, space, config, propose) -> tuple[Trial, list[Trial]]:
    rng = np.random.default_rng(config.seed)
    history: list[Trial] = []
    for _ in range(config.n_trials):
        trial_seed = int(rng.integers(0, 2**31 - 1))
        params = propose(history, rng)
        started = time.perf_counter()
        try:
            value = float(objective(params, trial_seed))
        except Exception:
            value = float("inf")
        if not np.isfinite(value):
            value = float("inf")
        history.append(
            Trial(params, value, trial_seed, time.perf_counter() - started)
        )
    best = min(enumerate(history), key=lambda it: (it[1].objective, it[0]))[1]
    return best, history


def run_tuning(objective, space: SearchSpace, config: TpeConfig) -> tuple[Trial, list[Trial]]:
    """Sequential TPE loop: suggest, evaluate objective(params, seed), repeat.

    Exceptions and non-finite objective values are recorded as failed trials
    with +inf objective and the loop continues. Deterministic given
    config.seed.
    """
    return _run_loop(
        objective, space, config, lambda hist, rng: suggest(hist, space, config, rng)
    )


def run_random_search(objective, space: SearchSpace, config: TpeConfig) -> tuple[Trial, list[Trial]]:
    """Pure random-search baseline with the same loop and seed handling."""
    return _run_loop(objective, space, config, lambda hist, rng: sample_random(space, rng))


def save_history_csv(history: list[Trial], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "L", "N1", "N2", "N3", "lr", "objective", "duration"])
        for i, t in enumerate(history):
            writer.writerow(
                [
                    i,
                    t.params.depth,
                    t.params.width1,
                    t.params.width2,
                    t.params.width3,
                    repr(t.params.learning_rate),
                    repr(t.objective),
                    f"{t.duration:.6f}",
                ]
            )
