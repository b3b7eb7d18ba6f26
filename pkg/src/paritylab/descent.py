"""Descent algorithms: population GD, single-sample SGD, coordinate descent.

All variants share one config: learning rate, per-sample derivative overflow
clamp (population GD only), weight projection range, per-edge additive noise,
initial-weight perturbation, optional fixed-point weight storage, and a
per-step coordinate budget.  Every run is deterministic given the config seed
and the sample source's seed; per-step noise and coordinate choices come from
independent child streams so that algorithm variants can be compared
step-for-step.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .netcore import (
    BudgetExceeded,
    DimensionMismatch,
    LossKind,
    NeuralNet,
    QuantizationSpec,
    SQUARED_ERROR,
    WeightVector,
    predict_label,
)


class EmptyPopulation(Exception):
    """Population gradient requested over zero samples."""


def clamp_psi(x, b: float):
    """Saturating clamp to [-b, b]: b if x > b, -b if x < -b, x otherwise."""
    if b <= 0:
        raise ValueError("clamp range must be positive")
    if not math.isfinite(b):
        return x
    return np.clip(x, -b, b)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseSpec:
    """Per-edge additive noise: none, Gaussian(variance), or Uniform(halfwidth)."""

    kind: str = "none"  # 'none' | 'gaussian' | 'uniform'
    variance: float = 0.0
    halfwidth: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian", "uniform"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.variance < 0 or self.halfwidth < 0:
            raise ValueError("noise parameters must be non-negative")

    @classmethod
    def none(cls):
        return cls("none")

    @classmethod
    def gaussian(cls, variance: float):
        return cls("gaussian", variance=variance)

    @classmethod
    def uniform(cls, halfwidth: float):
        return cls("uniform", halfwidth=halfwidth)

    @property
    def is_active(self) -> bool:
        # Gaussian(0) is equivalent to no noise
        if self.kind == "gaussian":
            return self.variance > 0
        if self.kind == "uniform":
            return self.halfwidth > 0
        return False

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.normal(0.0, math.sqrt(self.variance), size=size)
        if self.kind == "uniform":
            return rng.uniform(-self.halfwidth, self.halfwidth, size=size)
        return np.zeros(size)


@dataclass(frozen=True)
class DescentConfig:
    """Shared knobs for every descent variant.

    ``overflow_b`` clamps per-sample derivative contributions in population GD;
    ``weight_clamp_b`` projects stored weights into [-B, B]; ``coord_budget``
    None means plain (S)GD, an integer enables coordinate descent.
    """

    gamma: float
    steps: int
    overflow_b: float = math.inf
    weight_clamp_b: float = math.inf
    noise: NoiseSpec = NoiseSpec.none()
    init_perturb_variance: float = 0.0
    quantization: Optional[QuantizationSpec] = None
    coord_budget: Optional[int] = None
    coord_rule: str = "topk"  # 'topk' | 'randomk'
    seed: int = 0

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.overflow_b <= 0 or self.weight_clamp_b <= 0:
            raise ValueError("clamp ranges must be positive")
        if self.init_perturb_variance < 0:
            raise ValueError("init_perturb_variance must be >= 0")
        if self.coord_budget is not None and self.coord_budget < 1:
            raise ValueError("coord_budget must be >= 1 when set")
        if self.coord_rule not in ("topk", "randomk"):
            raise ValueError(f"unknown coord_rule {self.coord_rule!r}")


@dataclass(frozen=True)
class StepReport:
    """What one step changed; feeds the changed-variable-list reduction."""

    t: int
    changed_edges: tuple  # ((u, v), new_weight) pairs
    max_update: float  # max |gamma * clamped derivative| before noise
    overflow_hit: bool
    acc_bit: Optional[bool] = None

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "changed": [{"edge": list(e), "w": w} for e, w in self.changed_edges],
            "max_update": self.max_update,
            "overflow_hit": self.overflow_hit,
            "acc_bit": self.acc_bit,
        }


@dataclass
class RunLog:
    """Per-run record: step reports (optional) and the per-step accuracy bits."""

    algorithm: str
    steps: list = field(default_factory=list)
    acc_bits: list = field(default_factory=list)

    def write_jsonl(self, fileobj):
        for report in self.steps:
            fileobj.write(json.dumps(report.to_json()) + "\n")


# ---------------------------------------------------------------------------
# populations (for exact-expectation GD)
# ---------------------------------------------------------------------------

MAX_GRID_N = 20


@dataclass(frozen=True)
class Population:
    """Finite labeled population with explicit probabilities."""

    xs: np.ndarray  # (N, n)
    ys: np.ndarray  # (N,)
    probs: np.ndarray  # (N,), sums to 1

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=np.float64)
        ys = np.asarray(self.ys, dtype=np.float64)
        probs = np.asarray(self.probs, dtype=np.float64)
        if xs.ndim != 2 or ys.shape != (xs.shape[0],) or probs.shape != ys.shape:
            raise DimensionMismatch("population arrays have inconsistent shapes")
        if xs.shape[0] == 0:
            raise EmptyPopulation("population has no samples")
        if abs(float(probs.sum()) - 1.0) > 1e-9:
            raise ValueError("population probabilities must sum to 1")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_samples(cls, samples) -> "Population":
        """Uniform mass on an explicit (x, y) list."""
        if len(samples) == 0:
            raise EmptyPopulation("population has no samples")
        xs = np.array([x for x, _ in samples], dtype=np.float64)
        ys = np.array([y for _, y in samples], dtype=np.float64)
        probs = np.full(len(samples), 1.0 / len(samples))
        return cls(xs, ys, probs)

    @classmethod
    def uniform_grid(cls, n: int, labeler: Callable[[np.ndarray], np.ndarray]) -> "Population":
        """The full 2^n grid of +-1 inputs, labeled by ``labeler`` on the batch."""
        if n > MAX_GRID_N:
            raise BudgetExceeded(
                f"population GD over the full grid refused for n={n} > {MAX_GRID_N}"
            )
        idx = np.arange(2 ** n, dtype=np.uint64)
        bits = (idx[:, None] >> np.arange(n, dtype=np.uint64)[None, :]) & 1
        xs = 1.0 - 2.0 * bits.astype(np.float64)
        ys = np.asarray(labeler(xs), dtype=np.float64)
        probs = np.full(2 ** n, 2.0 ** (-n))
        return cls(xs, ys, probs)


# ---------------------------------------------------------------------------
# seeded stream layout
# ---------------------------------------------------------------------------

_STREAM_INIT = 0
_STREAM_NOISE = 1
_STREAM_COORD = 2


def _stream(seed: int, *key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def prepare_initial_weights(net: NeuralNet, config: DescentConfig) -> np.ndarray:
    """Initial perturbation, then the algorithms' [-B, B] projection, then storage
    quantization (stored variables live on the lattice from step 0)."""
    w = net.weights.values.copy()
    if config.init_perturb_variance > 0:
        rng = _stream(config.seed, _STREAM_INIT)
        w = w + rng.normal(0.0, math.sqrt(config.init_perturb_variance), size=w.shape)
    if math.isfinite(config.weight_clamp_b):
        w = np.clip(w, -config.weight_clamp_b, config.weight_clamp_b)
    if config.quantization is not None:
        w = config.quantization.quantize(w)
    return w


def _acc_bit(net: NeuralNet, output: float, y: float, loss: LossKind) -> bool:
    act = net.activation_of(net.graph.output)
    return bool(predict_label(output, act, loss) == y)


def _changed(graph_edges, old_w, new_w, idx=None):
    if idx is None:
        idx = np.nonzero(new_w != old_w)[0]
    else:
        idx = idx[new_w[idx] != old_w[idx]]
    return tuple((graph_edges[i], float(new_w[i])) for i in idx)


# ---------------------------------------------------------------------------
# population gradient descent
# ---------------------------------------------------------------------------

_CHUNK_ELEMS = 1 << 22  # cap per-sample gradient matrices at ~32 MB


def _population_update(net, population, loss, overflow_b):
    """E[Psi_B(dL/dw)] per edge, plus whether any contribution hit the clamp."""
    n_e = net.n_edges
    expected = np.zeros(n_e)
    overflow_hit = False
    rows = max(1, _CHUNK_ELEMS // max(1, n_e))
    for lo in range(0, population.xs.shape[0], rows):
        hi = lo + rows
        grads, _ = net.gradient_batch(
            population.xs[lo:hi], population.ys[lo:hi], loss
        )
        if math.isfinite(overflow_b):
            if np.any(np.abs(grads) > overflow_b):
                overflow_hit = True
            grads = clamp_psi(grads, overflow_b)
        expected += population.probs[lo:hi] @ grads
    return expected, overflow_hit


def gd_step(
    net: NeuralNet,
    population: Population,
    loss: LossKind,
    gamma: float,
    delta=None,
    overflow_b: float = math.inf,
    weight_clamp_b: float = math.inf,
    quantization: Optional[QuantizationSpec] = None,
) -> NeuralNet:
    """One exact-expectation step: w' = w - gamma * E[Psi_B(dL/dw)] + delta,
    then projected / quantized if configured."""
    net2, _ = _gd_step_full(
        net, population, loss, gamma, delta, overflow_b, weight_clamp_b, quantization
    )
    return net2


def _gd_step_full(net, population, loss, gamma, delta, overflow_b, weight_clamp_b, quantization):
    expected, overflow_hit = _population_update(net, population, loss, overflow_b)
    update = gamma * expected
    w = net.weights.values - update
    if delta is not None:
        if isinstance(delta, WeightVector):
            delta = delta.values
        w = w + np.asarray(delta, dtype=np.float64)
    if math.isfinite(weight_clamp_b):
        w = np.clip(w, -weight_clamp_b, weight_clamp_b)
    if quantization is not None:
        w = quantization.quantize(w)
    info = {
        "max_update": float(np.max(np.abs(update))) if update.size else 0.0,
        "overflow_hit": overflow_hit,
    }
    return net.with_weights(w), info


def gd_run(
    net: NeuralNet,
    population: Population,
    loss: LossKind,
    config: DescentConfig,
    record_steps: bool = True,
):
    """T bounded-noisy-GD steps with fresh per-step noise from the seeded stream."""
    if config.coord_budget is not None:
        raise ValueError("gd_run is full gradient descent; coord_budget must be None")
    w = prepare_initial_weights(net, config)
    current = net.with_weights(w)
    log = RunLog(algorithm="gd")
    edges = current.graph.edges
    for t in range(1, config.steps + 1):
        delta = None
        if config.noise.is_active:
            delta = config.noise.draw(
                _stream(config.seed, _STREAM_NOISE, t), current.n_edges
            )
        old = current.weights.values
        current, info = _gd_step_full(
            current,
            population,
            loss,
            config.gamma,
            delta,
            config.overflow_b,
            config.weight_clamp_b,
            config.quantization,
        )
        if record_steps:
            log.steps.append(
                StepReport(
                    t=t,
                    changed_edges=_changed(edges, old, current.weights.values),
                    max_update=info["max_update"],
                    overflow_hit=info["overflow_hit"],
                )
            )
    return current, log


# ---------------------------------------------------------------------------
# stochastic gradient descent
# ---------------------------------------------------------------------------

def sgd_step(
    net: NeuralNet,
    sample,
    loss: LossKind,
    gamma: float,
    weight_clamp_b: float = math.inf,
    delta=None,
    quantization: Optional[QuantizationSpec] = None,
) -> NeuralNet:
    """One single-sample step: w' = w - gamma * dL/dw + delta, projected into
    [-B, B], then quantized for storage if configured."""
    x, y = sample
    grad, _ = net.gradient_array(x, y, loss)
    w = net.weights.values - gamma * grad
    if delta is not None:
        if isinstance(delta, WeightVector):
            delta = delta.values
        w = w + np.asarray(delta, dtype=np.float64)
    if math.isfinite(weight_clamp_b):
        w = np.clip(w, -weight_clamp_b, weight_clamp_b)
    if quantization is not None:
        w = quantization.quantize(w)
    return net.with_weights(w)


def sgd_run(
    net: NeuralNet,
    source,
    loss: LossKind,
    config: DescentConfig,
    record_steps: bool = True,
    trainable: Optional[Sequence[int]] = None,
):
    """T single-sample steps on i.i.d. draws from the source.

    ``trainable`` optionally restricts updates (and noise) to an edge-index
    subset, e.g. the readout of an engineered net; other weights stay fixed.
    The per-step accuracy bit records whether the pre-update net predicted the
    fresh sample's label.
    """
    w = prepare_initial_weights(net, config)
    return _sample_descent(net, w, source, loss, config, record_steps, trainable, None)


def cd_run(
    net: NeuralNet,
    source,
    loss: LossKind,
    config: DescentConfig,
    record_steps: bool = True,
):
    """Coordinate descent: compute the full sample gradient, update at most
    ``coord_budget`` edges per step (TopK by |gradient| or a random subset)."""
    if config.coord_budget is None:
        raise ValueError("cd_run requires a finite coord_budget")
    w = prepare_initial_weights(net, config)
    return _sample_descent(
        net, w, source, loss, config, record_steps, None, config.coord_budget
    )


def _select_coords(grad, budget, rule, rng):
    n_e = grad.shape[0]
    if budget >= n_e:
        return np.arange(n_e)
    if rule == "randomk":
        return np.sort(rng.choice(n_e, size=budget, replace=False))
    # topk: largest |gradient| first, ties by ascending edge index
    order = np.lexsort((np.arange(n_e), -np.abs(grad)))
    return np.sort(order[:budget])


def _sample_descent(net, w0, source, loss, config, record_steps, trainable, budget):
    current = net.with_weights(w0)
    log = RunLog(algorithm="cd" if budget is not None else "sgd")
    edges = current.graph.edges
    if trainable is not None:
        trainable = np.asarray(trainable, dtype=np.intp)
    for t in range(1, config.steps + 1):
        x, y = source.next_sample()
        grad, output = current.gradient_array(x, y, loss)
        acc = _acc_bit(current, output, y, loss)
        log.acc_bits.append(acc)
        if budget is not None:
            sel = _select_coords(
                grad, budget, config.coord_rule, _stream(config.seed, _STREAM_COORD, t)
            )
        elif trainable is not None:
            sel = trainable
        else:
            sel = None
        delta = None
        if config.noise.is_active:
            delta = config.noise.draw(
                _stream(config.seed, _STREAM_NOISE, t), current.n_edges
            )
        old = current.weights.values
        update = config.gamma * grad
        if sel is None:
            w = old - update
            if delta is not None:
                w = w + delta
            if math.isfinite(config.weight_clamp_b):
                w = np.clip(w, -config.weight_clamp_b, config.weight_clamp_b)
            if config.quantization is not None:
                w = config.quantization.quantize(w)
            max_update = float(np.max(np.abs(update))) if update.size else 0.0
        else:
            w = old.copy()
            touched = w[sel] - update[sel]
            if delta is not None:
                touched = touched + delta[sel]
            if math.isfinite(config.weight_clamp_b):
                touched = np.clip(touched, -config.weight_clamp_b, config.weight_clamp_b)
            if config.quantization is not None:
                touched = config.quantization.quantize(touched)
            w[sel] = touched
            max_update = float(np.max(np.abs(update[sel]))) if sel.size else 0.0
        current = current.with_weights(w)
        if record_steps:
            log.steps.append(
                StepReport(
                    t=t,
                    changed_edges=_changed(edges, old, w, idx=sel),
                    max_update=max_update,
                    overflow_hit=False,
                    acc_bit=acc,
                )
            )
    return current, log
