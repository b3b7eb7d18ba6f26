"""Weighted-DAG neural nets: construction, evaluation, exact gradients, quantization.

A net is a triple (activation, graph, weights).  The graph is acyclic with one
constant vertex (value 1), input vertices, and a single output vertex;
evaluation walks a topological order and applies the activation to each
interior vertex's weighted in-sum.  Gradients are exact reverse-mode
derivatives of the configured loss with respect to every edge weight.

Dense layered nets (MLPs) are recognized automatically and evaluated with
matrix products; arbitrary DAGs fall back to a per-vertex sweep.  Both paths
accumulate in-edge sums in ascending source-id order, so results do not depend
on which valid topological order is requested.
"""

from __future__ import annotations

import heapq
import itertools
import json
import math
from dataclasses import dataclass
from decimal import Decimal
from functools import lru_cache
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np


class CycleDetected(Exception):
    """The digraph contains a directed cycle."""


class InvalidGraph(Exception):
    """A structural invariant of the net graph is violated."""


class DimensionMismatch(Exception):
    """Input vector length does not match the net's input size."""


class BudgetExceeded(Exception):
    """Requested construction exceeds the configured size budget."""


# ---------------------------------------------------------------------------
# activations and losses
# ---------------------------------------------------------------------------

def _sigmoid(z):
    # overflow-safe: only exponentiates non-positive values
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


_ACT_TABLE = {
    # kind: (fn, derivative-from-(z, fz), normal?, midpoint)
    "sigmoid": (
        lambda z: _sigmoid(np.asarray(z, dtype=np.float64)),
        lambda z, fz: fz * (1.0 - fz),
        True,
        0.5,
    ),
    "tanh": (
        lambda z: np.tanh(z),
        lambda z, fz: 1.0 - fz * fz,
        True,
        0.0,
    ),
    "relu": (
        lambda z: np.maximum(z, 0.0),
        # one-sided subgradient: derivative 0 at z == 0
        lambda z, fz: (z > 0).astype(np.float64),
        False,
        0.0,
    ),
    "cosine": (
        lambda z: np.cos(z),
        lambda z, fz: -np.sin(z),
        False,
        0.0,
    ),
    "identity": (
        lambda z: np.asarray(z, dtype=np.float64),
        lambda z, fz: np.ones_like(np.asarray(z, dtype=np.float64)),
        False,
        0.0,
    ),
}


@dataclass(frozen=True)
class Activation:
    """Pointwise nonlinearity; ``is_normal`` marks the smooth bounded-derivative family."""

    kind: str

    def __post_init__(self):
        if self.kind not in _ACT_TABLE:
            raise ValueError(f"unknown activation kind: {self.kind!r}")

    def __call__(self, z):
        return _ACT_TABLE[self.kind][0](np.asarray(z, dtype=np.float64))

    def derivative(self, z, value=None):
        """d f / d z, optionally reusing the already-computed value f(z)."""
        z = np.asarray(z, dtype=np.float64)
        if value is None:
            value = self(z)
        return _ACT_TABLE[self.kind][1](z, value)

    @property
    def is_normal(self) -> bool:
        return _ACT_TABLE[self.kind][2]

    @property
    def midpoint(self) -> float:
        """Default decision threshold for this activation's output range."""
        return _ACT_TABLE[self.kind][3]


SIGMOID = Activation("sigmoid")
TANH = Activation("tanh")
RELU = Activation("relu")
COSINE = Activation("cosine")
IDENTITY = Activation("identity")

ACTIVATIONS = {a.kind: a for a in (SIGMOID, TANH, RELU, COSINE, IDENTITY)}


@dataclass(frozen=True)
class LossKind:
    """Loss on (eval, label): squared error L(d)=d^2 on +-1 labels, or logistic BCE.

    BCE reads the label through the canonical bit map b = (1 - y) / 2 and
    expects the net output in (0, 1).
    """

    kind: str  # 'squared' | 'bce'

    def value(self, output, y):
        if self.kind == "squared":
            d = output - y
            return d * d
        t = (1.0 - y) / 2.0
        p = np.clip(output, 1e-12, 1.0 - 1e-12)
        return -(t * np.log(p) + (1.0 - t) * np.log(1.0 - p))

    def d_output(self, output, y):
        """dL/d(output).  For BCE with a sigmoid output the gradient code uses
        the cancelled form p - t instead of this quotient."""
        if self.kind == "squared":
            return 2.0 * (output - y)
        t = (1.0 - y) / 2.0
        p = np.clip(output, 1e-12, 1.0 - 1e-12)
        return (p - t) / (p * (1.0 - p))


SQUARED_ERROR = LossKind("squared")
LOGISTIC_BCE = LossKind("bce")

LOSSES = {"squared": SQUARED_ERROR, "bce": LOGISTIC_BCE}


def predict_label(output, activation: Activation, loss: LossKind = SQUARED_ERROR,
                  threshold: Optional[float] = None):
    """Threshold a net output into a +-1 label.

    Squared-error nets predict +1 at or above the activation midpoint (or an
    explicit ``threshold``).  BCE nets model P(bit = 1); bit 1 maps to label
    -1 under b -> 1 - 2b.
    """
    output = np.asarray(output)
    if loss.kind == "bce":
        cut = 0.5 if threshold is None else threshold
        return np.where(output >= cut, -1.0, 1.0)
    cut = activation.midpoint if threshold is None else threshold
    return np.where(output >= cut, 1.0, -1.0)


# ---------------------------------------------------------------------------
# graph
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NetGraph:
    """Acyclic digraph with constant / input / output designations.

    Invariants (checked at construction): no directed cycle; the constant and
    input vertices are exactly the in-degree-0 vertices; every non-output
    vertex has a directed path to the output.
    """

    vertex_count: int
    input_size: int
    edges: tuple
    constant: int
    inputs: tuple
    output: int

    def __post_init__(self):
        edges = tuple(sorted((int(u), int(v)) for u, v in self.edges))
        if len(set(edges)) != len(edges):
            raise InvalidGraph("duplicate edges (simple digraphs only)")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "inputs", tuple(int(v) for v in self.inputs))
        if len(self.inputs) != self.input_size:
            raise InvalidGraph("input vertex list does not match input_size")
        self._validate()

    def _validate(self):
        n_v = self.vertex_count
        special = (self.constant, *self.inputs, self.output)
        if len(set((self.constant, *self.inputs))) != 1 + self.input_size:
            raise InvalidGraph("constant/input vertices must be distinct")
        for v in special:
            if not (0 <= v < n_v):
                raise InvalidGraph(f"special vertex {v} out of range")
        indeg = [0] * n_v
        for u, v in self.edges:
            if not (0 <= u < n_v and 0 <= v < n_v):
                raise InvalidGraph(f"edge ({u},{v}) out of range")
            if u == v:
                raise CycleDetected(f"self-loop at vertex {u}")
            indeg[v] += 1
        sources = {self.constant, *self.inputs}
        for v in range(n_v):
            if v in sources:
                if indeg[v] != 0:
                    raise InvalidGraph(f"source vertex {v} has incoming edges")
            elif indeg[v] == 0:
                raise InvalidGraph(f"vertex {v} has in-degree 0 but is not a source")
        topological_order(self)  # raises CycleDetected on a cycle
        # reachability of the output from every vertex
        reaches = {self.output}
        rev = {v: [] for v in range(n_v)}
        for u, v in self.edges:
            rev[v].append(u)
        stack = [self.output]
        while stack:
            v = stack.pop()
            for u in rev[v]:
                if u not in reaches:
                    reaches.add(u)
                    stack.append(u)
        for v in range(n_v):
            if v != self.output and v not in reaches:
                raise InvalidGraph(f"vertex {v} has no path to the output")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def interior_vertices(self) -> tuple:
        sources = {self.constant, *self.inputs}
        return tuple(v for v in range(self.vertex_count) if v not in sources)

    def edge_index(self) -> dict:
        return _compiled(self).edge_index


def topological_order(graph: NetGraph):
    """Deterministic topological order of the non-source vertices.

    Kahn's algorithm with a min-heap, so ties break by ascending vertex id.
    Raises CycleDetected if no complete order exists.
    """
    n_v = graph.vertex_count
    indeg = [0] * n_v
    fwd = {v: [] for v in range(n_v)}
    for u, v in graph.edges:
        indeg[v] += 1
        fwd[u].append(v)
    sources = {graph.constant, *graph.inputs}
    ready = [v for v in range(n_v) if indeg[v] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        v = heapq.heappop(ready)
        if v not in sources:
            order.append(v)
        for w in fwd[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(ready, w)
    if len(order) != n_v - len(sources):
        raise CycleDetected("graph contains a directed cycle")
    return order


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

class WeightVector(Mapping):
    """Immutable map edge -> weight, stored as an array aligned with graph.edges."""

    __slots__ = ("graph", "values")

    def __init__(self, graph: NetGraph, values):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (graph.n_edges,):
            raise InvalidGraph(
                f"weight vector has {values.shape} entries for {graph.n_edges} edges"
            )
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "graph", graph)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("WeightVector is immutable")

    @classmethod
    def from_dict(cls, graph: NetGraph, mapping: Mapping) -> "WeightVector":
        mapping = {(int(u), int(v)): float(w) for (u, v), w in mapping.items()}
        if set(mapping) != set(graph.edges):
            raise InvalidGraph("weight keys must equal the edge set exactly")
        return cls(graph, [mapping[e] for e in graph.edges])

    @classmethod
    def zeros(cls, graph: NetGraph) -> "WeightVector":
        return cls(graph, np.zeros(graph.n_edges))

    def __getitem__(self, edge):
        return float(self.values[_compiled(self.graph).edge_index[tuple(edge)]])

    def __iter__(self) -> Iterator:
        return iter(self.graph.edges)

    def __len__(self) -> int:
        return self.graph.n_edges

    def as_dict(self) -> dict:
        return {e: float(w) for e, w in zip(self.graph.edges, self.values)}


@dataclass(frozen=True)
class QuantizationSpec:
    """Symmetric fixed-point lattice: step 2^-fractional_bits, saturating range."""

    total_bits: int
    fractional_bits: int

    def __post_init__(self):
        if not (1 <= self.total_bits <= 64):
            raise ValueError("total_bits must be in [1, 64]")
        if self.fractional_bits < 0 or self.fractional_bits >= self.total_bits:
            raise ValueError("fractional_bits must be in [0, total_bits)")

    @property
    def step(self) -> float:
        return 2.0 ** (-self.fractional_bits)

    @property
    def max_value(self) -> float:
        return (2 ** (self.total_bits - 1) - 1) * self.step

    def quantize(self, values):
        """Round to the nearest lattice point (ties to even), saturating."""
        values = np.asarray(values, dtype=np.float64)
        ticks = np.rint(values / self.step)
        limit = float(2 ** (self.total_bits - 1) - 1)
        return np.clip(ticks, -limit, limit) * self.step


def quantize(weights: WeightVector, spec: QuantizationSpec) -> WeightVector:
    """Quantize every entry of a weight vector onto the spec's lattice."""
    return WeightVector(weights.graph, spec.quantize(weights.values))


# ---------------------------------------------------------------------------
# compiled evaluation plans
# ---------------------------------------------------------------------------

class _Compiled:
    __slots__ = ("edge_index", "order", "in_src", "in_eidx", "sources")

    def __init__(self, graph: NetGraph):
        self.edge_index = {e: i for i, e in enumerate(graph.edges)}
        self.order = tuple(topological_order(graph))
        self.sources = (graph.constant, *graph.inputs)
        incoming = {v: [] for v in self.order}
        for i, (u, v) in enumerate(graph.edges):
            incoming[v].append((u, i))
        self.in_src = {}
        self.in_eidx = {}
        for v in self.order:
            pairs = sorted(incoming[v])  # fixed summation order: ascending source id
            self.in_src[v] = np.array([u for u, _ in pairs], dtype=np.intp)
            self.in_eidx[v] = np.array([i for _, i in pairs], dtype=np.intp)


@lru_cache(maxsize=512)
def _compiled(graph: NetGraph) -> _Compiled:
    return _Compiled(graph)


class _LayeredPlan:
    """Dense-MLP plan: per layer a gather-index matrix into the flat weights."""

    __slots__ = ("widths", "idx_w", "idx_b", "acts", "vertex_layers")

    def __init__(self, widths, idx_w, idx_b, acts, vertex_layers):
        self.widths = widths
        self.idx_w = idx_w
        self.idx_b = idx_b
        self.acts = acts
        self.vertex_layers = vertex_layers


def _try_layered(graph: NetGraph, act_of) -> Optional[_LayeredPlan]:
    comp = _compiled(graph)
    depth = {graph.constant: 0}
    for v in graph.inputs:
        depth[v] = 0
    for v in comp.order:
        depth[v] = 1 + max(depth[u] for u in comp.in_src[v])
    max_d = max(depth[v] for v in comp.order) if comp.order else 0
    layers = [sorted(v for v in comp.order if depth[v] == d) for d in range(1, max_d + 1)]
    if not layers or layers[-1] != [graph.output]:
        return None
    prev = list(graph.inputs)
    idx_w, idx_b, acts, vertex_layers = [], [], [], []
    for layer in layers:
        bias_flags = set()
        rows_w, rows_b = [], []
        act = act_of(layer[0])
        for v in layer:
            if act_of(v) != act:
                return None
            srcs = list(comp.in_src[v])
            eidx = list(comp.in_eidx[v])
            by_src = dict(zip(srcs, eidx))
            has_bias = graph.constant in by_src
            bias_flags.add(has_bias)
            expect = set(prev) | ({graph.constant} if has_bias else set())
            if set(srcs) != expect:
                return None
            rows_w.append([by_src[u] for u in prev])
            rows_b.append(by_src.get(graph.constant, -1))
        if len(bias_flags) != 1:
            return None
        idx_w.append(np.array(rows_w, dtype=np.intp))
        idx_b.append(np.array(rows_b, dtype=np.intp) if bias_flags.pop() else None)
        acts.append(act)
        vertex_layers.append(tuple(layer))
        prev = layer
    widths = [len(graph.inputs)] + [len(layer) for layer in vertex_layers]
    return _LayeredPlan(widths, idx_w, idx_b, acts, vertex_layers)


# ---------------------------------------------------------------------------
# the net
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NeuralNet:
    """Immutable (activation, graph, weights) triple with optional per-vertex overrides.

    ``vertex_activations`` is an extension over the single-nonlinearity model:
    it lets engineered nets mix e.g. cosine gadget units with an identity
    readout.  It is empty for ordinary nets.
    """

    activation: Activation
    graph: NetGraph
    weights: WeightVector
    vertex_activations: tuple = ()

    def __post_init__(self):
        if self.weights.graph is not self.graph and self.weights.graph != self.graph:
            raise InvalidGraph("weight vector belongs to a different graph")
        va = self.vertex_activations
        if isinstance(va, Mapping):
            va = tuple(sorted((int(v), a) for v, a in va.items()))
        object.__setattr__(self, "vertex_activations", tuple(va))
        object.__setattr__(self, "_va_map", dict(self.vertex_activations))
        object.__setattr__(self, "_layered", None)
        object.__setattr__(self, "_layered_known", False)

    # -- structure ----------------------------------------------------------

    @property
    def n_inputs(self) -> int:
        return self.graph.input_size

    @property
    def n_edges(self) -> int:
        return self.graph.n_edges

    def activation_of(self, vertex: int) -> Activation:
        return self._va_map.get(vertex, self.activation)

    def with_weights(self, values) -> "NeuralNet":
        if isinstance(values, WeightVector):
            wv = values
        else:
            wv = WeightVector(self.graph, values)
        net = NeuralNet(self.activation, self.graph, wv, self.vertex_activations)
        # share the layered-structure analysis; it depends only on graph + acts
        object.__setattr__(net, "_layered", self._layered)
        object.__setattr__(net, "_layered_known", self._layered_known)
        return net

    def _plan(self) -> Optional[_LayeredPlan]:
        if not self._layered_known:
            plan = _try_layered(self.graph, self.activation_of)
            object.__setattr__(self, "_layered", plan)
            object.__setattr__(self, "_layered_known", True)
        return self._layered

    # -- forward ------------------------------------------------------------

    def _check_x(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_inputs,):
            raise DimensionMismatch(
                f"input has shape {x.shape}, net expects ({self.n_inputs},)"
            )
        return x

    def evaluate(self, x, order=None) -> float:
        """Forward pass; ``order`` optionally forces a specific topological order."""
        x = self._check_x(x)
        if order is None:
            plan = self._plan()
            if plan is not None:
                a = x
                w = self.weights.values
                for li in range(len(plan.idx_w)):
                    z = w[plan.idx_w[li]] @ a
                    if plan.idx_b[li] is not None:
                        z = z + w[plan.idx_b[li]]
                    a = plan.acts[li](z)
                return float(a[0])
            use = _compiled(self.graph).order
        else:
            use = self._validated_order(order)
        comp = _compiled(self.graph)
        y = np.zeros(self.graph.vertex_count)
        y[self.graph.constant] = 1.0
        y[list(self.graph.inputs)] = x
        w = self.weights.values
        for v in use:
            z = float(w[comp.in_eidx[v]] @ y[comp.in_src[v]])
            y[v] = self.activation_of(v)(z)
        return float(y[self.graph.output])

    def _validated_order(self, order):
        order = tuple(order)
        comp = _compiled(self.graph)
        if sorted(order) != sorted(comp.order):
            raise InvalidGraph("order must contain every non-source vertex exactly once")
        pos = {v: i for i, v in enumerate(order)}
        for u, v in self.graph.edges:
            if u in pos and v in pos and pos[u] >= pos[v]:
                raise InvalidGraph(f"order violates edge ({u},{v})")
        return order

    def evaluate_batch(self, xs) -> np.ndarray:
        """Forward pass over a (batch, n) input matrix."""
        xs = np.asarray(xs, dtype=np.float64)
        if xs.ndim != 2 or xs.shape[1] != self.n_inputs:
            raise DimensionMismatch(
                f"batch has shape {xs.shape}, net expects (*, {self.n_inputs})"
            )
        plan = self._plan()
        w = self.weights.values
        if plan is not None:
            a = xs
            for li in range(len(plan.idx_w)):
                z = a @ w[plan.idx_w[li]].T
                if plan.idx_b[li] is not None:
                    z = z + w[plan.idx_b[li]]
                a = plan.acts[li](z)
            return a[:, 0]
        comp = _compiled(self.graph)
        y = np.zeros((self.graph.vertex_count, xs.shape[0]))
        y[self.graph.constant] = 1.0
        y[list(self.graph.inputs)] = xs.T
        for v in comp.order:
            z = w[comp.in_eidx[v]] @ y[comp.in_src[v]]
            y[v] = self.activation_of(v)(z)
        return y[self.graph.output].copy()

    # -- gradients ----------------------------------------------------------

    def _output_delta(self, output, y, loss: LossKind, z_out):
        """dL/d(pre-activation of the output vertex)."""
        act = self.activation_of(self.graph.output)
        if loss.kind == "bce" and act.kind == "sigmoid":
            # (p - t): the sigmoid derivative cancels the BCE quotient exactly
            return output - (1.0 - y) / 2.0
        return loss.d_output(output, y) * act.derivative(z_out, output)

    def gradient_array(self, x, y, loss: LossKind = SQUARED_ERROR):
        """Exact loss gradient, returned as (grad over edges, output value)."""
        x = self._check_x(x)
        plan = self._plan()
        w = self.weights.values
        if plan is not None:
            a_list = [x]
            z_list = []
            a = x
            for li in range(len(plan.idx_w)):
                z = w[plan.idx_w[li]] @ a
                if plan.idx_b[li] is not None:
                    z = z + w[plan.idx_b[li]]
                a = plan.acts[li](z)
                z_list.append(z)
                a_list.append(a)
            output = float(a[0])
            grad = np.zeros(self.n_edges)
            delta = np.array([self._output_delta(output, y, loss, z_list[-1][0])])
            for li in range(len(plan.idx_w) - 1, -1, -1):
                grad[plan.idx_w[li]] = np.outer(delta, a_list[li])
                if plan.idx_b[li] is not None:
                    grad[plan.idx_b[li]] = delta
                if li > 0:
                    back = w[plan.idx_w[li]].T @ delta
                    delta = back * plan.acts[li - 1].derivative(
                        z_list[li - 1], a_list[li]
                    )
            return grad, output
        return self._gradient_generic(x, y, loss)

    def _gradient_generic(self, x, y, loss):
        comp = _compiled(self.graph)
        gph = self.graph
        w = self.weights.values
        yv = np.zeros(gph.vertex_count)
        zv = np.zeros(gph.vertex_count)
        yv[gph.constant] = 1.0
        yv[list(gph.inputs)] = x
        for v in comp.order:
            z = float(w[comp.in_eidx[v]] @ yv[comp.in_src[v]])
            zv[v] = z
            yv[v] = self.activation_of(v)(z)
        output = float(yv[gph.output])
        dy = np.zeros(gph.vertex_count)
        gz = np.zeros(gph.vertex_count)
        grad = np.zeros(self.n_edges)
        gz[gph.output] = self._output_delta(output, y, loss, zv[gph.output])
        for v in reversed(comp.order):
            g = gz[v] + dy[v] * self.activation_of(v).derivative(zv[v], yv[v])
            src, eidx = comp.in_src[v], comp.in_eidx[v]
            grad[eidx] = g * yv[src]
            dy[src] += g * w[eidx]
        return grad, output

    def gradient(self, x, y, loss: LossKind = SQUARED_ERROR) -> WeightVector:
        grad, _ = self.gradient_array(x, y, loss)
        return WeightVector(self.graph, grad)

    def gradient_batch(self, xs, ys, loss: LossKind = SQUARED_ERROR):
        """Per-sample gradients, shape (batch, n_edges), plus outputs (batch,)."""
        xs = np.asarray(xs, dtype=np.float64)
        ys = np.asarray(ys, dtype=np.float64)
        if xs.ndim != 2 or xs.shape[1] != self.n_inputs or ys.shape != (xs.shape[0],):
            raise DimensionMismatch("bad batch shapes for gradient_batch")
        plan = self._plan()
        w = self.weights.values
        n_b = xs.shape[0]
        if plan is not None:
            a_list = [xs]
            z_list = []
            a = xs
            for li in range(len(plan.idx_w)):
                z = a @ w[plan.idx_w[li]].T
                if plan.idx_b[li] is not None:
                    z = z + w[plan.idx_b[li]]
                a = plan.acts[li](z)
                z_list.append(z)
                a_list.append(a)
            outputs = a[:, 0].copy()
            grads = np.zeros((n_b, self.n_edges))
            delta = self._batch_output_delta(outputs, ys, loss, z_list[-1][:, 0])
            delta = delta[:, None]
            for li in range(len(plan.idx_w) - 1, -1, -1):
                gw = np.einsum("bo,bi->boi", delta, a_list[li])
                grads[:, plan.idx_w[li].ravel()] = gw.reshape(n_b, -1)
                if plan.idx_b[li] is not None:
                    grads[:, plan.idx_b[li]] = delta
                if li > 0:
                    back = delta @ w[plan.idx_w[li]]
                    delta = back * plan.acts[li - 1].derivative(
                        z_list[li - 1], a_list[li]
                    )
            return grads, outputs
        comp = _compiled(self.graph)
        gph = self.graph
        yv = np.zeros((gph.vertex_count, n_b))
        zv = np.zeros((gph.vertex_count, n_b))
        yv[gph.constant] = 1.0
        yv[list(gph.inputs)] = xs.T
        for v in comp.order:
            z = w[comp.in_eidx[v]] @ yv[comp.in_src[v]]
            zv[v] = z
            yv[v] = self.activation_of(v)(z)
        outputs = yv[gph.output].copy()
        dy = np.zeros((gph.vertex_count, n_b))
        grads = np.zeros((n_b, self.n_edges))
        gz_out = self._batch_output_delta(outputs, ys, loss, zv[gph.output])
        for v in reversed(comp.order):
            if v == gph.output:
                g = gz_out + dy[v] * self.activation_of(v).derivative(zv[v], yv[v])
            else:
                g = dy[v] * self.activation_of(v).derivative(zv[v], yv[v])
            src, eidx = comp.in_src[v], comp.in_eidx[v]
            grads[:, eidx] = (yv[src] * g).T
            dy[src] += np.outer(w[eidx], g)
        return grads, outputs

    def _batch_output_delta(self, outputs, ys, loss, z_out):
        act = self.activation_of(self.graph.output)
        if loss.kind == "bce" and act.kind == "sigmoid":
            return outputs - (1.0 - ys) / 2.0
        return loss.d_output(outputs, ys) * act.derivative(z_out, outputs)


def evaluate(net: NeuralNet, x, order=None) -> float:
    return net.evaluate(x, order=order)


def gradient(net: NeuralNet, x, y, loss: LossKind = SQUARED_ERROR) -> WeightVector:
    return net.gradient(x, y, loss)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def build_mlp(
    n: int,
    hidden: Sequence[int],
    activation: Activation = SIGMOID,
    out_activation: Optional[Activation] = None,
    init: str = "zeros",
    rng: Optional[np.random.Generator] = None,
) -> NeuralNet:
    """Fully-connected layered net with bias edges from the constant vertex.

    init: 'zeros', 'he_uniform' (U(+-sqrt(6/fan_in)), biases 0), or
    'gaussian_fan_in' (N(0, 1/fan_in), biases 0).
    """
    if init != "zeros" and rng is None:
        raise ValueError("random init requires an rng")
    widths = [n] + list(hidden) + [1]
    constant = 0
    inputs = tuple(range(1, n + 1))
    next_id = n + 1
    layers = [list(inputs)]
    for width in widths[1:]:
        layers.append(list(range(next_id, next_id + width)))
        next_id += width
    output = layers[-1][0]
    edges = []
    weights = []
    for li in range(1, len(layers)):
        fan_in = len(layers[li - 1])
        for v in layers[li]:
            if init == "he_uniform":
                bound = math.sqrt(6.0 / fan_in)
                row = rng.uniform(-bound, bound, size=fan_in)
            elif init == "gaussian_fan_in":
                row = rng.normal(0.0, math.sqrt(1.0 / fan_in), size=fan_in)
            else:
                row = np.zeros(fan_in)
            for u, wv in zip(layers[li - 1], row):
                edges.append((u, v))
                weights.append(float(wv))
            edges.append((constant, v))  # bias
            weights.append(0.0)
    graph = NetGraph(
        vertex_count=next_id,
        input_size=n,
        edges=tuple(edges),
        constant=constant,
        inputs=inputs,
        output=output,
    )
    wv = WeightVector.from_dict(graph, dict(zip(edges, weights)))
    va = {}
    if out_activation is not None and out_activation != activation:
        va[output] = out_activation
    return NeuralNet(activation, graph, wv, tuple(sorted(va.items())))


def monomial_subsets(n: int, k: int):
    """Size-k subsets of [0, n) in the fixed unit order (lexicographic)."""
    return [frozenset(c) for c in itertools.combinations(range(n), k)]


def build_monomial_net(n: int, k: int, max_units: int = 20000) -> NeuralNet:
    """One cosine parity gadget per size-k subset plus a zero linear readout.

    Gadget unit for subset s computes cos(pi*k/2 - (pi/2) * sum_{i in s} x_i),
    which equals prod_{i in s} x_i exactly on {+1,-1}^n.  The readout vertex
    is an identity unit; setting its edge from unit s to 1 (all others 0)
    makes the net compute that monomial exactly.
    """
    if not (1 <= k <= n):
        raise ValueError("need 1 <= k <= n")
    n_units = math.comb(n, k)
    if n_units > max_units:
        raise BudgetExceeded(f"C({n},{k}) = {n_units} exceeds budget {max_units}")
    constant = 0
    inputs = tuple(range(1, n + 1))
    units = list(range(n + 1, n + 1 + n_units))
    output = n + 1 + n_units
    edges = {}
    for unit, subset in zip(units, monomial_subsets(n, k)):
        edges[(constant, unit)] = math.pi * k / 2.0
        for i in sorted(subset):
            edges[(1 + i, unit)] = -math.pi / 2.0
        edges[(unit, output)] = 0.0
    edges[(constant, output)] = 0.0
    graph = NetGraph(
        vertex_count=output + 1,
        input_size=n,
        edges=tuple(edges),
        constant=constant,
        inputs=inputs,
        output=output,
    )
    wv = WeightVector.from_dict(graph, edges)
    return NeuralNet(COSINE, graph, wv, ((output, IDENTITY),))


def monomial_readout_edges(net: NeuralNet):
    """(subset, edge) pairs for the readout of a build_monomial_net product."""
    n = net.n_inputs
    units = [v for v in net.graph.interior_vertices() if v != net.graph.output]
    k = sum(1 for (u, v) in net.graph.edges if v == units[0] and u != net.graph.constant)
    return list(zip(monomial_subsets(n, k), [(u, net.graph.output) for u in units]))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def net_to_json(net: NeuralNet, quantization: Optional[QuantizationSpec] = None) -> str:
    """Serialize a net to the interchange JSON document.

    With a quantization spec, weights are emitted as decimal strings of the
    exact fixed-point values.
    """
    def enc(w):
        if quantization is None:
            return w
        return str(Decimal(float(quantization.quantize(w))))

    doc = {
        "activation": net.activation.kind,
        "n": net.n_inputs,
        "vertices": net.graph.vertex_count,
        "edges": [
            {"from": u, "to": v, "weight": enc(w)}
            for (u, v), w in zip(net.graph.edges, net.weights.values)
        ],
        "special": {
            "constant": net.graph.constant,
            "inputs": list(net.graph.inputs),
            "output": net.graph.output,
        },
    }
    if quantization is not None:
        doc["quantization"] = {
            "total_bits": quantization.total_bits,
            "fractional_bits": quantization.fractional_bits,
        }
    if net.vertex_activations:
        doc["vertex_activations"] = {
            str(v): a.kind for v, a in net.vertex_activations
        }
    return json.dumps(doc, indent=2, sort_keys=True)


def net_from_json(text: str) -> NeuralNet:
    doc = json.loads(text)
    edges = [(e["from"], e["to"]) for e in doc["edges"]]
    weights = {(e["from"], e["to"]): float(e["weight"]) for e in doc["edges"]}
    graph = NetGraph(
        vertex_count=doc["vertices"],
        input_size=doc["n"],
        edges=tuple(edges),
        constant=doc["special"]["constant"],
        inputs=tuple(doc["special"]["inputs"]),
        output=doc["special"]["output"],
    )
    va = tuple(
        sorted(
            (int(v), ACTIVATIONS[name])
            for v, name in doc.get("vertex_activations", {}).items()
        )
    )
    return NeuralNet(
        ACTIVATIONS[doc["activation"]],
        graph,
        WeightVector.from_dict(graph, weights),
        va,
    )
