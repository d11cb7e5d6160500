"""Fully connected ReLU network with manual backpropagation and Adam."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .errors import FormatError, StateError, ValidationError

TABLE1_ARCH = (900, 1000, 500, 100, 50, 9)


class Mlp:
    """ReLU on hidden layers, identity on the output layer.

    Weights are stored as ``(fan_in, fan_out)`` matrices so a batch ``x`` of
    shape ``(n, fan_in)`` maps to ``x @ W + b``.
    """

    def __init__(self, sizes, seed: int | None = 0, rng: np.random.Generator | None = None):
        sizes = tuple(int(s) for s in sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValidationError(f"invalid layer sizes {sizes}")
        self.sizes = sizes
        rng = np.random.default_rng(seed) if rng is None else rng
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        n_layers = len(sizes) - 1
        for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            if i < n_layers - 1:
                limit = np.sqrt(6.0 / fan_in)  # He-uniform for ReLU layers
            else:
                limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))
        self._cache = None
        self._version = 0

    @classmethod
    def zeros(cls, sizes) -> "Mlp":
        net = cls(sizes)
        for w, b in zip(net.weights, net.biases):
            w[...] = 0.0
            b[...] = 0.0
        return net

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def mark_updated(self) -> None:
        """Invalidate cached activations after an in-place parameter change."""
        self._version += 1
        self._cache = None

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        batch = x[None, :] if single else x
        if batch.ndim != 2 or batch.shape[1] != self.sizes[0]:
            raise ValidationError(f"expected input width {self.sizes[0]}, got shape {x.shape}")
        acts = [batch]
        h = batch
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
            acts.append(h)
        self._cache = (x, acts, self._version)
        return h[0] if single else h

    def predict(self, x) -> np.ndarray:
        """Forward pass that leaves the backprop cache untouched."""
        cache = self._cache
        try:
            return self.forward(x)
        finally:
            self._cache = cache

    def backward(self, x, grad_out) -> list[np.ndarray]:
        """Parameter gradients given dLoss/dOutput for the batch last passed to forward.

        Returned in :meth:`params` order (W0, b0, W1, b1, ...).
        """
        if self._cache is None:
            raise StateError("backward called without a cached forward pass")
        cx, acts, version = self._cache
        if version != self._version or not (cx is x or np.array_equal(cx, np.asarray(x, dtype=float))):
            raise StateError("forward cache is stale for this batch")
        g = np.asarray(grad_out, dtype=float)
        if g.ndim == 1:
            g = g[None, :]
        if g.shape != acts[-1].shape:
            raise ValidationError(f"output gradient shape {g.shape} != {acts[-1].shape}")
        grads = [None] * (2 * len(self.weights))
        for i in range(len(self.weights) - 1, -1, -1):
            grads[2 * i] = acts[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            if i > 0:
                g = g @ self.weights[i].T
                g = g * (acts[i] > 0.0)
        return grads

    def copy(self) -> "Mlp":
        net = Mlp.__new__(Mlp)
        net.sizes = self.sizes
        net.weights = [w.copy() for w in self.weights]
        net.biases = [b.copy() for b in self.biases]
        net._cache = None
        net._version = 0
        return net

    def load_state(self, other: "Mlp") -> None:
        """Copy every parameter of ``other`` into this network."""
        if other.sizes != self.sizes:
            raise ValidationError(f"architecture mismatch: {other.sizes} vs {self.sizes}")
        for dst, src in zip(self.params(), other.params()):
            dst[...] = src
        self.mark_updated()

    def all_finite(self) -> bool:
        # any NaN or inf entry propagates into the sum
        return all(np.isfinite(p.sum()) for p in self.params())


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def update(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        """In-place bias-corrected Adam update of ``params``."""
        if len(params) != len(grads):
            raise ValidationError("gradient count does not match parameter count")
        for p, g in zip(params, grads):
            if np.shape(p) != np.shape(g):
                raise ValidationError(f"gradient shape {np.shape(g)} != parameter shape {np.shape(p)}")
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        step = self.lr / (1.0 - self.beta1 ** self.t)
        inv_c2 = 1.0 / np.sqrt(1.0 - self.beta2 ** self.t)
        for p, g, m, v in zip(params, grads, self.m, self.v):
            g = np.ascontiguousarray(g, dtype=float)
            _adam_kernel(p.reshape(-1), g.reshape(-1), m.reshape(-1), v.reshape(-1),
                         self.beta1, self.beta2, step, inv_c2, self.eps)


# moments below this give parameter updates far under one ulp of any realistic weight
_FLUSH = 1e-150


@numba.njit(cache=True)
def _adam_kernel(p, g, m, v, beta1, beta2, step, inv_c2, eps):
    # fused first/second moment update and bias-corrected step, one pass per parameter
    for i in range(p.size):
        gi = g[i]
        mi = beta1 * m[i] + (1.0 - beta1) * gi
        vi = beta2 * v[i] + (1.0 - beta2) * gi * gi
        # moments of dead units decay geometrically into subnormals, which are ~40x slower
        if abs(mi) < _FLUSH:
            mi = 0.0
        if vi < _FLUSH:
            vi = 0.0
        m[i] = mi
        v[i] = vi
        p[i] -= step * mi / (np.sqrt(vi) * inv_c2 + eps)


def adam_step(net: Mlp, state: AdamState, grads: list[np.ndarray]) -> Mlp:
    state.update(net.params(), grads)
    net.mark_updated()
    return net


def save_weights(net: Mlp, path) -> None:
    doc = {
        "arch": list(net.sizes),
        "layers": [
            {"rows": int(w.shape[0]), "cols": int(w.shape[1]), "w": w.ravel().tolist(), "b": b.tolist()}
            for w, b in zip(net.weights, net.biases)
        ],
    }
    Path(path).write_text(json.dumps(doc))


def load_weights(path, arch=None) -> Mlp:
    """Load a checkpoint; ``arch`` (if given) must match the stored layer sizes."""
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise FormatError(f"weights file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: corrupt checkpoint ({exc})") from exc
    try:
        sizes = tuple(int(s) for s in doc["arch"])
        layers = doc["layers"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: missing arch/layers") from exc
    if arch is not None and tuple(arch) != sizes:
        raise FormatError(f"{path}: architecture {sizes} does not match expected {tuple(arch)}")
    if len(layers) != len(sizes) - 1:
        raise FormatError(f"{path}: {len(layers)} layers for architecture {sizes}")
    weights, biases = [], []
    for i, layer in enumerate(layers):
        try:
            rows, cols = int(layer["rows"]), int(layer["cols"])
            w = np.asarray(layer["w"], dtype=float)
            b = np.asarray(layer["b"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{path}: layer {i}: {exc}") from exc
        if (rows, cols) != (sizes[i], sizes[i + 1]) or w.size != rows * cols or b.shape != (cols,):
            raise FormatError(f"{path}: layer {i}: shape mismatch")
        weights.append(w.reshape(rows, cols))
        biases.append(b)
    net = Mlp.zeros(sizes)
    net.weights, net.biases = weights, biases
    return net
