"""Feedforward function approximators with exact backpropagation.

Three network families share one interface: a purely linear net (used
for tabular-equivalent tests), a one-hidden-layer net, and a small
convolutional net (conv / max-pool / dense / linear-output layers).
Every net exposes a flat parameter vector; `gradient` returns the
backpropagated gradient of one scalar output with respect to that
vector, in the same ordering.

Flat parameter ordering (frozen; checkpoints and trace vectors depend
on it): layer by layer in forward order, weights first then biases.
Weight matrices are row-major with shape (out_features, in_features);
conv kernels have shape (filters, in_channels, kh, kw).

Convolutions use stride 1 and preserve the spatial size: the input is
zero-padded by (k-1)//2 on the top/left and the remainder on the
bottom/right.  Max-pool windows that overhang the edge are truncated
to the in-bounds region, and the pool gradient routes to the first
(row-major) maximal cell of each window.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .activations import ActivationKind, activate, activate_derivative


def _uniform_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class LinearNet:
    """out = W x + b; the tabular-equivalent net for one-hot inputs."""

    def __init__(self, input_dim: int, n_outputs: int, rng: np.random.Generator):
        self.input_dim = input_dim
        self.n_outputs = n_outputs
        self.theta = np.zeros(n_outputs * input_dim + n_outputs)
        self.W = self.theta[: n_outputs * input_dim].reshape(n_outputs, input_dim)
        self.b = self.theta[n_outputs * input_dim :]
        self.W[:] = _uniform_init(rng, self.W.shape, input_dim)

    @property
    def arch(self) -> dict:
        return {
            "type": "linear",
            "input_dim": self.input_dim,
            "outputs": self.n_outputs,
        }

    @property
    def n_params(self) -> int:
        return self.theta.size

    def forward(self, x) -> np.ndarray:
        return self.W @ np.asarray(x, dtype=np.float64) + self.b

    def forward_batch(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.W.T + self.b

    def gradient(self, x, output_index: int = 0) -> np.ndarray:
        if not 0 <= output_index < self.n_outputs:
            raise IndexError("output index out of range")
        g = np.zeros_like(self.theta)
        gW = g[: self.W.size].reshape(self.W.shape)
        gW[output_index] = np.asarray(x, dtype=np.float64)
        g[self.W.size + output_index] = 1.0
        return g

    def value_and_gradient(self, x, output_index: int = 0):
        x = np.asarray(x, dtype=np.float64)
        value = float(self.W[output_index] @ x + self.b[output_index])
        return value, self.gradient(x, output_index)

    def flatten(self) -> np.ndarray:
        return self.theta.copy()

    def apply_delta(self, delta) -> "LinearNet":
        delta = np.asarray(delta, dtype=np.float64)
        if delta.shape != self.theta.shape:
            raise ValueError("delta length mismatch")
        self.theta += delta
        return self


class ShallowNet:
    """One hidden layer with a chosen activation and a linear output."""

    def __init__(
        self,
        input_dim: int,
        hidden_dim: int,
        hidden_kind: ActivationKind,
        n_outputs: int,
        rng: np.random.Generator,
    ):
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.hidden_kind = ActivationKind(hidden_kind)
        self.n_outputs = n_outputs
        d, h, o = input_dim, hidden_dim, n_outputs
        self.theta = np.zeros(h * d + h + o * h + o)
        p = 0
        self.W = self.theta[p : p + h * d].reshape(h, d); p += h * d
        self.b = self.theta[p : p + h]; p += h
        self.W_out = self.theta[p : p + o * h].reshape(o, h); p += o * h
        self.b_out = self.theta[p : p + o]
        self.W[:] = _uniform_init(rng, (h, d), d)
        self.W_out[:] = _uniform_init(rng, (o, h), h)

    @property
    def arch(self) -> dict:
        return {
            "type": "shallow",
            "input_dim": self.input_dim,
            "hidden": self.hidden_dim,
            "kind": self.hidden_kind.value,
            "outputs": self.n_outputs,
        }

    @property
    def n_params(self) -> int:
        return self.theta.size

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        z = self.W @ x + self.b
        a = activate(self.hidden_kind, z)
        return self.W_out @ a + self.b_out

    def forward_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        Z = X @ self.W.T + self.b
        A = activate(self.hidden_kind, Z)
        return A @ self.W_out.T + self.b_out

    def gradient(self, x, output_index: int = 0) -> np.ndarray:
        return self.value_and_gradient(x, output_index)[1]

    def value_and_gradient(self, x, output_index: int = 0):
        """(output[output_index], gradient) in a single forward pass."""
        if not 0 <= output_index < self.n_outputs:
            raise IndexError("output index out of range")
        x = np.asarray(x, dtype=np.float64)
        z = self.W @ x + self.b
        a = activate(self.hidden_kind, z)
        value = float(self.W_out[output_index] @ a + self.b_out[output_index])
        da = self.W_out[output_index]
        dz = da * activate_derivative(self.hidden_kind, z)
        g = np.zeros_like(self.theta)
        p = 0
        g[p : p + self.W.size] = np.outer(dz, x).ravel(); p += self.W.size
        g[p : p + self.b.size] = dz; p += self.b.size
        gWo = g[p : p + self.W_out.size].reshape(self.W_out.shape); p += self.W_out.size
        gWo[output_index] = a
        g[p + output_index] = 1.0
        return value, g

    def flatten(self) -> np.ndarray:
        return self.theta.copy()

    def apply_delta(self, delta) -> "ShallowNet":
        delta = np.asarray(delta, dtype=np.float64)
        if delta.shape != self.theta.shape:
            raise ValueError("delta length mismatch")
        self.theta += delta
        return self


class _ConvLayer:
    def __init__(self, filters, kernel, stride, kind, in_shape):
        if stride != 1:
            raise ValueError("conv layers support stride 1 only")
        self.filters = filters
        self.kh, self.kw = kernel
        self.kind = ActivationKind(kind)
        c, h, w = in_shape
        self.in_shape = in_shape
        self.out_shape = (filters, h, w)
        self.pt = (self.kh - 1) // 2
        self.pl = (self.kw - 1) // 2
        self.pb = self.kh - 1 - self.pt
        self.pr = self.kw - 1 - self.pl
        self.w_size = filters * c * self.kh * self.kw
        self.param_size = self.w_size + filters

    def bind(self, theta):
        c = self.in_shape[0]
        self.W = theta[: self.w_size].reshape(self.filters, c, self.kh, self.kw)
        self.b = theta[self.w_size :]

    def init(self, rng):
        c = self.in_shape[0]
        self.W[:] = _uniform_init(rng, self.W.shape, c * self.kh * self.kw)

    def _windows(self, x):
        xp = np.pad(x, ((0, 0), (self.pt, self.pb), (self.pl, self.pr)))
        return sliding_window_view(xp, (self.kh, self.kw), axis=(1, 2))

    def forward(self, x, cache=None):
        win = self._windows(x)
        z = np.einsum("fcuv,cijuv->fij", self.W, win) + self.b[:, None, None]
        if cache is not None:
            cache.append((win, z))
        return activate(self.kind, z)

    def backward(self, dy, cache, gtheta):
        win, z = cache
        dz = dy * activate_derivative(self.kind, z)
        gW = gtheta[: self.w_size].reshape(self.W.shape)
        gW += np.einsum("fij,cijuv->fcuv", dz, win)
        gtheta[self.w_size :] += dz.sum(axis=(1, 2))
        c, h, w = self.in_shape
        dxp = np.zeros((c, h + self.kh - 1, w + self.kw - 1))
        for u in range(self.kh):
            for v in range(self.kw):
                dxp[:, u : u + h, v : v + w] += np.einsum(
                    "fij,fc->cij", dz, self.W[:, :, u, v]
                )
        return dxp[:, self.pt : self.pt + h, self.pl : self.pl + w]


class _MaxPoolLayer:
    def __init__(self, window, stride, in_shape):
        self.wh, self.ww = window
        self.stride = stride
        c, h, w = in_shape
        self.in_shape = in_shape
        self.rows = list(range(0, h, stride))
        self.cols = list(range(0, w, stride))
        self.out_shape = (c, len(self.rows), len(self.cols))
        self.param_size = 0

    def bind(self, theta):
        pass

    def init(self, rng):
        pass

    def forward(self, x, cache=None):
        c = self.in_shape[0]
        out = np.empty(self.out_shape)
        argmax = np.empty(self.out_shape + (2,), dtype=np.intp) if cache is not None else None
        for i, r in enumerate(self.rows):
            for j, q in enumerate(self.cols):
                patch = x[:, r : r + self.wh, q : q + self.ww]
                flat = patch.reshape(c, -1)
                idx = flat.argmax(axis=1)
                out[:, i, j] = flat[np.arange(c), idx]
                if argmax is not None:
                    pr, pc = np.unravel_index(idx, patch.shape[1:])
                    argmax[:, i, j, 0] = r + pr
                    argmax[:, i, j, 1] = q + pc
        if cache is not None:
            cache.append(argmax)
        return out

    def backward(self, dy, cache, gtheta):
        argmax = cache
        dx = np.zeros(self.in_shape)
        c = self.in_shape[0]
        for i in range(self.out_shape[1]):
            for j in range(self.out_shape[2]):
                dx[np.arange(c), argmax[:, i, j, 0], argmax[:, i, j, 1]] += dy[:, i, j]
        return dx


class _DenseLayer:
    def __init__(self, units, kind, in_shape):
        self.in_features = int(np.prod(in_shape))
        self.in_shape = in_shape
        self.units = units
        self.kind = ActivationKind(kind)
        self.out_shape = (units,)
        self.w_size = units * self.in_features
        self.param_size = self.w_size + units

    def bind(self, theta):
        self.W = theta[: self.w_size].reshape(self.units, self.in_features)
        self.b = theta[self.w_size :]

    def init(self, rng):
        self.W[:] = _uniform_init(rng, self.W.shape, self.in_features)

    def forward(self, x, cache=None):
        xf = np.asarray(x).ravel()
        z = self.W @ xf + self.b
        if cache is not None:
            cache.append((xf, z))
        return activate(self.kind, z)

    def backward(self, dy, cache, gtheta):
        xf, z = cache
        dz = dy * activate_derivative(self.kind, z)
        gtheta[: self.w_size] += np.outer(dz, xf).ravel()
        gtheta[self.w_size :] += dz
        return (self.W.T @ dz).reshape(self.in_shape)


class _OutputLayer:
    def __init__(self, units, in_shape):
        self.in_features = int(np.prod(in_shape))
        self.in_shape = in_shape
        self.units = units
        self.out_shape = (units,)
        self.w_size = units * self.in_features
        self.param_size = self.w_size + units

    def bind(self, theta):
        self.W = theta[: self.w_size].reshape(self.units, self.in_features)
        self.b = theta[self.w_size :]

    def init(self, rng):
        self.W[:] = _uniform_init(rng, self.W.shape, self.in_features)

    def forward(self, x, cache=None):
        xf = np.asarray(x).ravel()
        if cache is not None:
            cache.append(xf)
        return self.W @ xf + self.b

    def backward_from_index(self, output_index, cache, gtheta):
        xf = cache
        gW = gtheta[: self.w_size].reshape(self.W.shape)
        gW[output_index] += xf
        gtheta[self.w_size + output_index] += 1.0
        return self.W[output_index].reshape(self.in_shape)


class ConvNet:
    """Small convolutional net: conv/max-pool stages, then dense
    layers, then a linear output layer (exactly one, last)."""

    def __init__(self, input_shape, layer_specs, rng: np.random.Generator):
        self.input_shape = tuple(input_shape)
        self._specs = [dict(s) for s in layer_specs]
        if self._specs[-1]["type"] != "output" or any(
            s["type"] == "output" for s in self._specs[:-1]
        ):
            raise ValueError("exactly one output layer is required, last")
        self.layers = []
        shape = self.input_shape
        for spec in self._specs:
            kind = spec["type"]
            if kind == "conv":
                layer = _ConvLayer(
                    spec["filters"], spec["kernel"], spec.get("stride", 1),
                    spec["kind"], shape,
                )
            elif kind == "maxpool":
                layer = _MaxPoolLayer(spec["window"], spec["stride"], shape)
            elif kind == "dense":
                layer = _DenseLayer(spec["units"], spec["kind"], shape)
            elif kind == "output":
                layer = _OutputLayer(spec["units"], shape)
            else:
                raise ValueError(f"unknown layer type {kind!r}")
            self.layers.append(layer)
            shape = layer.out_shape
        self.n_outputs = self.layers[-1].units
        self.theta = np.zeros(sum(l.param_size for l in self.layers))
        p = 0
        for layer in self.layers:
            layer.bind(self.theta[p : p + layer.param_size])
            layer.init(rng)
            p += layer.param_size

    @property
    def arch(self) -> dict:
        return {
            "type": "conv",
            "input_shape": list(self.input_shape),
            "layers": [dict(s) for s in self._specs],
        }

    @property
    def n_params(self) -> int:
        return self.theta.size

    def forward(self, x) -> np.ndarray:
        y = np.asarray(x, dtype=np.float64).reshape(self.input_shape)
        for layer in self.layers:
            y = layer.forward(y)
        return y

    def forward_batch(self, X) -> np.ndarray:
        return np.stack([self.forward(x) for x in X])

    def gradient(self, x, output_index: int = 0) -> np.ndarray:
        return self.value_and_gradient(x, output_index)[1]

    def value_and_gradient(self, x, output_index: int = 0):
        """(output[output_index], gradient) in one forward/backward."""
        if not 0 <= output_index < self.n_outputs:
            raise IndexError("output index out of range")
        y = np.asarray(x, dtype=np.float64).reshape(self.input_shape)
        caches = []
        for layer in self.layers:
            y = layer.forward(y, caches)
        value = float(y[output_index])
        g = np.zeros_like(self.theta)
        p = self.theta.size
        out = self.layers[-1]
        p -= out.param_size
        dy = out.backward_from_index(output_index, caches[-1], g[p : p + out.param_size])
        for layer, cache in zip(reversed(self.layers[:-1]), reversed(caches[:-1])):
            p -= layer.param_size
            dy = layer.backward(dy, cache, g[p : p + layer.param_size])
        return value, g

    def flatten(self) -> np.ndarray:
        return self.theta.copy()

    def apply_delta(self, delta) -> "ConvNet":
        delta = np.asarray(delta, dtype=np.float64)
        if delta.shape != self.theta.shape:
            raise ValueError("delta length mismatch")
        self.theta += delta
        return self


def build_network(arch: dict, rng: np.random.Generator):
    """Construct a network from an architecture description dict."""
    kind = arch["type"]
    if kind == "linear":
        return LinearNet(arch["input_dim"], arch.get("outputs", 1), rng)
    if kind == "shallow":
        return ShallowNet(
            arch["input_dim"], arch["hidden"], arch["kind"],
            arch.get("outputs", 1), rng,
        )
    if kind == "conv":
        return ConvNet(arch["input_shape"], arch["layers"], rng)
    raise ValueError(f"unknown network type {kind!r}")
