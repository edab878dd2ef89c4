"""Small differentiable-computation toolkit on float64 numpy arrays.

Dense layers, a fused-gate LSTM cell with backprop through time, a
stabilized softmax cross-entropy, bias-corrected Adam, and a central
finite-difference gradient checker. Everything is a pure function of
explicit parameter arrays; there is no hidden global state, so runs are
reproducible bit for bit given the seeds.

Parameters live as named float64 arrays in fixed declaration order.
Gradient dictionaries are keyed by the same names.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError, TrainingError

Params = list[tuple[str, np.ndarray]]
Grads = dict[str, np.ndarray]

CHECKPOINT_MAGIC = "PROBE-ARENA-CKPT"
CHECKPOINT_VERSION = 1


def sigmoid(z: np.ndarray) -> np.ndarray:
    # Split by sign so exp never overflows.
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    k = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-k, k, shape)


class DenseLayer:
    """Affine map plus activation: y = act(W x + b)."""

    ACTIVATIONS = ("identity", "tanh", "relu")

    def __init__(
        self,
        in_size: int,
        out_size: int,
        activation: str = "identity",
        *,
        rng: np.random.Generator,
        name: str = "dense",
    ):
        if activation not in self.ACTIVATIONS:
            raise ConfigError(f"unknown activation {activation!r}")
        self.in_size = in_size
        self.out_size = out_size
        self.activation = activation
        self.name = name
        self.weights = uniform_init(rng, (out_size, in_size), in_size)
        self.bias = uniform_init(rng, (out_size,), in_size)

    def parameters(self) -> Params:
        return [(f"{self.name}.weights", self.weights), (f"{self.name}.bias", self.bias)]

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, tuple]:
        """x is (batch, in_size); returns (output, cache)."""
        if x.shape[-1] != self.in_size:
            raise ConfigError(f"{self.name}: input width {x.shape[-1]} != {self.in_size}")
        pre = x @ self.weights.T + self.bias
        if self.activation == "tanh":
            out = np.tanh(pre)
        elif self.activation == "relu":
            out = np.maximum(pre, 0.0)
        else:
            out = pre
        return out, (x, pre, out)

    def backward(self, cache: tuple, upstream: np.ndarray) -> tuple[np.ndarray, Grads]:
        """Gradients of the composition given d(loss)/d(output)."""
        x, pre, out = cache
        if self.activation == "tanh":
            dpre = upstream * (1.0 - out * out)
        elif self.activation == "relu":
            dpre = upstream * (pre > 0.0)
        else:
            dpre = upstream
        grads = {
            f"{self.name}.weights": dpre.T @ x,
            f"{self.name}.bias": dpre.sum(axis=0),
        }
        return dpre @ self.weights, grads


class LstmCell:
    """Standard LSTM cell with fused gate matrices in (i, f, g, o) order.

    i, f, o use the logistic sigmoid, the candidate g uses tanh:
        c_t = f * c_prev + i * g,   h_t = o * tanh(c_t)
    The forget-gate bias starts at 1.0 for early gradient flow.
    """

    def __init__(
        self,
        input_size: int,
        hidden_size: int,
        *,
        rng: np.random.Generator,
        name: str = "lstm",
    ):
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.name = name
        self.wx = uniform_init(rng, (4 * hidden_size, input_size), input_size)
        self.wh = uniform_init(rng, (4 * hidden_size, hidden_size), hidden_size)
        self.bias = uniform_init(rng, (4 * hidden_size,), hidden_size)
        self.bias[hidden_size : 2 * hidden_size] = 1.0

    def parameters(self) -> Params:
        return [
            (f"{self.name}.wx", self.wx),
            (f"{self.name}.wh", self.wh),
            (f"{self.name}.bias", self.bias),
        ]

    def step(
        self, x: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, tuple]:
        """One recurrence step on a (batch, input_size) slice."""
        if x.shape[-1] != self.input_size:
            raise ConfigError(f"{self.name}: input width {x.shape[-1]} != {self.input_size}")
        hs = self.hidden_size
        z = x @ self.wx.T + h_prev @ self.wh.T + self.bias
        i = sigmoid(z[:, :hs])
        f = sigmoid(z[:, hs : 2 * hs])
        g = np.tanh(z[:, 2 * hs : 3 * hs])
        o = sigmoid(z[:, 3 * hs :])
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        cache = (x, h_prev, c_prev, i, f, g, o, tc)
        return h, c, cache

    def step_backward(
        self, cache: tuple, dh: np.ndarray, dc: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray, Grads]:
        """Propagate (dL/dh_t, dL/dc_t) one step back.

        Returns (dx, dh_prev, dc_prev, param grads for this step).
        """
        x, h_prev, c_prev, i, f, g, o, tc = cache
        do = dh * tc
        dc_total = dc + dh * o * (1.0 - tc * tc)
        di = dc_total * g
        df = dc_total * c_prev
        dg = dc_total * i
        dc_prev = dc_total * f
        dz = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g * g),
                do * o * (1.0 - o),
            ],
            axis=1,
        )
        grads = {
            f"{self.name}.wx": dz.T @ x,
            f"{self.name}.wh": dz.T @ h_prev,
            f"{self.name}.bias": dz.sum(axis=0),
        }
        return dz @ self.wx, dz @ self.wh, dc_prev, grads

    def forward_sequence(self, xs: np.ndarray) -> tuple[np.ndarray, list]:
        """Run over (T, batch, input_size) from zero initial state.

        Returns hidden states (T, batch, hidden_size) and per-step caches.
        """
        steps, batch, _ = xs.shape
        h = np.zeros((batch, self.hidden_size))
        c = np.zeros((batch, self.hidden_size))
        hs = np.empty((steps, batch, self.hidden_size))
        caches = []
        for t in range(steps):
            h, c, cache = self.step(xs[t], h, c)
            hs[t] = h
            caches.append(cache)
        return hs, caches

    def backward_sequence(
        self, caches: list, dhs: np.ndarray
    ) -> tuple[np.ndarray, Grads]:
        """Full BPTT given per-step d(loss)/dh_t. Returns (dxs, summed grads)."""
        steps = len(caches)
        batch = dhs.shape[1]
        dh = np.zeros((batch, self.hidden_size))
        dc = np.zeros((batch, self.hidden_size))
        dxs = np.empty((steps, batch, self.input_size))
        total = {name: np.zeros_like(arr) for name, arr in self.parameters()}
        for t in reversed(range(steps)):
            dx, dh_prev, dc_prev, grads = self.step_backward(caches[t], dh + dhs[t], dc)
            dxs[t] = dx
            dh, dc = dh_prev, dc_prev
            for name, g in grads.items():
                total[name] += g
        return dxs, total


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - logits.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - logits.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def softmax_cross_entropy(
    logits: np.ndarray, true_class: int
) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss, probabilities, and d(loss)/d(logits) for one logit vector."""
    probs = softmax(logits)
    loss = -log_softmax(logits)[true_class]
    grads = probs.copy()
    grads[true_class] -= 1.0
    return float(loss), probs, grads


def softmax_cross_entropy_batch(
    logits: np.ndarray, labels: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-wise loss, probs, and logit grads for (batch, classes) logits."""
    probs = softmax(logits, axis=-1)
    rows = np.arange(len(labels))
    losses = -log_softmax(logits, axis=-1)[rows, labels]
    grads = probs.copy()
    grads[rows, labels] -= 1.0
    return losses, probs, grads


class Adam:
    """Bias-corrected Adam over a fixed, ordered parameter list."""

    def __init__(
        self,
        params: Params,
        lr: float = 0.001,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(arr) for name, arr in params}
        self.v = {name: np.zeros_like(arr) for name, arr in params}

    def update(self, params: Params, grads: Grads) -> None:
        """One in-place step; parameter order is fixed by the list."""
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, arr in params:
            g = grads[name]
            if not np.all(np.isfinite(g)):
                raise TrainingError(f"non-finite gradient for {name}")
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            arr -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst_param: str
    worst_index: tuple
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def gradient_check(
    loss_and_grads: Callable[[], tuple[float, Grads]],
    params: Params,
    tolerance: float = 1e-4,
    step: float = 1e-5,
) -> GradCheckReport:
    """Compare analytic gradients to central finite differences.

    ``loss_and_grads`` must be deterministic and depend on the parameter
    arrays in place (they are perturbed and restored coordinate by
    coordinate). Relative error is |a - n| / max(1e-8, |a| + |n|).
    Failures are reported, never raised.
    """
    _, analytic = loss_and_grads()
    worst = 0.0
    worst_param = ""
    worst_index: tuple = ()
    for name, arr in params:
        grad = analytic[name]
        flat = arr.reshape(-1)
        gflat = np.asarray(grad).reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + step
            up, _ = loss_and_grads()
            flat[idx] = orig - step
            down, _ = loss_and_grads()
            flat[idx] = orig
            numeric = (up - down) / (2.0 * step)
            a = gflat[idx]
            rel = abs(a - numeric) / max(1e-8, abs(a) + abs(numeric))
            if rel > worst:
                worst = rel
                worst_param = name
                worst_index = np.unravel_index(idx, arr.shape)
    return GradCheckReport(worst, worst_param, worst_index, tolerance)


def save_checkpoint(path, params: Params, meta: dict[str, str]) -> None:
    """Write the flat binary container.

    Layout: an ASCII header (magic/version line, ``meta key value``
    lines, ``param name dims...`` shape table, ``END``), then the raw
    little-endian float64 data of every parameter in header order.
    """
    lines = [f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}"]
    for key in meta:
        value = str(meta[key])
        if any(ch.isspace() for ch in key) or "\n" in value:
            raise ConfigError(f"invalid checkpoint meta entry {key!r}")
        lines.append(f"meta {key} {value}")
    for name, arr in params:
        dims = " ".join(str(d) for d in arr.shape)
        lines.append(f"param {name} {dims}".rstrip())
    lines.append("END\n")
    blob = "\n".join(lines).encode("ascii")
    with open(path, "wb") as fh:
        fh.write(blob)
        for _, arr in params:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    """Read the container back; returns (name -> array, meta)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    end = raw.find(b"END\n")
    if end < 0:
        raise ConfigError(f"{path}: missing checkpoint header terminator")
    header = raw[:end].decode("ascii").splitlines()
    body = raw[end + 4 :]
    if not header or header[0] != f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}":
        raise ConfigError(f"{path}: not a version-{CHECKPOINT_VERSION} checkpoint")
    meta: dict[str, str] = {}
    shapes: list[tuple[str, tuple[int, ...]]] = []
    for line in header[1:]:
        kind, rest = line.split(" ", 1)
        if kind == "meta":
            key, _, value = rest.partition(" ")
            meta[key] = value
        elif kind == "param":
            fields = rest.split(" ")
            shapes.append((fields[0], tuple(int(d) for d in fields[1:])))
        else:
            raise ConfigError(f"{path}: unknown header line {line!r}")
    params: dict[str, np.ndarray] = {}
    offset = 0
    for name, shape in shapes:
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        chunk = body[offset : offset + nbytes]
        if len(chunk) != nbytes:
            raise ConfigError(f"{path}: truncated data for parameter {name}")
        params[name] = np.frombuffer(chunk, dtype="<f8").reshape(shape).copy()
        offset += nbytes
    if offset != len(body):
        raise ConfigError(f"{path}: {len(body) - offset} trailing bytes after parameters")
    return params, meta


def load_state(params: Params, state: dict[str, np.ndarray]) -> None:
    """Copy arrays from a checkpoint dict into live parameters, by name."""
    for name, arr in params:
        if name not in state:
            raise ConfigError(f"checkpoint is missing parameter {name}")
        if state[name].shape != arr.shape:
            raise ConfigError(
                f"shape mismatch for {name}: checkpoint {state[name].shape}, model {arr.shape}"
            )
        arr[...] = state[name]
