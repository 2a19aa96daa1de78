"""Dense numeric core: explicit forward/backward ops, Adam, seeded RNG.

Everything runs on row-major 32-bit numpy arrays by default (a 64-bit mode
exists for stricter gradient testing via :func:`use_dtype`).  Forward
functions return ``(output, backward)`` where ``backward`` is a closure over
exactly the values the gradient needs.  There is no general autodiff: models
compose these primitives and apply the backward closures in reverse order.
"""

from __future__ import annotations

import contextlib
import hashlib
from typing import Callable, Sequence

import numpy as np
from scipy.special import erf

from .errors import NonFiniteLoss, ShapeMismatch

# Module default; use_dtype() flips it for 64-bit gradient testing.
DTYPE = np.float32

_INV_SQRT2 = 0.7071067811865476
_INV_SQRT_2PI = 0.3989422804014327


@contextlib.contextmanager
def use_dtype(dtype):
    """Temporarily switch the default float width (testing hook)."""
    global DTYPE
    previous = DTYPE
    DTYPE = dtype
    try:
        yield
    finally:
        DTYPE = previous


class RandomSource:
    """Deterministic random stream: identical seed, identical draws."""

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def fork(self, tag: str) -> "RandomSource":
        """Independent child stream derived from (seed, tag); order-free."""
        digest = hashlib.sha256(f"{self.seed}:{tag}".encode()).digest()
        return RandomSource(int.from_bytes(digest[:8], "little"))

    def normal(self, shape, std: float = 1.0) -> np.ndarray:
        return (self._gen.standard_normal(shape) * std).astype(DTYPE)

    def random(self, shape=None) -> np.ndarray | float:
        return self._gen.random(shape)

    def integers(self, low: int, high: int, size=None):
        return self._gen.integers(low, high, size=size)

    def choice(self, n: int, size: int, replace: bool = False) -> np.ndarray:
        return self._gen.choice(n, size=size, replace=replace)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def shuffle(self, items: list) -> None:
        self._gen.shuffle(items)


class Parameter:
    """A named weight matrix with an accumulated gradient of equal shape."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        value = np.ascontiguousarray(value, dtype=DTYPE)
        if value.ndim != 2:
            raise ShapeMismatch(f"parameter {name!r} must be 2-D, got {value.shape}")
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value)

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape  # type: ignore[return-value]


Backward = Callable[[np.ndarray], tuple]


# --------------------------------------------------------------------------
# forward/backward primitive family
# --------------------------------------------------------------------------

def matmul(a: np.ndarray, b: np.ndarray):
    if a.shape[-1] != b.shape[0]:
        raise ShapeMismatch(f"matmul {a.shape} x {b.shape}")
    out = a @ b

    def backward(g):
        return g @ b.T, a.T @ g

    return out, backward


def bias_add(x: np.ndarray, b: np.ndarray):
    if b.shape[-1] != x.shape[-1]:
        raise ShapeMismatch(f"bias_add {x.shape} + {b.shape}")
    out = x + b

    def backward(g):
        return g, g.sum(axis=0, keepdims=True)

    return out, backward


def row_softmax(x: np.ndarray):
    """Numerically stable softmax over the last axis."""
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        inner = (g * s).sum(axis=-1, keepdims=True)
        return ((g - inner) * s,)

    return s, backward


def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float = 1e-5):
    """Normalize each row to zero mean / unit variance, then scale and shift."""
    mean = x.mean(axis=-1, keepdims=True)
    centered = x - mean
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + np.asarray(eps, dtype=x.dtype))
    xhat = centered * inv_std
    out = xhat * gamma + beta

    def backward(g):
        d = x.shape[-1]
        dxhat = g * gamma
        dgamma = (g * xhat).sum(axis=0, keepdims=True)
        dbeta = g.sum(axis=0, keepdims=True)
        dx = (dxhat - dxhat.mean(axis=-1, keepdims=True)
              - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True) / d) * inv_std
        return dx, dgamma, dbeta

    return out, backward


def gelu(x: np.ndarray):
    """Exact GELU: x * Phi(x) with the Gaussian CDF Phi."""
    cdf = 0.5 * (1.0 + erf(x * np.asarray(_INV_SQRT2, dtype=x.dtype)))
    out = x * cdf

    def backward(g):
        pdf = np.exp(-0.5 * x * x) * np.asarray(_INV_SQRT_2PI, dtype=x.dtype)
        return (g * (cdf + x * pdf),)

    return out, backward


def dropout(x: np.ndarray, p: float, rs: RandomSource, train: bool = True):
    """Inverted dropout; identity when p == 0 or train is False."""
    if not (0.0 <= p < 1.0):
        raise ValueError(f"dropout probability {p} not in [0,1)")
    if not train or p == 0.0:
        return x, lambda g: (g,)
    keep = (rs.random(x.shape) >= p).astype(x.dtype) / np.asarray(1.0 - p, dtype=x.dtype)
    out = x * keep

    def backward(g):
        return (g * keep,)

    return out, backward


def cross_entropy(logits: np.ndarray, targets: np.ndarray, mask: np.ndarray | None = None):
    """Mean token-level cross-entropy; positions with mask=False are ignored.

    Returns ``(loss, backward)`` where ``backward()`` takes no upstream
    gradient (the loss is the scalar root) and yields d(loss)/d(logits).
    """
    n, _ = logits.shape
    if targets.shape != (n,):
        raise ShapeMismatch(f"cross_entropy targets {targets.shape} for logits {logits.shape}")
    if mask is None:
        mask = np.ones(n, dtype=bool)
    count = int(mask.sum())
    if count == 0:
        raise ValueError("cross_entropy: no unmasked positions")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    logp = shifted - logz
    picked = logp[np.arange(n), targets]
    loss = float(-(picked * mask).sum() / count)
    if not np.isfinite(loss):
        raise NonFiniteLoss("cross_entropy produced a non-finite loss")

    def backward():
        probs = np.exp(logp)
        probs[np.arange(n), targets] -= 1.0
        probs *= (mask.astype(logits.dtype) / count)[:, None]
        return (probs,)

    return loss, backward


def sigmoid(x: np.ndarray):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)

    def backward(g):
        return (g * out * (1.0 - out),)

    return out, backward


def binary_cross_entropy(logits: np.ndarray, targets: np.ndarray):
    """Mean BCE fused with sigmoid for stability; targets in {0,1}."""
    if logits.shape != targets.shape:
        raise ShapeMismatch(f"bce logits {logits.shape} vs targets {targets.shape}")
    n = logits.size
    if n == 0:
        raise ValueError("binary_cross_entropy: empty batch")
    # log(1 + exp(-|x|)) + max(x, 0) - x*y, elementwise stable form
    losses = np.log1p(np.exp(-np.abs(logits))) + np.maximum(logits, 0.0) - logits * targets
    loss = float(losses.sum() / n)
    if not np.isfinite(loss):
        raise NonFiniteLoss("binary_cross_entropy produced a non-finite loss")
    probs, _ = sigmoid(logits)

    def backward():
        return ((probs - targets) / n,)

    return loss, backward


# --------------------------------------------------------------------------
# optimizer
# --------------------------------------------------------------------------

class Adam:
    """Standard Adam with bias correction; zeroes grads after each step."""

    def __init__(self, params: Sequence[Parameter], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique within a model")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {p.name: np.zeros_like(p.value) for p in self.params}
        self._v = {p.name: np.zeros_like(p.value) for p in self.params}

    def step(self) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p in self.params:
            g = p.grad
            m = self._m[p.name]
            v = self._v[p.name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.value -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            p.zero_grad()


# --------------------------------------------------------------------------
# gradient verification harness
# --------------------------------------------------------------------------

def grad_check(loss_fn: Callable[[], float], params: Sequence[Parameter],
               step: float = 1e-3) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``loss_fn`` must run a full forward+backward pass, accumulating into
    ``Parameter.grad``, and return the scalar loss.  It must be a
    deterministic function of the parameter values (re-seed any dropout).

    The analytic gradient is taken at the working precision; the numeric
    reference perturbs the stored parameter values by ``step`` and evaluates
    the probes in float64 with a fourth-order central stencil, so the
    oracle's own truncation and rounding error sits well below the gradient
    being judged.  Error metric per entry: |a - n| / max(|a|, |n|, 1e-8).
    """
    for p in params:
        p.zero_grad()
    loss = loss_fn()
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"loss is {loss}")
    analytic = {p.name: p.grad.astype(np.float64) for p in params}

    saved = [(p, p.value) for p in params]
    for p in params:
        p.value = p.value.astype(np.float64)
    try:
        worst = 0.0
        for p in params:
            flat = p.value.reshape(-1)
            a_flat = analytic[p.name].reshape(-1)
            for i in range(flat.size):
                original = flat[i]
                probes = []
                for offset in (-2.0, -1.0, 1.0, 2.0):
                    flat[i] = original + offset * step
                    probes.append(loss_fn())
                flat[i] = original
                down2, down1, up1, up2 = probes
                numeric = (down2 - 8.0 * down1 + 8.0 * up1 - up2) / (12.0 * step)
                a = float(a_flat[i])
                err = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
                worst = max(worst, err)
    finally:
        for p, value in saved:
            p.value = value
            p.zero_grad()
    return worst
