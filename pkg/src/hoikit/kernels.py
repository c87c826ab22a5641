"""Numeric hot kernels with two interchangeable backends.

Every kernel has a pure-numpy implementation and a numba @njit twin.
The active backend is chosen from the HOIKIT_BACKEND environment variable
("numba", "numpy", or "auto", the default) and can be switched at runtime
with set_backend(), which the benchmark command uses to time both paths
in one process.

All kernels operate on float64 arrays. fastmath stays off so that -inf
handling and summation order are exact and deterministic per backend.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if len(args) == 1 and callable(args[0]):
            return args[0]
        return wrap

_SQRT1_2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _softmax_masked_np(logits):
    m = np.max(logits, axis=-1, keepdims=True)
    finite = np.isfinite(m)
    bad = bool(np.any(~finite))
    e = np.exp(logits - np.where(finite, m, 0.0))
    s = np.sum(e, axis=-1, keepdims=True)
    w = e / np.where(s == 0.0, 1.0, s)
    return w, bad


def _softmax_masked_grad_np(weights, grad_out):
    inner = np.sum(weights * grad_out, axis=-1, keepdims=True)
    return weights * (grad_out - inner)


def _layernorm_np(x, gamma, beta, eps):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = np.mean(xc * xc, axis=-1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = xc * rstd
    return xhat * gamma + beta, xhat, rstd[..., 0]


def _layernorm_grad_np(grad_out, xhat, rstd, gamma):
    gxh = grad_out * gamma
    m1 = gxh.mean(axis=-1, keepdims=True)
    m2 = np.mean(gxh * xhat, axis=-1, keepdims=True)
    gx = rstd[..., None] * (gxh - m1 - xhat * m2)
    ggamma = np.sum(grad_out * xhat, axis=0)
    gbeta = np.sum(grad_out, axis=0)
    return gx, ggamma, gbeta


def _gelu_np(x):
    from scipy.special import erf

    return 0.5 * x * (1.0 + erf(x * _SQRT1_2))


def _gelu_grad_np(x, grad_out):
    from scipy.special import erf

    cdf = 0.5 * (1.0 + erf(x * _SQRT1_2))
    pdf = np.exp(-0.5 * x * x) * _INV_SQRT_2PI
    return grad_out * (cdf + x * pdf)


def _adamw_update_np(p, g, m, v, t, lr, beta1, beta2, eps, wd):
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    mhat = m / (1.0 - beta1 ** t)
    vhat = v / (1.0 - beta2 ** t)
    p -= lr * (mhat / (np.sqrt(vhat) + eps) + wd * p)


def _box_iou_np(a, b):
    # boxes are (x1, y1, x2, y2) rows
    n, m = a.shape[0], b.shape[0]
    out = np.zeros((n, m))
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    for i in range(n):
        x1 = np.maximum(a[i, 0], b[:, 0])
        y1 = np.maximum(a[i, 1], b[:, 1])
        x2 = np.minimum(a[i, 2], b[:, 2])
        y2 = np.minimum(a[i, 3], b[:, 3])
        inter = np.maximum(x2 - x1, 0.0) * np.maximum(y2 - y1, 0.0)
        union = area_a[i] + area_b - inter
        out[i] = np.where(union > 0.0, inter / np.where(union > 0, union, 1.0), 0.0)
    return out


def _box_giou_np(a, b):
    iou = _box_iou_np(a, b)
    n, m = a.shape[0], b.shape[0]
    out = np.zeros((n, m))
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    for i in range(n):
        x1 = np.maximum(a[i, 0], b[:, 0])
        y1 = np.maximum(a[i, 1], b[:, 1])
        x2 = np.minimum(a[i, 2], b[:, 2])
        y2 = np.minimum(a[i, 3], b[:, 3])
        inter = np.maximum(x2 - x1, 0.0) * np.maximum(y2 - y1, 0.0)
        union = area_a[i] + area_b - inter
        ex1 = np.minimum(a[i, 0], b[:, 0])
        ey1 = np.minimum(a[i, 1], b[:, 1])
        ex2 = np.maximum(a[i, 2], b[:, 2])
        ey2 = np.maximum(a[i, 3], b[:, 3])
        enc = (ex2 - ex1) * (ey2 - ey1)
        g = np.where(union > 0.0, inter / np.where(union > 0, union, 1.0), 0.0)
        out[i] = g - np.where(enc > 0.0, (enc - union) / np.where(enc > 0, enc, 1.0), 0.0)
    return out


# ---------------------------------------------------------------------------
# numba twins
# ---------------------------------------------------------------------------

@njit(cache=True)
def _softmax_masked_nb(logits):
    n, k = logits.shape
    out = np.empty((n, k))
    bad = False
    for i in range(n):
        m = -np.inf
        for j in range(k):
            if logits[i, j] > m:
                m = logits[i, j]
        if m == -np.inf:
            bad = True
            for j in range(k):
                out[i, j] = np.nan
            continue
        s = 0.0
        for j in range(k):
            e = math.exp(logits[i, j] - m)
            out[i, j] = e
            s += e
        inv = 1.0 / s
        for j in range(k):
            out[i, j] *= inv
    return out, bad


@njit(cache=True)
def _softmax_masked_grad_nb(weights, grad_out):
    n, k = weights.shape
    gx = np.empty((n, k))
    for i in range(n):
        inner = 0.0
        for j in range(k):
            inner += weights[i, j] * grad_out[i, j]
        for j in range(k):
            gx[i, j] = weights[i, j] * (grad_out[i, j] - inner)
    return gx


@njit(cache=True)
def _layernorm_nb(x, gamma, beta, eps):
    n, d = x.shape
    y = np.empty((n, d))
    xhat = np.empty((n, d))
    rstd = np.empty(n)
    for i in range(n):
        mu = 0.0
        for j in range(d):
            mu += x[i, j]
        mu /= d
        var = 0.0
        for j in range(d):
            c = x[i, j] - mu
            var += c * c
        var /= d
        r = 1.0 / math.sqrt(var + eps)
        rstd[i] = r
        for j in range(d):
            h = (x[i, j] - mu) * r
            xhat[i, j] = h
            y[i, j] = h * gamma[j] + beta[j]
    return y, xhat, rstd


@njit(cache=True)
def _layernorm_grad_nb(grad_out, xhat, rstd, gamma):
    n, d = grad_out.shape
    gx = np.empty((n, d))
    ggamma = np.zeros(d)
    gbeta = np.zeros(d)
    for i in range(n):
        m1 = 0.0
        m2 = 0.0
        for j in range(d):
            gh = grad_out[i, j] * gamma[j]
            m1 += gh
            m2 += gh * xhat[i, j]
        m1 /= d
        m2 /= d
        for j in range(d):
            gh = grad_out[i, j] * gamma[j]
            gx[i, j] = rstd[i] * (gh - m1 - xhat[i, j] * m2)
            ggamma[j] += grad_out[i, j] * xhat[i, j]
            gbeta[j] += grad_out[i, j]
    return gx, ggamma, gbeta


@njit(cache=True)
def _gelu_nb(x):
    flat = x.ravel()
    out = np.empty(flat.shape[0])
    for i in range(flat.shape[0]):
        out[i] = 0.5 * flat[i] * (1.0 + math.erf(flat[i] * _SQRT1_2))
    return out.reshape(x.shape)


@njit(cache=True)
def _gelu_grad_nb(x, grad_out):
    flat = x.ravel()
    gflat = grad_out.ravel()
    out = np.empty(flat.shape[0])
    for i in range(flat.shape[0]):
        cdf = 0.5 * (1.0 + math.erf(flat[i] * _SQRT1_2))
        pdf = math.exp(-0.5 * flat[i] * flat[i]) * _INV_SQRT_2PI
        out[i] = gflat[i] * (cdf + flat[i] * pdf)
    return out.reshape(x.shape)


@njit(cache=True)
def _adamw_update_nb(p, g, m, v, t, lr, beta1, beta2, eps, wd):
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for i in range(p.shape[0]):
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i]
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i]
        p[i] -= lr * ((m[i] / c1) / (math.sqrt(v[i] / c2) + eps) + wd * p[i])


@njit(cache=True)
def _box_iou_nb(a, b):
    n, m = a.shape[0], b.shape[0]
    out = np.zeros((n, m))
    for i in range(n):
        aa = (a[i, 2] - a[i, 0]) * (a[i, 3] - a[i, 1])
        for j in range(m):
            x1 = max(a[i, 0], b[j, 0])
            y1 = max(a[i, 1], b[j, 1])
            x2 = min(a[i, 2], b[j, 2])
            y2 = min(a[i, 3], b[j, 3])
            inter = max(x2 - x1, 0.0) * max(y2 - y1, 0.0)
            union = aa + (b[j, 2] - b[j, 0]) * (b[j, 3] - b[j, 1]) - inter
            if union > 0.0:
                out[i, j] = inter / union
    return out


@njit(cache=True)
def _box_giou_nb(a, b):
    n, m = a.shape[0], b.shape[0]
    out = np.zeros((n, m))
    for i in range(n):
        aa = (a[i, 2] - a[i, 0]) * (a[i, 3] - a[i, 1])
        for j in range(m):
            x1 = max(a[i, 0], b[j, 0])
            y1 = max(a[i, 1], b[j, 1])
            x2 = min(a[i, 2], b[j, 2])
            y2 = min(a[i, 3], b[j, 3])
            inter = max(x2 - x1, 0.0) * max(y2 - y1, 0.0)
            union = aa + (b[j, 2] - b[j, 0]) * (b[j, 3] - b[j, 1]) - inter
            iou = inter / union if union > 0.0 else 0.0
            ex = (max(a[i, 2], b[j, 2]) - min(a[i, 0], b[j, 0]))
            ey = (max(a[i, 3], b[j, 3]) - min(a[i, 1], b[j, 1]))
            enc = ex * ey
            pen = (enc - union) / enc if enc > 0.0 else 0.0
            out[i, j] = iou - pen
    return out


# numba caches per dtype-shape signature; adamw runs on flattened views
def _adamw_update_nb_entry(p, g, m, v, t, lr, beta1, beta2, eps, wd):
    _adamw_update_nb(p.ravel(), g.ravel(), m.ravel(), v.ravel(),
                     t, lr, beta1, beta2, eps, wd)


def _adamw_update_np_entry(p, g, m, v, t, lr, beta1, beta2, eps, wd):
    _adamw_update_np(p.ravel(), g.ravel(), m.ravel(), v.ravel(),
                     t, lr, beta1, beta2, eps, wd)


_IMPLS = {
    "numpy": {
        "softmax_masked": _softmax_masked_np,
        "softmax_masked_grad": _softmax_masked_grad_np,
        "layernorm": _layernorm_np,
        "layernorm_grad": _layernorm_grad_np,
        "gelu": _gelu_np,
        "gelu_grad": _gelu_grad_np,
        "adamw_update": _adamw_update_np_entry,
        "box_iou": _box_iou_np,
        "box_giou": _box_giou_np,
    },
}

if NUMBA_AVAILABLE:
    _IMPLS["numba"] = {
        "softmax_masked": _softmax_masked_nb,
        "softmax_masked_grad": _softmax_masked_grad_nb,
        "layernorm": _layernorm_nb,
        "layernorm_grad": _layernorm_grad_nb,
        "gelu": _gelu_nb,
        "gelu_grad": _gelu_grad_nb,
        "adamw_update": _adamw_update_nb_entry,
        "box_iou": _box_iou_nb,
        "box_giou": _box_giou_nb,
    }

_active_name = None
_active = None


def available_backends():
    return sorted(_IMPLS)


def set_backend(name: str) -> str:
    """Select the kernel backend. Returns the resolved name."""
    global _active_name, _active
    if name == "auto":
        name = "numba" if NUMBA_AVAILABLE else "numpy"
    if name not in _IMPLS:
        raise ValueError(f"unknown backend {name!r}; have {available_backends()}")
    _active_name = name
    _active = _IMPLS[name]
    return name


def get_backend() -> str:
    return _active_name


set_backend(os.environ.get("HOIKIT_BACKEND", "auto"))


def softmax_masked(logits):
    return _active["softmax_masked"](logits)


def softmax_masked_grad(weights, grad_out):
    return _active["softmax_masked_grad"](weights, grad_out)


def layernorm(x, gamma, beta, eps):
    return _active["layernorm"](x, gamma, beta, eps)


def layernorm_grad(grad_out, xhat, rstd, gamma):
    return _active["layernorm_grad"](grad_out, xhat, rstd, gamma)


def gelu(x):
    return _active["gelu"](x)


def gelu_grad(x, grad_out):
    return _active["gelu_grad"](x, grad_out)


def adamw_update(p, g, m, v, t, lr, beta1, beta2, eps, wd):
    _active["adamw_update"](p, g, m, v, t, lr, beta1, beta2, eps, wd)


def box_iou(a, b):
    return _active["box_iou"](a, b)


def box_giou(a, b):
    return _active["box_giou"](a, b)


def warmup():
    """Trigger jit compilation of every kernel on tiny inputs."""
    x = np.array([[0.1, -np.inf], [0.3, 0.2]])
    w, _ = softmax_masked(x)
    softmax_masked_grad(w, x.copy())
    g = np.ones(2)
    y, xh, rs = layernorm(x.copy(), g, np.zeros(2), 1e-5)
    layernorm_grad(y, xh, rs, g)
    gelu_grad(x.copy(), gelu(x.copy()))
    adamw_update(x.copy(), x.copy(), np.zeros_like(x), np.zeros_like(x),
                 1, 1e-3, 0.9, 0.999, 1e-8, 0.0)
    b = np.array([[0.0, 0.0, 2.0, 2.0], [1.0, 1.0, 3.0, 3.0]])
    box_iou(b, b)
    box_giou(b, b)
