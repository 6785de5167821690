"""Independent verification paths: central finite differences, a literal
quadruple-loop convolution, and a whole-network per-scalar gradient check.

These deliberately share no implementation with the code they check; the
convolution below sums element by element with Python loops and nothing else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from gabornet.network import NetworkConfig, _forward, initialize, loss_and_gradients
from gabornet.layers import softmax_cross_entropy

REL_ERROR_FLOOR = 1e-12
DEFAULT_STEP = 1e-6


@dataclass
class GradCheckReport:
    """One checked scalar: analytic vs central-difference value."""

    name: str
    analytic: float
    numeric: float
    rel_error: float
    passed: bool


def relative_error(analytic, numeric, floor: float = REL_ERROR_FLOOR) -> float:
    """|a - n| / max(|a|, |n|, floor); arrays compare via max-abs norms."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    scale = max(np.abs(a).max(initial=0.0), np.abs(n).max(initial=0.0), floor)
    return float(np.abs(a - n).max() / scale)


def finite_diff(loss_fn: Callable[[float], float], value: float, step: float = DEFAULT_STEP) -> float:
    """Central difference (f(v+h) - f(v-h)) / (2h) in 64-bit arithmetic."""
    hi = float(loss_fn(value + step))
    lo = float(loss_fn(value - step))
    if not (math.isfinite(hi) and math.isfinite(lo)):
        raise ValueError(f"non-finite evaluation in finite difference at {value!r}")
    return (hi - lo) / (2.0 * step)


def direct_conv(
    x: np.ndarray,
    kernels: np.ndarray,
    bias: np.ndarray | None = None,
    padding: str = "same",
) -> np.ndarray:
    """Reference cross-correlation: literal summation per output element."""
    x = np.asarray(x, dtype=np.float64)
    kernels = np.asarray(kernels, dtype=np.float64)
    if x.ndim != 4 or kernels.ndim != 4 or x.shape[1] != kernels.shape[1]:
        raise ValueError(f"inconsistent shapes {x.shape} and {kernels.shape}")
    n, ci, h, w = x.shape
    n_out, _, k, _ = kernels.shape
    if padding == "same":
        pad = (k - 1) // 2
    elif padding == "valid":
        pad = 0
    else:
        raise ValueError(f"padding must be 'same' or 'valid', got {padding!r}")
    ho, wo = h + 2 * pad - k + 1, w + 2 * pad - k + 1
    out = np.zeros((n, n_out, ho, wo))
    for b in range(n):
        for o in range(n_out):
            for r in range(ho):
                for col in range(wo):
                    acc = 0.0
                    for c in range(ci):
                        for i in range(k):
                            for j in range(k):
                                rr = r + i - pad
                                cc = col + j - pad
                                if 0 <= rr < h and 0 <= cc < w:
                                    acc += x[b, c, rr, cc] * kernels[o, c, i, j]
                    out[b, o, r, col] = acc + (bias[o] if bias is not None else 0.0)
    return out


def grad_check_network(
    config: NetworkConfig,
    tolerance: float = 1e-4,
    seed: int = 7,
    batch_size: int = 3,
    step: float = DEFAULT_STEP,
) -> list[GradCheckReport]:
    """Perturb every learnable scalar of a freshly initialized network and
    compare the analytic loss gradient against central differences.

    Runs on a fixed random batch in train mode, so batch-norm statistics are
    deterministic functions of each perturbed scalar.  Intended for tiny
    configs; cost is two forward passes per scalar.
    """
    if config.precision != "f64":
        raise ValueError("gradient checks need 64-bit arithmetic")
    net = initialize(config, seed=seed)
    rng = np.random.default_rng(seed + 1)
    batch = rng.standard_normal(
        (batch_size, config.input_bands, config.patch_size, config.patch_size)
    )
    labels = rng.integers(0, config.n_classes, size=batch_size)

    def loss_at() -> float:
        logits, _ = _forward(net, batch, "train", want_cache=False)
        loss, _ = softmax_cross_entropy(logits, labels)
        return loss

    _, grads, _ = loss_and_gradients(net, batch, labels)
    reports: list[GradCheckReport] = []
    for name, arr in net.parameters().items():
        grad = np.atleast_1d(np.asarray(grads[name], dtype=np.float64))
        flat = arr.reshape(-1)
        for idx in range(flat.size):
            original = flat[idx]
            flat[idx] = original + step
            hi = loss_at()
            flat[idx] = original - step
            lo = loss_at()
            flat[idx] = original
            numeric = (hi - lo) / (2.0 * step)
            analytic = float(grad.reshape(-1)[idx])
            err = relative_error(analytic, numeric)
            reports.append(
                GradCheckReport(
                    name=f"{name}[{idx}]" if flat.size > 1 else name,
                    analytic=analytic,
                    numeric=numeric,
                    rel_error=err,
                    passed=err < tolerance,
                )
            )
    return reports
