"""Minimal tensor/layer toolkit: convolution, ReLU, batch norm, pooling,
fully-connected layers and softmax cross-entropy.

Tensors are plain numpy arrays in (batch, channels, height, width) layout.
Convolution is 2-D cross-correlation (no kernel flip) at stride 1, with
"same" zero padding (output spatial dims equal input) or "valid" (no pad).
Every forward op is pure; the only mutable state is BatchNormState, updated
in train mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _pad_amount(k: int, padding: str) -> int:
    if padding == "same":
        if k % 2 == 0:
            raise ValueError(f"'same' padding requires an odd kernel size, got {k}")
        return (k - 1) // 2
    if padding == "valid":
        return 0
    raise ValueError(f"padding must be 'same' or 'valid', got {padding!r}")


def _check_conv_shapes(x: np.ndarray, kernels: np.ndarray) -> None:
    if x.ndim != 4:
        raise ValueError(f"input must be 4-D (N, C, H, W), got shape {x.shape}")
    if kernels.ndim != 4 or kernels.shape[2] != kernels.shape[3]:
        raise ValueError(f"kernels must be (N_o, N_i, k, k), got shape {kernels.shape}")
    if x.shape[1] != kernels.shape[1]:
        raise ValueError(
            f"input channels {x.shape[1]} do not match kernel input channels {kernels.shape[1]}"
        )


def conv2d_forward(
    x: np.ndarray,
    kernels: np.ndarray,
    bias: np.ndarray | None = None,
    padding: str = "same",
) -> np.ndarray:
    """Multi-channel 2-D cross-correlation: out_o = sum_i x_i (*) kernels_{o,i}.

    Implemented as an accumulation of k^2 channel-mixing products over shifted
    slices of the padded input, so each tap is a single matrix multiply.
    """
    _check_conv_shapes(x, kernels)
    n, _, h, w = x.shape
    n_out = kernels.shape[0]
    k = kernels.shape[2]
    p = _pad_amount(k, padding)
    if padding == "valid" and (h < k or w < k):
        raise ValueError(f"input {h}x{w} smaller than kernel {k} with 'valid' padding")
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
    ho, wo = h + 2 * p - k + 1, w + 2 * p - k + 1
    out = np.zeros((n, n_out, ho, wo), dtype=np.result_type(x, kernels))
    for i in range(k):
        for j in range(k):
            out += np.einsum(
                "nchw,oc->nohw", xp[:, :, i : i + ho, j : j + wo], kernels[:, :, i, j],
                optimize=True,
            )
    if bias is not None:
        out += np.asarray(bias)[None, :, None, None]
    return out


def conv2d_backward(
    grad_out: np.ndarray,
    x: np.ndarray,
    kernels: np.ndarray,
    padding: str = "same",
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of a conv2d_forward call: (grad_input, grad_kernels, grad_bias).

    grad_bias is always returned; callers whose layer has no bias ignore it.
    """
    _check_conv_shapes(x, kernels)
    n, _, h, w = x.shape
    k = kernels.shape[2]
    p = _pad_amount(k, padding)
    ho, wo = h + 2 * p - k + 1, w + 2 * p - k + 1
    if grad_out.shape != (n, kernels.shape[0], ho, wo):
        raise ValueError(
            f"grad_out shape {grad_out.shape} inconsistent with forward output "
            f"{(n, kernels.shape[0], ho, wo)}"
        )
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
    grad_xp = np.zeros_like(xp)
    grad_k = np.empty_like(kernels)
    for i in range(k):
        for j in range(k):
            sl = xp[:, :, i : i + ho, j : j + wo]
            grad_k[:, :, i, j] = np.einsum("nohw,nchw->oc", grad_out, sl, optimize=True)
            grad_xp[:, :, i : i + ho, j : j + wo] += np.einsum(
                "nohw,oc->nchw", grad_out, kernels[:, :, i, j], optimize=True
            )
    grad_x = grad_xp[:, :, p : p + h, p : p + w] if p else grad_xp
    grad_b = grad_out.sum(axis=(0, 2, 3))
    return grad_x, grad_k, grad_b


def relu_forward(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(grad_y: np.ndarray, x: np.ndarray) -> np.ndarray:
    # subgradient at 0 fixed to 0 for deterministic tests
    return np.where(x > 0, grad_y, 0)


@dataclass
class BatchNormState:
    """Per-channel batch-norm parameters and running statistics.

    Running stats default to None ("undefined"); evaluating in eval mode
    before any train-mode pass (or explicit initialization) is an error.
    """

    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray | None = None
    running_var: np.ndarray | None = None
    epsilon: float = 1e-5
    momentum: float = 0.9

    @classmethod
    def create(cls, channels: int, defined_stats: bool = True) -> "BatchNormState":
        """Fresh state with gamma=1, beta=0.  With defined_stats, running
        statistics start at mean 0 / variance 1 so an untrained network can
        still run in eval mode."""
        state = cls(gamma=np.ones(channels), beta=np.zeros(channels))
        if defined_stats:
            state.running_mean = np.zeros(channels)
            state.running_var = np.ones(channels)
        return state


@dataclass
class BatchNormCache:
    x_hat: np.ndarray
    inv_std: np.ndarray
    gamma: np.ndarray


def batchnorm_forward_cached(
    x: np.ndarray, state: BatchNormState, mode: str = "train"
) -> tuple[np.ndarray, BatchNormCache | None]:
    """Normalize per channel over (N, H, W).

    Train mode uses batch statistics (biased variance) and folds them into the
    running statistics with the configured momentum; eval mode uses the
    running statistics and returns no cache.
    """
    if x.ndim != 4:
        raise ValueError(f"batch norm expects a 4-D tensor, got shape {x.shape}")
    c = x.shape[1]
    if state.gamma.shape != (c,):
        raise ValueError(f"state holds {state.gamma.shape[0]} channels, input has {c}")
    gamma = state.gamma.astype(x.dtype, copy=False)
    beta = state.beta.astype(x.dtype, copy=False)
    if mode == "train":
        mean = x.mean(axis=(0, 2, 3))
        var = x.var(axis=(0, 2, 3))
        if state.running_mean is None:
            state.running_mean = mean.astype(np.float64)
            state.running_var = var.astype(np.float64)
        else:
            m = state.momentum
            state.running_mean = m * state.running_mean + (1 - m) * mean.astype(np.float64)
            state.running_var = m * state.running_var + (1 - m) * var.astype(np.float64)
        inv_std = 1.0 / np.sqrt(var + state.epsilon)
        x_hat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
        out = gamma[None, :, None, None] * x_hat + beta[None, :, None, None]
        return out, BatchNormCache(x_hat=x_hat, inv_std=inv_std, gamma=gamma)
    if mode == "eval":
        if state.running_mean is None or state.running_var is None:
            raise ValueError("batch norm eval mode before any train step: running stats undefined")
        mean = state.running_mean.astype(x.dtype, copy=False)
        inv_std = (1.0 / np.sqrt(state.running_var + state.epsilon)).astype(x.dtype, copy=False)
        x_hat = (x - mean[None, :, None, None]) * inv_std[None, :, None, None]
        return gamma[None, :, None, None] * x_hat + beta[None, :, None, None], None
    raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")


def batchnorm_forward(x: np.ndarray, state: BatchNormState, mode: str = "train") -> np.ndarray:
    out, _ = batchnorm_forward_cached(x, state, mode)
    return out


def batchnorm_backward(
    grad_out: np.ndarray, cache: BatchNormCache
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Backward through a train-mode forward: (grad_x, grad_gamma, grad_beta).

    Differentiates through the batch statistics; m is the number of samples
    per channel.
    """
    n, c, h, w = grad_out.shape
    m = n * h * w
    grad_gamma = np.sum(grad_out * cache.x_hat, axis=(0, 2, 3))
    grad_beta = np.sum(grad_out, axis=(0, 2, 3))
    d_xhat = grad_out * cache.gamma[None, :, None, None]
    sum_d = d_xhat.sum(axis=(0, 2, 3), keepdims=True)
    sum_dx = (d_xhat * cache.x_hat).sum(axis=(0, 2, 3), keepdims=True)
    grad_x = (cache.inv_std[None, :, None, None] / m) * (
        m * d_xhat - sum_d - cache.x_hat * sum_dx
    )
    return grad_x, grad_gamma, grad_beta


def global_avg_pool(x: np.ndarray) -> np.ndarray:
    """Mean over the spatial dims: (N, C, H, W) -> (N, C)."""
    if x.ndim != 4:
        raise ValueError(f"pooling expects a 4-D tensor, got shape {x.shape}")
    return x.mean(axis=(2, 3))


def global_avg_pool_backward(grad_out: np.ndarray, spatial: tuple[int, int]) -> np.ndarray:
    """Distribute the pooled gradient uniformly: each element gets grad / (H*W)."""
    h, w = spatial
    return np.broadcast_to(
        grad_out[:, :, None, None] / (h * w), grad_out.shape + (h, w)
    ).copy()


def fully_connected_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Affine map: (N, D_in) @ (D_out, D_in)^T + bias."""
    if x.ndim != 2 or x.shape[1] != weights.shape[1]:
        raise ValueError(f"input shape {x.shape} incompatible with weights {weights.shape}")
    w = weights.astype(x.dtype, copy=False)
    return x @ w.T + bias.astype(x.dtype, copy=False)


def fully_connected_backward(
    grad_out: np.ndarray, x: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    grad_x = grad_out @ weights.astype(x.dtype, copy=False)
    grad_w = grad_out.T @ x
    grad_b = grad_out.sum(axis=0)
    return grad_x, grad_w, grad_b


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(
    logits: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean negative log-likelihood and its gradient w.r.t. the logits.

    labels are integer class ids in [0, n_classes); the gradient is
    (softmax - onehot) / batch.
    """
    if logits.ndim != 2:
        raise ValueError(f"logits must be (N, n_classes), got shape {logits.shape}")
    labels = np.asarray(labels)
    n, n_classes = logits.shape
    if labels.shape != (n,):
        raise ValueError(f"labels shape {labels.shape} does not match batch size {n}")
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValueError(
            f"labels must lie in [0, {n_classes}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    z = logits - logits.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = float(-log_probs[np.arange(n), labels].mean())
    grad = np.exp(log_probs)
    grad[np.arange(n), labels] -= 1.0
    grad /= n
    return loss, grad
