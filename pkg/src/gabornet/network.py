"""Network assembly and training: CV blocks (conv, ReLU, conv, batch norm)
feeding a pooled fully-connected head, with kernels synthesized from Gabor
parameters at every forward pass.

Modes:
  gabor             kernels from four learnable scalars each, random phase init
  gabor_p_zero_init phases start at 0 but stay learnable
  gabor_no_p        phases frozen at 0 (three learnables per filter)
  regular           raw kernel elements are the learnables (baseline)
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from gabornet import kernels as gk
from gabornet.data import PatchDataset, batch_iterator
from gabornet.layers import (
    BatchNormState,
    batchnorm_backward,
    batchnorm_forward_cached,
    conv2d_backward,
    conv2d_forward,
    fully_connected_backward,
    fully_connected_forward,
    global_avg_pool,
    global_avg_pool_backward,
    relu_backward,
    relu_forward,
    softmax_cross_entropy,
)
from gabornet.optim import AdamState, adam_step

MODES = ("gabor", "regular", "gabor_p_zero_init", "gabor_no_p")

SNAPSHOT_MANIFEST = "manifest.txt"
SNAPSHOT_BLOB = "params.f64"


@dataclass(frozen=True)
class CvBlockConfig:
    """One CV block: two conv layers of n_theta*n_mag output features each."""

    n_theta: int
    n_mag: int
    kernel_size: int

    @property
    def n_out(self) -> int:
        return self.n_theta * self.n_mag

    def validate(self) -> None:
        if self.n_theta < 1 or self.n_mag < 1:
            raise ValueError(f"n_theta and n_mag must be >= 1, got {self}")
        if self.kernel_size < 3 or self.kernel_size % 2 == 0:
            raise ValueError(f"kernel size must be odd and >= 3, got {self.kernel_size}")


def standard_blocks(
    n_blocks: int, n_theta: int = 4, n_mag: int = 4, kernel_size: int = 5
) -> list[CvBlockConfig]:
    """Block schedule with n_theta doubling per block and n_mag fixed, giving
    the 16-16-32-32-64-64-128-128 kernel progression at the defaults."""
    if n_blocks < 1:
        raise ValueError(f"need at least one block, got {n_blocks}")
    return [
        CvBlockConfig(n_theta=n_theta * 2**b, n_mag=n_mag, kernel_size=kernel_size)
        for b in range(n_blocks)
    ]


@dataclass
class NetworkConfig:
    mode: str
    blocks: list[CvBlockConfig]
    n_classes: int
    input_bands: int
    patch_size: int = 15
    epochs: int = 300
    lr: float = 0.0076
    lr_decay: float = 0.995
    batch_size: int = 100
    seed: int = 0
    precision: str = "f64"

    @property
    def dtype(self):
        return np.float64 if self.precision == "f64" else np.float32

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.blocks:
            raise ValueError("at least one CV block is required")
        for b in self.blocks:
            b.validate()
        if self.n_classes < 2:
            raise ValueError(f"need at least two classes, got {self.n_classes}")
        if self.input_bands < 1:
            raise ValueError(f"input_bands must be >= 1, got {self.input_bands}")
        if self.precision not in ("f32", "f64"):
            raise ValueError(f"precision must be 'f32' or 'f64', got {self.precision!r}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")


@dataclass
class GaborConvLayer:
    """Conv layer whose (n_out, n_in) filters are Gabor parameter quadruples.

    Initial theta/omega are kept for the learned-frequency dumps; phases are
    learnable unless learn_phase is off (then they stay 0).
    """

    theta: np.ndarray
    omega: np.ndarray
    sigma: np.ndarray
    phase: np.ndarray
    bias: np.ndarray | None
    kernel_size: int
    init_theta: np.ndarray
    init_omega: np.ndarray
    learn_phase: bool = True

    @property
    def n_out(self) -> int:
        return self.theta.shape[0]

    @property
    def n_in(self) -> int:
        return self.theta.shape[1]

    def grid(self) -> gk.KernelGrid:
        return gk.coordinate_grid(self.kernel_size)

    def synthesize(self, dtype=np.float64) -> np.ndarray:
        kernels = gk.kernel_stack(self.theta, self.omega, self.sigma, self.phase, self.grid())
        return kernels.astype(dtype, copy=False)

    def banks(self) -> list[gk.KernelBank]:
        """Per-output-feature view of the filters as KernelBank records."""
        out = []
        for o in range(self.n_out):
            filters = [
                gk.GaborParams(
                    theta=float(self.theta[o, i]),
                    omega=float(self.omega[o, i]),
                    sigma=float(self.sigma[o, i]),
                    phase=float(self.phase[o, i]),
                )
                for i in range(self.n_in)
            ]
            bias = float(self.bias[o]) if self.bias is not None else None
            out.append(gk.KernelBank(filters=filters, bias=bias))
        return out


@dataclass
class RegularConvLayer:
    """Baseline conv layer with raw kernel elements as learnables."""

    kernels: np.ndarray
    bias: np.ndarray | None
    kernel_size: int

    @property
    def n_out(self) -> int:
        return self.kernels.shape[0]

    @property
    def n_in(self) -> int:
        return self.kernels.shape[1]

    def synthesize(self, dtype=np.float64) -> np.ndarray:
        return self.kernels.astype(dtype, copy=False)


@dataclass
class CvBlock:
    conv1: GaborConvLayer | RegularConvLayer
    conv2: GaborConvLayer | RegularConvLayer
    bn: BatchNormState


class GaborNet:
    """Trainable network; owns the parameter arrays, batch-norm state and the
    Adam accumulators.  Single-owner for mutation; forward in eval mode is
    read-only."""

    def __init__(self, config: NetworkConfig, blocks: list[CvBlock],
                 fc1_w, fc1_b, fc2_w, fc2_b):
        self.config = config
        self.blocks = blocks
        self.fc1_w = fc1_w
        self.fc1_b = fc1_b
        self.fc2_w = fc2_w
        self.fc2_b = fc2_b
        self.epochs_trained = 0
        self.adam = AdamState.create(self.parameters(), config.lr)

    def parameters(self) -> dict[str, np.ndarray]:
        """Learnable arrays in declaration order (also the snapshot order)."""
        params: dict[str, np.ndarray] = {}
        for b, block in enumerate(self.blocks, start=1):
            for c, conv in (("conv1", block.conv1), ("conv2", block.conv2)):
                prefix = f"block{b}.{c}"
                if isinstance(conv, GaborConvLayer):
                    params[f"{prefix}.theta"] = conv.theta
                    params[f"{prefix}.omega"] = conv.omega
                    params[f"{prefix}.sigma"] = conv.sigma
                    if conv.learn_phase:
                        params[f"{prefix}.phase"] = conv.phase
                else:
                    params[f"{prefix}.kernels"] = conv.kernels
                if conv.bias is not None:
                    params[f"{prefix}.bias"] = conv.bias
            params[f"block{b}.bn.gamma"] = block.bn.gamma
            params[f"block{b}.bn.beta"] = block.bn.beta
        params["fc1.weight"] = self.fc1_w
        params["fc1.bias"] = self.fc1_b
        params["fc2.weight"] = self.fc2_w
        params["fc2.bias"] = self.fc2_b
        return params

    def sigma_lower_bounds(self) -> dict[str, float]:
        return {
            name: gk.SIGMA_MIN for name in self.parameters() if name.endswith(".sigma")
        }

    def conv_layers(self) -> list[GaborConvLayer | RegularConvLayer]:
        """Conv layers in forward order; CLI layer indices are 1-based into
        this list."""
        out = []
        for block in self.blocks:
            out.extend([block.conv1, block.conv2])
        return out


def _gabor_conv_layer(
    bc: CvBlockConfig, n_in: int, with_bias: bool, mode: str, rng: np.random.Generator
) -> GaborConvLayer:
    # Output feature (t, m) gets theta0 = t*pi/n_theta and omega0 = (pi/2)/2^m;
    # all n_in filters of a bank share them.  Phases are drawn per filter even
    # when subsequently zeroed, keeping the rng stream identical across modes.
    n_out = bc.n_out
    t_idx = np.repeat(np.arange(bc.n_theta), bc.n_mag).astype(np.float64)
    m_idx = np.tile(np.arange(bc.n_mag), bc.n_theta).astype(np.float64)
    theta0 = t_idx * (math.pi / bc.n_theta)
    omega0 = (math.pi / 2.0) * 0.5**m_idx
    theta = np.repeat(theta0[:, None], n_in, axis=1)
    omega = np.repeat(omega0[:, None], n_in, axis=1)
    sigma = np.full((n_out, n_in), bc.kernel_size / 8.0)
    phase = rng.uniform(0.0, 2.0 * math.pi, size=(n_out, n_in))
    if mode in ("gabor_p_zero_init", "gabor_no_p"):
        phase = np.zeros((n_out, n_in))
    return GaborConvLayer(
        theta=theta,
        omega=omega,
        sigma=sigma,
        phase=phase,
        bias=np.zeros(n_out) if with_bias else None,
        kernel_size=bc.kernel_size,
        init_theta=theta.copy(),
        init_omega=omega.copy(),
        learn_phase=(mode != "gabor_no_p"),
    )


def _uniform_fan(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _regular_conv_layer(
    bc: CvBlockConfig, n_in: int, with_bias: bool, rng: np.random.Generator
) -> RegularConvLayer:
    k = bc.kernel_size
    kernels = _uniform_fan(
        rng, (bc.n_out, n_in, k, k), fan_in=n_in * k * k, fan_out=bc.n_out * k * k
    )
    return RegularConvLayer(
        kernels=kernels,
        bias=np.zeros(bc.n_out) if with_bias else None,
        kernel_size=k,
    )


def initialize(config: NetworkConfig, seed: int | None = None) -> GaborNet:
    """Build a network with the standard initialization: evenly spaced
    orientations over [0, pi), geometric frequency magnitudes from pi/2 with
    ratio 1/2, sigma = kernel_size/8, phases uniform in [0, 2*pi) per filter.
    Conv1 of each block carries a bias, conv2 does not."""
    config.validate()
    rng = np.random.default_rng(config.seed if seed is None else seed)
    blocks = []
    n_in = config.input_bands
    for bc in config.blocks:
        if config.mode == "regular":
            conv1 = _regular_conv_layer(bc, n_in, True, rng)
            conv2 = _regular_conv_layer(bc, bc.n_out, False, rng)
        else:
            conv1 = _gabor_conv_layer(bc, n_in, True, config.mode, rng)
            conv2 = _gabor_conv_layer(bc, bc.n_out, False, config.mode, rng)
        blocks.append(CvBlock(conv1=conv1, conv2=conv2, bn=BatchNormState.create(bc.n_out)))
        n_in = bc.n_out
    fc1_w = _uniform_fan(rng, (2 * n_in, n_in), n_in, 2 * n_in)
    fc1_b = np.zeros(2 * n_in)
    fc2_w = _uniform_fan(rng, (config.n_classes, 2 * n_in), 2 * n_in, config.n_classes)
    fc2_b = np.zeros(config.n_classes)
    return GaborNet(config, blocks, fc1_w, fc1_b, fc2_w, fc2_b)


def count_parameters(config: NetworkConfig) -> int:
    """Exact learnable-scalar count.

    Per block: u*n_in*n_out + n_out (conv1 with bias) + u*n_out^2 (conv2)
    + 2*n_out (batch norm), where u is 4 for gabor kernels (3 with frozen
    phase) and kernel_size^2 for regular ones.  The head adds
    2*n^2 + 2*n + 2*n*n_classes + n_classes for n final features.
    """
    config.validate()
    total = 0
    n_in = config.input_bands
    for bc in config.blocks:
        u = bc.kernel_size**2 if config.mode == "regular" else (
            3 if config.mode == "gabor_no_p" else 4
        )
        n_out = bc.n_out
        total += u * n_in * n_out + n_out + u * n_out * n_out + 2 * n_out
        n_in = n_out
    total += 2 * n_in * n_in + 2 * n_in + 2 * n_in * config.n_classes + config.n_classes
    return total


def _forward(net: GaborNet, batch: np.ndarray, mode: str, want_cache: bool):
    config = net.config
    x = np.ascontiguousarray(batch, dtype=config.dtype)
    if x.ndim != 4 or x.shape[1] != config.input_bands:
        raise ValueError(
            f"batch must be (N, {config.input_bands}, S, S), got shape {x.shape}"
        )
    caches = []
    for block in net.blocks:
        k1 = block.conv1.synthesize(config.dtype)
        k2 = block.conv2.synthesize(config.dtype)
        x_in = x
        c1 = conv2d_forward(x_in, k1, block.conv1.bias, padding="same")
        r1 = relu_forward(c1)
        c2 = conv2d_forward(r1, k2, None, padding="same")
        x, bn_cache = batchnorm_forward_cached(c2, block.bn, mode)
        if want_cache:
            caches.append((x_in, k1, c1, r1, k2, bn_cache))
    spatial = x.shape[2:]
    pooled = global_avg_pool(x)
    f1 = fully_connected_forward(pooled, net.fc1_w, net.fc1_b)
    r_fc = relu_forward(f1)
    logits = fully_connected_forward(r_fc, net.fc2_w, net.fc2_b)
    if not want_cache:
        return logits, None
    return logits, (caches, spatial, pooled, f1, r_fc)


def forward(net: GaborNet, batch: np.ndarray, mode: str = "eval") -> np.ndarray:
    """Class logits for a batch; kernels are synthesized from the current
    Gabor parameters at call time."""
    logits, _ = _forward(net, batch, mode, want_cache=False)
    return logits


def _gabor_param_grads(layer: GaborConvLayer, grad_kernels: np.ndarray) -> dict[str, np.ndarray]:
    g = gk.kernel_gradient_stack(layer.theta, layer.omega, layer.sigma, layer.phase, layer.grid())
    out = {
        "theta": np.sum(grad_kernels * g.d_theta, axis=(-2, -1)),
        "omega": np.sum(grad_kernels * g.d_omega, axis=(-2, -1)),
        "sigma": np.sum(grad_kernels * g.d_sigma, axis=(-2, -1)),
    }
    if layer.learn_phase:
        out["phase"] = np.sum(grad_kernels * g.d_phase, axis=(-2, -1))
    return out


def loss_and_gradients(
    net: GaborNet, batch: np.ndarray, labels: np.ndarray
) -> tuple[float, dict[str, np.ndarray], np.ndarray]:
    """Train-mode forward plus full backward pass.

    Returns the batch loss, gradients keyed like net.parameters() (kernel
    element gradients already aggregated into Gabor parameter gradients), and
    the logits (handy for tracking training accuracy without a second pass).
    """
    logits, cache = _forward(net, batch, "train", want_cache=True)
    caches, spatial, pooled, f1, r_fc = cache
    loss, dlogits = softmax_cross_entropy(logits, labels)
    grads: dict[str, np.ndarray] = {}
    d_rfc, grads["fc2.weight"], grads["fc2.bias"] = fully_connected_backward(
        dlogits, r_fc, net.fc2_w
    )
    d_f1 = relu_backward(d_rfc, f1)
    d_pool, grads["fc1.weight"], grads["fc1.bias"] = fully_connected_backward(
        d_f1, pooled, net.fc1_w
    )
    dx = global_avg_pool_backward(d_pool, spatial)
    for b in range(len(net.blocks), 0, -1):
        block = net.blocks[b - 1]
        x_in, k1, c1, r1, k2, bn_cache = caches[b - 1]
        d_c2, d_gamma, d_beta = batchnorm_backward(dx, bn_cache)
        grads[f"block{b}.bn.gamma"] = d_gamma
        grads[f"block{b}.bn.beta"] = d_beta
        d_r1, d_k2, _ = conv2d_backward(d_c2, r1, k2, padding="same")
        d_c1 = relu_backward(d_r1, c1)
        dx, d_k1, d_b1 = conv2d_backward(d_c1, x_in, k1, padding="same")
        for c, conv, d_k in (("conv1", block.conv1, d_k1), ("conv2", block.conv2, d_k2)):
            prefix = f"block{b}.{c}"
            if isinstance(conv, GaborConvLayer):
                for pname, g in _gabor_param_grads(conv, d_k).items():
                    grads[f"{prefix}.{pname}"] = g
            else:
                grads[f"{prefix}.kernels"] = d_k
        grads[f"block{b}.conv1.bias"] = d_b1
    return loss, grads, logits


def backward_and_step(net: GaborNet, batch: np.ndarray, labels: np.ndarray) -> float:
    """One training step: backprop to all learnables and apply Adam (with the
    sigma floor) at the optimizer's current learning rate."""
    loss, grads, _ = loss_and_gradients(net, batch, labels)
    adam_step(net.parameters(), grads, net.adam, net.sigma_lower_bounds())
    return loss


@dataclass
class EpochStats:
    epoch: int
    loss: float
    train_acc: float
    lr: float


def fit(net: GaborNet, train_data: PatchDataset, config: NetworkConfig | None = None) -> list[EpochStats]:
    """Run config.epochs training epochs with per-epoch exponential lr decay.

    The learning rate at epoch e is lr * lr_decay**e, counted over the
    network's lifetime, so repeated fit calls continue the schedule.
    Training accuracy is accumulated from the training-pass logits.
    """
    config = config if config is not None else net.config
    if len(train_data) == 0:
        raise ValueError("training set is empty")
    history: list[EpochStats] = []
    params = net.parameters()
    bounds = net.sigma_lower_bounds()
    for _ in range(config.epochs):
        e = net.epochs_trained
        net.adam.lr = config.lr * config.lr_decay**e
        total_loss = 0.0
        n_correct = 0
        n_seen = 0
        # one reproducible shuffle stream per (run seed, epoch) pair
        for patches, labels in batch_iterator(
            train_data, config.batch_size, shuffle_seed=config.seed * 1_000_003 + e
        ):
            loss, grads, logits = loss_and_gradients(net, patches, labels)
            adam_step(params, grads, net.adam, bounds)
            total_loss += loss * len(labels)
            n_correct += int((logits.argmax(axis=1) == labels).sum())
            n_seen += len(labels)
        history.append(
            EpochStats(epoch=e, loss=total_loss / n_seen, train_acc=n_correct / n_seen,
                       lr=net.adam.lr)
        )
        net.epochs_trained += 1
    return history


@dataclass
class EvalReport:
    overall_accuracy: float
    per_class_accuracy: np.ndarray
    confusion: np.ndarray
    n_samples: int


def evaluate(net: GaborNet, test_data: PatchDataset, batch_size: int | None = None) -> EvalReport:
    """Accuracy and confusion matrix over a patch dataset (eval-mode batch
    norm, no shuffling).  Confusion rows are true classes, columns predicted."""
    if len(test_data) == 0:
        raise ValueError("evaluation set is empty")
    nc = net.config.n_classes
    confusion = np.zeros((nc, nc), dtype=np.int64)
    for patches, labels in batch_iterator(
        test_data, batch_size or net.config.batch_size, shuffle_seed=None
    ):
        pred = forward(net, patches, mode="eval").argmax(axis=1)
        np.add.at(confusion, (labels, pred), 1)
    total = int(confusion.sum())
    row_sums = confusion.sum(axis=1)
    per_class = np.full(nc, np.nan)
    present = row_sums > 0
    per_class[present] = np.diag(confusion)[present] / row_sums[present]
    return EvalReport(
        overall_accuracy=float(np.trace(confusion) / total),
        per_class_accuracy=per_class,
        confusion=confusion,
        n_samples=total,
    )


@dataclass
class FilterFreqRecord:
    layer: int
    out_index: int
    in_index: int
    theta0: float
    omega0: float
    theta: float
    omega: float
    sigma: float
    phase: float


def dump_learned_frequencies(net: GaborNet, layer: int) -> list[FilterFreqRecord]:
    """Initial and current (theta, omega) plus sigma and phase for every
    filter of a conv layer (1-based index over the conv layers in order)."""
    conv = _conv_layer_at(net, layer)
    if not isinstance(conv, GaborConvLayer):
        raise ValueError("learned-frequency dumps require a gabor-mode network")
    records = []
    for o in range(conv.n_out):
        for i in range(conv.n_in):
            records.append(
                FilterFreqRecord(
                    layer=layer,
                    out_index=o,
                    in_index=i,
                    theta0=float(conv.init_theta[o, i]),
                    omega0=float(conv.init_omega[o, i]),
                    theta=float(conv.theta[o, i]),
                    omega=float(conv.omega[o, i]),
                    sigma=float(conv.sigma[o, i]),
                    phase=float(conv.phase[o, i]),
                )
            )
    return records


def frequency_records_to_csv(records: list[FilterFreqRecord]) -> str:
    buf = io.StringIO()
    buf.write("layer,out,in,theta0,omega0,theta,omega,sigma,phase\n")
    for r in records:
        buf.write(
            f"{r.layer},{r.out_index},{r.in_index},{r.theta0:.17g},{r.omega0:.17g},"
            f"{r.theta:.17g},{r.omega:.17g},{r.sigma:.17g},{r.phase:.17g}\n"
        )
    return buf.getvalue()


def _conv_layer_at(net: GaborNet, layer: int):
    layers = net.conv_layers()
    if not 1 <= layer <= len(layers):
        raise ValueError(f"layer must be in 1..{len(layers)}, got {layer}")
    return layers[layer - 1]


def format_kernel_dump(net: GaborNet, layer: int) -> str:
    """Kernel-dump text: one record per filter with a parameter header line
    and the synthesized k x k matrix, blank-line separated."""
    conv = _conv_layer_at(net, layer)
    if not isinstance(conv, GaborConvLayer):
        raise ValueError("kernel dumps require a gabor-mode network")
    kernels = conv.synthesize()
    buf = io.StringIO()
    for o in range(conv.n_out):
        for i in range(conv.n_in):
            buf.write(
                f"layer={layer} out={o} in={i} "
                f"theta={conv.theta[o, i]:.10g} omega={conv.omega[o, i]:.10g} "
                f"sigma={conv.sigma[o, i]:.10g} phase={conv.phase[o, i]:.10g}\n"
            )
            for row in kernels[o, i]:
                buf.write(" ".join(f"{v:.10g}" for v in row) + "\n")
            buf.write("\n")
    return buf.getvalue()


def history_to_csv(history: list[EpochStats]) -> str:
    buf = io.StringIO()
    buf.write("epoch,loss,train_acc,lr\n")
    for h in history:
        buf.write(f"{h.epoch},{h.loss:.17g},{h.train_acc:.17g},{h.lr:.17g}\n")
    return buf.getvalue()


def format_metrics_report(
    report: EvalReport,
    param_count: int,
    wall_clock_s: float,
    header: str = "evaluation",
    extra_lines: list[str] | None = None,
) -> str:
    """Single-document metrics text: overall and per-class accuracy, the
    confusion matrix, parameter count and wall-clock time."""
    lines = [f"== {header} =="]
    if extra_lines:
        lines.extend(extra_lines)
    lines.append(f"overall_accuracy: {report.overall_accuracy:.6f}")
    lines.append(f"n_samples: {report.n_samples}")
    lines.append(f"parameter_count: {param_count}")
    lines.append(f"wall_clock_seconds: {wall_clock_s:.3f}")
    lines.append("per_class_accuracy:")
    for c, acc in enumerate(report.per_class_accuracy, start=1):
        shown = "n/a" if np.isnan(acc) else f"{acc:.6f}"
        lines.append(f"  class_{c}: {shown}")
    lines.append("confusion_matrix:  # rows true class, columns predicted")
    for row in report.confusion:
        lines.append("  " + " ".join(str(int(v)) for v in row))
    return "\n".join(lines) + "\n"


def _snapshot_arrays(net: GaborNet) -> list[tuple[str, str, np.ndarray]]:
    entries = [("param", name, arr) for name, arr in net.parameters().items()]
    for b, block in enumerate(net.blocks, start=1):
        for c, conv in (("conv1", block.conv1), ("conv2", block.conv2)):
            if isinstance(conv, GaborConvLayer) and not conv.learn_phase:
                entries.append(("state", f"block{b}.{c}.phase", conv.phase))
        entries.append(("state", f"block{b}.bn.running_mean", block.bn.running_mean))
        entries.append(("state", f"block{b}.bn.running_var", block.bn.running_var))
    return entries


def save_snapshot(net: GaborNet, directory) -> None:
    """Write a model snapshot: a text manifest plus a flat little-endian
    float64 blob holding every array in declaration order."""
    import os

    os.makedirs(directory, exist_ok=True)
    entries = _snapshot_arrays(net)
    offset = 0
    manifest = [
        "gabornet-snapshot v1",
        f"mode={net.config.mode}",
        f"epochs_trained={net.epochs_trained}",
        f"blob={SNAPSHOT_BLOB}",
    ]
    chunks = []
    for kind, name, arr in entries:
        flat = np.ascontiguousarray(arr, dtype="<f8").reshape(-1)
        shape = ",".join(str(d) for d in arr.shape) or "1"
        manifest.append(f"{kind} {name} {shape} {offset}")
        chunks.append(flat)
        offset += flat.size
    with open(os.path.join(directory, SNAPSHOT_MANIFEST), "w") as f:
        f.write("\n".join(manifest) + "\n")
    with open(os.path.join(directory, SNAPSHOT_BLOB), "wb") as f:
        f.write(np.concatenate(chunks).tobytes())


def load_snapshot(directory, config: NetworkConfig) -> GaborNet:
    """Rebuild a network from config structure and restore every snapshot
    array into it.  Optimizer moments are not part of a snapshot; loading
    resets them."""
    import os

    manifest_path = os.path.join(directory, SNAPSHOT_MANIFEST)
    if not os.path.exists(manifest_path):
        raise FileNotFoundError(f"no snapshot manifest at {manifest_path}")
    with open(manifest_path) as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines or not lines[0].startswith("gabornet-snapshot"):
        raise ValueError(f"{manifest_path} is not a snapshot manifest")
    meta = {}
    records = []
    for ln in lines[1:]:
        if "=" in ln and " " not in ln:
            key, value = ln.split("=", 1)
            meta[key] = value
        else:
            kind, name, shape, offset = ln.split()
            records.append((kind, name, tuple(int(d) for d in shape.split(",")), int(offset)))
    if meta.get("mode") != config.mode:
        raise ValueError(
            f"snapshot mode {meta.get('mode')!r} does not match config mode {config.mode!r}"
        )
    blob = np.fromfile(os.path.join(directory, meta.get("blob", SNAPSHOT_BLOB)), dtype="<f8")
    net = initialize(config)
    targets = {name: arr for _, name, arr in _snapshot_arrays(net)}
    for kind, name, shape, offset in records:
        if name not in targets:
            raise ValueError(f"snapshot array {name!r} has no place in this config")
        arr = targets[name]
        if arr.shape != shape and not (arr.shape == () and shape == (1,)):
            raise ValueError(
                f"snapshot array {name!r} has shape {shape}, expected {arr.shape}"
            )
        arr[...] = blob[offset : offset + arr.size].reshape(arr.shape)
    net.epochs_trained = int(meta.get("epochs_trained", 0))
    return net


def predict_label_grid(net: GaborNet, cube, batch_size: int = 256) -> np.ndarray:
    """Predicted class id (1..n_classes) for every pixel of a cube, using the
    network's configured patch size."""
    from gabornet.data import PatchDataset as _PD

    h, w = cube.height, cube.width
    entries = [(r, c, 1) for r in range(h) for c in range(w)]
    data = _PD.from_entries(cube, entries, net.config.patch_size)
    preds = []
    for patches, _ in batch_iterator(data, batch_size, shuffle_seed=None):
        preds.append(forward(net, patches, mode="eval").argmax(axis=1))
    return (np.concatenate(preds) + 1).reshape(h, w)
