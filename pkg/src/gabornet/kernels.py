"""Phase-induced Gabor kernels: synthesis, analytic gradients, gradient aggregation.

A kernel is a Gaussian-enveloped cosine harmonic

    G(x, y) = K * cos(M + P),
    K = 1 / (2*pi*sigma^2) * exp(-(x^2 + y^2) / (2*sigma^2)),
    M = x*omega_x + y*omega_y,   omega_x = omega*cos(theta),  omega_y = omega*sin(theta),

defined by four scalars: the frequency angle theta, the frequency magnitude
omega, the isotropic Gaussian scale sigma, and the kernel phase P.  The phase
interpolates between the real part of the classic complex Gabor filter (P = 0,
a low-frequency component) and its imaginary part (P = -pi/2, high-frequency).

Kernels are sampled on a centered integer grid with odd side length.  Matrix
element [i, j] corresponds to coordinates x = i - (k-1)/2, y = j - (k-1)/2,
so the first index runs along x and the second along y.

All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

# Lower clamp for the Gaussian scale, applied after each optimizer update.
# The envelope normalization and its scale gradient are singular at sigma = 0.
SIGMA_MIN = 0.1


@dataclass
class GaborParams:
    """The four learnable scalars defining one kernel.

    theta, omega and phase are unconstrained reals (the kernel is smooth and
    periodic in theta and phase); sigma must stay above SIGMA_MIN.
    """

    theta: float
    omega: float
    sigma: float
    phase: float

    def validate(self) -> None:
        for name in ("theta", "omega", "sigma", "phase"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"GaborParams.{name} must be finite, got {v!r}")
        if self.sigma < SIGMA_MIN:
            raise ValueError(
                f"GaborParams.sigma must be >= {SIGMA_MIN}, got {self.sigma!r}"
            )


@dataclass
class KernelBank:
    """The filters producing one output feature map: one GaborParams per input
    channel, plus a bias when the owning convolution carries one."""

    filters: list[GaborParams]
    bias: float | None = None


@dataclass(frozen=True)
class KernelGrid:
    """Centered integer sampling grid for a k x k kernel, k odd.

    ``x`` and ``y`` are k x k coordinate matrices with x[i, j] = i - (k-1)/2
    and y[i, j] = j - (k-1)/2; ``coords`` is the flat 1-D coordinate axis
    shared by both directions.
    """

    size: int
    coords: np.ndarray
    x: np.ndarray
    y: np.ndarray


class KernelGradients(NamedTuple):
    """Element-wise partial derivatives of the kernel, one matrix per parameter."""

    d_phase: np.ndarray
    d_theta: np.ndarray
    d_omega: np.ndarray
    d_sigma: np.ndarray


def coordinate_grid(k: int) -> KernelGrid:
    """Build the centered integer grid for an odd kernel size k >= 3."""
    if not isinstance(k, (int, np.integer)):
        raise ValueError(f"kernel size must be an integer, got {k!r}")
    if k < 3 or k % 2 == 0:
        raise ValueError(f"kernel size must be odd and >= 3, got {k}")
    coords = np.arange(k, dtype=np.float64) - (k - 1) / 2
    x, y = np.meshgrid(coords, coords, indexing="ij")
    return KernelGrid(size=int(k), coords=coords, x=x, y=y)


def kernel_stack(theta, omega, sigma, phase, grid: KernelGrid) -> np.ndarray:
    """Vectorized kernel synthesis.

    The four parameter arrays share an arbitrary common shape S (scalars
    allowed); the result has shape S + (k, k).  This is the single
    implementation of the kernel formula; the scalar API wraps it.
    """
    theta = np.asarray(theta, dtype=np.float64)[..., None, None]
    omega = np.asarray(omega, dtype=np.float64)[..., None, None]
    sigma = np.asarray(sigma, dtype=np.float64)[..., None, None]
    phase = np.asarray(phase, dtype=np.float64)[..., None, None]
    envelope = _envelope(sigma, grid)
    m = grid.x * omega * np.cos(theta) + grid.y * omega * np.sin(theta)
    return envelope * np.cos(m + phase)


def kernel_gradient_stack(theta, omega, sigma, phase, grid: KernelGrid) -> KernelGradients:
    """Vectorized analytic partials (d/dP, d/dtheta, d/domega, d/dsigma).

    d/dP    = -K sin(M + P)
    d/dtheta = d/dP * (-x*omega_y + y*omega_x)
    d/domega = d/dP * (x*cos(theta) + y*sin(theta))
    d/dsigma = G * ((x^2 + y^2)/sigma^3 - 2/sigma)
    """
    theta = np.asarray(theta, dtype=np.float64)[..., None, None]
    omega = np.asarray(omega, dtype=np.float64)[..., None, None]
    sigma = np.asarray(sigma, dtype=np.float64)[..., None, None]
    phase = np.asarray(phase, dtype=np.float64)[..., None, None]
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    envelope = _envelope(sigma, grid)
    m = grid.x * omega * cos_t + grid.y * omega * sin_t
    kernel = envelope * np.cos(m + phase)
    d_phase = -envelope * np.sin(m + phase)
    d_theta = d_phase * (-grid.x * omega * sin_t + grid.y * omega * cos_t)
    d_omega = d_phase * (grid.x * cos_t + grid.y * sin_t)
    r2 = grid.x**2 + grid.y**2
    d_sigma = kernel * (r2 / sigma**3 - 2.0 / sigma)
    return KernelGradients(d_phase, d_theta, d_omega, d_sigma)


def evaluate_kernel(p: GaborParams, grid: KernelGrid) -> np.ndarray:
    """Synthesize the k x k kernel G = K cos(M + P) for one parameter set."""
    p.validate()
    return kernel_stack(p.theta, p.omega, p.sigma, p.phase, grid)


def evaluate_complex_parts(p: GaborParams, grid: KernelGrid) -> tuple[np.ndarray, np.ndarray]:
    """Real and imaginary parts of the complex filter K exp(j(M + P)).

    The real part equals evaluate_kernel; the imaginary part equals the real
    part with phase shifted by -pi/2 (the one-to-one phase correspondence).
    """
    p.validate()
    theta = np.float64(p.theta)
    m = grid.x * p.omega * np.cos(theta) + grid.y * p.omega * np.sin(theta)
    envelope = _envelope(np.float64(p.sigma), grid)
    return envelope * np.cos(m + p.phase), envelope * np.sin(m + p.phase)


def kernel_gradients(p: GaborParams, grid: KernelGrid) -> KernelGradients:
    """Element-wise analytic gradients of one kernel, see kernel_gradient_stack."""
    p.validate()
    return kernel_gradient_stack(p.theta, p.omega, p.sigma, p.phase, grid)


def separable_decomposition(
    p: GaborParams, grid: KernelGrid
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Split the kernel into four 1-D components along the x and y axes.

    Returns (g_cp_x, g_c_y, g_sp_x, g_s_y), length-k vectors satisfying

        G = outer(g_cp_x, g_c_y) - outer(g_sp_x, g_s_y)

    with the phase offset allocated to the x components.  Setting P = 0 gives
    the phaseless cosine/sine components of the classic filter's real and
    imaginary parts.
    """
    p.validate()
    c = grid.coords
    gauss = (1.0 / (math.sqrt(2.0 * math.pi) * p.sigma)) * np.exp(-(c**2) / (2.0 * p.sigma**2))
    omega_x = p.omega * math.cos(p.theta)
    omega_y = p.omega * math.sin(p.theta)
    g_cp_x = gauss * np.cos(c * omega_x + p.phase)
    g_c_y = gauss * np.cos(c * omega_y)
    g_sp_x = gauss * np.sin(c * omega_x + p.phase)
    g_s_y = gauss * np.sin(c * omega_y)
    return g_cp_x, g_c_y, g_sp_x, g_s_y


def aggregate_param_gradients(
    elem_grads: np.ndarray, kgrads: KernelGradients
) -> tuple[float, float, float, float]:
    """Collapse loss gradients w.r.t. kernel elements into the four parameter
    gradients: each is sum(elem_grads * dG/dparam) over all k^2 elements."""
    elem_grads = np.asarray(elem_grads, dtype=np.float64)
    if elem_grads.shape != kgrads.d_phase.shape:
        raise ValueError(
            f"element-gradient shape {elem_grads.shape} does not match "
            f"kernel-gradient shape {kgrads.d_phase.shape}"
        )
    return tuple(float(np.sum(elem_grads * g)) for g in kgrads)


def _envelope(sigma: np.ndarray, grid: KernelGrid) -> np.ndarray:
    r2 = grid.x**2 + grid.y**2
    return (1.0 / (2.0 * math.pi * sigma**2)) * np.exp(-r2 / (2.0 * sigma**2))
