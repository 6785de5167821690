"""Gabor-parameterized convolutional networks for patch-based image-cube classification.

Every convolution kernel is synthesized on the fly from four learnable
scalars (orientation, frequency magnitude, Gaussian scale, kernel phase),
and trained end to end with analytic parameter gradients.
"""

from gabornet.kernels import (
    SIGMA_MIN,
    GaborParams,
    KernelBank,
    KernelGrid,
    aggregate_param_gradients,
    coordinate_grid,
    evaluate_complex_parts,
    evaluate_kernel,
    kernel_gradients,
    separable_decomposition,
)
from gabornet.network import (
    CvBlockConfig,
    GaborNet,
    NetworkConfig,
    count_parameters,
    dump_learned_frequencies,
    evaluate,
    fit,
    forward,
    initialize,
    standard_blocks,
)

__version__ = "0.1.0"

__all__ = [
    "SIGMA_MIN",
    "GaborParams",
    "KernelBank",
    "KernelGrid",
    "aggregate_param_gradients",
    "coordinate_grid",
    "evaluate_complex_parts",
    "evaluate_kernel",
    "kernel_gradients",
    "separable_decomposition",
    "CvBlockConfig",
    "GaborNet",
    "NetworkConfig",
    "count_parameters",
    "dump_learned_frequencies",
    "evaluate",
    "fit",
    "forward",
    "initialize",
    "standard_blocks",
]
