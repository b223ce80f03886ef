"""
Initial convolution and primary capsule layer
"""

import numpy as np

from ..autodiff import Tensor
from ..autodiff import ops
from ..config import NetworkConfig
from ..errors import ConfigurationError, ShapeError
from .base import Layer, glorot_uniform
from .capsule import squash


class PrimaryCapsLayer(Layer):
    """conv(k x k, stride 1) -> relu -> conv(k x k, stride 2) grouped into capsules"""

    def __init__(self, config: NetworkConfig, rng: np.random.Generator):
        k = config.kernel_size
        channels = config.conv_channels
        caps_maps = config.primary_groups * config.primary_dim
        self.config = config
        self.conv1_kernels = glorot_uniform(rng, (channels, 1, k, k), k * k, channels * k * k, name="conv1_kernels")
        self.caps_kernels = glorot_uniform(
            rng, (caps_maps, channels, k, k), channels * k * k, caps_maps * k * k, name="caps_kernels"
        )

    @property
    def n_primary(self) -> int:
        return self.config.n_primary

    def forward(self, images: Tensor) -> Tensor:
        """Primary capsules [B, N_PC, d_pc] from images [B, 1, H, W]

        Raises:
            ConfigurationError: If the image is too small for both convolutions
        """
        cfg = self.config
        if images.ndim != 4 or images.shape[1] != 1:
            raise ShapeError("primary_forward", images.shape, (None, 1, cfg.image_height, cfg.image_width))
        height, width = images.shape[2:]
        minimum = cfg.min_image_size
        if height < minimum or width < minimum:
            raise ConfigurationError(
                f"Image {height}x{width} is too small for the primary capsule layer; minimum size is {minimum}x{minimum}"
            )

        hidden = ops.relu(ops.conv2d(images, self.conv1_kernels, cfg.conv_stride))
        maps = ops.conv2d(hidden, self.caps_kernels, cfg.primary_stride)
        batch, _, grid_h, grid_w = maps.shape
        groups, dim = cfg.primary_groups, cfg.primary_dim

        # channel g*dim + d is component d of the capsule in group g
        grouped = ops.reshape(maps, (batch, groups, dim, grid_h, grid_w))
        grouped = ops.transpose(grouped, (0, 1, 3, 4, 2))
        capsules = ops.reshape(grouped, (batch, groups * grid_h * grid_w, dim))
        return squash(capsules)
