"""
Closed-form cost model of a capsule network

Counts come from layer shapes alone. Activation memory counts every tensor
the backward pass keeps: convolution column buffers and outputs, capsule
reshapes and squash norms, the prediction vectors once plus the routing
logits, couplings, weighted sums and squashed outputs of every iteration,
head scores with their margin terms, and every decoder stage with the
reconstruction difference.
"""

from dataclasses import asdict, dataclass, field
from typing import Dict, List

import numpy as np

from ..config import NetworkConfig, decoder_widths
from ..errors import UsageError

MIB = 1024**2
# Adam keeps two moment buffers per parameter
OPTIMIZER_BUFFERS = 2

LAYER_NAMES = ("conv1", "primary_caps", "routing", "head", "decoder")


@dataclass(frozen=True)
class LayerCost:
    layer: str
    parameters: int
    parameter_bytes: int
    gradient_bytes: int
    optimizer_bytes: int
    activation_bytes_per_sample: int
    forward_flops_per_sample: int

    def to_dict(self) -> Dict[str, int]:
        return asdict(self)


@dataclass(frozen=True)
class CostReport:
    config_fingerprint: str
    bytes_per_float: int
    rows: List[LayerCost] = field(default_factory=list)

    def row(self, layer: str) -> LayerCost:
        for row in self.rows:
            if row.layer == layer:
                return row
        raise KeyError(layer)

    def _total(self, attr: str) -> int:
        return sum(getattr(row, attr) for row in self.rows)

    @property
    def parameters(self) -> int:
        return self._total("parameters")

    @property
    def parameter_bytes(self) -> int:
        return self._total("parameter_bytes")

    @property
    def gradient_bytes(self) -> int:
        return self._total("gradient_bytes")

    @property
    def optimizer_bytes(self) -> int:
        return self._total("optimizer_bytes")

    @property
    def activation_bytes_per_sample(self) -> int:
        return self._total("activation_bytes_per_sample")

    @property
    def forward_flops_per_sample(self) -> int:
        return self._total("forward_flops_per_sample")

    @property
    def fixed_bytes(self) -> int:
        """Footprint independent of batch size: parameters, gradients, optimizer state"""
        return self.parameter_bytes + self.gradient_bytes + self.optimizer_bytes

    @property
    def fc_bytes(self) -> int:
        """Parameter bytes of the fully connected class head (zero in class mode)"""
        return self.row("head").parameter_bytes

    @property
    def fc_mib(self) -> float:
        return self.fc_bytes / MIB

    @property
    def memory_mib_per_sample(self) -> float:
        return self.activation_bytes_per_sample / MIB

    def to_dict(self) -> Dict[str, object]:
        return {
            "config_fingerprint": self.config_fingerprint,
            "bytes_per_float": self.bytes_per_float,
            "rows": [row.to_dict() for row in self.rows],
            "totals": {
                "parameters": self.parameters,
                "parameter_bytes": self.parameter_bytes,
                "gradient_bytes": self.gradient_bytes,
                "optimizer_bytes": self.optimizer_bytes,
                "activation_bytes_per_sample": self.activation_bytes_per_sample,
                "forward_flops_per_sample": self.forward_flops_per_sample,
            },
            "fc_bytes": self.fc_bytes,
        }


def _row(layer: str, parameters: int, activations: int, flops: int, width: int) -> LayerCost:
    return LayerCost(
        layer=layer,
        parameters=parameters,
        parameter_bytes=parameters * width,
        gradient_bytes=parameters * width,
        optimizer_bytes=OPTIMIZER_BUFFERS * parameters * width,
        activation_bytes_per_sample=activations * width,
        forward_flops_per_sample=flops,
    )


def account(config: NetworkConfig) -> CostReport:
    """Per-layer parameter, memory and FLOP counts for one config"""
    width = np.dtype(config.dtype).itemsize
    k = config.kernel_size
    channels = config.conv_channels
    h1, w1 = config.conv1_grid
    h2, w2 = config.primary_grid
    caps_maps = config.primary_groups * config.primary_dim
    n_pc, d_in, d_out = config.n_primary, config.primary_dim, config.capsule_dim
    n_out, n_class, r = config.n_out, config.n_class, config.routing_iters

    conv1_out = channels * h1 * w1
    conv1 = _row(
        "conv1",
        parameters=channels * k * k,
        activations=k * k * h1 * w1 + 2 * conv1_out,
        flops=2 * channels * k * k * h1 * w1 + conv1_out,
        width=width,
    )

    caps_out = caps_maps * h2 * w2
    primary = _row(
        "primary_caps",
        parameters=caps_maps * channels * k * k,
        # columns, conv output, regrouped capsules, squash norms and output
        activations=channels * k * k * h2 * w2 + 3 * caps_out + n_pc,
        flops=2 * caps_maps * channels * k * k * h2 * w2 + 4 * n_pc * d_in,
        width=width,
    )

    votes = n_pc * n_out * d_out
    links = n_pc * n_out
    routing = _row(
        "routing",
        parameters=n_pc * n_out * d_in * d_out,
        activations=votes + r * (2 * links + 2 * n_out * d_out),
        flops=2 * votes * d_in + r * (3 * links + 2 * votes + 4 * n_out * d_out) + (r - 1) * (2 * votes + links),
        width=width,
    )

    if config.head_mode == "feature":
        fc_in = d_out * n_out
        # logits, probabilities, and the present/absent margin terms
        head = _row(
            "head",
            parameters=fc_in * n_class + n_class,
            activations=4 * n_class,
            flops=2 * fc_in * n_class + n_class + 3 * n_class + 6 * n_class,
            width=width,
        )
    else:
        # capsule lengths and their margin terms
        head = _row("head", parameters=0, activations=3 * n_class, flops=2 * n_class * d_out + 6 * n_class, width=width)

    widths = decoder_widths(config)
    stage_params = sum(a * b + b for a, b in zip(widths[:-1], widths[1:]))
    stage_outputs = sum(widths[1:])
    decoder = _row(
        "decoder",
        parameters=stage_params,
        # masked input, each affine output and its activation, reconstruction difference
        activations=widths[0] + 2 * stage_outputs + config.n_pixels,
        flops=sum(2 * a * b + b for a, b in zip(widths[:-1], widths[1:])) + stage_outputs + 3 * config.n_pixels,
        width=width,
    )
    return CostReport(config.fingerprint(), width, [conv1, primary, routing, head, decoder])


def max_batch(report: CostReport, budget_bytes: int) -> int:
    """Largest batch whose activations fit next to the fixed footprint

    Raises:
        UsageError: If the budget does not hold the fixed footprint plus one sample
    """
    fixed = report.fixed_bytes
    per_sample = report.activation_bytes_per_sample
    if budget_bytes <= fixed:
        raise UsageError(
            f"Memory budget of {budget_bytes} bytes does not cover the fixed footprint of {fixed} bytes "
            f"(parameters, gradients and optimizer state)"
        )
    batch = (budget_bytes - fixed) // per_sample
    if batch < 1:
        raise UsageError(
            f"Memory budget of {budget_bytes} bytes leaves {budget_bytes - fixed} bytes after the fixed footprint "
            f"of {fixed} bytes, less than one sample ({per_sample} bytes)"
        )
    return int(batch)
