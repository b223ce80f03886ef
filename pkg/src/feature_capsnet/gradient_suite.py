"""
Finite-difference verification of every differentiable stage

Each check builds a small instance of one stage, reduces its output to a
scalar (the loss itself for loss checks, a fixed random projection for
layers) and compares tape gradients with central differences. Outside
64-bit mode every check is built a second time in 64 bits, and the
differences are taken on that copy so they resolve far below the 32-bit
tolerance.
"""

from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .autodiff import Tensor, default_dtype, precision
from .autodiff import ops
from .autodiff.gradcheck import GradCheckResult, check_gradients
from .config import LossConfig, NetworkConfig, build_config
from .errors import UsageError
from .layers import CapsuleNetwork, Decoder, FcHead, PrimaryCapsLayer, RoutingLayer
from .logs import get_logger
from .losses import margin_loss_class, margin_loss_feature, network_loss, reconstruction_loss

logger = get_logger(__name__)

Build = Tuple[Callable[[], Tensor], List[Tensor]]
Check = Callable[[np.random.Generator], Build]

# Small enough for hundreds of forward passes, large enough to exercise every shape path
REDUCED_ARCHITECTURE = {
    "image_height": 10,
    "image_width": 10,
    "conv_channels": 4,
    "primary_groups": 2,
    "primary_dim": 4,
    "capsule_dim": 4,
    "kernel_size": 3,
    "primary_stride": 2,
    "decoder_hidden": [8, 12],
    "n_class": 3,
    "loss": {"beta": 0.5},
}

# Multipliers that lift freshly initialized capsules out of the squash's flat region
NETWORK_GAINS = {"primary": 2.0, "routing": 4.0}


def reduced_config(head_mode: str = "class", float64: bool = False, **overrides) -> NetworkConfig:
    n_features = 2 if head_mode == "feature" else None
    return build_config(REDUCED_ARCHITECTURE, head_mode=head_mode, n_features=n_features, float64=float64, **overrides)


def _is_float64() -> bool:
    return np.dtype(default_dtype()) == np.float64


def _param(rng: np.random.Generator, shape: Sequence[int], scale: float = 1.0) -> Tensor:
    return Tensor(rng.normal(0.0, scale, size=tuple(shape)), requires_grad=True)


def _projected(output: Tensor, rng: np.random.Generator) -> Callable[[Tensor], Tensor]:
    weights = Tensor(rng.normal(size=output.shape))
    return lambda out: ops.sum(ops.mul(out, weights))


def _build_conv(rng):
    x = _param(rng, (2, 2, 7, 7))
    kernels = _param(rng, (3, 2, 3, 3), 0.5)
    project = _projected(ops.conv2d(x, kernels, 2), rng)
    return lambda: project(ops.conv2d(x, kernels, 2)), [x, kernels]


def _build_primary(rng):
    config = reduced_config(float64=_is_float64())
    layer = PrimaryCapsLayer(config, rng)
    images = Tensor(rng.uniform(size=(2, 1, config.image_height, config.image_width)))
    project = _projected(layer(images), rng)
    return lambda: project(layer(images)), [layer.conv1_kernels, layer.caps_kernels]


def _build_routing(rng):
    layer = RoutingLayer(rng, n_in=6, n_out=3, iterations=3, in_dim=4, out_dim=4)
    u = _param(rng, (2, 6, 4), 0.5)
    project = _projected(layer(u).v, rng)
    return lambda: project(layer(u).v), [u, layer.W]


def _build_head(rng):
    head = FcHead(rng, n_features=2, n_class=4, capsule_dim=4)
    features = _param(rng, (3, 2, 4), 0.5)
    project = _projected(head(features)[0], rng)
    return lambda: project(head(features)[0]), [features, head.weights, head.bias]


def _build_decoder(rng):
    decoder = Decoder(rng, "class", n_out=3, n_pixels=16, hidden=(6, 8), capsule_dim=4)
    caps = _param(rng, (2, 3, 4), 0.5)
    mask = [0, 2]
    project = _projected(decoder.decode(caps, mask), rng)
    return lambda: project(decoder.decode(caps, mask)), [caps, *decoder.parameters()]


def _build_margin_class(rng):
    lengths = Tensor(rng.uniform(0.02, 0.98, size=(4, 5)), requires_grad=True)
    labels = rng.integers(0, 5, size=4)
    loss = LossConfig()
    return lambda: margin_loss_class(lengths, labels, loss), [lengths]


def _build_margin_feature(rng):
    logits = _param(rng, (4, 5), 2.0)
    labels = rng.integers(0, 5, size=4)
    loss = LossConfig()
    return lambda: margin_loss_feature(ops.softmax(logits, axis=-1), labels, loss), [logits]


def _build_reconstruction(rng):
    images = Tensor(rng.uniform(size=(2, 1, 4, 4)))
    logits = _param(rng, (2, 16))
    return lambda: reconstruction_loss(images, ops.sigmoid(logits)), [logits]


def _activate(network: CapsuleNetwork, rng: np.random.Generator) -> None:
    """Move a fresh network off its ReLU kinks

    Fresh capsules are short and every bias is zero, which leaves the decoder
    pre-activations within a rounding error of zero.
    """
    for tensor in network.primary.parameters():
        tensor.data *= NETWORK_GAINS["primary"]
    network.routing.W.data *= NETWORK_GAINS["routing"]
    *hidden, last = network.decoder.stages
    for stage in hidden:
        stage.bias.data[...] = rng.uniform(0.5, 1.0, size=stage.bias.shape)
    last.bias.data[...] = rng.normal(0.0, 0.5, size=last.bias.shape)
    if network.head is not None:
        network.head.bias.data[...] = rng.normal(0.0, 0.5, size=network.head.bias.shape)


def _network_check(head_mode: str) -> Check:
    def build(rng: np.random.Generator) -> Build:
        config = reduced_config(head_mode, float64=_is_float64())
        network = CapsuleNetwork(config, seed=int(rng.integers(2**31)))
        _activate(network, rng)
        images = network.as_input(rng.uniform(size=(3, 1, config.image_height, config.image_width)))
        labels = rng.integers(0, config.n_class, size=3)

        def loss() -> Tensor:
            output = network.forward(images, labels, with_reconstruction=True)
            return network_loss(output, images, labels, head_mode, config.loss).total

        return loss, network.parameters()

    return build


CHECKS: Dict[str, Check] = {
    "conv": _build_conv,
    "primary_caps": _build_primary,
    "routing": _build_routing,
    "fc_head": _build_head,
    "decoder": _build_decoder,
    "margin_class": _build_margin_class,
    "margin_feature": _build_margin_feature,
    "reconstruction": _build_reconstruction,
    "network_class": _network_check("class"),
    "network_feature": _network_check("feature"),
}

LAYER_GROUPS: Dict[str, List[str]] = {
    **{name: [name] for name in CHECKS},
    "primary": ["primary_caps"],
    "head": ["fc_head"],
    "losses": ["margin_class", "margin_feature", "reconstruction"],
    "network": ["network_class", "network_feature"],
}


def select_checks(layers: Optional[Sequence[str]] = None) -> List[str]:
    """Check names for a layer filter, in suite order

    Raises:
        UsageError: If a filter names no known layer or group
    """
    if not layers:
        return list(CHECKS)
    chosen = set()
    for layer in layers:
        if layer not in LAYER_GROUPS:
            raise UsageError(f"Unknown gradient check {layer!r}; choose from {sorted(LAYER_GROUPS)}")
        chosen.update(LAYER_GROUPS[layer])
    return [name for name in CHECKS if name in chosen]


def run_suite(
    seed: int = 0,
    layers: Optional[Sequence[str]] = None,
    float64: bool = False,
    probes: int = 20,
) -> List[GradCheckResult]:
    """Run the selected checks with `probes` sampled entries per tensor

    Each check draws its values and its sampled entries from its own seeded
    stream.
    """
    names = select_checks(layers)
    results = []
    with precision(np.float64 if float64 else np.float32):
        for index, name in enumerate(CHECKS):
            if name not in names:
                continue
            build = CHECKS[name]
            loss_fn, tensors = build(np.random.default_rng([seed, index]))
            reference = None
            if not float64:
                with precision(np.float64):
                    reference = build(np.random.default_rng([seed, index]))
            sampler = np.random.default_rng([seed, index, 1])
            result = check_gradients(name, loss_fn, tensors, sampler, probes, reference=reference)
            level = logger.info if result.passed else logger.warning
            level(f"{name}: worst relative error {result.worst_relative_error:.2e} over {result.probes} probes")
            results.append(result)
    return results
