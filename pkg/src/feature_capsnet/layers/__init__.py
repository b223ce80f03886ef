"""
Layers package for feature-capsnet

This package contains the network building blocks:
- base: parameter discovery, Glorot initialization, dense layer
- capsule: squash, class lengths, argmax prediction
- primary: initial convolution and primary capsule layer
- routing: dynamic routing layer and its per-pass state
- heads: fully connected softmax head and the decoder
- network: the assembled network in class or feature head mode
"""

from .base import Dense, Layer
from .capsule import class_lengths, predict_classes, squash
from .heads import Decoder, FcHead
from .network import CapsuleNetwork, NetworkOutput
from .primary import PrimaryCapsLayer
from .routing import RoutingLayer, RoutingState, dynamic_routing

__all__ = [
    "CapsuleNetwork",
    "Decoder",
    "Dense",
    "FcHead",
    "Layer",
    "NetworkOutput",
    "PrimaryCapsLayer",
    "RoutingLayer",
    "RoutingState",
    "class_lengths",
    "dynamic_routing",
    "predict_classes",
    "squash",
]
