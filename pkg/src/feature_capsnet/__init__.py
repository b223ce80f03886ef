"""
Feature Capsule Network Package

Capsule networks with dynamic routing in two head modes (class capsules and
feature capsules feeding a softmax head), a small reverse-mode autodiff engine
they run on, and a benchmark harness for time, memory and batch-size costs.
"""

__version__ = "0.1.0"
