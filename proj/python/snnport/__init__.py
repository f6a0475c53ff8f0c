"""Python bindings for the snnport C++ core."""

from ._snnport import (
    Layer,
    Network,
    SnnportError,
    accuracy_curve,
    canny,
    canny_batch,
    convert,
    load_idx,
    load_idx_labels,
    load_network,
    save_idx_dataset,
    sparsity,
    vgg9_skeleton,
)

__all__ = [
    "Layer",
    "Network",
    "SnnportError",
    "accuracy_curve",
    "canny",
    "canny_batch",
    "convert",
    "load_idx",
    "load_idx_labels",
    "load_network",
    "save_idx_dataset",
    "sparsity",
    "vgg9_skeleton",
]
