"""Hybrid quantum-classical transfer learning: python surface of the C++ core."""

from ._core import (
    HybridNet,
    adjoint_gradients,
    ansatz_json,
    auc,
    metrics,
    noisy_z_expectations,
    oracle_gradients,
    scale_embedding,
    split_patients,
    step_lr,
    synth_dataset,
    z_expectations,
)

__all__ = [
    "HybridNet",
    "adjoint_gradients",
    "ansatz_json",
    "auc",
    "metrics",
    "noisy_z_expectations",
    "oracle_gradients",
    "scale_embedding",
    "split_patients",
    "step_lr",
    "synth_dataset",
    "z_expectations",
]
