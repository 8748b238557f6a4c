"""Forward far-field synthesis, the Fourier oracle and the noise model."""
from .farfield import (
    ElasticParams,
    EMParams,
    FarFieldDataset,
    FarFieldRecord,
    elastic_far_field_2d,
    elastic_far_field_3d,
    em_far_fields,
    fourier_transform,
    source_rules,
    synthesize_dataset,
)
from .noise import apply_noise, noise_multipliers, normal_pairs
from .quadrature import adapted_rule, lattice_rule, transform

__all__ = [
    "ElasticParams", "EMParams", "FarFieldDataset", "FarFieldRecord",
    "elastic_far_field_2d", "elastic_far_field_3d", "em_far_fields",
    "fourier_transform", "source_rules", "synthesize_dataset",
    "apply_noise", "noise_multipliers", "normal_pairs",
    "adapted_rule", "lattice_rule", "transform",
]
