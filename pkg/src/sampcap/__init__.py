"""Capacity of bandlimited Gaussian channels under sub-Nyquist sampling.

Layers: `spectrum` models channels (gain and noise densities, SNR,
quadrature grids); `support` and `waterfill` compute the
sampler-universal capacity upper bound at a given rate; `aliasing`
computes the exact capacity of any periodic sampling system;
`systems` designs capacity-achieving samplers (filter banks and a
modulated single branch); `oracle` cross-checks everything against a
finite-block time-domain model; `cli` exposes it all as a command.
"""

from .aliasing import (
    AliasedMatrices,
    BranchChain,
    LtiStage,
    Modulator,
    PeriodicSamplingSystem,
    alias_grid,
    assemble_matrices,
    assemble_over_grid,
    auto_alias_count,
    parse_system_spec,
    periodic_capacity,
    system_spec_json,
    whitened_eigenvalues,
)
from .channels import edge_band_channel, flat_channel, rolloff_channel
from .errors import (
    AliasWindowError,
    ConvergenceError,
    DegenerateSamplerError,
    DomainError,
    InfeasibleDesignError,
    NoUsableSpectrumError,
    SampcapError,
    ValidationError,
)
from .oracle import (
    BlockCapacity,
    BlockModel,
    block_capacity,
    build_block_model,
    oracle_capacity,
    perturbed_block_capacity,
)
from .spectrum import (
    Constant,
    Grid,
    Linear,
    PowerLaw,
    SnrDensity,
    SpectralDensity,
    channel_spec_json,
    integrate_over,
    parse_channel_spec,
)
from .support import (
    FrequencySet,
    SupportSolution,
    intersection_measure,
    is_level_set,
    select_support,
    symmetric_difference_measure,
)
from .systems import (
    DensityReport,
    FilterbankDesign,
    FiniteSet,
    KadecReport,
    PeriodicPatternSet,
    SingleBranchDesign,
    UniformSet,
    best_aligned_support,
    beurling_density,
    build_filterbank,
    build_single_branch,
    kadec_check,
    parse_sampling_set,
    sampling_set_json,
)
from .waterfill import (
    WaterfillSolution,
    capacity_upper_bound,
    water_level,
    waterfill_over_set,
)

__version__ = "0.1.0"

__all__ = [
    "AliasedMatrices",
    "AliasWindowError",
    "BlockCapacity",
    "BlockModel",
    "BranchChain",
    "Constant",
    "ConvergenceError",
    "DegenerateSamplerError",
    "DensityReport",
    "DomainError",
    "FilterbankDesign",
    "FiniteSet",
    "FrequencySet",
    "Grid",
    "InfeasibleDesignError",
    "KadecReport",
    "Linear",
    "LtiStage",
    "Modulator",
    "NoUsableSpectrumError",
    "PeriodicPatternSet",
    "PeriodicSamplingSystem",
    "PowerLaw",
    "SampcapError",
    "SingleBranchDesign",
    "SnrDensity",
    "SpectralDensity",
    "SupportSolution",
    "UniformSet",
    "ValidationError",
    "WaterfillSolution",
    "alias_grid",
    "assemble_matrices",
    "assemble_over_grid",
    "auto_alias_count",
    "best_aligned_support",
    "beurling_density",
    "block_capacity",
    "build_block_model",
    "build_filterbank",
    "build_single_branch",
    "capacity_upper_bound",
    "channel_spec_json",
    "edge_band_channel",
    "flat_channel",
    "integrate_over",
    "intersection_measure",
    "is_level_set",
    "kadec_check",
    "oracle_capacity",
    "parse_channel_spec",
    "parse_sampling_set",
    "parse_system_spec",
    "periodic_capacity",
    "perturbed_block_capacity",
    "rolloff_channel",
    "sampling_set_json",
    "select_support",
    "symmetric_difference_measure",
    "system_spec_json",
    "waterfill_over_set",
    "water_level",
    "whitened_eigenvalues",
]
