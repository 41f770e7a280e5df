"""Noise-shaping quantization of bandlimited graph signals.

Quantizes real-valued graph signals onto small alphabets so that the
quantization error lands in the high graph frequencies, where a low-pass
reconstruction filter removes it.  Ships the greedy permutation scheme with
its two initializations, the randomized sampling-with-replacement scheme,
the spectral machinery they run on, error-bound evaluation, and an
experiment harness with a CLI.
"""

__version__ = "0.1.0"

from gnsquant.graphs import (
    Graph,
    build_cycle,
    build_grid,
    build_knn_points,
    generate_point_cloud,
    k_hop_sets,
    load_edge_list,
    normalized_laplacian,
    save_edge_list,
)
from gnsquant.quant import Alphabet, bit_accounting, msq, parse_alphabet, quantize_scalar
from gnsquant.shaping import (
    QuantRun,
    StateVector,
    aggregate,
    init_sdw,
    init_sss,
    quantize_msq,
    quantize_permutation,
    quantize_sssr,
    refine_permutation,
)
from gnsquant.spectral import (
    BandlimitedFilter,
    Incoherence,
    SpectralBasis,
    apply_lowpass,
    bandlimited_filter,
    eigendecompose,
    gft,
    igft,
    incoherence,
    synthesize_bandlimited,
)

__all__ = [
    "Alphabet",
    "BandlimitedFilter",
    "Graph",
    "Incoherence",
    "QuantRun",
    "SpectralBasis",
    "StateVector",
    "aggregate",
    "apply_lowpass",
    "bandlimited_filter",
    "bit_accounting",
    "build_cycle",
    "build_grid",
    "build_knn_points",
    "eigendecompose",
    "generate_point_cloud",
    "gft",
    "igft",
    "incoherence",
    "init_sdw",
    "init_sss",
    "k_hop_sets",
    "load_edge_list",
    "msq",
    "normalized_laplacian",
    "parse_alphabet",
    "quantize_msq",
    "quantize_permutation",
    "quantize_scalar",
    "quantize_sssr",
    "refine_permutation",
    "save_edge_list",
    "synthesize_bandlimited",
]
