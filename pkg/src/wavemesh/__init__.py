"""Spectral-geometry toolkit: anisotropic wavelet filter banks on triangle
meshes, a trainable multi-scale convolution pipeline, and a dense
shape-correspondence benchmark harness."""

from .corresp import CorrespondenceResult, evaluate, geodesic_from, match_nn
from .curvature import PrincipalFrames, estimate_frames
from .mesh import TriMesh, load_mesh, vertex_mass, write_off
from .network import Model, ModelConfig, TrainItem, train
from .operators import (
    AnisoConfig,
    OperatorPair,
    anisotropy_tensor,
    assemble_albo,
    assemble_lbo,
)
from .spectrum import Spectrum, solve_eigs
from .synth import DatasetConfig, ShapePair, deform, gen_base, make_dataset, remesh
from .wavelets import (
    FilterBank,
    KernelSpec,
    WaveletCoefficients,
    analyze,
    apply_filter,
    build_filterbank,
    kernel_g,
    kernel_h,
    select_scales,
    synthesize,
    wavelet_at,
)

__version__ = "0.1.0"
