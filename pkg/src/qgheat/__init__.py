"""Heat kernels, heat traces and Ambarzumyan-type inverse spectral checks
on compact quantum graphs and finite combinatorial graphs."""

from .analysis import (
    GroundStateCurve,
    SigmaCurve,
    SpectrumPair,
    TailPolicy,
    TraceExpansionReport,
    Verdict,
    ambarzumyan_verdict,
    combinatorial_trace_identity,
    ground_state_curve,
    heat_trace,
    premain_verdict,
    sigma_of_t,
    trace_expansion_residual,
)
from .eigen import BACKEND, SpectralData, eigendecompose, eigenfunction_at, eigh
from .errors import (
    ConvergenceError,
    GraphError,
    MeshError,
    NumericalError,
    QGHeatError,
    TruncationError,
)
from .graph import (
    CombinatorialGraph,
    Constant,
    CosineMode,
    GaussianBump,
    MetricGraph,
    PointOnGraph,
    PotentialSpec,
    Sampled,
    builtin_graph,
    evaluate_potential,
    parse_graph,
    parse_graph_file,
    serialize_graph,
    total_volume,
)
from .kernels import (
    ClosedFormKernel,
    closed_form_eval,
    diagonal_limit,
    heat_content_dirichlet,
    k0_eval,
    k_eval,
)
from .mesh import (
    DiscreteOperator,
    Mesh,
    assemble_combinatorial,
    assemble_dirichlet_interval,
    assemble_h,
    assemble_h0,
)

__version__ = "0.1.0"
