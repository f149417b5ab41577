"""Feasible point pursuit for non-convex complex QCQPs.

Library layout:

- qcqp: problem types, Hermitian algebra, feasibility checks, real embedding
- barrier: shared damped-Newton kernel for the interior-point solvers
- subproblem: convex QCQP-with-slacks subproblem solver
- sdp: semidefinite relaxation solver and rank-one extraction
- fpp: the successive convex approximation driver and KKT certificates
- sdr: relaxation lower bounds plus Gaussian randomization rounding
- generators: random and multicast instance ensembles
- serialization: JSON schemas for instances, results, reports
- bench: Monte-Carlo benchmark harness
- demo2d: tiny 2-d real instance with frozen starting points, used for trace plots
- cli: argparse front end
"""

from .bench import (
    BenchConfig,
    BenchReport,
    RunRecord,
    default_start,
    export_fig1_traces,
    run_bench,
    run_multicast_study,
    write_report_files,
)
from .demo2d import START_STUCK, START_SUCCESS, demo_instance, run_demo
from .fpp import (
    FEASIBLE_STATUSES,
    EngineFailure,
    FppParams,
    FppResult,
    KktCertificate,
    kkt_check,
    multi_start,
    run_fpp_sca,
)
from .qcqp import (
    QcqpInstance,
    SplitConstraint,
    check_feasibility,
    embed_vector,
    hermitianize,
    lift_vector,
    quad_form,
    real_embedding,
    split_hermitian,
    surrogate_value,
)
from .generators import GeneratorConfig, generate, generate_from_spec, parse_generator_spec
from .sdp import SdpProblem, SdpSolution, rank_one_extract, solve_sdp
from .sdr import SdrResult, randomize_and_scale, run_sdr
from .serialization import (
    fpp_result_to_json,
    instance_to_json,
    json_to_instance,
    read_instance,
    sdr_result_to_json,
    write_instance,
)

__version__ = "0.1.0"

__all__ = [
    "BenchConfig",
    "BenchReport",
    "FEASIBLE_STATUSES",
    "EngineFailure",
    "FppParams",
    "FppResult",
    "GeneratorConfig",
    "KktCertificate",
    "QcqpInstance",
    "RunRecord",
    "SdpProblem",
    "SdpSolution",
    "SdrResult",
    "SplitConstraint",
    "START_STUCK",
    "START_SUCCESS",
    "check_feasibility",
    "default_start",
    "demo_instance",
    "embed_vector",
    "export_fig1_traces",
    "fpp_result_to_json",
    "generate",
    "generate_from_spec",
    "hermitianize",
    "instance_to_json",
    "json_to_instance",
    "kkt_check",
    "lift_vector",
    "multi_start",
    "parse_generator_spec",
    "quad_form",
    "randomize_and_scale",
    "rank_one_extract",
    "read_instance",
    "real_embedding",
    "run_bench",
    "run_demo",
    "run_fpp_sca",
    "run_multicast_study",
    "run_sdr",
    "sdr_result_to_json",
    "solve_sdp",
    "split_hermitian",
    "surrogate_value",
    "write_instance",
    "write_report_files",
]
