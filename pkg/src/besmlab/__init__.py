"""besmlab: simulation and numerical verification of matrix-valued Bessel
processes and the determinant weight |det x|^alpha.

The library has three layers: small dense matrix kernels (:mod:`.linalg`),
measure/potential-theory verifiers (:mod:`.weights`, :mod:`.muckenhoupt`,
:mod:`.ibp`, :mod:`.boundary`), and trajectory simulation with exact scalar
reference laws (:mod:`.processes`).  Statistical verdicts all flow through
:mod:`.stats` as VerificationReport records.
"""

from .boundary import (
    CapacityScalingResult,
    StratumSpec,
    cap_zero_condition,
    capacity_scaling_experiment,
    det_growth_bound,
    phi_eps,
    phi_eps_energy,
)
from .errors import BesmError
from .ibp import ibp_check
from .linalg import (
    QRFactors,
    adjugate,
    det,
    distance_to_rank_stratum,
    elementary_symmetric,
    gram_schmidt_qr,
    psd_sqrt,
    singular_values,
)
from .muckenhoupt import (
    SigmaBall,
    certified_a1_constant,
    muckenhoupt_a1_ratio,
    normalize_ball,
    qr_claim_check,
)
from .processes import (
    PathSample,
    SimConfig,
    besq_transition_cdf,
    girsanov_det_martingale,
    simulate_besm,
    simulate_wishart,
    time_change_det,
)
from .stats import KSResult, VerificationReport, ks_one_sample, ks_two_sample, loglog_slope
from .weights import (
    BallSpec,
    CubeSpec,
    WeightSpec,
    calibrate_haar_mass,
    claim_1d_bound,
    qr_cube_integral,
    radon_threshold_probe,
    weight,
)

__version__ = "0.1.0"

__all__ = [
    "BallSpec",
    "BesmError",
    "CapacityScalingResult",
    "CubeSpec",
    "KSResult",
    "PathSample",
    "QRFactors",
    "SigmaBall",
    "SimConfig",
    "StratumSpec",
    "VerificationReport",
    "WeightSpec",
    "adjugate",
    "besq_transition_cdf",
    "calibrate_haar_mass",
    "cap_zero_condition",
    "capacity_scaling_experiment",
    "certified_a1_constant",
    "claim_1d_bound",
    "det",
    "det_growth_bound",
    "distance_to_rank_stratum",
    "elementary_symmetric",
    "girsanov_det_martingale",
    "gram_schmidt_qr",
    "ibp_check",
    "ks_one_sample",
    "ks_two_sample",
    "loglog_slope",
    "muckenhoupt_a1_ratio",
    "normalize_ball",
    "phi_eps",
    "phi_eps_energy",
    "psd_sqrt",
    "qr_claim_check",
    "qr_cube_integral",
    "radon_threshold_probe",
    "simulate_besm",
    "simulate_wishart",
    "singular_values",
    "time_change_det",
    "weight",
]
