"""Decoupling-based decoders built from QSVT amplitude amplification.

The package builds encoder/noise instances, the two post-selected decoding
protocols, their fixed-point amplified versions and the Petz recovery map,
plus the complexity comparison between the two amplified decoders.

>>> from qsvt_decoders import IDENTITY_SPEC, instance_from_spec, GYKDecoder
>>> dec = GYKDecoder(delta=1e-3).fit(instance_from_spec(IDENTITY_SPEC))
>>> dec.t_
23
"""

__version__ = "0.1.0"

from ._config import DEFAULT_TOLERANCES, Tolerances, get_tolerances, tolerance_context  # noqa: E402
from .analysis import ComplexityReport, SweepTable, complexity_report, crossover_sweep  # noqa: E402
from .channels import (  # noqa: E402
    KrausChannel,
    StinespringDilation,
    amplitude_damping,
    erasure_noise,
    haar_isometry,
    identity_channel,
    minimal_dilation,
    pauli_noise,
)
from .corpus import ERASURE_SEED7_SPEC, IDENTITY_SPEC, instance_from_spec, standard_corpus  # noqa: E402
from .decoders import (  # noqa: E402
    DecoderRun,
    GYKDecoder,
    PetzLikeDecoder,
    PetzRecovery,
    barnum_knill_check,
    decode_gyk,
    decode_petzlike,
    petz_exact,
)
from .decoupling import ProtocolInstance, decoupling_epsilon, entropy_report, make_instance  # noqa: E402
from .exceptions import (  # noqa: E402
    CapExceededError,
    DecoderError,
    InvariantViolation,
    PhaseFindingError,
    ValidationError,
)
from .protocols import gyk_problem, petzlike_problem, postselect, projector_identities  # noqa: E402
from .qsvt import find_phases, make_sign_poly, qsp_scalar_eval, sign_phases  # noqa: E402
from .tensor import DenseOperator, StateVector, SystemLayout  # noqa: E402

__all__ = [
    "__version__",
    "Tolerances", "DEFAULT_TOLERANCES", "get_tolerances", "tolerance_context",
    "ComplexityReport", "SweepTable", "complexity_report", "crossover_sweep",
    "KrausChannel", "StinespringDilation", "amplitude_damping", "erasure_noise", "haar_isometry",
    "identity_channel", "minimal_dilation", "pauli_noise",
    "ERASURE_SEED7_SPEC", "IDENTITY_SPEC", "instance_from_spec", "standard_corpus",
    "DecoderRun", "GYKDecoder", "PetzLikeDecoder", "PetzRecovery", "barnum_knill_check",
    "decode_gyk", "decode_petzlike", "petz_exact",
    "ProtocolInstance", "decoupling_epsilon", "entropy_report", "make_instance",
    "CapExceededError", "DecoderError", "InvariantViolation", "PhaseFindingError", "ValidationError",
    "gyk_problem", "petzlike_problem", "postselect", "projector_identities",
    "find_phases", "make_sign_poly", "qsp_scalar_eval", "sign_phases",
    "DenseOperator", "StateVector", "SystemLayout",
]
