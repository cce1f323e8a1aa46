"""Downlink interference-alignment simulator and numerical toolkit."""

__version__ = "0.1.0"

from .exceptions import SimError, ValidationError
from .netchan import Geometry, NetworkConfig, drop_users, gen_fading, geometry_sinr_db
from .precoding import MixingMatrix, PrecoderSet, make_mixing_matrix, zf_beamform
from .receiver import (
    FeedbackEntry,
    build_feedback,
    eigen_directions,
    equivalent_channel,
    in_covariance,
    mmse_decoder,
    zf_null_decoder,
)
from .scheduler import (
    CandidatePool,
    PfState,
    ScheduleDecision,
    StreamCandidate,
    schedule_exhaustive,
    schedule_greedy,
    update_pf_state,
)
from .simharness import (
    SCHEMES,
    CampaignSummary,
    ScenarioResult,
    baseline_mf,
    baseline_ofdm,
    run_campaign,
    run_scenario,
    run_slot,
)

__all__ = [
    "__version__",
    "SimError",
    "ValidationError",
    "NetworkConfig",
    "Geometry",
    "drop_users",
    "gen_fading",
    "geometry_sinr_db",
    "MixingMatrix",
    "PrecoderSet",
    "make_mixing_matrix",
    "zf_beamform",
    "FeedbackEntry",
    "build_feedback",
    "eigen_directions",
    "equivalent_channel",
    "in_covariance",
    "mmse_decoder",
    "zf_null_decoder",
    "CandidatePool",
    "PfState",
    "ScheduleDecision",
    "StreamCandidate",
    "schedule_exhaustive",
    "schedule_greedy",
    "update_pf_state",
    "SCHEMES",
    "CampaignSummary",
    "ScenarioResult",
    "baseline_mf",
    "baseline_ofdm",
    "run_campaign",
    "run_scenario",
    "run_slot",
]
