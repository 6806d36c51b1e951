from .decoders import COND_MODES, ElementDecoder, GlobalDecoder, LinearHead
from .sampling import (
    DESK_POLICIES,
    PAPER_POLICIES,
    SamplingPolicy,
    nucleus_mass,
    sample_token,
    sampling_policies,
)
from .twolevel import DECODER_MODES, TwoLevelDecoder

__all__ = [
    "COND_MODES",
    "DECODER_MODES",
    "DESK_POLICIES",
    "ElementDecoder",
    "GlobalDecoder",
    "LinearHead",
    "PAPER_POLICIES",
    "SamplingPolicy",
    "TwoLevelDecoder",
    "nucleus_mass",
    "sample_token",
    "sampling_policies",
]
