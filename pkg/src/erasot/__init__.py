"""erasot: oblivious transfer over a wiretapped cascade of binary erasure channels.

A protocol engine for 1-of-2 string oblivious transfer between Alice and Bob
in the presence of an eavesdropper, together with exact small-instance
enumeration oracles and Monte Carlo estimators that verify correctness,
privacy, and the capacity bounds of the construction.
"""

from ._accel import HAVE_NUMBA, backend_name
from .channel import ERASED, ChannelParams, erasure_fraction, transmit
from .errors import (
    BackendError,
    DisjointnessError,
    ErasotError,
    InfeasibleParams,
    OracleScaleError,
    ParamError,
    ProtocolError,
    SizeError,
)
from .extractor import (
    BACKENDS,
    RANDOM_TABLE,
    UNIVERSAL_HASH,
    ExtractorSpec,
    KeyBundle,
    extract,
    make_extractor,
)
from .protocol import (
    AlicePublicMsg,
    BobPublicMsg,
    PartyViews,
    ProtocolConfig,
    ProtocolOutcome,
    Transcript,
    achievable_rate,
    alice_phase,
    bob_finish,
    bob_phase,
    max_feasible_rate,
    plan,
    run_protocol,
)
from .sets import (
    AbortReason,
    ProtocolAbort,
    SetFamily,
    decode_selector,
    derive_set_family,
    encode_selector,
    partition_by_erasure,
    sample_uniform_subset,
)

__version__ = "0.1.0"
