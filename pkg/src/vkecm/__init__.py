"""Toolkit for simulating and attacking uncloneable encryption with variable
keys: quantum-state primitives, game-value evaluation, the protocol state
machine, syndrome error correction, the inner-product extraction circuit,
and a security-experiment harness."""

from .qcore import (
    DensityOp,
    Povm,
    StateVec,
    bell_phi_plus,
    make_rng,
    make_state,
    measure,
    partial_trace,
    spawn_rngs,
    tensor,
    trace_distance,
    werner_state,
    wiesner_state,
)
from .games import (
    CHSH_QUANTUM_VALUE,
    ChshStrategy,
    CloneGameSpec,
    CloneStrategy,
    WinRecord,
    chsh_value,
    classical_chsh_value,
    clone_game_value,
    clone_value_upper_bound_expr,
    clone_win_predicate,
    derive_delta_candidate,
    ideal_chsh_strategy,
    monogamy_broadcast_value,
)
from .protocol import (
    ProtocolParams,
    dec,
    enc,
    key_rel,
    uncloneability_bounds,
    validate_params,
)

__all__ = [
    "CHSH_QUANTUM_VALUE",
    "ChshStrategy",
    "CloneGameSpec",
    "CloneStrategy",
    "DensityOp",
    "Povm",
    "ProtocolParams",
    "StateVec",
    "WinRecord",
    "bell_phi_plus",
    "chsh_value",
    "classical_chsh_value",
    "clone_game_value",
    "clone_value_upper_bound_expr",
    "clone_win_predicate",
    "dec",
    "derive_delta_candidate",
    "enc",
    "ideal_chsh_strategy",
    "key_rel",
    "make_rng",
    "make_state",
    "measure",
    "monogamy_broadcast_value",
    "partial_trace",
    "spawn_rngs",
    "tensor",
    "trace_distance",
    "uncloneability_bounds",
    "validate_params",
    "werner_state",
    "wiesner_state",
]
