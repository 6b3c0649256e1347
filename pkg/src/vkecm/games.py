"""CHSH, the single-qubit simultaneous-guessing game, and the two-round
cloning games: strategy containers and exact value evaluation by enumeration."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .qcore import (
    DensityOp,
    DimensionError,
    ParameterError,
    Povm,
    angle_ket,
    basis_povm,
    bell_phi_plus,
    wiesner_state,
)

CHSH_QUANTUM_VALUE = 0.5 * (1.0 + 1.0 / math.sqrt(2.0))

KEEP = "keep"
BLANK = "blank"  # the withheld second-round input

#: Ideal measurement angles (outcome-0 ray): Alice x=0 computational, x=1
#: diagonal; Bob's bases sit halfway between Alice's, with outcome labels
#: oriented so every input pair wins at cos^2(pi/8).
ALICE_ANGLES = (0.0, math.pi / 4)
BOB_ANGLES = (math.pi / 8, -math.pi / 8)
INTERMEDIATE_ANGLE = math.pi / 8


def alice_ideal_povm(x: int) -> Povm:
    return basis_povm(ALICE_ANGLES[x])


def bob_ideal_povm(y: int) -> Povm:
    return basis_povm(BOB_ANGLES[y])


@dataclass(frozen=True)
class ChshStrategy:
    """Shared 2-qubit state plus complete POVMs for each input of each player."""

    shared_state: DensityOp
    alice_meas: tuple[Povm, Povm]
    bob_meas: tuple[Povm, Povm]

    def __post_init__(self):
        if self.shared_state.dims != (2, 2):
            raise DimensionError("CHSH strategy needs a 2-qubit shared state")


def ideal_chsh_strategy(state: DensityOp | None = None) -> ChshStrategy:
    """The optimal strategy; optionally on a different (e.g. Werner) state."""
    if state is None:
        state = bell_phi_plus().to_density()
    return ChshStrategy(
        shared_state=state,
        alice_meas=(alice_ideal_povm(0), alice_ideal_povm(1)),
        bob_meas=(bob_ideal_povm(0), bob_ideal_povm(1)),
    )


def constant_output_povm(value: int, n_outcomes: int = 2, dim: int = 2) -> Povm:
    """Degenerate POVM that deterministically reports ``value``."""
    elems = [np.zeros((dim, dim), dtype=complex) for _ in range(n_outcomes)]
    elems[value] = np.eye(dim, dtype=complex)
    return Povm(tuple(elems))


def chsh_value(strat: ChshStrategy) -> float:
    """Exact winning probability sum_{x,y} (1/4) sum_{a^b = xy} tr[(A ox B) rho]."""
    rho = strat.shared_state.matrix
    total = 0.0
    for x in (0, 1):
        for y in (0, 1):
            for a in (0, 1):
                b = a ^ (x & y)
                op = np.kron(strat.alice_meas[x].elements[a], strat.bob_meas[y].elements[b])
                total += 0.25 * np.trace(op @ rho).real
    return float(total)


class ClassicalChshResult(NamedTuple):
    value: Fraction
    maximizers: int


def classical_chsh_value() -> ClassicalChshResult:
    """Brute force over all deterministic local strategies, in exact rationals."""
    functions = [(o0, o1) for o0 in (0, 1) for o1 in (0, 1)]
    best = Fraction(0)
    count = 0
    for fa in functions:
        for fb in functions:
            wins = sum(1 for x in (0, 1) for y in (0, 1) if fa[x] ^ fb[y] == x & y)
            value = Fraction(wins, 4)
            if value > best:
                best, count = value, 1
            elif value == best:
                count += 1
    return ClassicalChshResult(best, count)


def monogamy_broadcast_value() -> float:
    """Value of the measure-and-broadcast strategy for simultaneous guessing.

    The held qubit H^x|a> is measured in the intermediate basis (angle pi/8);
    the classical outcome is copied to both guessers, so they succeed together
    exactly when the outcome equals a. Averaged over uniform a, x this attains
    the game's optimum (1 + 1/sqrt(2))/2.
    """
    return _broadcast_value(INTERMEDIATE_ANGLE)


def _broadcast_value(angle: float) -> float:
    povm = basis_povm(angle)
    total = 0.0
    for a in (0, 1):
        for x in (0, 1):
            rho = wiesner_state(a, x).to_density().matrix
            total += 0.25 * np.trace(povm.elements[a] @ rho).real
    return float(total)


# ---------------------------------------------------------------------------
# Two-round cloning game
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CloneGameSpec:
    """Input distribution of the two-round game: test probability gamma and
    per-party blanking probability alpha (alpha = 0 removes anchoring)."""

    gamma: float
    alpha: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ParameterError(f"gamma={self.gamma} outside (0, 1)")
        if not 0.0 <= self.alpha <= 1.0:
            raise ParameterError(f"alpha={self.alpha} outside [0, 1]")

    def sample_inputs(self, rng: np.random.Generator):
        """One draw of (x, u, y, z) from the game's input distribution."""
        x = int(rng.integers(2))
        r = rng.random()
        if r < 1.0 - self.gamma:
            u = KEEP
        else:
            u = 0 if r < 1.0 - self.gamma / 2 else 1
        y = BLANK if rng.random() < self.alpha else x
        z = BLANK if rng.random() < self.alpha else x
        return x, u, y, z


@dataclass(frozen=True)
class WinRecord:
    x: int
    u: object  # 0 | 1 | KEEP
    y: object  # 0 | 1 | BLANK
    z: object
    a: int
    s: int
    b: int
    c: int


def clone_win_predicate(rec: WinRecord) -> bool:
    """The overall two-round win condition (five mutually exclusive cases)."""
    if rec.u not in (0, 1, KEEP):
        raise ParameterError(f"u={rec.u!r} not in {{0, 1, keep}}")
    if rec.y not in (0, 1, BLANK) or rec.z not in (0, 1, BLANK):
        raise ParameterError("second-round inputs must be 0, 1 or blank")
    if rec.u != KEEP:
        return (rec.a ^ rec.s) == (rec.x & rec.u)
    if rec.y == BLANK and rec.z == BLANK:
        return True
    if rec.y == BLANK and rec.z != BLANK:
        return True
    if rec.z == BLANK and rec.y != BLANK:
        return True
    return rec.b == rec.c == rec.a


@dataclass(frozen=True)
class KrausChannel:
    """CPTP map given by Kraus operators (out_dim x in_dim each)."""

    kraus: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not ops:
            raise ParameterError("channel needs at least one Kraus operator")
        din = ops[0].shape[1]
        total = np.zeros((din, din), dtype=complex)
        for k in ops:
            if k.shape[1] != din:
                raise DimensionError("Kraus operators disagree on input dim")
            total += k.conj().T @ k
        if np.max(np.abs(total - np.eye(din))) > 1e-9:
            raise ParameterError("channel is not trace preserving")
        object.__setattr__(self, "kraus", ops)

    @property
    def in_dim(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.kraus[0].shape[0]

    def apply(self, mat: np.ndarray) -> np.ndarray:
        return sum(k @ mat @ k.conj().T for k in self.kraus)


def identity_channel(dim: int) -> KrausChannel:
    return KrausChannel((np.eye(dim, dtype=complex),))


MAX_STRATEGY_DIM = 16  # four qubits total on either side of a cut


@dataclass(frozen=True)
class CloneStrategy:
    """Full two-round strategy across the Alice | Barlie cut.

    ``barlie_meas`` covers the tested inputs u in {0, 1}; the keep branch is a
    channel on Barlie's register (identity by default, with output s = 0,
    which the win condition ignores when u = keep). ``split`` maps Barlie's
    post-keep register into Bob ox Charlie, whose binary measurements are
    indexed by their revealed input value.
    """

    shared_state: DensityOp  # dims (d_alice, d_barlie)
    alice_meas: tuple[Povm, Povm]
    barlie_meas: tuple[Povm, Povm]
    split: KrausChannel
    bob_meas: tuple[Povm, Povm]
    charlie_meas: tuple[Povm, Povm]
    bob_dim: int
    charlie_dim: int
    keep_channel: KrausChannel | None = None

    def __post_init__(self):
        if len(self.shared_state.dims) != 2:
            raise DimensionError("shared state must declare an (alice, barlie) cut")
        da, db = self.shared_state.dims
        if da * db > MAX_STRATEGY_DIM:
            raise DimensionError(
                f"first-round state dim {da * db} exceeds the {MAX_STRATEGY_DIM} cap"
            )
        if self.bob_dim * self.charlie_dim > MAX_STRATEGY_DIM:
            raise DimensionError("split output exceeds the 4-qubit cap")
        keep = self.keep_channel or identity_channel(db)
        if keep.in_dim != db:
            raise DimensionError("keep channel input dim != Barlie dim")
        if self.split.in_dim != keep.out_dim:
            raise DimensionError("split input dim != keep-branch output dim")
        if self.split.out_dim != self.bob_dim * self.charlie_dim:
            raise DimensionError("split output dim != bob_dim * charlie_dim")
        object.__setattr__(self, "keep_channel", keep)


def _alice_conditionals(strat: CloneStrategy, x: int):
    """Unnormalized Barlie states tr_A[(A_{a|x} ox 1) rho] for a = 0, 1."""
    da, db = strat.shared_state.dims
    rho = strat.shared_state.matrix.reshape(da, db, da, db)
    out = []
    for element in strat.alice_meas[x].elements:
        # tr_A[(E ox 1) rho][j, l] = sum_{i,k} E[k, i] rho[(i j), (k l)]
        sigma = np.einsum("ki,ijkl->jl", np.asarray(element), rho)
        out.append(sigma)
    return out


def clone_game_value(spec: CloneGameSpec, strat: CloneStrategy) -> float:
    """Exact winning probability by enumerating inputs with their weights."""
    gamma, alpha = spec.gamma, spec.alpha
    reveal_both = (1.0 - alpha) ** 2
    value = 0.0
    for x in (0, 1):
        sigmas = _alice_conditionals(strat, x)
        # Tested branches: u in {0, 1}, second round auto-won.
        for u in (0, 1):
            win_u = 0.0
            for a, sigma in enumerate(sigmas):
                for s, element in enumerate(strat.barlie_meas[u].elements):
                    if a ^ s == (x & u):
                        win_u += np.trace(np.asarray(element) @ sigma).real
            value += 0.5 * (gamma / 2.0) * win_u
        # Keep branch: auto-win unless both inputs revealed, then need b=c=a.
        guess_win = 0.0
        for a, sigma in enumerate(sigmas):
            tau = strat.split.apply(strat.keep_channel.apply(sigma))
            joint = np.kron(
                np.asarray(strat.bob_meas[x].elements[a]),
                np.asarray(strat.charlie_meas[x].elements[a]),
            )
            guess_win += np.trace(joint @ tau).real
        value += 0.5 * (1.0 - gamma) * ((1.0 - reveal_both) + reveal_both * guess_win)
    return float(value)


def clone_gamma_value(gamma: float, strat: CloneStrategy) -> float:
    """Value of the un-anchored game, via a direct predicate without blank cases."""
    return clone_game_value(CloneGameSpec(gamma, 0.0), strat)


def play_clone_game(
    spec: CloneGameSpec, strat: CloneStrategy, trials: int, rng: np.random.Generator
) -> float:
    """Monte Carlo estimate of the game value by sampled plays."""
    wins = 0
    for _ in range(trials):
        x, u, y, z = spec.sample_inputs(rng)
        sigmas = _alice_conditionals(strat, x)
        probs_a = np.clip([np.trace(s).real for s in sigmas], 0.0, None)
        a = int(rng.choice(2, p=probs_a / probs_a.sum()))
        sigma = sigmas[a] / probs_a[a]
        if u != KEEP:
            probs_s = np.clip(
                [np.trace(np.asarray(e) @ sigma).real for e in strat.barlie_meas[u].elements],
                0.0,
                None,
            )
            s = int(rng.choice(2, p=probs_s / probs_s.sum()))
            b = c = 0
        else:
            s = 0
            b = c = 0
            if y != BLANK and z != BLANK:
                tau = strat.split.apply(strat.keep_channel.apply(sigma))
                db, dc = strat.bob_dim, strat.charlie_dim
                tau4 = tau.reshape(db, dc, db, dc)
                probs_bc = np.zeros((2, 2))
                for bb in (0, 1):
                    for cc in (0, 1):
                        joint = np.kron(
                            np.asarray(strat.bob_meas[y].elements[bb]),
                            np.asarray(strat.charlie_meas[z].elements[cc]),
                        ).reshape(db, dc, db, dc)
                        probs_bc[bb, cc] = np.einsum("ijkl,klij->", joint, tau4).real
                flat = np.clip(probs_bc.ravel(), 0.0, None)
                idx = int(rng.choice(4, p=flat / flat.sum()))
                b, c = divmod(idx, 2)
        wins += clone_win_predicate(WinRecord(x, u, y, z, a, s, b, c))
    return wins / trials


def ideal_broadcast_strategy() -> CloneStrategy:
    """Ideal CHSH first round; on keep, Barlie measures in the intermediate
    basis and the classical outcome is copied to Bob and Charlie."""
    k0 = angle_ket(INTERMEDIATE_ANGLE).amplitudes
    k1 = angle_ket(INTERMEDIATE_ANGLE + math.pi / 2).amplitudes
    e = np.eye(2)
    # Record the outcome in the computational basis, then copy it.
    record = KrausChannel((np.outer(e[0], k0.conj()), np.outer(e[1], k1.conj())))
    copy = KrausChannel(
        (
            np.outer(np.kron(e[0], e[0]), e[0]),
            np.outer(np.kron(e[1], e[1]), e[1]),
        )
    )
    readout = Povm((np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex)))
    return CloneStrategy(
        shared_state=bell_phi_plus().to_density(),
        alice_meas=(alice_ideal_povm(0), alice_ideal_povm(1)),
        barlie_meas=(bob_ideal_povm(0), bob_ideal_povm(1)),
        keep_channel=record,
        split=copy,
        bob_meas=(readout, readout),
        charlie_meas=(readout, readout),
        bob_dim=2,
        charlie_dim=2,
    )


def classical_clone_strategy(a_of_x=(0, 0), s_of_u=(0, 0), b_const=0, c_const=0) -> CloneStrategy:
    """Deterministic local strategy: a = f(x), s = g(u), constant b and c."""
    alice = tuple(constant_output_povm(a_of_x[x]) for x in (0, 1))
    barlie = tuple(constant_output_povm(s_of_u[u]) for u in (0, 1))
    bob = tuple(constant_output_povm(b_const) for _ in (0, 1))
    charlie = tuple(constant_output_povm(c_const) for _ in (0, 1))
    ket00 = np.zeros(4, dtype=complex)
    ket00[0] = 1.0
    state = DensityOp(np.outer(ket00, ket00), (2, 2))
    split = KrausChannel((np.kron(np.eye(2), np.array([[1.0], [0.0]])),))
    return CloneStrategy(
        shared_state=state,
        alice_meas=alice,
        barlie_meas=barlie,
        split=split,
        bob_meas=bob,
        charlie_meas=charlie,
        bob_dim=2,
        charlie_dim=2,
    )


def clone_value_upper_bound_expr(gamma: float, alpha: float, mu: float, c_rig: float) -> float:
    """Single-mu evaluation of the proof's upper bound on the game value.

    Returns (1-gamma) min{1, beta + c_rig mu^(1/4)} + gamma (w* - mu) with
    beta = 1 - at + at (1 + 1/sqrt2)/2 and at = (1-alpha)^2. The rigidity
    constant is not pinned down anywhere, so c_rig is a caller-supplied stand-in.
    """
    if not 0.0 <= mu <= CHSH_QUANTUM_VALUE:
        raise ParameterError(f"mu={mu} outside [0, omega*]")
    if c_rig <= 0:
        raise ParameterError("c_rig must be positive")
    at = (1.0 - alpha) ** 2
    beta = 1.0 - at + at * CHSH_QUANTUM_VALUE
    return (1.0 - gamma) * min(1.0, beta + c_rig * mu**0.25) + gamma * (
        CHSH_QUANTUM_VALUE - mu
    )


def derive_delta_candidate(
    gamma: float, alpha: float, c_rig: float = 1.0, grid: int = 10_000
) -> float:
    """Candidate separation: trivial bound minus the grid maximum of the
    upper-bound expression over mu in [0, omega*]."""
    mus = np.linspace(0.0, CHSH_QUANTUM_VALUE, grid)
    best = max(clone_value_upper_bound_expr(gamma, alpha, float(m), c_rig) for m in mus)
    return (1.0 - gamma) + gamma * CHSH_QUANTUM_VALUE - best
