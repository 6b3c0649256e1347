"""Untrusted-device layer: honest i.i.d. noisy pair devices, the raw
measurement hooks adversarial programs share with them, and the
bounded-leakage channel between supposedly isolated devices."""

from __future__ import annotations

import numpy as np

from .games import ALICE_ANGLES, BOB_ANGLES, INTERMEDIATE_ANGLE
from .qcore import ParameterError, angle_ket, werner_state

U_KEEP = 2  # round-1 alphabet {0, 1, keep}
XT_BLANK = 4  # round-2 alphabet {0, 1, 2, 3, blank}


class ProtocolOrderError(RuntimeError):
    """A device was driven outside its one-measurement-per-round contract."""


class AlphabetError(ValueError):
    """An input string used symbols outside the declared alphabet."""


class LeakageExceeded(RuntimeError):
    """The leakage budget between isolated devices was overrun."""


def _qubit_projectors(angle: float) -> np.ndarray:
    out = np.empty((2, 2, 2), dtype=complex)
    for outcome in (0, 1):
        k = angle_ket(angle + outcome * np.pi / 2).amplitudes
        out[outcome] = np.outer(k, k.conj())
    return out


_ALICE = np.stack([_qubit_projectors(a) for a in ALICE_ANGLES])  # [x][a] 2x2
_BOB = np.stack([_qubit_projectors(a) for a in BOB_ANGLES])  # [y][s] 2x2
_INTERMEDIATE = _qubit_projectors(INTERMEDIATE_ANGLE)  # [outcome] 2x2
_EYE2 = np.eye(2, dtype=complex)


def _embed(projs: np.ndarray, side: int) -> np.ndarray:
    """Lift per-outcome qubit projectors to the 2-qubit joint space."""
    if side == 0:
        return np.stack([np.kron(p, _EYE2) for p in projs])
    return np.stack([np.kron(_EYE2, p) for p in projs])


class PairRegister:
    """l independent two-qubit states shared by one client/receiver pair."""

    def __init__(self, l: int, q: float):
        self.l = int(l)
        self.q = float(q)
        base = werner_state(q).matrix
        self.states = np.broadcast_to(base, (self.l, 4, 4)).copy()

    def copy(self) -> "PairRegister":
        dup = PairRegister.__new__(PairRegister)
        dup.l, dup.q = self.l, self.q
        dup.states = self.states.copy()
        return dup

    def measure_batch(
        self, indices: np.ndarray, projectors: np.ndarray, rng: np.random.Generator
    ) -> np.ndarray:
        """Born-rule measure per instance; ``projectors`` is (k, 2, 4, 4)
        giving the two outcome projectors for each selected instance."""
        rho = self.states[indices]
        p0 = np.einsum("nij,nji->n", projectors[:, 0], rho).real
        p0 = np.clip(p0, 0.0, 1.0)
        outcomes = (rng.random(len(indices)) >= p0).astype(np.uint8)
        chosen = projectors[np.arange(len(indices)), outcomes]
        post = np.einsum("nij,njk,nkl->nil", chosen, rho, chosen)
        norms = np.where(outcomes == 0, p0, 1.0 - p0)
        # Instances conditioned on a zero-probability branch cannot occur.
        post /= np.maximum(norms, 1e-300)[:, None, None]
        self.states[indices] = post
        return outcomes


class HonestClientDevice:
    """Client-side device: ideal basis-x measurement on each pair, once."""

    def __init__(self, register: PairRegister):
        self.register = register
        self.measured = False

    def measure(self, x_bits: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self.measured:
            raise ProtocolOrderError("client device already produced its output")
        x_bits = np.asarray(x_bits)
        if x_bits.shape != (self.register.l,) or not np.isin(x_bits, (0, 1)).all():
            raise AlphabetError("client input must be a length-l bit string")
        self.measured = True
        projs = _embed(_ALICE.reshape(4, 2, 2), 0).reshape(2, 2, 4, 4)[x_bits]
        return self.register.measure_batch(np.arange(self.register.l), projs, rng)


class HonestReceiverDevice:
    """Receiver-side device: two input rounds, blanks output 0 untouched."""

    def __init__(self, register: PairRegister):
        self.register = register
        self.rounds_done = 0
        self.last_u: np.ndarray | None = None

    def snapshot(self) -> "HonestReceiverDevice":
        """Simulator-only copy (used to replay decryption against many keys)."""
        dup = HonestReceiverDevice(self.register.copy())
        dup.rounds_done = self.rounds_done
        dup.last_u = None if self.last_u is None else self.last_u.copy()
        return dup

    def round1(self, u: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self.rounds_done != 0:
            raise ProtocolOrderError("receiver round 1 already happened")
        u = np.asarray(u)
        if u.shape != (self.register.l,) or not np.isin(u, (0, 1, U_KEEP)).all():
            raise AlphabetError("round-1 input alphabet is {0, 1, keep}")
        self.rounds_done = 1
        self.last_u = u.copy()
        s = np.zeros(self.register.l, dtype=np.uint8)
        tested = np.flatnonzero(u != U_KEEP)
        if tested.size:
            projs = _embed(_BOB.reshape(4, 2, 2), 1).reshape(2, 2, 4, 4)[u[tested]]
            s[tested] = self.register.measure_batch(tested, projs, rng)
        return s

    def round2(self, xt: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self.rounds_done != 1:
            raise ProtocolOrderError(f"round 2 expects exactly one prior round, saw {self.rounds_done}")
        xt = np.asarray(xt)
        if xt.shape != (self.register.l,) or not np.isin(xt, (0, 1, 2, 3, XT_BLANK)).all():
            raise AlphabetError("round-2 input alphabet is {0, 1, 2, 3, blank}")
        self.rounds_done = 2
        out = np.zeros(self.register.l, dtype=np.uint8)
        alice_like = np.flatnonzero((xt == 2) | (xt == 3))
        if alice_like.size:
            projs = _embed(_ALICE.reshape(4, 2, 2), 1).reshape(2, 2, 4, 4)[xt[alice_like] - 2]
            out[alice_like] = self.register.measure_batch(alice_like, projs, rng)
        bob_like = np.flatnonzero((xt == 0) | (xt == 1))
        if bob_like.size:
            projs = _embed(_BOB.reshape(4, 2, 2), 1).reshape(2, 2, 4, 4)[xt[bob_like]]
            out[bob_like] = self.register.measure_batch(bob_like, projs, rng)
        return out

    def measure_raw(
        self, indices: np.ndarray, basis: str, rng: np.random.Generator
    ) -> np.ndarray:
        """Arbitrary receiver-side measurement, the hook dishonest programs use."""
        table = {"intermediate": _INTERMEDIATE, "computational": _ALICE[0], "diagonal": _ALICE[1]}
        if basis not in table:
            raise ParameterError(f"unknown basis {basis!r}")
        projs = np.broadcast_to(_embed(table[basis], 1), (len(indices), 2, 4, 4))
        return self.register.measure_batch(np.asarray(indices), projs, rng)


def make_honest_devices(l: int, q: float) -> tuple[HonestClientDevice, HonestReceiverDevice]:
    register = PairRegister(l, q)
    return HonestClientDevice(register), HonestReceiverDevice(register)


class LeakageBudget:
    """Hard cap on bits communicated between isolated devices.

    Leaks are phase-gated: nothing may flow before the current phase's inputs
    are delivered. The log keeps (direction, bit) in order; timing carries no
    information because schedules are declared up front and unsent scheduled
    slots default to 0.
    """

    def __init__(self, max_bits: int):
        if max_bits < 0:
            raise ParameterError("leakage budget cannot be negative")
        self.max_bits = int(max_bits)
        self.used_bits = 0
        self.log: list[tuple[str, int]] = []
        self.inputs_delivered = False

    def open_phase(self):
        self.inputs_delivered = True

    def close_phase(self):
        self.inputs_delivered = False

    def leak(self, direction: str, bit: int) -> "LeakageBudget":
        if not self.inputs_delivered:
            raise ProtocolOrderError("leakage before the devices received inputs")
        if self.used_bits >= self.max_bits:
            raise LeakageExceeded(
                f"leakage budget of {self.max_bits} bits exhausted"
            )
        self.used_bits += 1
        self.log.append((direction, int(bit) & 1))
        return self


class LeakChannel:
    """Fixed-schedule mailbox over a LeakageBudget."""

    def __init__(self, budget: LeakageBudget):
        self.budget = budget
        self._declared: dict[str, int] = {}
        self._sent: dict[str, list[int]] = {}

    def declare(self, direction: str, count: int):
        self._declared[direction] = self._declared.get(direction, 0) + int(count)

    def send(self, direction: str, bits) -> None:
        for bit in bits:
            self.budget.leak(direction, bit)
            self._sent.setdefault(direction, []).append(int(bit) & 1)

    def collect(self, direction: str) -> list[int]:
        """Received bits, padded with the default 0 for unsent scheduled slots."""
        sent = self._sent.get(direction, [])
        want = self._declared.get(direction, len(sent))
        return (sent + [0] * want)[:want]
