"""Security-experiment harness: cloning, distinguishing and
cloning-distinguishing attacks against the scheme, a catalog of built-in
adversaries, and capability-token accounting that structurally enforces who
may read what."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import SimpleNamespace

import numpy as np

from .devices import (
    U_KEEP,
    XT_BLANK,
    LeakChannel,
    LeakageBudget,
    ProtocolOrderError,
    make_honest_devices,
)
from .protocol import (
    ACCEPT,
    DecryptionKey,
    ProtocolParams,
    dec,
    enc,
    key_rel,
    random_message,
)
from .qcore import ParameterError, spawn_rngs


class CapabilityViolation(RuntimeError):
    """A principal tried to open a key token it does not own."""


class KeyToken:
    """Capability wrapper around a decryption key; every open is logged."""

    def __init__(self, owner: str, key: DecryptionKey, log: list):
        self._owner = owner
        self._key = key
        self._log = log

    def open(self, principal: str) -> DecryptionKey:
        self._log.append((principal, self._owner))
        if principal != self._owner:
            raise CapabilityViolation(f"{principal} opened {self._owner}'s key")
        return self._key


@dataclass
class AttackStats:
    """Empirical counts from a security experiment, mergeable across workers."""

    trials: int = 0
    accepts: int = 0
    joint_successes: float = 0.0
    bob_successes: float = 0.0
    charlie_successes: float = 0.0
    both_right_or_wrong: float = 0.0
    aborted: int = 0
    token_log: list = field(default_factory=list)

    def merge(self, other: "AttackStats") -> "AttackStats":
        return AttackStats(
            trials=self.trials + other.trials,
            accepts=self.accepts + other.accepts,
            joint_successes=self.joint_successes + other.joint_successes,
            bob_successes=self.bob_successes + other.bob_successes,
            charlie_successes=self.charlie_successes + other.charlie_successes,
            both_right_or_wrong=self.both_right_or_wrong + other.both_right_or_wrong,
            aborted=self.aborted + other.aborted,
            token_log=self.token_log + other.token_log,
        )

    def _rate(self, count: float) -> float:
        return count / self.trials if self.trials else 0.0

    @property
    def accept_rate(self) -> float:
        return self._rate(self.accepts)

    @property
    def joint_rate(self) -> float:
        return self._rate(self.joint_successes)

    @property
    def bob_rate(self) -> float:
        return self._rate(self.bob_successes)

    @property
    def charlie_rate(self) -> float:
        return self._rate(self.charlie_successes)

    @property
    def both_or_neither_rate(self) -> float:
        return self._rate(self.both_right_or_wrong)

    def ci95(self, rate: float) -> float:
        """95% binomial (Wald) radius for a rate estimated from ``trials``."""
        if not self.trials:
            return 0.0
        return 1.96 * math.sqrt(max(rate * (1.0 - rate), 0.0) / self.trials)

    @property
    def token_violations(self) -> int:
        return sum(1 for principal, owner in self.token_log if principal != owner)


def _messages_equal(params: ProtocolParams, a, b) -> bool:
    if params.variant == "string":
        return bool(np.array_equal(a, b))
    return int(a) == int(b)


def _copy_value(c):
    return c.copy() if isinstance(c, np.ndarray) else c


def _branch_copy(device):
    """Isolate paired evaluation branches from each other's measurements."""
    return device.snapshot() if hasattr(device, "snapshot") else device


def _trial_streams(base_entropy: int, trial: int, n: int = 6):
    return spawn_rngs(np.random.SeedSequence(entropy=(base_entropy, trial)), n)


def _base_entropy(rng) -> int:
    if isinstance(rng, (int, np.integer)):
        return int(rng)
    return int(rng.integers(2**63))


# ---------------------------------------------------------------------------
# Built-in adversaries
# ---------------------------------------------------------------------------


class _ClassicalRecordClientDevice:
    """Deterministic-per-input client device driven by a shared record."""

    def __init__(self, record: np.ndarray):
        self.record = record
        self.measured = False

    def measure(self, x_bits, rng):
        if self.measured:
            raise ProtocolOrderError("client device already produced its output")
        self.measured = True
        return self.record.copy()


class _ClassicalRecordReceiverDevice:
    def __init__(self, record: np.ndarray):
        self.record = record
        self.last_u = None

    def round1(self, u, rng):
        self.last_u = np.asarray(u).copy()
        return self.record.copy()

    def round2(self, xt, rng):
        return self.record.copy()

    def snapshot(self):
        dup = _ClassicalRecordReceiverDevice(self.record)
        dup.last_u = None if self.last_u is None else self.last_u.copy()
        return dup


def _reconstruct_message(params: ProtocolParams, key: DecryptionKey, u, c, a_guess):
    """Invert the decryption algebra from a guessed raw string."""
    at = np.zeros(params.lam, dtype=np.uint8)
    mask = (np.asarray(u) == U_KEEP) & (key.xt != XT_BLANK)
    at[mask] = np.asarray(a_guess, dtype=np.uint8)[mask]
    if params.variant == "string":
        return np.bitwise_xor(np.bitwise_xor(c, key.d), at)
    ip = int(at.astype(np.int64) @ key.rhat.astype(np.int64)) % params.p
    return (int(c) - int(key.d) + ip) % params.p


class ClassicalRecordAdversary:
    """Both devices are classical and share a hidden uniform record; the
    record makes the output marginals uniform while every dishonest party can
    reconstruct the client's outputs exactly."""

    name = "classical_record"

    def make_devices(self, params, rng):
        record = rng.integers(0, 2, size=params.lam, dtype=np.uint8)
        return _ClassicalRecordClientDevice(record), _ClassicalRecordReceiverDevice(record)

    def declare_leaks(self, params, channel):
        pass

    def split(self, params, receiver, c, transcript, rng):
        def copy_share():
            return SimpleNamespace(
                record=receiver.record.copy(), u=receiver.last_u.copy(), c=_copy_value(c)
            )

        return copy_share(), copy_share()

    def _guess(self, params, share, key):
        return _reconstruct_message(params, key, share.u, share.c, share.record)

    def bob_guess(self, params, share, token, channel, rng):
        return self._guess(params, share, token.open("bob"))

    def charlie_guess(self, params, share, token, channel, rng):
        return self._guess(params, share, token.open("charlie"))


class ForwardToBobAdversary:
    """Honest devices; Bob receives the entire receiver side and decrypts
    honestly, Charlie holds nothing and guesses uniformly."""

    name = "forward_to_bob"

    def make_devices(self, params, rng):
        return make_honest_devices(params.lam, params.q)

    def declare_leaks(self, params, channel):
        pass

    def split(self, params, receiver, c, transcript, rng):
        bob = SimpleNamespace(device=receiver, c=c)
        return bob, SimpleNamespace()

    def bob_guess(self, params, share, token, channel, rng):
        key = token.open("bob")
        ciphertext = SimpleNamespace(c=share.c, quantum=share.device)
        return dec(params, ciphertext, key, share.device, rng)

    def charlie_guess(self, params, share, token, channel, rng):
        token.open("charlie")
        return random_message(params, rng)


class BroadcastMeasureAdversary:
    """Honest devices, but the receiver measures every kept qubit in the
    intermediate basis before splitting and hands the classical outcomes to
    both parties (the measure-and-broadcast guessing strategy)."""

    name = "broadcast_measure"

    def make_devices(self, params, rng):
        return make_honest_devices(params.lam, params.q)

    def declare_leaks(self, params, channel):
        pass

    def split(self, params, receiver, c, transcript, rng):
        kept = np.flatnonzero(receiver.last_u == U_KEEP)
        lam = np.zeros(params.lam, dtype=np.uint8)
        if kept.size:
            lam[kept] = receiver.measure_raw(kept, "intermediate", rng)

        def copy_share():
            return SimpleNamespace(
                outcomes=lam.copy(), u=receiver.last_u.copy(), c=_copy_value(c)
            )

        return copy_share(), copy_share()

    def _guess(self, params, share, key):
        return _reconstruct_message(params, key, share.u, share.c, share.outcomes)

    def bob_guess(self, params, share, token, channel, rng):
        return self._guess(params, share, token.open("bob"))

    def charlie_guess(self, params, share, token, channel, rng):
        return self._guess(params, share, token.open("charlie"))


class LeakyAdversary(ForwardToBobAdversary):
    """forward_to_bob plus k scheduled leakage bits: Bob sends the first k
    bits of his decoded message to Charlie, who fills the rest uniformly."""

    def __init__(self, k: int):
        if k < 0:
            raise ParameterError("leak count must be nonnegative")
        self.k = int(k)
        self.name = f"leaky:{self.k}"

    def declare_leaks(self, params, channel):
        if params.variant != "string":
            raise ParameterError("leaky adversary is defined for the string variant")
        channel.declare("bob->charlie", self.k)

    def bob_guess(self, params, share, token, channel, rng):
        guess = super().bob_guess(params, share, token, channel, rng)
        channel.send("bob->charlie", guess[: self.k].tolist())
        return guess

    def charlie_guess(self, params, share, token, channel, rng):
        token.open("charlie")
        leaked = channel.collect("bob->charlie")
        guess = rng.integers(0, 2, size=params.lam, dtype=np.uint8)
        guess[: len(leaked)] = leaked
        return guess


def builtin_adversaries() -> dict:
    """Catalog of named cloning adversaries; leaky takes its bit count."""
    return {
        "classical_record": ClassicalRecordAdversary,
        "forward_to_bob": ForwardToBobAdversary,
        "broadcast_measure": BroadcastMeasureAdversary,
        "leaky": LeakyAdversary,
    }


def adversary_by_name(name: str):
    catalog = builtin_adversaries()
    if ":" in name:
        base, arg = name.split(":", 1)
        if base not in catalog:
            raise ParameterError(f"unknown adversary {base!r}")
        return catalog[base](int(arg))
    if name not in catalog:
        raise ParameterError(f"unknown adversary {name!r}")
    return catalog[name]()


def distinguisher_by_name(name: str):
    catalog = {
        "constant_zero": ConstantBitDistinguisher,
        "ciphertext_only": CiphertextOnlyDistinguisher,
        "pad_oracle": PadOracleDistinguisher,
    }
    if name not in catalog:
        raise ParameterError(f"unknown distinguisher {name!r}")
    return catalog[name]()


def cloning_distinguisher_by_name(name: str):
    if name.startswith("lifted:"):
        return LiftedCloningDistinguisher(distinguisher_by_name(name.split(":", 1)[1]))
    catalog = {
        "constant_pair": ConstantPairCloningDistinguisher,
        "forward_to_bob_bits": ForwardToBobCloningDistinguisher,
    }
    if name not in catalog:
        raise ParameterError(f"unknown cloning distinguisher {name!r}")
    return catalog[name]()


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def run_cloning_attack(params: ProtocolParams, adversary, trials: int, rng) -> AttackStats:
    """The uncloneability experiment: one Enc, an arbitrary split, and two
    independently released keys; counts Pr[F=accept and M = M_B = M_C]."""
    base = _base_entropy(rng)
    stats = AttackStats()
    for t in range(trials):
        g_enc, g_kb, g_kc, g_bob, g_charlie, g_misc = _trial_streams(base, t)
        client, receiver = adversary.make_devices(params, g_enc)
        budget = LeakageBudget(math.floor(params.nu * params.lam))
        channel = LeakChannel(budget)
        adversary.declare_leaks(params, channel)
        m = random_message(params, g_misc)
        budget.open_phase()
        res = enc(params, m, client, receiver, g_enc)
        bob_share, charlie_share = adversary.split(
            params, receiver, res.ciphertext.c, res.transcript, g_enc
        )
        key_b = key_rel(params, res.private_key, g_kb)
        key_c = key_rel(params, res.private_key, g_kc)
        token_b = KeyToken("bob", key_b, stats.token_log)
        token_c = KeyToken("charlie", key_c, stats.token_log)
        try:
            m_b = adversary.bob_guess(params, bob_share, token_b, channel, g_bob)
            m_c = adversary.charlie_guess(params, charlie_share, token_c, channel, g_charlie)
        except CapabilityViolation:
            stats.aborted += 1
            continue
        stats.trials += 1
        accept = res.flag == ACCEPT
        stats.accepts += accept
        bob_ok = _messages_equal(params, m_b, m)
        charlie_ok = _messages_equal(params, m_c, m)
        stats.bob_successes += accept and bob_ok
        stats.charlie_successes += accept and charlie_ok
        stats.joint_successes += accept and bob_ok and charlie_ok
        stats.both_right_or_wrong += accept and (bob_ok == charlie_ok)
    return stats


class ConstantBitDistinguisher:
    """Outputs a fixed bit regardless of the ciphertext."""

    name = "constant_zero"
    wants_private_key = False

    def __init__(self, bit: int = 0):
        self.bit = bit

    def m_star(self, params, rng):
        m = random_message(params, rng)
        if params.variant == "string":
            m[0] = 1
        else:
            m = 1
        return m

    def make_devices(self, params, rng):
        return make_honest_devices(params.lam, params.q)

    def distinguish(self, params, view, c, rng):
        return self.bit


class CiphertextOnlyDistinguisher(ConstantBitDistinguisher):
    """The best a classical adversary can do from C alone; since C is a
    one-time pad this is worth exactly 1/2 conditioned on accept."""

    name = "ciphertext_only"

    def distinguish(self, params, view, c, rng):
        if params.variant == "string":
            return int(c[0])
        return int(c) % 2


class PadOracleDistinguisher(ConstantBitDistinguisher):
    """Harness backdoor: reads the pad R and inverts the one-time pad; a
    sanity upper anchor at Pr[F=accept]."""

    name = "pad_oracle"
    wants_private_key = True

    def distinguish(self, params, view, c, rng):
        m_star = view.m_star
        if params.variant == "string":
            return int(np.array_equal(np.bitwise_xor(c, view.private_key.r), m_star))
        return int((int(c) - int(view.private_key.r)) % params.p == int(m_star))


def run_distinguishing_attack(params: ProtocolParams, adversary, trials: int, rng) -> AttackStats:
    """Paired estimate of Pr[F=accept and B = Bhat].

    Each trial runs Enc once; the two ciphertext branches (message 0 versus
    m*) share every draw except the message, so the per-trial success is the
    exact average over the hidden bit B.
    """
    base = _base_entropy(rng)
    stats = AttackStats()
    for t in range(trials):
        g_enc, _, _, g_adv, _, g_misc = _trial_streams(base, t)
        client, receiver = adversary.make_devices(params, g_enc)
        m_star = adversary.m_star(params, g_misc)
        res = enc(params, m_star, client, receiver, g_enc)
        accept = res.flag == ACCEPT
        if accept:
            c1 = res.ciphertext.c
            c0 = res.private_key.r if params.variant == "string" else int(res.private_key.r)
        else:
            c1 = c0 = res.ciphertext.c  # dummy branch never depends on the message
        seed = int(g_adv.integers(2**63))
        bits = []
        for c_branch in (c0, c1):
            view = SimpleNamespace(
                receiver=_branch_copy(receiver),
                transcript=res.transcript,
                m_star=m_star,
                private_key=res.private_key
                if getattr(adversary, "wants_private_key", False)
                else None,
            )
            bits.append(adversary.distinguish(params, view, c_branch, spawn_rngs(seed, 1)[0]))
        stats.trials += 1
        stats.accepts += accept
        stats.joint_successes += accept * 0.5 * ((bits[0] == 0) + (bits[1] == 1))
    return stats


class LiftedCloningDistinguisher:
    """Lemma-style lift: perform the distinguishing measurement before the
    split and hand copies of the bit to both parties."""

    def __init__(self, distinguisher):
        self.inner = distinguisher
        self.name = f"lifted:{distinguisher.name}"
        self.wants_private_key = getattr(distinguisher, "wants_private_key", False)

    def m_star(self, params, rng):
        return self.inner.m_star(params, rng)

    def make_devices(self, params, rng):
        return self.inner.make_devices(params, rng)

    def split_and_bits(self, params, view, c, rng, keys):
        bit = self.inner.distinguish(params, view, c, rng)
        return bit, bit


class ConstantPairCloningDistinguisher:
    name = "constant_pair"
    wants_private_key = False

    def m_star(self, params, rng):
        return ConstantBitDistinguisher().m_star(params, rng)

    def make_devices(self, params, rng):
        return make_honest_devices(params.lam, params.q)

    def split_and_bits(self, params, view, c, rng, keys):
        return 0, 0


class ForwardToBobCloningDistinguisher:
    """Bob decrypts with his key and compares against m*; Charlie outputs a
    uniform bit."""

    name = "forward_to_bob_bits"
    wants_private_key = False

    def m_star(self, params, rng):
        return ConstantBitDistinguisher().m_star(params, rng)

    def make_devices(self, params, rng):
        return make_honest_devices(params.lam, params.q)

    def split_and_bits(self, params, view, c, rng, keys):
        device = view.receiver.snapshot()
        ciphertext = SimpleNamespace(c=c, quantum=device)
        decoded = dec(params, ciphertext, keys[0], device, rng)
        bob = int(_messages_equal(params, decoded, view.m_star))
        charlie = int(rng.integers(2))
        return bob, charlie


def run_cloning_distinguishing_attack(
    params: ProtocolParams, adversary, trials: int, rng
) -> AttackStats:
    """Paired estimate of Pr[F=accept and B = B' = B'']."""
    base = _base_entropy(rng)
    stats = AttackStats()
    for t in range(trials):
        g_enc, g_kb, g_kc, g_adv, _, g_misc = _trial_streams(base, t)
        client, receiver = adversary.make_devices(params, g_enc)
        m_star = adversary.m_star(params, g_misc)
        res = enc(params, m_star, client, receiver, g_enc)
        accept = res.flag == ACCEPT
        if accept:
            c1 = res.ciphertext.c
            c0 = res.private_key.r if params.variant == "string" else int(res.private_key.r)
        else:
            c1 = c0 = res.ciphertext.c
        keys = (key_rel(params, res.private_key, g_kb), key_rel(params, res.private_key, g_kc))
        seed = int(g_adv.integers(2**63))
        pairs = []
        for c_branch in (c0, c1):
            view = SimpleNamespace(
                receiver=_branch_copy(receiver),
                transcript=res.transcript,
                m_star=m_star,
                private_key=res.private_key
                if getattr(adversary, "wants_private_key", False)
                else None,
            )
            pairs.append(
                adversary.split_and_bits(params, view, c_branch, spawn_rngs(seed, 1)[0], keys)
            )
        (b0, c0bit), (b1, c1bit) = pairs
        stats.trials += 1
        stats.accepts += accept
        stats.joint_successes += accept * 0.5 * ((b0 == 0 and c0bit == 0) + (b1 == 1 and c1bit == 1))
    return stats
