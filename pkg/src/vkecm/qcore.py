"""Dense small-dimension quantum state primitives: states, POVMs, measurement,
distances, partial trace, and the seeded counter-based RNG used everywhere."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ATOL = 1e-9
RENORM_DRIFT = 1e-6


class DimensionError(ValueError):
    """Operands disagree on subsystem structure or total dimension."""


class ParameterError(ValueError):
    """A numeric argument is outside its allowed range."""


def make_rng(seed) -> np.random.Generator:
    """Counter-based (Philox) generator; equal seeds give bit-identical runs."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def spawn_rngs(seed, n: int) -> list[np.random.Generator]:
    """n independent child streams derived deterministically from one seed."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.Philox(child)) for child in root.spawn(n)]


def _as_dims(dims) -> tuple[int, ...]:
    out = tuple(int(d) for d in dims)
    if not out or any(d < 2 for d in out):
        raise DimensionError(f"subsystem dims must all be >= 2, got {out}")
    return out


@dataclass(frozen=True)
class StateVec:
    """Pure state as a complex amplitude vector over listed subsystem dims."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        dims = _as_dims(self.dims)
        if amps.ndim != 1 or amps.size != math.prod(dims):
            raise DimensionError(f"amplitude length {amps.size} != prod(dims) {math.prod(dims)}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > ATOL:
            raise ParameterError(f"state not normalized: |norm-1| = {abs(norm - 1.0):.3g}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def to_density(self) -> "DensityOp":
        return DensityOp(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims)


@dataclass(frozen=True)
class DensityOp:
    """Mixed state as a Hermitian, unit-trace, PSD matrix over listed dims."""

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        dims = _as_dims(self.dims)
        d = math.prod(dims)
        if mat.shape != (d, d):
            raise DimensionError(f"matrix shape {mat.shape} != ({d}, {d})")
        if np.max(np.abs(mat - mat.conj().T)) > ATOL:
            raise ParameterError("density operator is not Hermitian")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > ATOL:
            raise ParameterError(f"trace {tr} != 1")
        if np.linalg.eigvalsh(mat).min() < -ATOL:
            raise ParameterError("density operator has a negative eigenvalue")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Povm:
    """POVM on one subsystem: PSD elements summing to the identity."""

    elements: tuple[np.ndarray, ...]
    dim: int = field(default=0)

    def __post_init__(self):
        elems = tuple(np.asarray(e, dtype=complex) for e in self.elements)
        if not elems:
            raise ParameterError("POVM needs at least one element")
        d = self.dim or elems[0].shape[0]
        total = np.zeros((d, d), dtype=complex)
        for e in elems:
            if e.shape != (d, d):
                raise DimensionError(f"POVM element shape {e.shape} != ({d}, {d})")
            if np.max(np.abs(e - e.conj().T)) > ATOL or np.linalg.eigvalsh(e).min() < -ATOL:
                raise ParameterError("POVM element is not PSD Hermitian")
            total += e
        if np.max(np.abs(total - np.eye(d))) > ATOL:
            raise ParameterError("POVM elements do not sum to identity")
        for e in elems:
            e.setflags(write=False)
        object.__setattr__(self, "elements", elems)
        object.__setattr__(self, "dim", d)

    def __len__(self) -> int:
        return len(self.elements)


def angle_ket(theta: float) -> StateVec:
    """cos(theta)|0> + sin(theta)|1>."""
    return StateVec(np.array([math.cos(theta), math.sin(theta)], dtype=complex), (2,))


def wiesner_state(a: int, x: int) -> StateVec:
    """Conjugate-coding qubit H^x|a>."""
    if a not in (0, 1) or x not in (0, 1):
        raise ParameterError("wiesner state needs a, x in {0, 1}")
    if x == 0:
        amps = np.zeros(2, dtype=complex)
        amps[a] = 1.0
        return StateVec(amps, (2,))
    return angle_ket(math.pi / 4 if a == 0 else -math.pi / 4)


def bell_phi_plus() -> StateVec:
    return StateVec(np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2), (2, 2))


def werner_state(q: float) -> DensityOp:
    """(1-2q) |Phi+><Phi+| + 2q I/4, the depolarized Bell pair."""
    if not 0.0 <= q <= 0.5:
        raise ParameterError(f"werner parameter q={q} outside [0, 1/2]")
    phi = bell_phi_plus().to_density().matrix
    return DensityOp((1 - 2 * q) * phi + 2 * q * np.eye(4) / 4, (2, 2))


def make_state(kind: str, **kwargs):
    """Dispatch constructor: wiesner(a,x) | bell_phi_plus | werner(q) | angle_ket(theta)."""
    table = {
        "wiesner": wiesner_state,
        "bell_phi_plus": bell_phi_plus,
        "werner": werner_state,
        "angle_ket": angle_ket,
    }
    if kind not in table:
        raise ParameterError(f"unknown state kind {kind!r}")
    return table[kind](**kwargs)


def basis_povm(theta: float) -> Povm:
    """Orthonormal qubit measurement {|theta>, |theta + pi/2>}."""
    k0 = angle_ket(theta).amplitudes
    k1 = angle_ket(theta + math.pi / 2).amplitudes
    return Povm((np.outer(k0, k0.conj()), np.outer(k1, k1.conj())))


def computational_povm(d: int = 2) -> Povm:
    eye = np.eye(d)
    return Povm(tuple(np.outer(eye[k], eye[k]) for k in range(d)))


def tensor(*operands):
    """Kronecker product of StateVecs, DensityOps, or raw arrays; dims concatenate."""
    if not operands:
        raise ParameterError("tensor of nothing")
    if all(isinstance(s, StateVec) for s in operands):
        amps = operands[0].amplitudes
        dims = operands[0].dims
        for s in operands[1:]:
            amps = np.kron(amps, s.amplitudes)
            dims = dims + s.dims
        return StateVec(amps, dims)
    mats = [s.to_density() if isinstance(s, StateVec) else s for s in operands]
    if all(isinstance(m, DensityOp) for m in mats):
        out = mats[0].matrix
        dims = mats[0].dims
        for m in mats[1:]:
            out = np.kron(out, m.matrix)
            dims = dims + m.dims
        return DensityOp(out, dims)
    arrs = [m.matrix if isinstance(m, DensityOp) else np.asarray(m, dtype=complex) for m in mats]
    out = arrs[0]
    for a in arrs[1:]:
        out = np.kron(out, a)
    return out


def partial_trace(rho: DensityOp, keep) -> DensityOp:
    """Trace out all subsystems not in ``keep`` (indices into rho.dims)."""
    keep = sorted(set(int(k) for k in keep))
    n = len(rho.dims)
    if not keep:
        raise DimensionError("keep set is empty; the result would be a scalar trace")
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {n} subsystems")
    if len(keep) == n:
        return rho
    dims = rho.dims
    tensor_form = rho.matrix.reshape(dims + dims)
    traced = tensor_form
    removed = 0
    for sub in range(n):
        if sub in keep:
            continue
        axis = sub - removed
        ndim_half = traced.ndim // 2
        traced = np.trace(traced, axis1=axis, axis2=axis + ndim_half)
        removed += 1
    kept_dims = tuple(dims[k] for k in keep)
    d = math.prod(kept_dims)
    return DensityOp(traced.reshape(d, d), kept_dims)


def embed_on_subsystem(op: np.ndarray, dims: tuple[int, ...], subsystem: int) -> np.ndarray:
    """Pad a single-subsystem operator with identities on every other factor."""
    pieces = [np.eye(d, dtype=complex) for d in dims]
    if op.shape != (dims[subsystem], dims[subsystem]):
        raise DimensionError(
            f"operator dim {op.shape[0]} != subsystem dim {dims[subsystem]}"
        )
    pieces[subsystem] = np.asarray(op, dtype=complex)
    out = pieces[0]
    for p in pieces[1:]:
        out = np.kron(out, p)
    return out


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def measure(state: DensityOp, povm: Povm, subsystem: int, rng: np.random.Generator):
    """Born-rule sample of a POVM on one subsystem.

    Returns (outcome index, renormalized post-measurement state); the post state
    uses the canonical Kraus choice K = sqrt(E).
    """
    if subsystem < 0 or subsystem >= len(state.dims):
        raise DimensionError(f"subsystem {subsystem} out of range")
    if povm.dim != state.dims[subsystem]:
        raise DimensionError(
            f"POVM dim {povm.dim} != subsystem dim {state.dims[subsystem]}"
        )
    embedded = [embed_on_subsystem(e, state.dims, subsystem) for e in povm.elements]
    probs = np.array([np.trace(e @ state.matrix).real for e in embedded])
    if abs(probs.sum() - 1.0) > ATOL:
        raise ParameterError(f"measurement probabilities sum to {probs.sum()}")
    probs = np.clip(probs, 0.0, None)
    outcome = int(rng.choice(len(probs), p=probs / probs.sum()))
    kraus = _psd_sqrt(embedded[outcome])
    post = kraus @ state.matrix @ kraus.conj().T
    tr = np.trace(post).real
    if abs(tr - probs[outcome]) > RENORM_DRIFT:
        raise ParameterError(f"post-measurement trace drifted by {abs(tr - probs[outcome]):.3g}")
    return outcome, DensityOp(post / tr, state.dims)


def measurement_probabilities(state: DensityOp, povm: Povm, subsystem: int) -> np.ndarray:
    """Exact Born probabilities tr(E_k rho) without sampling."""
    embedded = [embed_on_subsystem(e, state.dims, subsystem) for e in povm.elements]
    return np.array([np.trace(e @ state.matrix).real for e in embedded])


def trace_distance(rho: DensityOp, sigma: DensityOp) -> float:
    """Half the trace norm of rho - sigma (the distinguishing advantage)."""
    if rho.dim != sigma.dim:
        raise DimensionError(f"dims {rho.dim} != {sigma.dim}")
    eigs = np.linalg.eigvalsh(rho.matrix - sigma.matrix)
    return 0.5 * float(np.abs(eigs).sum())


def fidelity(rho: DensityOp, sigma: DensityOp) -> float:
    """F(rho, sigma) = ||sqrt(rho) sqrt(sigma)||_1."""
    if rho.dim != sigma.dim:
        raise DimensionError(f"dims {rho.dim} != {sigma.dim}")
    a = _psd_sqrt(rho.matrix)
    sing = np.linalg.svd(a @ _psd_sqrt(sigma.matrix), compute_uv=False)
    return float(sing.sum())
