"""Exact statevector simulation of the two-party inner-product extraction
circuit (a simultaneous Bernstein-Vazirani run with noisy oracles), plus the
closed-form amplitude identity it realizes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .qcore import DensityOp, DimensionError, ParameterError

MAX_L = {2: 5, 3: 3}


def qudit_fourier(p: int) -> np.ndarray:
    """F_p |j> = p^{-1/2} sum_k w^{jk} |k> with w = exp(2 pi i / p)."""
    if p not in (2, 3):
        raise ParameterError(f"qudit dimension p={p} not supported (need 2 or 3)")
    omega = np.exp(2j * np.pi / p)
    jk = np.outer(np.arange(p), np.arange(p))
    return omega**jk / math.sqrt(p)


def amplitude_identity(a_coeffs, p: int) -> float:
    """|sum_j a_j w^j|^2 for a probability vector (a_0 .. a_{p-1})."""
    a = np.asarray(a_coeffs, dtype=float)
    if a.shape != (p,):
        raise ParameterError(f"need exactly p={p} coefficients")
    if a.min() < -1e-12 or abs(a.sum() - 1.0) > 1e-9:
        raise ParameterError("coefficients must form a probability distribution")
    omega = np.exp(2j * np.pi * np.arange(p) / p)
    return float(abs(np.dot(a, omega)) ** 2)


def _digits(value: int, p: int, l: int) -> tuple[int, ...]:
    out = []
    for _ in range(l):
        out.append(value % p)
        value //= p
    return tuple(reversed(out))


def _index(digits, p: int) -> int:
    out = 0
    for d in digits:
        out = out * p + int(d)
    return out


def _ip(x, r, p: int) -> int:
    return int(sum(int(a) * int(b) for a, b in zip(x, r)) % p)


@dataclass(frozen=True)
class IpOracle:
    """Noisy inner-product oracle pair, parametrized by its answer amplitudes.

    ``table[rb, rc, j, k]`` is the amplitude for the answer registers to land
    on (x_b . rb + j, x_c . rc + k); each (rb, rc) slice has unit square sum.
    ``residuals`` optionally attaches a unit residual state per answer branch
    (shape (p^l, p^l, p, p, d)); by default the residual space is trivial.
    """

    p: int
    l: int
    x_b: tuple[int, ...]
    x_c: tuple[int, ...]
    table: np.ndarray
    residuals: np.ndarray | None = None
    rho: np.ndarray | None = None

    def __post_init__(self):
        if self.p not in (2, 3):
            raise ParameterError("oracle supports p in {2, 3}")
        n = self.p**self.l
        table = np.asarray(self.table, dtype=complex)
        if table.shape != (n, n, self.p, self.p):
            raise DimensionError(f"table shape {table.shape} != {(n, n, self.p, self.p)}")
        norms = np.einsum("abjk,abjk->ab", table, table.conj()).real
        if np.max(np.abs(norms - 1.0)) > 1e-9:
            raise ParameterError("each (rb, rc) amplitude slice must have unit norm")
        if len(self.x_b) != self.l or len(self.x_c) != self.l:
            raise DimensionError("hidden strings must have length l")
        d = self.residual_dim
        rho = np.ones(1, dtype=complex) if self.rho is None else np.asarray(self.rho, dtype=complex)
        if rho.shape != (d,) or abs(np.linalg.norm(rho) - 1.0) > 1e-9:
            raise ParameterError("rho must be a unit vector of the residual dimension")
        if self.residuals is not None:
            res = np.asarray(self.residuals, dtype=complex)
            if res.shape != (n, n, self.p, self.p, d):
                raise DimensionError("residuals shape mismatch")
            lens = np.linalg.norm(res, axis=-1)
            if np.max(np.abs(lens - 1.0)) > 1e-9:
                raise ParameterError("residual states must be unit vectors")
            object.__setattr__(self, "residuals", res)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "rho", rho)

    @property
    def residual_dim(self) -> int:
        if self.residuals is not None:
            return self.residuals.shape[-1]
        return 1 if self.rho is None else len(np.asarray(self.rho))

    def aggregated_classes(self) -> np.ndarray:
        """a_k = avg over (rb, rc) of sum_j |alpha_{j, k-j}|^2."""
        n2 = (self.p**self.l) ** 2
        a = np.zeros(self.p)
        weights = np.einsum("abjk->jk", np.abs(self.table) ** 2) / n2
        for j in range(self.p):
            for k in range(self.p):
                a[(j + k) % self.p] += weights[j, k]
        return a


def perfect_ip_oracle(p: int, l: int, x_b, x_c) -> IpOracle:
    n = p**l
    table = np.zeros((n, n, p, p), dtype=complex)
    table[:, :, 0, 0] = 1.0
    return IpOracle(p=p, l=l, x_b=tuple(x_b), x_c=tuple(x_c), table=table)


def class_weight_oracle(p: int, l: int, x_b, x_c, a_classes) -> IpOracle:
    """Oracle whose aggregated answer classes equal ``a_classes`` exactly,
    independent of the seed registers."""
    a = np.asarray(a_classes, dtype=float)
    if a.shape != (p,) or a.min() < -1e-12 or abs(a.sum() - 1.0) > 1e-9:
        raise ParameterError("class weights must form a probability distribution")
    n = p**l
    table = np.zeros((n, n, p, p), dtype=complex)
    for k in range(p):
        table[:, :, 0, k] = math.sqrt(max(a[k], 0.0))
    return IpOracle(p=p, l=l, x_b=tuple(x_b), x_c=tuple(x_c), table=table)


def random_ip_oracle(
    p: int, l: int, rng: np.random.Generator, residual_dim: int = 1, x_b=None, x_c=None
) -> IpOracle:
    n = p**l
    if x_b is None:
        x_b = tuple(int(v) for v in rng.integers(0, p, size=l))
    if x_c is None:
        x_c = tuple(int(v) for v in rng.integers(0, p, size=l))
    table = rng.normal(size=(n, n, p, p)) + 1j * rng.normal(size=(n, n, p, p))
    table /= np.sqrt(np.einsum("abjk,abjk->ab", table, table.conj()).real)[:, :, None, None]
    residuals = None
    rho = None
    if residual_dim > 1:
        residuals = rng.normal(size=(n, n, p, p, residual_dim)) + 1j * rng.normal(
            size=(n, n, p, p, residual_dim)
        )
        residuals /= np.linalg.norm(residuals, axis=-1, keepdims=True)
        rho = rng.normal(size=residual_dim) + 1j * rng.normal(size=residual_dim)
        rho /= np.linalg.norm(rho)
    return IpOracle(
        p=p, l=l, x_b=tuple(x_b), x_c=tuple(x_c), table=table, residuals=residuals, rho=rho
    )


@dataclass(frozen=True)
class BvResult:
    recovery_prob: float
    outcome_probs: np.ndarray  # (p^l, p^l) marginal over the seed registers

    def __post_init__(self):
        total = float(self.outcome_probs.sum())
        if abs(total - 1.0) > 1e-9:
            raise ParameterError(f"outcome distribution sums to {total}")


def _unitary_with_first_column(v: np.ndarray) -> np.ndarray:
    """Unitary whose image of e_0 is the unit vector v (Householder + phase)."""
    d = len(v)
    v0 = v[0]
    phase = v0 / abs(v0) if abs(v0) > 1e-14 else 1.0
    u = v * np.conj(phase)
    w = np.zeros(d, dtype=complex)
    w[0] = 1.0
    w -= u
    nw = np.linalg.norm(w)
    if nw < 1e-14:
        return np.eye(d, dtype=complex) * phase
    h = np.eye(d, dtype=complex) - 2.0 * np.outer(w, w.conj()) / (nw * nw)
    return phase * h


def _oracle_block(oracle: IpOracle, rb: int, rc: int) -> np.ndarray:
    """Completion of the specified action on |0,0>|rho> to a unitary on the
    (Z^B, Z^C, residual) factor for one pair of seed values."""
    p, d = oracle.p, oracle.residual_dim
    ip_b = _ip(oracle.x_b, _digits(rb, p, oracle.l), p)
    ip_c = _ip(oracle.x_c, _digits(rc, p, oracle.l), p)
    target = np.zeros((p, p, d), dtype=complex)
    for j in range(p):
        for k in range(p):
            sigma = oracle.rho if oracle.residuals is None else oracle.residuals[rb, rc, j, k]
            target[(ip_b + j) % p, (ip_c + k) % p] += oracle.table[rb, rc, j, k] * sigma
    v_in = np.zeros((p, p, d), dtype=complex)
    v_in[0, 0] = oracle.rho
    w_in = _unitary_with_first_column(v_in.reshape(-1))
    w_out = _unitary_with_first_column(target.reshape(-1))
    return w_out @ w_in.conj().T


def _apply_axis(psi: np.ndarray, op: np.ndarray, axis: int) -> np.ndarray:
    moved = np.moveaxis(psi, axis, 0)
    shaped = moved.reshape(op.shape[1], -1)
    out = (op @ shaped).reshape(moved.shape)
    return np.moveaxis(out, 0, axis)


def _apply_circuit(oracle: IpOracle, psi: np.ndarray) -> np.ndarray:
    """Five stages: Fourier prep, oracle, controlled addition into the phase
    ancillas, inverse oracle, inverse Fourier."""
    p, l, d = oracle.p, oracle.l, oracle.residual_dim
    n = p**l
    f = qudit_fourier(p)
    fourier_axes = list(range(2 * l)) + [2 * l + 3, 2 * l + 4]
    blocks = [
        [_oracle_block(oracle, rb, rc) for rc in range(n)] for rb in range(n)
    ]

    def stage_fourier(state, dagger):
        op = f.conj().T if dagger else f
        for axis in fourier_axes:
            state = _apply_axis(state, op, axis)
        return state

    def stage_oracle(state, dagger):
        flat = state.reshape(n * n, p * p * d, p * p)
        out = np.empty_like(flat)
        for rb in range(n):
            for rc in range(n):
                block = blocks[rb][rc]
                if dagger:
                    block = block.conj().T
                out[rb * n + rc] = block @ flat[rb * n + rc]
        return out.reshape(state.shape)

    def stage_add(state):
        out = np.empty_like(state)
        for zb in range(p):
            for zc in range(p):
                piece = state[..., zb, zc, :, :, :]
                piece = np.roll(piece, zb, axis=-2)
                piece = np.roll(piece, zc, axis=-1)
                out[..., zb, zc, :, :, :] = piece
        return out

    psi = stage_fourier(psi, dagger=False)
    psi = stage_oracle(psi, dagger=False)
    psi = stage_add(psi)
    psi = stage_oracle(psi, dagger=True)
    return stage_fourier(psi, dagger=True)


def run_bv_extraction(oracle: IpOracle) -> BvResult:
    """Run the recovery circuit exactly and report the probability of the
    ideal final configuration (seed registers reading the hidden strings with
    all ancillas restored), together with the seed-register marginal."""
    p, l, d = oracle.p, oracle.l, oracle.residual_dim
    if l > MAX_L[p]:
        raise DimensionError(f"l={l} exceeds the statevector cap for p={p}")
    n = p**l
    dims = [p] * (2 * l) + [p, p, d, p, p]
    psi = np.zeros(dims, dtype=complex)
    psi[(0,) * (2 * l) + (0, 0, Ellipsis, p - 1, p - 1)] = oracle.rho
    psi = _apply_circuit(oracle, psi)
    ideal = tuple(oracle.x_b) + tuple(oracle.x_c) + (0, 0, Ellipsis, p - 1, p - 1)
    amp = np.vdot(oracle.rho, psi[ideal])
    flat = psi.reshape(n, n, -1)
    outcome = np.einsum("abk,abk->ab", flat, flat.conj()).real
    return BvResult(recovery_prob=float(abs(amp) ** 2), outcome_probs=outcome)


def bv_circuit_matrix(oracle: IpOracle) -> np.ndarray:
    """Dense matrix of the composed five-stage circuit (small dims only)."""
    p, l, d = oracle.p, oracle.l, oracle.residual_dim
    dim = p ** (2 * l + 4) * d
    if dim > 4096:
        raise DimensionError("dense circuit matrix requested above the small-dim cap")
    dims = [p] * (2 * l) + [p, p, d, p, p]
    eye = np.eye(dim, dtype=complex)
    cols = [
        _apply_circuit(oracle, eye[:, k].reshape(dims)).reshape(-1) for k in range(dim)
    ]
    return np.stack(cols, axis=1)


# ---------------------------------------------------------------------------
# Simultaneous inner-product guessing (exact, CQ ensembles)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CqEnsemble:
    """Classical strings (x_b, x_c) with the conditional bipartite state."""

    p: int
    l: int
    entries: tuple  # of (prob, x_b tuple, x_c tuple, DensityOp with dims (dB, dC))

    def __post_init__(self):
        total = sum(e[0] for e in self.entries)
        if abs(total - 1.0) > 1e-9:
            raise ParameterError(f"ensemble weights sum to {total}")
        for _, x_b, x_c, rho in self.entries:
            if len(x_b) != self.l or len(x_c) != self.l:
                raise DimensionError("ensemble strings must have length l")
            if not isinstance(rho, DensityOp) or len(rho.dims) != 2:
                raise DimensionError("conditional states must be bipartite DensityOps")


def simultaneous_ip_guess_prob(ensemble: CqEnsemble, bob_meas, charlie_meas, p: int) -> float:
    """Exact probability of the correlated-guess event under uniform seeds.

    ``bob_meas(rvec)`` and ``charlie_meas(rvec)`` return p-outcome POVMs; the
    event is that the two outputs land on (x_b . rb + j, x_c . rc + k) with
    j + k = 0 mod p.
    """
    seeds = list(product(range(p), repeat=ensemble.l))
    total = 0.0
    for prob_x, x_b, x_c, rho in ensemble.entries:
        dims = rho.dims
        rho4 = rho.matrix.reshape(dims + dims)
        for rb in seeds:
            mb = bob_meas(rb)
            ip_b = _ip(x_b, rb, p)
            for rc in seeds:
                mc = charlie_meas(rc)
                ip_c = _ip(x_c, rc, p)
                event = 0.0
                for j in range(p):
                    k = (-j) % p
                    g = (ip_b + j) % p
                    h = (ip_c + k) % p
                    event += np.einsum(
                        "ik,jl,klij->",
                        np.asarray(mb.elements[g]),
                        np.asarray(mc.elements[h]),
                        rho4,
                    ).real
                total += prob_x * event / len(seeds) ** 2
    return float(total)


def recovery_lower_bound(p: int, eps: float) -> float:
    """Explicit proof constant: the circuit recovers a good pair with
    probability at least eps^2 (p=2) or 9 eps^2 / 16 (p=3)."""
    if p == 2:
        return eps**2
    if p == 3:
        return 9.0 * eps**2 / 16.0
    raise ParameterError("explicit constants exist only for p in {2, 3}")


def overall_recovery_constant(p: int, eps: float) -> float:
    """Including the good-pair mass: eps^3/2 (p=2) or 9 eps^3/32 (p=3)."""
    if p == 2:
        return eps**3 / 2.0
    if p == 3:
        return 9.0 * eps**3 / 32.0
    raise ParameterError("explicit constants exist only for p in {2, 3}")


def find_zero_sum_counterexample(eps: float = 0.05, tol: float = 1e-12):
    """For p=5, bisect the free parameter of the symmetric class assignment
    (a_0 fixed at 1/5 + eps/2, a_1 = a_4, a_2 = a_3) until the amplitude
    identity vanishes, exhibiting the obstruction to extraction for p > 3."""
    p = 5
    a0 = 1.0 / p + eps / 2.0
    omega = np.exp(2j * np.pi * np.arange(p) / p)

    def coeffs(t: float) -> np.ndarray:
        a14 = (1.0 - a0 - t) / 4.0
        a23 = (1.0 - a0 + t) / 4.0
        return np.array([a0, a14, a23, a23, a14])

    def real_part(t: float) -> float:
        return float(np.dot(coeffs(t), omega).real)

    lo, hi = 0.0, 1.0 - a0
    if not real_part(lo) > 0.0 > real_part(hi):
        raise ParameterError("bisection bracket failed; eps too large")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if real_part(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    a = coeffs(t)
    value = float(abs(np.dot(a, omega)) ** 2)
    if value >= tol:
        raise ParameterError(f"bisection did not reach tolerance: {value}")
    return t, a, value
