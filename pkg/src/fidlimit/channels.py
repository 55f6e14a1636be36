"""Decoders as completely positive trace-preserving maps.

A channel is stored by its Kraus operators ``K_k`` (``d_out x d_in``) and
acts as ``rho -> sum_k K_k rho K_k^H``.  Every such map can be run instead as
a unitary interaction with an ancilla prepared in its first basis state,
followed by discarding the ancilla; ``dilate`` builds that unitary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import null_space

from .linalg import (
    ContractError,
    as_density,
    as_matrix,
    as_projector,
    dagger,
    eigh,
    haar_isometry,
    is_unitary,
    partial_trace,
    projector_rank,
)

TP_TOL = 1e-8
CP_TOL = 1e-8


@dataclass(frozen=True)
class KrausChannel:
    """CPTP map ``C^d_in -> C^d_out`` given by Kraus operators."""

    kraus_ops: tuple[np.ndarray, ...]
    d_in: int
    d_out: int

    def __post_init__(self):
        ops = tuple(as_matrix(k) for k in self.kraus_ops)
        if not ops:
            raise ContractError("a channel needs at least one Kraus operator")
        for k in ops:
            if k.shape != (self.d_out, self.d_in):
                raise ContractError(
                    f"Kraus operator of shape {k.shape}, expected {(self.d_out, self.d_in)}")
            k.flags.writeable = False
        object.__setattr__(self, "kraus_ops", ops)
        err = np.max(np.abs(self.completeness() - np.eye(self.d_in)))
        if err > TP_TOL:
            raise ContractError(f"channel is not trace preserving (max |sum K^H K - I| = {err:.3g})")

    @classmethod
    def from_ops(cls, ops: Sequence) -> "KrausChannel":
        ops = [as_matrix(k) for k in ops]
        d_out, d_in = ops[0].shape
        return cls(tuple(ops), d_in, d_out)

    def completeness(self) -> np.ndarray:
        return sum(dagger(k) @ k for k in self.kraus_ops)

    def choi(self) -> np.ndarray:
        """Choi matrix ``sum_ij |i><j| (x) C(|i><j|)`` on ``d_in * d_out``."""
        vecs = [k.T.reshape(-1) for k in self.kraus_ops]  # sum_i |i> (x) K|i>
        return sum(np.outer(v, np.conj(v)) for v in vecs)

    def is_completely_positive(self, tol: float = CP_TOL) -> bool:
        c = self.choi()
        return bool(np.linalg.eigvalsh(0.5 * (c + dagger(c)))[0] >= -tol)

    def __call__(self, rho) -> np.ndarray:
        return apply(self, rho)


def apply(channel: KrausChannel, rho) -> np.ndarray:
    """``sum_k K rho K^H``. Subnormalized inputs keep their trace."""
    r = as_matrix(rho)
    if r.shape != (channel.d_in, channel.d_in):
        raise ContractError(f"input of shape {r.shape} for channel with d_in={channel.d_in}")
    k = np.stack(channel.kraus_ops)
    out = np.einsum("kij,jl,kml->im", k, r, np.conj(k))
    return 0.5 * (out + dagger(out))


def identity_channel(dim: int) -> KrausChannel:
    return KrausChannel((np.eye(dim, dtype=complex),), dim, dim)


def unitary_channel(u) -> KrausChannel:
    u = as_matrix(u)
    if not is_unitary(u, 1e-9):
        raise ContractError("matrix is not unitary")
    return KrausChannel((u,), u.shape[1], u.shape[0])


def isometry_channel(v) -> KrausChannel:
    v = as_matrix(v)
    return KrausChannel((v,), v.shape[1], v.shape[0])


def depolarizing_channel(dim: int, p: float = 1.0) -> KrausChannel:
    """``rho -> (1-p) rho + p Tr(rho) I/dim`` via the generalized Pauli basis."""
    if not 0.0 <= p <= 1.0:
        raise ContractError("depolarizing probability must lie in [0, 1]")
    omega = np.exp(2j * np.pi / dim)
    shift = np.roll(np.eye(dim), 1, axis=0)
    clock = np.diag(omega ** np.arange(dim))
    ops = []
    for a in range(dim):
        for b in range(dim):
            w = np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
            weight = 1.0 - p + p / dim**2 if a == b == 0 else p / dim**2
            if weight > 0:
                ops.append(np.sqrt(weight) * w)
    return KrausChannel(tuple(ops), dim, dim)


# -- Stinespring form --------------------------------------------------------


@dataclass(frozen=True)
class StinespringDilation:
    """``rho -> Tr_env U (rho (x) |phi0><phi0|) U^H``.

    ``U`` acts on ``d_in * d_anc``; its output is read as
    ``d_out (x) d_env`` and the environment factor (the right one) is
    discarded.  ``output_subsystem`` names the kept factor.
    """

    U: np.ndarray
    ancilla_state: np.ndarray
    d_in: int
    d_anc: int
    d_out: int
    output_subsystem: str = "Q"

    def __post_init__(self):
        if not is_unitary(self.U):
            raise ContractError("dilation matrix is not unitary")
        if abs(np.linalg.norm(self.ancilla_state) - 1.0) > 1e-12:
            raise ContractError("ancilla state is not normalized")
        if (self.d_in * self.d_anc) % self.d_out:
            raise ContractError("output dimension does not divide the dilation space")

    @property
    def d_env(self) -> int:
        return self.d_in * self.d_anc // self.d_out

    def apply(self, rho) -> np.ndarray:
        r = as_matrix(rho)
        anc = np.outer(self.ancilla_state, np.conj(self.ancilla_state))
        big = self.U @ np.kron(r, anc) @ dagger(self.U)
        out = partial_trace(big, (self.d_out, self.d_env), traced="A")
        return 0.5 * (out + dagger(out))

    __call__ = apply


def _stack_isometry(channel: KrausChannel, n_env: int) -> np.ndarray:
    # V|psi> = sum_k K_k|psi> (x) |k>, output factor slow, environment fast
    v = np.zeros((channel.d_out, n_env, channel.d_in), dtype=complex)
    for k, op in enumerate(channel.kraus_ops):
        v[:, k, :] = op
    return v.reshape(channel.d_out * n_env, channel.d_in)


def dilate(channel: KrausChannel) -> StinespringDilation:
    """Unitary dilation with the ancilla fixed to its first basis vector.

    For square channels the ancilla dimension equals the number of Kraus
    operators.  Otherwise it is the smallest ``d_anc`` for which
    ``d_in * d_anc`` is a multiple of ``d_out`` large enough to hold the
    Kraus environment.
    """
    r = len(channel.kraus_ops)
    d_in, d_out = channel.d_in, channel.d_out
    d_anc = max(1, -(-d_out * r // d_in))
    while (d_in * d_anc) % d_out:
        d_anc += 1
    total = d_in * d_anc
    v = _stack_isometry(channel, total // d_out)

    u = np.zeros((total, total), dtype=complex)
    fixed = np.arange(d_in) * d_anc  # columns |i> (x) |0>
    u[:, fixed] = v
    free = np.setdiff1d(np.arange(total), fixed)
    if free.size:
        comp = null_space(dagger(v))
        u[:, free] = comp[:, : free.size]
    phi0 = np.zeros(d_anc, dtype=complex)
    phi0[0] = 1.0
    return StinespringDilation(u, phi0, d_in, d_anc, d_out)


def kraus_from_dilation(dil: StinespringDilation) -> KrausChannel:
    """Read Kraus operators ``K_e = (I (x) <e|) U (I (x) |phi0>)`` back out."""
    v = dil.U @ np.kron(np.eye(dil.d_in), dil.ancilla_state.reshape(-1, 1))
    v = v.reshape(dil.d_out, dil.d_env, dil.d_in)
    ops = tuple(v[:, e, :] for e in range(dil.d_env))
    return KrausChannel(ops, dil.d_in, dil.d_out)


# -- measure and prepare -----------------------------------------------------


@dataclass(frozen=True)
class MeasurePrepareChannel:
    """Projective measurement followed by an outcome-dependent preparation."""

    outcome_projectors: tuple[np.ndarray, ...]
    prepared_outputs: tuple[np.ndarray, ...]

    def __post_init__(self):
        ps = tuple(as_projector(p) for p in self.outcome_projectors)
        outs = tuple(as_density(o) for o in self.prepared_outputs)
        if len(ps) != len(outs) or not ps:
            raise ContractError("need one prepared output per outcome")
        dim = ps[0].shape[0]
        if np.max(np.abs(sum(ps) - np.eye(dim))) > 1e-9:
            raise ContractError("outcome projectors do not sum to the identity")
        for o in outs:
            if abs(np.trace(o).real - 1.0) > 1e-9:
                raise ContractError("prepared outputs must be normalized")
        object.__setattr__(self, "outcome_projectors", ps)
        object.__setattr__(self, "prepared_outputs", outs)

    @property
    def d_in(self) -> int:
        return self.outcome_projectors[0].shape[0]

    @property
    def d_out(self) -> int:
        return self.prepared_outputs[0].shape[0]

    def outcome_probabilities(self, rho) -> np.ndarray:
        r = as_matrix(rho)
        return np.array([np.trace(p @ r).real for p in self.outcome_projectors])

    def apply(self, rho) -> np.ndarray:
        probs = self.outcome_probabilities(rho)
        return sum(q * o for q, o in zip(probs, self.prepared_outputs))


def _range_basis(p: np.ndarray) -> np.ndarray:
    w, v = eigh(p)
    return v[:, : projector_rank(p)]


def measure_prepare_as_kraus(mp: MeasurePrepareChannel) -> KrausChannel:
    """Kraus form ``sqrt(s_j) |f_j><e_k|`` for every outcome.

    ``e_k`` runs over an orthonormal basis of the outcome projector's range,
    ``(s_j, f_j)`` over the eigenpairs of the prepared state.
    """
    ops = []
    for p, sigma in zip(mp.outcome_projectors, mp.prepared_outputs):
        es = _range_basis(p)
        s, f = eigh(sigma)
        for j in range(len(s)):
            if s[j] <= 1e-15:
                continue
            for k in range(es.shape[1]):
                ops.append(np.sqrt(s[j]) * np.outer(f[:, j], np.conj(es[:, k])))
    return KrausChannel(tuple(ops), mp.d_in, mp.d_out)


# -- sampling and embedding ----------------------------------------------------


def random_channel(d_in: int, d_out: int, d_anc: int | None = None,
                   rng: np.random.Generator | None = None) -> KrausChannel:
    """Channel induced by a Haar-random dilation unitary.

    The dilation unitary acts on ``d_in * d_anc`` (default
    ``d_anc = d_in * d_out``) with the ancilla in its first basis state, and
    ``d_out`` must divide that total.  Only the columns touched by the fixed
    ancilla state matter, and those columns of a Haar unitary form a Haar
    isometry, which is what is sampled.
    """
    if rng is None:
        raise ContractError("random_channel needs an explicit rng")
    if min(d_in, d_out) < 1:
        raise ContractError("channel dimensions must be positive")
    d_anc = d_in * d_out if d_anc is None else d_anc
    if d_anc < 1:
        raise ContractError("ancilla dimension must be positive")
    total = d_in * d_anc
    if total % d_out:
        raise ContractError(f"d_out={d_out} does not divide d_in*d_anc={total}")
    v = haar_isometry(total, d_in, rng).reshape(d_out, total // d_out, d_in)
    return KrausChannel(tuple(v[:, e, :] for e in range(total // d_out)), d_in, d_out)


def embed_channel_states(w, target_dim: int) -> np.ndarray:
    """Pad a ``d x d`` state into the leading block of ``target_dim``."""
    w = as_matrix(w)
    d = w.shape[0]
    if d > target_dim:
        raise ContractError(f"cannot embed dimension {d} into {target_dim}")
    out = np.zeros((target_dim, target_dim), dtype=complex)
    out[:d, :d] = w
    return out
