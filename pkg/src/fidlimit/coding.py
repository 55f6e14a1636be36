"""Source ensembles, encodings and the fidelity limit.

Pipeline: signal ``|a_i>`` (probability ``p_i``) is mapped by an arbitrary
lookup table to a channel state ``W_i`` supported on a ``d``-dimensional
subspace, and a fixed decoder channel turns ``W_i`` into ``w_i``.  The
figure of merit is the average fidelity ``sum_i p_i <a_i|w_i|a_i>``.

For every encoding and CPTP decoder,

    F_bar <= X + Y + Z <= (3 + 2 sqrt 2) eta < 6 eta,

where ``eta`` is the sum of the ``d`` largest eigenvalues of the source
density operator.  ``xyz_decomposition`` evaluates each term of that chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channels import KrausChannel, apply, isometry_channel
from .linalg import (
    ContractError,
    as_density,
    as_pure_state,
    dagger,
    eigh,
    ket_to_projector,
)

BOUND_CONSTANT = 3.0 + 2.0 * math.sqrt(2.0)


@dataclass(frozen=True)
class SourceEnsemble:
    """Pure signal states ``states[i]`` emitted with probability ``probs[i]``."""

    probs: np.ndarray
    states: np.ndarray  # shape (m, n)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        s = np.atleast_2d(np.asarray(self.states, dtype=complex))
        if s.shape[0] != p.size:
            raise ContractError(f"{p.size} probabilities for {s.shape[0]} signals")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ContractError("signal probabilities must be nonnegative and sum to 1")
        for v in s:
            as_pure_state(v)
        p.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "states", s)

    @property
    def n(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return self.probs.size

    def projectors(self) -> list[np.ndarray]:
        return [ket_to_projector(v) for v in self.states]

    def is_real(self) -> bool:
        return bool(np.all(np.abs(self.states.imag) < 1e-14))


@dataclass(frozen=True)
class Encoding:
    """Channel states embedded in the source space, plus their support.

    ``basis`` is an ``n x d`` isometry whose columns span the channel
    subspace; the support projector is ``basis @ basis^H``.  The assignment
    ``i -> W_i`` is an arbitrary table, not a channel.
    """

    channel_states: tuple[np.ndarray, ...]
    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex)
        if b.ndim != 2 or np.max(np.abs(dagger(b) @ b - np.eye(b.shape[1]))) > 1e-9:
            raise ContractError("encoding basis must have orthonormal columns")
        states = tuple(as_density(w) for w in self.channel_states)
        gamma = b @ dagger(b)
        for w in states:
            if w.shape != (b.shape[0], b.shape[0]):
                raise ContractError("channel state dimension does not match the basis")
            if abs(np.trace(gamma @ w @ gamma).real - np.trace(w).real) > 1e-9:
                raise ContractError("channel state leaks outside the support")
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "channel_states", states)

    @property
    def d(self) -> int:
        return self.basis.shape[1]

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def support(self) -> np.ndarray:
        return self.basis @ dagger(self.basis)

    def compressed_states(self) -> list[np.ndarray]:
        """The channel states as ``d x d`` operators in ``basis`` coordinates."""
        return [dagger(self.basis) @ w @ self.basis for w in self.channel_states]

    @classmethod
    def from_compressed(cls, states: Sequence, basis) -> "Encoding":
        b = np.asarray(basis, dtype=complex)
        return cls(tuple(b @ np.asarray(w) @ dagger(b) for w in states), b)


@dataclass(frozen=True)
class CodingScheme:
    """Encoding plus decoder.

    The decoder either acts on the channel subspace (``input_space="channel"``,
    fed ``d x d`` states in ``basis`` coordinates) or on the whole source space
    (``"source"``, fed the embedded states).  Its output lives on the source
    space.  ``"auto"`` picks the channel space whenever ``d_in == d``.
    """

    encoding: Encoding
    decoder: KrausChannel
    input_space: str = "auto"  # "channel", "source", or inferred from decoder.d_in

    def __post_init__(self):
        enc, dec = self.encoding, self.decoder
        space = self.input_space
        if space == "auto":
            space = "channel" if dec.d_in == enc.d else "source"
        expected = {"channel": enc.d, "source": enc.n}.get(space)
        if expected is None:
            raise ContractError(f"unknown decoder input space {self.input_space!r}")
        if dec.d_out != enc.n or dec.d_in != expected:
            raise ContractError(
                f"decoder {dec.d_in}->{dec.d_out} incompatible with d={enc.d}, n={enc.n}")
        object.__setattr__(self, "input_space", space)

    def decoded_states(self) -> list[np.ndarray]:
        enc = self.encoding
        inputs = enc.compressed_states() if self.input_space == "channel" else enc.channel_states
        return [apply(self.decoder, w) for w in inputs]


@dataclass(frozen=True)
class ProjectedEnsemble:
    """Signals pushed through the projector onto the ``n - d`` smallest eigenvectors."""

    lambda_projector: np.ndarray
    projected_signals: tuple[np.ndarray, ...]
    rho_tilde: np.ndarray
    eta: float
    d: int


def ensemble_density(e: SourceEnsemble) -> np.ndarray:
    rho = np.einsum("i,ij,ik->jk", e.probs, e.states, np.conj(e.states))
    return 0.5 * (rho + dagger(rho))


def eta(rho, d: int) -> float:
    """Sum of the ``d`` largest eigenvalues of ``rho`` (1 once ``d >= n``)."""
    if d < 1:
        raise ContractError("channel dimension d must be >= 1")
    w, _ = eigh(rho)
    if d >= len(w):
        return 1.0
    return float(np.sum(w[:d]))


def project_ensemble(e: SourceEnsemble, d: int) -> ProjectedEnsemble:
    rho = ensemble_density(e)
    w, v = eigh(rho)
    n = e.n
    tail = v[:, d:] if d < n else np.zeros((n, 0), dtype=complex)
    lam = tail @ dagger(tail)
    projected = tuple(lam @ pi @ lam for pi in e.projectors())
    rho_t = lam @ rho @ lam
    return ProjectedEnsemble(lam, projected, 0.5 * (rho_t + dagger(rho_t)), eta(rho, d), d)


def sqrt_fid_projected_average(pe: ProjectedEnsemble, e: SourceEnsemble,
                               tol: float = 1e-10) -> float:
    """Average of ``sqrt F(pi_i, Lambda pi_i Lambda)``; equals ``1 - eta``.

    Computed signal by signal and as ``Tr(rho Lambda)``; the two routes are
    required to agree within ``tol``.
    """
    lam = pe.lambda_projector
    per_signal = 0.0
    for p, a, pt in zip(e.probs, e.states, pe.projected_signals):
        f = max(0.0, float(np.real(np.vdot(a, pt @ a))))  # Tr(pi pi~) = <a|L|a>^2
        per_signal += p * math.sqrt(f)
    via_trace = float(np.real(np.trace(ensemble_density(e) @ lam)))
    if abs(per_signal - via_trace) > tol:
        raise ContractError(f"projected-fidelity routes disagree: {per_signal} vs {via_trace}")
    return per_signal


def average_fidelity(e: SourceEnsemble, scheme: CodingScheme) -> float:
    if scheme.encoding.n != e.n or len(scheme.encoding.channel_states) != len(e):
        raise ContractError("scheme does not match the ensemble")
    outs = scheme.decoded_states()
    total = sum(p * np.real(np.vdot(a, w @ a)) for p, a, w in zip(e.probs, e.states, outs))
    return float(total)


@dataclass(frozen=True)
class BoundChain:
    F_bar: float
    X: float
    Y: float
    Z: float
    eta: float
    lambda_next: float  # lambda_{d+1}
    d: int
    per_signal_ok: bool  # F(pi_i, w_i) <= X_i + Y_i + Z_i for every i

    @property
    def ratio(self) -> float:
        return self.F_bar / self.eta


def xyz_decomposition(e: SourceEnsemble, scheme: CodingScheme, d: int | None = None,
                      slack: float = 1e-9) -> BoundChain:
    """Evaluate every term of the bound chain for one scheme.

    ``X_i = Tr(pi~_i w_i)``, ``Y_i = 2 (1 - sqrt F(pi_i, pi~_i))`` and
    ``Z_i = 2 sqrt(X_i Y_i)``; the returned averages satisfy
    ``Y = 2 eta``, ``X <= d lambda_{d+1} <= eta`` and
    ``Z <= 2 sqrt(X Y)`` for any CPTP decoder.
    """
    d = scheme.encoding.d if d is None else d
    pe = project_ensemble(e, d)
    outs = scheme.decoded_states()
    w, _ = eigh(ensemble_density(e))
    lam_next = float(w[d]) if d < len(w) else 0.0

    xs, ys, fs = [], [], []
    ok = True
    for a, pt, out in zip(e.states, pe.projected_signals, outs):
        x = max(0.0, float(np.real(np.trace(pt @ out))))
        f_proj = max(0.0, float(np.real(np.vdot(a, pt @ a))))  # Tr(pi pi~) = <a|L|a>^2
        y = 2.0 * (1.0 - min(1.0, math.sqrt(f_proj)))
        f = float(np.real(np.vdot(a, out @ a)))
        ok &= f <= x + y + 2.0 * math.sqrt(x * y) + slack
        xs.append(x)
        ys.append(y)
        fs.append(f)
    p = e.probs
    xs, ys, fs = np.array(xs), np.array(ys), np.array(fs)
    return BoundChain(
        F_bar=float(p @ fs),
        X=float(p @ xs),
        Y=float(p @ ys),
        Z=float(p @ (2.0 * np.sqrt(xs * ys))),
        eta=pe.eta,
        lambda_next=lam_next,
        d=d,
        per_signal_ok=bool(ok),
    )


def topd_encoder(e: SourceEnsemble, d: int) -> Encoding:
    """Renormalized projection of each signal onto the top-``d`` eigenspace of rho.

    A signal with no weight in that subspace is sent as the top eigenvector;
    it contributes nothing to the average fidelity either way.
    """
    if not 1 <= d <= e.n:
        raise ContractError(f"need 1 <= d <= n, got d={d}, n={e.n}")
    w, v = eigh(ensemble_density(e))
    basis = v[:, :d]
    gamma = basis @ dagger(basis)
    fallback = ket_to_projector(v[:, 0])
    states = []
    for pi in e.projectors():
        t = float(np.real(np.trace(pi @ gamma)))
        if t < 1e-12:
            states.append(fallback)
        else:
            s = gamma @ pi @ gamma / t
            states.append(0.5 * (s + dagger(s)))
    return Encoding(tuple(states), basis)


def identity_decoder(enc: Encoding) -> KrausChannel:
    """Channel-subspace decoder that just re-embeds the state (``d -> n``)."""
    return isometry_channel(enc.basis)
