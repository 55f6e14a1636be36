"""Block coding arithmetic on the spectrum of rho^N.

The eigenvalues of ``rho (x) ... (x) rho`` depend only on how many times each
base eigenvalue is used, so they are handled as type classes: a count vector
``(n_1, ..., n_k)`` summing to ``N``, the value ``prod lambda_j ** n_j`` and
the multinomial multiplicity.  Nothing of dimension ``k**N`` is ever built.

Multiplicities are exact Python integers; values and masses are handled as
base-2 logarithms so that nothing underflows at large ``N``.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .coding import SourceEnsemble
from .linalg import ContractError

CLASS_CAP = 10**6
BLOCK_DIM_CAP = 4096
CSV_COLUMNS = ("N", "d", "entropy", "epsilon_N", "two_pow_neg_Ndelta",
               "sigma_d", "bound", "six_sigma_d")


def as_spectrum(values: Sequence[float], tol: float = 1e-12) -> np.ndarray:
    """Validate a probability spectrum and return it sorted descending."""
    s = np.asarray(values, dtype=float).reshape(-1)
    if s.size == 0 or np.any(s < 0) or not np.all(np.isfinite(s)):
        raise ContractError("spectrum entries must be finite and nonnegative")
    if abs(s.sum() - 1.0) > tol:
        raise ContractError(f"spectrum sums to {float(s.sum())!r}, not 1")
    return np.sort(s)[::-1]


def von_neumann_entropy(spectrum: Sequence[float]) -> float:
    """Entropy in bits, with ``0 log 0 = 0``."""
    s = as_spectrum(spectrum)
    nz = s[s > 0]
    return float(-np.sum(nz * np.log2(nz)))


@dataclass(frozen=True)
class ProductSpectrum:
    base: np.ndarray
    N: int
    counts: np.ndarray  # (C, k) count vectors
    log2_values: np.ndarray  # -inf where a zero base eigenvalue is used
    multiplicities: tuple[int, ...]

    @property
    def dimension(self) -> int:
        return len(self.base) ** self.N

    @property
    def values(self) -> np.ndarray:
        return np.exp2(self.log2_values)

    def masses(self) -> np.ndarray:
        """``value * multiplicity`` for each class."""
        log_mult = np.array([math.log2(m) for m in self.multiplicities])
        return np.exp2(self.log2_values + log_mult)

    def total_mass(self) -> float:
        return float(math.fsum(self.masses()))


def _multinomial(counts: Sequence[int]) -> int:
    out, left = 1, sum(counts)
    for c in counts:
        out *= math.comb(left, c)
        left -= c
    return out


def product_spectrum(spectrum: Sequence[float], N: int, cap: int = CLASS_CAP) -> ProductSpectrum:
    s = as_spectrum(spectrum)
    if N < 1:
        raise ContractError("block length N must be >= 1")
    k = len(s)
    n_classes = math.comb(N + k - 1, k - 1)
    if n_classes > cap:
        raise ContractError(f"{n_classes} type classes exceed the cap of {cap}")
    with np.errstate(divide="ignore"):
        log_base = np.log2(s)
    counts = np.zeros((n_classes, k), dtype=np.int64)
    for row, combo in enumerate(itertools.combinations_with_replacement(range(k), N)):
        counts[row] = np.bincount(combo, minlength=k)
    with np.errstate(invalid="ignore"):
        terms = np.where(counts > 0, counts * log_base[None, :], 0.0)
    log2_values = terms.sum(axis=1)
    mults = tuple(_multinomial(c) for c in counts.tolist())
    return ProductSpectrum(s, N, counts, log2_values, mults)


def typical_stats(ps: ProductSpectrum, delta: float) -> tuple[float, int]:
    """Mass and dimension of the classes strictly inside the typical window.

    The window is ``2**(-N(S + delta)) < lambda < 2**(-N(S - delta))`` with
    ``S`` the base entropy in bits.
    """
    if delta <= 0:
        raise ContractError("delta must be positive")
    S = von_neumann_entropy(ps.base)
    lo, hi = -ps.N * (S + delta), -ps.N * (S - delta)
    inside = (ps.log2_values > lo) & (ps.log2_values < hi)
    masses = ps.masses()
    mass = math.fsum(masses[inside])
    dim = sum(m for m, ok in zip(ps.multiplicities, inside) if ok)
    return float(mass), int(dim)


def sigma_d(ps: ProductSpectrum, d: int) -> float:
    """Sum of the ``d`` largest eigenvalues of rho^N, exact given the classes."""
    if not 1 <= d <= ps.dimension:
        raise ContractError(f"d={d} outside [1, {ps.dimension}]")
    order = np.argsort(-ps.log2_values, kind="stable")
    left = int(d)
    parts = []
    for i in order:
        m = ps.multiplicities[i]
        take = min(left, m)
        if np.isfinite(ps.log2_values[i]):
            parts.append(2.0 ** (ps.log2_values[i] + math.log2(take)))
        left -= take
        if left == 0:
            break
    return float(math.fsum(parts))


@dataclass(frozen=True)
class SweepRow:
    N: int
    d: int
    entropy: float
    epsilon_N: float
    two_pow_neg_Ndelta: float
    sigma_d: float
    bound: float
    six_sigma_d: float

    @property
    def holds(self) -> bool:
        return self.sigma_d <= self.bound + 1e-12

    def as_dict(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS}


def channel_dimension(S: float, delta: float, N: int, qubit_counting: bool = False) -> int:
    """``floor(2**(N(S - 2 delta)))``, or ``2**floor(N(S - 2 delta))``; at least 1."""
    x = N * (S - 2.0 * delta)
    d = 2 ** math.floor(x) if qubit_counting else math.floor(2.0 ** x)
    return max(1, int(d))


def converse_sweep(spectrum: Sequence[float], delta: float, N_range: Iterable[int],
                   qubit_counting: bool = False, cap: int = CLASS_CAP) -> list[SweepRow]:
    """Per block length: channel size at rate ``S - 2 delta`` and the sum bound.

    ``epsilon_N`` is the atypical mass actually computed at that ``N``, so
    ``sigma_d <= epsilon_N + 2**(-N delta)`` is an exact per-row inequality.
    """
    s = as_spectrum(spectrum)
    if delta <= 0:
        raise ContractError("delta must be positive")
    S = von_neumann_entropy(s)
    rows = []
    for N in N_range:
        ps = product_spectrum(s, N, cap)
        d = min(channel_dimension(S, delta, N, qubit_counting), ps.dimension)
        mass, _ = typical_stats(ps, delta)
        eps = max(0.0, 1.0 - mass)
        tail = 2.0 ** (-N * delta)
        sd = sigma_d(ps, d)
        rows.append(SweepRow(N, d, S, eps, tail, sd, eps + tail, 6.0 * sd))
    return rows


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.as_dict().items()})
    return buf.getvalue()


def block_ensemble(e: SourceEnsemble, N: int, cap: int = BLOCK_DIM_CAP) -> SourceEnsemble:
    """All length-``N`` sequences of signals, as product states with product priors."""
    if N < 1:
        raise ContractError("block length N must be >= 1")
    m, n = len(e), e.n
    if m**N > cap or n**N > cap:
        raise ContractError(f"block ensemble of {m}^{N} signals in dimension {n}^{N} exceeds {cap}")
    probs = e.probs.copy()
    states = e.states.copy()
    for _ in range(N - 1):
        probs = np.kron(probs, e.probs)
        states = np.einsum("ia,jb->ijab", states, e.states).reshape(len(probs), -1)
    return SourceEnsemble(probs / probs.sum(), states)
