"""Dense complex linear algebra shared by the rest of the package.

Operators are plain ``numpy`` arrays. The ``as_*`` validators check the
invariants of a role (Hermitian, density operator, projector, pure state)
and return a cleaned copy, so callers can pass lists or real arrays.

Eigenvalues are always reported in descending order; ties are broken by
the basis index at which each eigenvector has its largest component.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

HERMITICITY_TOL = 1e-9
PSD_TOL = 1e-8
TRACE_TOL = 1e-9
PROJECTOR_TOL = 1e-9
UNITARITY_TOL = 1e-10


class ContractError(ValueError):
    """An input violates the documented precondition of an operation."""


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ContractError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ContractError("matrix has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def as_hermitian(a, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Validate ``a`` as Hermitian and return its exactly symmetrized copy."""
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ContractError(f"Hermitian operator must be square, got {m.shape}")
    err = np.max(np.abs(m - dagger(m))) if m.size else 0.0
    if err > tol:
        raise ContractError(f"operator is not Hermitian (max |A - A^H| = {err:.3g})")
    return 0.5 * (m + dagger(m))


def eigh(a, tol: float = HERMITICITY_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition with eigenvalues in descending order.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
        Real, sorted so that ``eigenvalues[0]`` is the largest.
    eigenvectors : ndarray, shape (n, n)
        Orthonormal columns. Each column is phase-fixed so that its largest
        component is real and positive. Degenerate eigenvalues are ordered by
        the basis index where the eigenvector is concentrated.
    """
    m = as_hermitian(a, tol)
    w, v = np.linalg.eigh(m)
    n = len(w)
    if n == 0:
        return w, v
    lead = np.argmax(np.abs(v) - 1e-12 * np.arange(n)[:, None], axis=0)
    phase = v[lead, np.arange(n)]
    v = v * (np.abs(phase) / phase)[None, :]

    scale = max(1.0, float(np.max(np.abs(w))))
    tie = 1e-12 * scale
    order = sorted(range(n), key=lambda j: -w[j])
    # stable tie-break inside clusters of (numerically) equal eigenvalues
    out: list[int] = []
    i = 0
    while i < n:
        j = i + 1
        while j < n and w[order[i]] - w[order[j]] <= tie:
            j += 1
        out.extend(sorted(order[i:j], key=lambda k: lead[k]))
        i = j
    idx = np.array(out)
    return w[idx], v[:, idx]


def tensor(a, b) -> np.ndarray:
    """Kronecker product with ``a`` as the slow (left) index."""
    return np.kron(np.asarray(a), np.asarray(b))


def _traced_index(traced) -> int:
    if traced in (0, "Q", "first", "left"):
        return 0
    if traced in (1, "A", "second", "right", "ancilla"):
        return 1
    raise ContractError(f"unknown subsystem tag {traced!r}")


def partial_trace(m, dims: Sequence[int], traced="A") -> np.ndarray:
    """Trace out one factor of a bipartite operator on ``d_Q * d_A``.

    ``traced="A"`` (or 1) discards the right factor and returns an operator
    on ``Q``; ``traced="Q"`` (or 0) discards the left factor.
    """
    mat = as_matrix(m)
    dq, da = (int(x) for x in dims)
    if dq < 1 or da < 1 or mat.shape != (dq * da, dq * da):
        raise ContractError(f"matrix of shape {mat.shape} does not match dims {(dq, da)}")
    t = mat.reshape(dq, da, dq, da)
    if _traced_index(traced) == 1:
        return np.einsum("iaja->ij", t)
    return np.einsum("aiaj->ij", t)


def as_density(a, tol: float = PSD_TOL, trace_tol: float = TRACE_TOL) -> np.ndarray:
    """Validate a (possibly subnormalized) density operator.

    Eigenvalues down to ``-tol`` are accepted and clamped to zero; the trace
    must lie in ``(0, 1 + trace_tol]``.
    """
    m = as_hermitian(a)
    w, v = np.linalg.eigh(m)
    if w.size and w[0] < -tol:
        raise ContractError(f"operator is not positive semidefinite (min eigenvalue {w[0]:.3g})")
    if np.any(w < 0):
        w = np.clip(w, 0.0, None)
        m = (v * w) @ dagger(v)
    tr = float(np.sum(w))
    if not 0.0 < tr <= 1.0 + trace_tol:
        raise ContractError(f"density operator trace {tr:.6g} outside (0, 1]")
    return m


def as_projector(a, tol: float = PROJECTOR_TOL) -> np.ndarray:
    m = as_hermitian(a)
    if m.size and np.max(np.abs(m @ m - m)) > tol:
        raise ContractError("operator is not idempotent")
    return m


def projector_rank(p) -> int:
    return int(round(float(np.real(np.trace(p)))))


def as_pure_state(psi, normalized: bool = True, tol: float = 1e-12) -> np.ndarray:
    """Validate a state vector; ``normalized=False`` allows norm in (0, 1]."""
    v = np.asarray(psi, dtype=complex)
    if v.ndim != 1 or v.size == 0:
        raise ContractError(f"state vector must be 1-d and nonempty, got shape {v.shape}")
    nrm2 = float(np.vdot(v, v).real)
    if normalized:
        if abs(nrm2 - 1.0) > tol:
            raise ContractError(f"state is not normalized (<psi|psi> = {nrm2:.15g})")
    elif not 0.0 < nrm2 <= 1.0 + tol:
        raise ContractError(f"state norm^2 {nrm2:.6g} outside (0, 1]")
    return v


def ket_to_projector(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=complex)
    return np.outer(v, np.conj(v))


def psd_sqrt(rho) -> np.ndarray:
    """Positive square root.

    Eigenvalues within the eigensolver's backward error of zero are set to
    zero first; their square roots would otherwise inflate roundoff to ~1e-8.
    """
    m = as_hermitian(rho)
    w, v = np.linalg.eigh(m)
    floor = len(w) * np.finfo(float).eps * max(1.0, float(np.max(np.abs(w), initial=0.0)))
    w = np.where(w > floor, w, 0.0)
    return (v * np.sqrt(w)) @ dagger(v)


def is_unitary(u, tol: float = UNITARITY_TOL) -> bool:
    u = np.asarray(u)
    return u.shape[0] == u.shape[1] and np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))) < tol


# -- seeded sampling -------------------------------------------------------


def child_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for trial ``index`` under master ``seed``.

    Derived by counter hashing (``SeedSequence`` spawn keys), so a trial's
    stream does not depend on which other trials ran or in what order.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def _check_dim(dim: int, name: str = "dim") -> int:
    if int(dim) != dim or dim < 1:
        raise ContractError(f"{name} must be a positive integer, got {dim!r}")
    return int(dim)


def _complex_gaussian(shape, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform state on the unit sphere of C^dim."""
    dim = _check_dim(dim)
    v = _complex_gaussian(dim, rng)
    return v / np.linalg.norm(v)


def random_density(dim: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    """Induced-measure density operator: reduced state of a random pure state on dim x rank."""
    dim = _check_dim(dim)
    rank = _check_dim(rank, "rank")
    if rank > dim:
        raise ContractError(f"rank {rank} exceeds dim {dim}")
    g = random_pure_state(dim * rank, rng).reshape(dim, rank)
    rho = g @ dagger(g)
    return 0.5 * (rho + dagger(rho))


def haar_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """First ``cols`` columns of a Haar-random unitary on C^rows.

    QR of a complex Gaussian matrix with the phases of R's diagonal moved
    into Q, which makes the distribution exactly Haar.
    """
    rows = _check_dim(rows, "rows")
    cols = _check_dim(cols, "cols")
    if cols > rows:
        raise ContractError(f"isometry needs cols <= rows, got {cols} > {rows}")
    z = _complex_gaussian((rows, cols), rng)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))[None, :]


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    return haar_isometry(dim, dim, rng)
