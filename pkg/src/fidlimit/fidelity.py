"""Fidelity between (possibly subnormalized) quantum states.

The fidelity of two density operators is the largest squared overlap
between their purifications, where a purification of ``rho`` is normalized
to ``<1|1> = Tr rho``.  With that convention the closed form

    F(rho1, rho2) = (Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))**2

holds for subnormalized arguments as well, and it reduces to ``Tr(pi rho)``
when one argument is rank one.  ``fidelity_oracle`` evaluates the
purification maximum directly and is used to check the closed form.
"""

from __future__ import annotations

import math

import numpy as np

from .linalg import (
    ContractError,
    as_density,
    as_pure_state,
    dagger,
    haar_unitary,
    ket_to_projector,
    psd_sqrt,
)

# Raw values above 1 by more than this indicate a bug, not roundoff.
_CLAMP_WIDTH = 1e-8


def _clamp(value: float) -> float:
    if value > 1.0 + _CLAMP_WIDTH or value < -_CLAMP_WIDTH:
        raise ContractError(f"fidelity {value!r} outside [0, 1] beyond roundoff")
    return min(max(value, 0.0), 1.0)


def fidelity_pure_pure(psi, phi) -> float:
    """``|<psi|phi>|**2``; subnormalized vectors allowed."""
    a = as_pure_state(psi, normalized=False)
    b = as_pure_state(phi, normalized=False)
    if a.shape != b.shape:
        raise ContractError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return _clamp(abs(np.vdot(a, b)) ** 2)


def fidelity_pure_mixed(pi, rho) -> float:
    """Fidelity of a rank-one ``pi`` with ``rho``, i.e. ``Tr(pi rho)``.

    ``pi`` may be given as a (possibly subnormalized) state vector or as a
    rank-one operator.
    """
    p = np.asarray(pi, dtype=complex)
    if p.ndim == 1:
        p = ket_to_projector(as_pure_state(p, normalized=False))
    else:
        p = as_density(p)
        w = np.linalg.eigvalsh(p)
        if w.size > 1 and w[-2] > 1e-9 * max(1.0, w[-1]):
            raise ContractError("first argument is not rank one")
    r = as_density(rho)
    if p.shape != r.shape:
        raise ContractError(f"dimension mismatch: {p.shape} vs {r.shape}")
    return _clamp(float(np.real(np.trace(p @ r))))


def fidelity_general(rho1, rho2) -> float:
    """Purification fidelity via the square-root closed form. Symmetric."""
    r1 = as_density(rho1)
    r2 = as_density(rho2)
    if r1.shape != r2.shape:
        raise ContractError(f"dimension mismatch: {r1.shape} vs {r2.shape}")
    # Tr sqrt(sqrt(r1) r2 sqrt(r1)) is the trace norm of sqrt(r1) sqrt(r2); the
    # singular values avoid square-rooting roundoff-level eigenvalues of the sandwich
    sv = np.linalg.svd(psd_sqrt(r1) @ psd_sqrt(r2), compute_uv=False)
    return _clamp(float(np.sum(sv)) ** 2)


def _purification_matrix(rho: np.ndarray) -> np.ndarray:
    # columns sqrt(lambda_j) |v_j>; as a vector on Q (x) A this is sum_j sqrt(lambda_j)|v_j>|j>
    w, v = np.linalg.eigh(rho)
    return v * np.sqrt(np.clip(w, 0.0, None))[None, :]


def _best_ancilla_unitary(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    """Maximize |<a|(I (x) X)|b>| over unitaries X on the ancilla.

    With purifications written as matrices, the overlap is Tr(a^H b X^T); the
    optimum is the polar factor of the cross-Gram matrix a^H b.
    """
    m = dagger(a) @ b
    u, s, wh = np.linalg.svd(m)
    x_t = dagger(wh) @ dagger(u)
    return x_t.T, float(np.sum(s))


def fidelity_oracle(rho1, rho2, restarts: int = 20, iterations: int = 5,
                    rng: np.random.Generator | None = None) -> float:
    """Brute-force purification fidelity (testing only, dims <= 6).

    A purification of each state is fixed from its eigendecomposition and
    then scrambled by a random ancilla unitary per restart.  The ancilla
    unitaries of the two purifications are then improved alternately, each
    step taking the exact best unitary for the current partner (polar
    decomposition of the cross-Gram matrix).  The largest squared overlap
    actually attained by explicit vectors is returned, so the result can
    never exceed the true maximum.
    """
    r1 = as_density(rho1)
    r2 = as_density(rho2)
    if r1.shape != r2.shape:
        raise ContractError(f"dimension mismatch: {r1.shape} vs {r2.shape}")
    n = r1.shape[0]
    if n > 6:
        raise ContractError("fidelity_oracle is restricted to dimension <= 6")
    rng = np.random.default_rng(0) if rng is None else rng
    a0 = _purification_matrix(r1)
    b0 = _purification_matrix(r2)

    best = 0.0
    for _ in range(max(1, restarts)):
        a = a0 @ haar_unitary(n, rng).T
        b = b0 @ haar_unitary(n, rng).T
        for _ in range(max(1, iterations)):
            x, _ = _best_ancilla_unitary(a, b)
            b = b @ x.T
            y, _ = _best_ancilla_unitary(b, a)
            a = a @ y.T
        # explicit overlap of the two purification vectors
        overlap = abs(np.vdot(a.reshape(-1), b.reshape(-1))) ** 2
        best = max(best, float(overlap))
    return _clamp(best)


def triangle_bound(f12: float, f23: float) -> float:
    """Upper bound on F13 from F12 and F23, valid when Tr rho3 = 1.

    F13 <= F23 + 2(1 - sqrt F12) + 2 sqrt 2 sqrt(F23 (1 - sqrt F12))
    """
    return triangle_bound_general(f12, f23, 1.0)


def triangle_bound_general(f12: float, f23: float, tr3: float) -> float:
    """Same bound when rho3 is subnormalized with trace ``tr3``."""
    if not 0.0 < tr3 <= 1.0 + 1e-12:
        raise ContractError(f"tr3 must lie in (0, 1], got {tr3!r}")
    gap = max(0.0, 1.0 - math.sqrt(max(0.0, f12)))
    return f23 + 2.0 * tr3 * gap + 2.0 * math.sqrt(2.0 * tr3) * math.sqrt(max(0.0, f23) * gap)
