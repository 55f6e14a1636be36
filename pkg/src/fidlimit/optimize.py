"""Best unitary decoder for a fixed encoding.

The search runs over exponentials of generators: real antisymmetric ones
(rotations) for real-amplitude problems, Hermitian ones otherwise.  BFGS
from the identity and from random starts, then a Nelder-Mead polish of the
best point in case the gradient ascent stalled.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize, minimize_scalar

from .coding import Encoding, SourceEnsemble


def _real_problem(e: SourceEnsemble, enc: Encoding) -> bool:
    return e.is_real() and all(np.max(np.abs(w.imag)) < 1e-14 for w in enc.channel_states)


def rotation_generator(params, n: int) -> np.ndarray:
    a = np.zeros((n, n))
    a[np.triu_indices(n, 1)] = params
    return a - a.T


def hermitian_generator(params, n: int) -> np.ndarray:
    h = np.zeros((n, n), dtype=complex)
    iu = np.triu_indices(n, 1)
    k = len(iu[0])
    h[np.diag_indices(n)] = params[:n]
    h[iu] = params[n:n + k] + 1j * params[n + k:]
    return h + np.triu(h, 1).conj().T


def unitary_fidelity(e: SourceEnsemble, enc: Encoding, u: np.ndarray) -> float:
    """Average fidelity when the embedded channel states are conjugated by ``u``."""
    a = e.states
    w = np.stack(enc.channel_states)
    b = a.conj() @ u  # rows <a_i| U
    vals = np.einsum("ij,ijk,ik->i", b, w, b.conj())
    return float(e.probs @ vals.real)


def rotation_angle_deg(u: np.ndarray) -> float:
    """Rotation angle of a real orthogonal matrix (largest eigenphase, degrees)."""
    phases = np.angle(np.linalg.eigvals(u))
    return float(np.degrees(np.max(np.abs(phases))))


def optimize_unitary_decoder(e: SourceEnsemble, enc: Encoding, method: str = "auto",
                             restarts: int = 10, rng: np.random.Generator | None = None,
                             ) -> tuple[np.ndarray, float]:
    """Maximize the average fidelity over unitary decoders on the source space.

    Parameters
    ----------
    method
        ``"rotation"`` searches SO(n), ``"unitary"`` searches U(n), and
        ``"auto"`` uses rotations when the ensemble and the channel states are
        real.
    restarts
        Number of ascents; the first always starts at the identity.

    Returns
    -------
    (unitary, fidelity)
        The fidelity is never below that of the identity decoder.
    """
    n = e.n
    if method == "auto":
        method = "rotation" if _real_problem(e, enc) else "unitary"
    if method == "rotation":
        dim = n * (n - 1) // 2

        def build(x):
            return expm(rotation_generator(x, n))
    elif method == "unitary":
        dim = n * n

        def build(x):
            return expm(1j * hermitian_generator(x, n))
    else:
        raise ValueError(f"unknown method {method!r}")

    if dim == 0:
        ident = np.eye(n, dtype=complex)
        return ident, unitary_fidelity(e, enc, ident)
    rng = np.random.default_rng(0) if rng is None else rng

    def loss(x):
        return -unitary_fidelity(e, enc, build(x))

    # build(0) is exactly the identity, so the result never falls below it
    best_x = np.zeros(dim)
    best_f = -loss(best_x)
    for k in range(max(1, restarts)):
        x0 = np.zeros(dim) if k == 0 else rng.normal(scale=1.0, size=dim)
        res = minimize(loss, x0, method="BFGS", options={"gtol": 1e-10})
        if -res.fun > best_f:
            best_f, best_x = -res.fun, res.x
    polish = minimize(loss, best_x, method="Nelder-Mead",
                      options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 20000})
    if -polish.fun > best_f:
        best_f, best_x = -polish.fun, polish.x
    return build(best_x), float(best_f)


def tilt_toward(e: SourceEnsemble, enc: Encoding, target, max_deg: float = 5.0,
                ) -> tuple[float, float]:
    """One-parameter family tilting a 2-d support plane in R^3 toward ``target``.

    The rotation axis is ``target x normal`` (normal = unit vector orthogonal
    to the support), so positive angles move the plane toward ``target``.
    Returns ``(angle_deg, fidelity)`` of the best tilt.
    """
    basis = enc.basis.real
    if basis.shape != (3, 2):
        raise ValueError("tilt family needs a 2-d support in a 3-d space")
    normal = np.cross(basis[:, 0], basis[:, 1])
    axis = np.cross(np.real(target), normal)
    axis /= np.linalg.norm(axis)
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])

    def fid(deg):
        return unitary_fidelity(e, enc, expm(np.radians(deg) * k))

    grid = np.linspace(-max_deg, max_deg, 2001)
    vals = [fid(t) for t in grid]
    i = int(np.argmax(vals))
    step = grid[1] - grid[0]
    res = minimize_scalar(lambda t: -fid(t), bounds=(grid[i] - step, grid[i] + step),
                          method="bounded", options={"xatol": 1e-10})
    return float(res.x), float(-res.fun)
