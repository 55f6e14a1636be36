"""The three-signal example in which a measuring decoder beats every unitary one.

Signals ``a0, a1`` lie in the x-y plane, 15 degrees from the x and y axes;
``a2`` completes three edges of a regular tetrahedron (pairwise 60 degrees)
in the positive octant.  Priors are .49, .49, .02.  ``a0`` and ``a1`` are
sent as the x and y axis states, ``a2`` as the equal mixture of ``a0`` and
``a1``, so the channel support is two-dimensional.
"""

from __future__ import annotations

import math

import numpy as np

from . import __version__
from .channels import MeasurePrepareChannel, identity_channel, measure_prepare_as_kraus
from .coding import (
    BOUND_CONSTANT,
    CodingScheme,
    Encoding,
    SourceEnsemble,
    average_fidelity,
    ensemble_density,
    eta,
    topd_encoder,
)
from .linalg import ket_to_projector
from .optimize import optimize_unitary_decoder, rotation_angle_deg, tilt_toward

PRIORS = (0.49, 0.49, 0.02)


def signal_states() -> np.ndarray:
    c, s = math.cos(math.radians(15)), math.sin(math.radians(15))
    return np.array([
        [c, s, 0.0],
        [s, c, 0.0],
        [1 / math.sqrt(6), 1 / math.sqrt(6), math.sqrt(2 / 3)],
    ])


def appendix_ensemble() -> tuple[SourceEnsemble, Encoding, MeasurePrepareChannel]:
    """Ensemble, axis encoding and x/y measure-and-prepare decoder.

    The decoder's measurement is completed on the full space by a z outcome
    that prepares ``a2``; encoded states never trigger it.
    """
    a = signal_states()
    ens = SourceEnsemble(np.array(PRIORS), a)
    pis = [ket_to_projector(v) for v in a]
    axes = np.eye(3)
    w = (ket_to_projector(axes[0]), ket_to_projector(axes[1]), 0.5 * pis[0] + 0.5 * pis[1])
    enc = Encoding(w, axes[:, :2])
    decoder = MeasurePrepareChannel(
        tuple(ket_to_projector(axes[k]) for k in range(3)),
        tuple(pis),
    )
    return ens, enc, decoder


def appendix_report(restarts: int = 10, seed: int = 42) -> dict:
    """Every number of the example, as a JSON-ready dict."""
    ens, enc, mp = appendix_ensemble()
    f_id = average_fidelity(ens, CodingScheme(enc, identity_channel(3)))
    f_mp = average_fidelity(ens, CodingScheme(enc, measure_prepare_as_kraus(mp)))
    u, f_u = optimize_unitary_decoder(ens, enc, restarts=restarts,
                                      rng=np.random.default_rng(seed))
    tilt_deg, tilt_f = tilt_toward(ens, enc, ens.states[2])
    rho = ensemble_density(ens)
    eta2 = eta(rho, 2)
    f_topd = average_fidelity(ens, CodingScheme(topd_encoder(ens, 2), identity_channel(3)))
    return {
        "version": __version__,
        "F_identity": f_id,
        "F_measure_prepare": f_mp,
        "best_unitary_angle_deg": rotation_angle_deg(u.real),
        "best_unitary_fidelity": f_u,
        "best_unitary_gain": f_u - f_id,
        "tilt_angle_deg": tilt_deg,
        "tilt_fidelity": tilt_f,
        "eta_d2": eta2,
        "six_eta": 6 * eta2,
        "chain_bound": BOUND_CONSTANT * eta2,
        "F_topd_identity": f_topd,
        "nonunitary_beats_unitary": bool(f_mp > f_u),
        "restarts": restarts,
        "seed": seed,
    }

