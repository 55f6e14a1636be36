"""Randomized campaigns against the fidelity limit and the fidelity inequality.

Every trial draws from its own generator, derived from ``(seed, trial)``, so a
single trial can be replayed and parallel runs match serial ones exactly.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import __version__
from .channels import random_channel
from .coding import (
    BOUND_CONSTANT,
    CodingScheme,
    Encoding,
    SourceEnsemble,
    identity_decoder,
    topd_encoder,
    xyz_decomposition,
)
from .fidelity import fidelity_general, triangle_bound, triangle_bound_general
from .linalg import child_rng, haar_isometry, random_density, random_pure_state

SLACK = 1e-9


def default_dims(n_values: Sequence[int] = (3, 4, 5, 6)) -> list[tuple[int, int]]:
    return [(n, d) for n in n_values for d in range(1, n)]


@dataclass(frozen=True)
class BoundTrial:
    trial: int
    n: int
    d: int
    F_bar: float
    eta: float
    X: float
    Y: float
    Z: float
    lambda_next: float
    per_signal_ok: bool

    def failures(self, slack: float = SLACK) -> list[str]:
        out = []
        if self.F_bar > BOUND_CONSTANT * self.eta + slack:
            out.append("lemma")
        if self.X > self.d * self.lambda_next + slack or self.X > self.eta + slack:
            out.append("xineq")
        if abs(self.Y - 2.0 * self.eta) > slack:
            out.append("yineq")
        if self.Z > 2.0 * math.sqrt(self.X * self.Y) + slack:
            out.append("schwarz")
        if self.F_bar > self.X + self.Y + self.Z + slack or not self.per_signal_ok:
            out.append("fidineq")
        return out


def sample_ensemble(n: int, m: int, rng: np.random.Generator) -> SourceEnsemble:
    probs = rng.dirichlet(np.ones(m))
    states = np.stack([random_pure_state(n, rng) for _ in range(m)])
    return SourceEnsemble(probs, states)


def sample_encoding(m: int, n: int, d: int, rng: np.random.Generator) -> Encoding:
    """Independent random channel state per signal on a random d-dim subspace."""
    basis = haar_isometry(n, d, rng)
    states = [random_density(d, int(rng.integers(1, d + 1)), rng) for _ in range(m)]
    return Encoding.from_compressed(states, basis)


def run_bound_trial(seed: int, trial: int, dims: Sequence[tuple[int, int]],
                    signals: tuple[int, int] = (2, 6), encoder: str = "random",
                    decoder: str = "random") -> BoundTrial:
    rng = child_rng(seed, trial)
    n, d = dims[trial % len(dims)]
    m = int(rng.integers(signals[0], signals[1] + 1))
    ens = sample_ensemble(n, m, rng)
    if encoder == "random":
        enc = sample_encoding(m, n, min(d, n), rng)
    elif encoder == "topd":
        enc = topd_encoder(ens, min(d, n))
    else:
        raise ValueError(f"unknown encoder {encoder!r}")
    dd = enc.d
    if decoder == "random":
        # ancilla sizes from a single Kraus-environment multiple up to d*n
        unit = n // math.gcd(dd, n)
        d_anc = unit * int(rng.integers(1, max(1, dd * n // unit) + 1))
        dec = random_channel(dd, n, d_anc, rng)
    elif decoder == "identity":
        dec = identity_decoder(enc)
    else:
        raise ValueError(f"unknown decoder {decoder!r}")
    chain = xyz_decomposition(ens, CodingScheme(enc, dec, input_space="channel"), d)
    return BoundTrial(trial, n, d, chain.F_bar, chain.eta, chain.X, chain.Y, chain.Z,
                      chain.lambda_next, chain.per_signal_ok)


@dataclass
class FuzzReport:
    trials: int
    seed: int
    dims: list
    max_ratio: float
    violations: list = field(default_factory=list)
    failure_counts: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    version: str = __version__

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def _bound_chunk(args):
    seed, idx, dims, signals, encoder, decoder = args
    return [run_bound_trial(seed, i, dims, signals, encoder, decoder) for i in idx]


def _run_chunks(fn, seed, trials, extra, workers):
    idx = list(range(trials))
    if workers <= 1:
        return fn((seed, idx, *extra))
    chunks = [idx[i::workers] for i in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(fn, [(seed, c, *extra) for c in chunks]))
    results = [r for part in parts for r in part]
    return sorted(results, key=lambda r: r.trial)


def fuzz_bound(trials: int = 10_000, dims: Sequence[tuple[int, int]] | None = None,
               seed: int = 42, signals: tuple[int, int] = (2, 6), encoder: str = "random",
               decoder: str = "random", workers: int = 1) -> FuzzReport:
    """Sample (ensemble, encoding, decoder) triples and check the bound chain.

    A trial is a violation if the average fidelity exceeds
    ``(3 + 2 sqrt 2) eta`` or any intermediate step of the chain fails, each
    beyond a ``1e-9`` slack.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    dims = [tuple(x) for x in (default_dims() if dims is None else dims)]
    results = _run_chunks(_bound_chunk, seed, trials, (dims, signals, encoder, decoder), workers)

    violations, counts, max_ratio = [], {}, 0.0
    for r in results:
        max_ratio = max(max_ratio, r.F_bar / r.eta)
        kinds = r.failures()
        for k in kinds:
            counts[k] = counts.get(k, 0) + 1
        if kinds:
            violations.append({"trial": r.trial, "n": r.n, "d": r.d, "F_bar": r.F_bar,
                               "eta": r.eta, "X": r.X, "Y": r.Y, "Z": r.Z, "kinds": kinds})
    config = {"trials": trials, "seed": seed, "dims": [list(x) for x in dims],
              "signals": list(signals), "encoder": encoder, "decoder": decoder}
    return FuzzReport(trials, seed, [list(x) for x in dims], max_ratio, violations, counts, config)


# -- fidelity inequality -------------------------------------------------------


@dataclass(frozen=True)
class TripleTrial:
    trial: int
    dim: int
    forced: bool
    F12: float
    F23: float
    F13: float
    bound: float
    tr3: float
    F13_sub: float
    F23_sub: float
    bound_sub: float

    @property
    def slack(self) -> float:
        return self.bound - self.F13

    @property
    def slack_sub(self) -> float:
        return self.bound_sub - self.F13_sub


def run_triple_trial(seed: int, trial: int, dims: tuple[int, int] = (2, 4),
                     trace_range: tuple[float, float] = (0.3, 1.0),
                     forced_every: int = 10) -> TripleTrial:
    """rho1, rho2 subnormalized; rho3 normalized, then rescaled for the general form.

    Every ``forced_every``-th trial uses ``rho1 = rho2`` (normalized), where the
    bound collapses to ``F23`` and must be tight.
    """
    rng = child_rng(seed, trial)
    dim = int(rng.integers(dims[0], dims[1] + 1))

    def rand_state(trace):
        return trace * random_density(dim, int(rng.integers(1, dim + 1)), rng)

    forced = forced_every > 0 and trial % forced_every == 0
    if forced:
        rho1 = rho2 = rand_state(1.0)
    else:
        rho1 = rand_state(rng.uniform(*trace_range))
        rho2 = rand_state(rng.uniform(*trace_range))
    rho3 = rand_state(1.0)
    f12 = fidelity_general(rho1, rho2)
    f23 = fidelity_general(rho2, rho3)
    f13 = fidelity_general(rho1, rho3)

    tr3 = float(rng.uniform(*trace_range))
    f23s = fidelity_general(rho2, tr3 * rho3)
    f13s = fidelity_general(rho1, tr3 * rho3)
    return TripleTrial(trial, dim, forced, f12, f23, f13, triangle_bound(f12, f23),
                       tr3, f13s, f23s, triangle_bound_general(f12, f23s, tr3))


@dataclass
class InequalityReport:
    trials: int
    seed: int
    dims: list
    min_slack: float
    max_slack: float
    forced_max_gap: float
    violations: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    version: str = __version__

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def _triple_chunk(args):
    seed, idx, dims, trace_range, forced_every = args
    return [run_triple_trial(seed, i, dims, trace_range, forced_every) for i in idx]


def fuzz_inequality(trials: int = 10_000, dims: tuple[int, int] = (2, 4), seed: int = 42,
                    trace_range: tuple[float, float] = (0.3, 1.0), forced_every: int = 10,
                    workers: int = 1) -> InequalityReport:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    results = _run_chunks(_triple_chunk, seed, trials,
                          (tuple(dims), tuple(trace_range), forced_every), workers)
    violations = []
    slacks = []
    forced_gap = 0.0
    for r in results:
        slacks.append(min(r.slack, r.slack_sub))
        kinds = []
        if r.slack < -SLACK:
            kinds.append("normalized")
        if r.slack_sub < -SLACK:
            kinds.append("subnormalized")
        if r.forced:
            forced_gap = max(forced_gap, abs(r.bound - r.F23), abs(r.F13 - r.F23))
        if kinds:
            violations.append({**asdict(r), "kinds": kinds})
    config = {"trials": trials, "seed": seed, "dims": list(dims),
              "trace_range": list(trace_range), "forced_every": forced_every}
    return InequalityReport(trials, seed, list(dims), float(min(slacks)), float(max(slacks)),
                            forced_gap, violations, config)
