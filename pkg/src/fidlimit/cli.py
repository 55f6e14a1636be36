"""Command line front end.

Exit codes: 0 when every checked inequality holds, 1 when a violation was
found (the violating trials are in the report), 2 for configuration or I/O
errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .appendix import appendix_report
from .blocking import (
    as_spectrum,
    block_ensemble,
    channel_dimension,
    converse_sweep,
    product_spectrum,
    sigma_d,
    sweep_csv,
    von_neumann_entropy,
)
from .channels import random_channel
from .coding import (
    BOUND_CONSTANT,
    CodingScheme,
    SourceEnsemble,
    average_fidelity,
    ensemble_density,
    eta,
    identity_decoder,
    topd_encoder,
)
from .fuzz import default_dims, fuzz_bound, fuzz_inequality, run_bound_trial, run_triple_trial
from .linalg import ContractError, child_rng

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2


class ConfigError(Exception):
    pass


def parse_dims(text: str) -> list[tuple[int, int]]:
    try:
        pairs = [tuple(int(x) for x in item.split(":")) for item in text.split(",") if item]
    except ValueError as exc:
        raise ConfigError(f"bad --dims {text!r}: {exc}") from None
    if not pairs or any(len(p) != 2 or min(p) < 1 for p in pairs):
        raise ConfigError(f"bad --dims {text!r}; expected n:d[,n:d...]")
    return pairs


def parse_range(text: str) -> range:
    try:
        if ".." in text:
            a, b = text.split("..")
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    except ValueError:
        raise ConfigError(f"bad --N {text!r}; expected a..b or a single integer") from None
    if lo < 1 or hi < lo:
        raise ConfigError(f"bad --N {text!r}")
    return range(lo, hi + 1)


def parse_spectrum(text: str) -> np.ndarray:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
        return as_spectrum(values)
    except (ValueError, ContractError) as exc:
        raise ConfigError(f"bad --spectrum {text!r}: {exc}") from None


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {out}: {exc}") from None


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _require_trials(args) -> None:
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")


# -- commands ------------------------------------------------------------------


def cmd_appendix(args) -> int:
    report = appendix_report(restarts=args.restarts, seed=args.seed)
    report["config"] = {"command": "appendix", "seed": args.seed, "restarts": args.restarts}
    if args.format == "csv":
        keys = sorted(k for k, v in report.items() if not isinstance(v, dict))
        text = ",".join(keys) + "\n" + ",".join(repr(report[k]) for k in keys) + "\n"
    else:
        text = _json(report)
    _emit(text, args.out)
    return EXIT_OK if report["nonunitary_beats_unitary"] else EXIT_VIOLATION


def _replay(args, runner) -> int:
    try:
        data = json.loads(Path(args.replay).read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read replay file: {exc}") from None
    rows = [runner(data, v["trial"]) for v in data.get("violations", [])]
    _emit(_json({"version": __version__, "replayed": rows}), args.out)
    return EXIT_VIOLATION if any(r["violation"] for r in rows) else EXIT_OK


def _replay_bound(data, trial):
    cfg = data["config"]
    r = run_bound_trial(cfg["seed"], trial, [tuple(x) for x in cfg["dims"]],
                        tuple(cfg["signals"]), cfg["encoder"], cfg["decoder"])
    return {**asdict(r), "failures": r.failures(), "violation": bool(r.failures())}


def _replay_triple(data, trial):
    cfg = data["config"]
    r = run_triple_trial(cfg["seed"], trial, tuple(cfg["dims"]), tuple(cfg["trace_range"]),
                         cfg["forced_every"])
    return {**asdict(r), "violation": bool(r.slack < -1e-9 or r.slack_sub < -1e-9)}


def cmd_fuzz_bound(args) -> int:
    if args.replay:
        return _replay(args, _replay_bound)
    _require_trials(args)
    dims = parse_dims(args.dims) if args.dims else default_dims()
    if not args.allow_full and any(d >= n for n, d in dims):
        raise ConfigError("every d must be < n (use --allow-full to permit d >= n)")
    report = fuzz_bound(args.trials, dims, args.seed, encoder=args.encoder,
                        decoder=args.decoder, workers=args.workers)
    _emit(report.to_json(), args.out)
    return EXIT_OK if report.ok else EXIT_VIOLATION


def cmd_fuzz_inequality(args) -> int:
    if args.replay:
        return _replay(args, _replay_triple)
    _require_trials(args)
    lo, hi = (int(x) for x in args.dim_range.split(".."))
    if lo < 1 or hi < lo or hi > 6:
        raise ConfigError("--dim-range must be a..b with 1 <= a <= b <= 6")
    report = fuzz_inequality(args.trials, (lo, hi), args.seed, workers=args.workers)
    _emit(report.to_json(), args.out)
    return EXIT_OK if report.ok else EXIT_VIOLATION


def cmd_converse(args) -> int:
    spectrum = parse_spectrum(args.spectrum)
    if args.delta <= 0:
        raise ConfigError("--delta must be positive")
    rows = converse_sweep(spectrum, args.delta, parse_range(args.N),
                          qubit_counting=args.qubit_counting)
    config = {"command": "converse", "spectrum": spectrum.tolist(), "delta": args.delta,
              "N": args.N, "qubit_counting": args.qubit_counting, "seed": args.seed}
    ok = all(r.holds for r in rows)
    if args.format == "json":
        text = _json({"version": __version__, "config": config, "all_hold": ok,
                      "rows": [r.as_dict() for r in rows]})
    else:
        header = f"# fidlimit {__version__} config={json.dumps(config, sort_keys=True)}\n"
        text = header + sweep_csv(rows)
    _emit(text, args.out)
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_block_demo(args) -> int:
    spectrum = parse_spectrum(args.spectrum)
    N = args.block
    if not 1 <= N <= 5:
        raise ConfigError("--block must lie in 1..5")
    k = len(spectrum)
    base = SourceEnsemble(spectrum, np.eye(k))
    try:
        ens = block_ensemble(base, N)
    except ContractError as exc:
        raise ConfigError(str(exc)) from None
    n = ens.n
    S = von_neumann_entropy(spectrum)
    d = args.d if args.d is not None else channel_dimension(S, args.delta, N)
    if not 1 <= d <= n:
        raise ConfigError(f"channel dimension d={d} outside [1, {n}]")

    sig = sigma_d(product_spectrum(spectrum, N), d)
    dense_eta = eta(ensemble_density(ens), d)
    enc = topd_encoder(ens, d)
    f_topd = average_fidelity(ens, CodingScheme(enc, identity_decoder(enc), "channel"))
    sampled = []
    for t in range(args.trials):
        dec = random_channel(d, n, rng=child_rng(args.seed, t))
        sampled.append(average_fidelity(ens, CodingScheme(enc, dec, "channel")))
    ceiling = 6.0 * sig
    ok = (abs(f_topd - sig) < 1e-10 and abs(dense_eta - sig) < 1e-9
          and all(f <= BOUND_CONSTANT * sig + 1e-9 for f in sampled))
    report = {
        "version": __version__,
        "config": {"command": "block-demo", "spectrum": spectrum.tolist(), "N": N, "d": d,
                   "delta": args.delta, "trials": args.trials, "seed": args.seed},
        "entropy": S,
        "sigma_d": sig,
        "eta_dense": dense_eta,
        "F_topd_identity": f_topd,
        "six_sigma_d": ceiling,
        "chain_bound": BOUND_CONSTANT * sig,
        "F_random_decoders": sampled,
        "max_F_random": max(sampled) if sampled else None,
        "all_hold": ok,
    }
    _emit(_json(report), args.out)
    return EXIT_OK if ok else EXIT_VIOLATION


# -- argument parsing ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default=None)

    p = argparse.ArgumentParser(prog="fidlimit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("appendix", parents=[common], help="reproduce the three-signal example")
    a.add_argument("--restarts", type=int, default=10)
    a.set_defaults(func=cmd_appendix, default_format="json")

    fb = sub.add_parser("fuzz-bound", parents=[common], help="random schemes vs the limit")
    fb.add_argument("--trials", type=int, default=10_000)
    fb.add_argument("--dims", default=None, help="n:d[,n:d...] (default: 3<=n<=6, 1<=d<n)")
    fb.add_argument("--allow-full", action="store_true", help="permit d >= n")
    fb.add_argument("--encoder", choices=("random", "topd"), default="random")
    fb.add_argument("--decoder", choices=("random", "identity"), default="random")
    fb.add_argument("--workers", type=int, default=1)
    fb.add_argument("--replay", default=None, metavar="FILE")
    fb.set_defaults(func=cmd_fuzz_bound, default_format="json")

    fi = sub.add_parser("fuzz-inequality", parents=[common], help="random triples vs the inequality")
    fi.add_argument("--trials", type=int, default=10_000)
    fi.add_argument("--dim-range", default="2..4")
    fi.add_argument("--workers", type=int, default=1)
    fi.add_argument("--replay", default=None, metavar="FILE")
    fi.set_defaults(func=cmd_fuzz_inequality, default_format="json")

    cv = sub.add_parser("converse", parents=[common], help="block-length sweep of sigma_d")
    cv.add_argument("--spectrum", default="0.9,0.1")
    cv.add_argument("--delta", type=float, default=0.1)
    cv.add_argument("--N", default="1..200")
    cv.add_argument("--qubit-counting", action="store_true",
                    help="d = 2**floor(N(S-2delta)) instead of floor(2**(N(S-2delta)))")
    cv.set_defaults(func=cmd_converse, default_format="csv")

    bd = sub.add_parser("block-demo", parents=[common], help="explicit small-N block coding")
    bd.add_argument("--spectrum", default="0.9,0.1",
                    help="priors of orthogonal base signals")
    bd.add_argument("--block", type=int, default=4, help="block length N (<= 5)")
    bd.add_argument("--d", type=int, default=None, help="channel dimension")
    bd.add_argument("--delta", type=float, default=0.1,
                    help="rate S - 2 delta when --d is not given")
    bd.add_argument("--trials", type=int, default=20, help="random decoders to sample")
    bd.set_defaults(func=cmd_block_demo, default_format="json")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    try:
        return args.func(args)
    except (ConfigError, ContractError, ValueError, OSError) as exc:
        print(f"fidlimit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
