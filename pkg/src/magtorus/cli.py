"""Command line: magtorus check|find|index|verify."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .atlas import predict
from .catalog import read_samples, run_search, sample_lift, write_catalog
from .errors import ConfigError, MagtorusError, NotCritical, Resonant
from .fields import certify_nonresonance
from .loopspace import FourierLoop, hessian_index
from .verify import exit_code, run_suite, summary_table

EXIT_OK, EXIT_CONFIG, EXIT_RESONANT, EXIT_NUMERICAL = 0, 1, 2, 3


def _err(msg: str) -> None:
    print(f"magtorus: {msg}", file=sys.stderr)


def _load(args) -> cfgmod.RunConfig:
    cfg = cfgmod.load(args.config) if args.config else cfgmod.default_config()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def cmd_check(cfg) -> int:
    field = cfg.magnetic_field()
    try:
        cert = certify_nonresonance(field, cfg.tau)
    except Resonant as exc:
        print(f"resonant: {exc}")
        return EXIT_RESONANT
    pred = predict(field, cfg.tau, classes=[h for h in cfg.classes if any(h)])
    N = field.N
    print(f"N={N} tau={cfg.tau:.12g}")
    for j, (k, lo, hi) in enumerate(zip(cert.k, cert.b_lo, cert.b_hi)):
        print(f"factor {j + 1}: k={k}  tau*a in [{lo:.9g}, {hi:.9g}]")
    print(f"k={pred.k_total} eps={cert.epsilon:.12g}")
    ranks = ", ".join(f"{j}:{r}" for j, r in sorted(pred.hf_ranks.items()))
    print(f"hf ranks (class 0): {{{ranks}}}")
    print(f"contractible orbits: expect ≥ {pred.min_count}, generically ≥ {pred.generic_count}")
    print("class h != 0: one nondegenerate orbit forces at least 2")
    for h, (phi, rank) in sorted(pred.novikov.items()):
        print(f"class {list(h)}: flux values {np.round(phi, 12).tolist()}, Gamma rank {rank}")
    return EXIT_OK


def cmd_find(cfg, out_dir=None) -> int:
    cat, results = run_search(cfg)
    out = Path(out_dir or cfg.output_dir)
    path = write_catalog(out, cat, results)
    for rec in cat["classes"]:
        audit = rec["audit"]
        verdict = "n/a" if audit is None else ("PASS" if audit["passed"] else "FAIL")
        extra = f" second-orbit check: {rec['theorem_b']['status']}" if rec["theorem_b"] else ""
        print(f"class {rec['h']}: {len(rec['orbits'])} orbits, audit {verdict}{extra}")
        for note in rec["notes"]:
            print(f"  note: {note}")
    print(f"catalog written to {path}")
    return EXIT_OK if cat["certificate"] is not None else EXIT_RESONANT


def _parse_point(text: str, dim: int) -> np.ndarray:
    try:
        x = np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ConfigError(f"--constant: cannot parse {text!r}") from None
    if x.shape != (dim,):
        raise ConfigError(f"--constant: expected {dim} comma-separated values")
    return x


def cmd_index(cfg, constant=None, orbit=None) -> int:
    field, V = cfg.magnetic_field(), cfg.potential_model()
    n2 = 2 * field.N
    if (constant is None) == (orbit is None):
        raise ConfigError("index needs exactly one of --constant or --orbit")
    if constant is not None:
        loop = FourierLoop.constant(_parse_point(constant, n2), cfg.tau)
        grad_tol = 1e-8
    else:
        t, x, _ = read_samples(orbit)
        lifted = sample_lift(x)
        M = len(t) - 1
        loop = FourierLoop.fit(lifted[:-1], t[-1] - t[0], M // 4 - 1,
                               winding=np.rint(lifted[-1] - lifted[0]).astype(int))
        grad_tol = 1e-6
    try:
        res = hessian_index(field, V, loop, grad_tol=grad_tol)
    except NotCritical as exc:
        print(f"not critical: {exc}")
        return EXIT_NUMERICAL
    print(f"morse_index={res.morse_index}")
    print(f"nullity={res.nullity}")
    if res.nullity == 0:
        print(f"mu_cz={res.morse_index}")
        print(f"hf_degree={n2 - res.morse_index}")
    elif res.nullity == n2:
        print(f"mu_cz={res.morse_index + res.nullity // 2}")
    else:
        print("mu_cz=undefined (nullity differs from 0 and 2N)")
    print(f"K={res.K}")
    return EXIT_OK


def cmd_verify(cfg, quick=False) -> int:
    results = run_suite(cfg, quick=quick)
    print()
    print(summary_table(results))
    for r in results:
        if r.status == "SKIP":
            print(f"skipped {r.number}: {r.detail}")
    return exit_code(results)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="magtorus",
                                 description="Periodic orbits of magnetic systems on flat tori")
    ap.add_argument("command", choices=["check", "find", "index", "verify"])
    ap.add_argument("--config", help="JSON run configuration (default: bundled example)")
    ap.add_argument("--seed", type=int, help="override search.seed")
    ap.add_argument("--quick", action="store_true", help="verify: skip the orbit search")
    ap.add_argument("--constant", metavar="X0,...", help="index: constant loop at x0")
    ap.add_argument("--orbit", metavar="CSV", help="index: orbit sample file")
    ap.add_argument("--output-dir", help="find: override output_dir")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg = _load(args)
        if args.command == "check":
            return cmd_check(cfg)
        if args.command == "find":
            return cmd_find(cfg, args.output_dir)
        if args.command == "index":
            return cmd_index(cfg, args.constant, args.orbit)
        return cmd_verify(cfg, args.quick)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except (MagtorusError, FloatingPointError, np.linalg.LinAlgError) as exc:
        _err(f"numerical failure: {type(exc).__name__}: {exc}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
