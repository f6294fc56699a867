"""Catalog persistence: deterministic JSON and per-orbit CSV samples."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from pathlib import Path
from typing import Optional

import numpy as np

from .atlas import (Orbit, Prediction, SearchResult, audit_counts, find_orbits, morse_audit,
                    predict, theorem_b_check)
from .dynamics import integrate, residual, trajectory_residual
from .errors import DegenerateOrbitPresent, Resonant
from .fields import NonResCertificate, certify_nonresonance
from .torus import torus_delta

VERSION = "0.1.0"


def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    return format(x, ".17g")


def _emit(obj, out: list, indent: int, level: int):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = sorted((str(k), v) for k, v in obj.items())
        for i, (k, v) in enumerate(items):
            out.append(pad + json.dumps(k, ensure_ascii=False) + ": ")
            _emit(v, out, indent, level + 1)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            out.append("[]")
        elif all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            parts = []
            for v in seq:
                buf: list = []
                _emit(v, buf, indent, level + 1)
                parts.append("".join(buf))
            out.append("[" + ", ".join(parts) + "]")
        else:
            out.append("[\n")
            for i, v in enumerate(seq):
                out.append(pad)
                _emit(v, out, indent, level + 1)
                out.append(",\n" if i < len(seq) - 1 else "\n")
            out.append(end + "]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON with sorted keys and 17-significant-digit floats."""
    out: list = []
    _emit(obj, out, indent, 0)
    return "".join(out) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


# orbit samples --------------------------------------------------------------

def samples_csv(orbit: Orbit) -> str:
    traj = orbit.trajectory
    n2 = traj.lifted.shape[1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"x{i + 1}" for i in range(n2)] + [f"p{i + 1}" for i in range(n2)])
    for t, x, p in zip(traj.times, traj.positions, traj.momenta):
        w.writerow([_fmt_float(float(v)) for v in (t, *x, *p)])
    return buf.getvalue()


def read_samples(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(t, wrapped x, p) from an orbit CSV file."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    n2 = (len(header) - 1) // 2
    if header != ["t"] + [f"x{i + 1}" for i in range(n2)] + [f"p{i + 1}" for i in range(n2)]:
        raise ValueError(f"unexpected header in {path}")
    return body[:, 0], body[:, 1:1 + n2], body[:, 1 + n2:]


def sample_lift(x: np.ndarray) -> np.ndarray:
    """Lift wrapped samples whose last row closes the loop (returns the same row count)."""
    steps = torus_delta(x[1:], x[:-1])
    return np.vstack([x[:1], x[0] + np.cumsum(steps, axis=0)])


def reintegrate(field, V, path, tol: float = 1e-10) -> dict:
    """Re-integrate an orbit from its first CSV row; report the residuals."""
    t, x, p = read_samples(path)
    tau = t[-1] - t[0]
    lifted = sample_lift(x)
    h = np.rint(lifted[-1] - lifted[0])
    stored = residual(field, V, lifted[:-1], p[:-1], tau, winding=h)
    traj = integrate(field, V, (x[0], p[0]), (t[0], t[-1]), False, tol, n_out=len(t) - 1)
    dev = float(np.max(np.abs(np.hstack([torus_delta(traj.positions, x), traj.momenta - p]))))
    return {"stored_residual": stored, "residual": trajectory_residual(field, V, traj),
            "max_deviation": dev, "winding": h.astype(int).tolist()}


# catalog --------------------------------------------------------------------

def orbit_record(orbit: Orbit, oid: str) -> dict:
    return {
        "id": oid,
        "seed_index": orbit.seed_index,
        "initial": {"x": orbit.initial.x.tolist(), "p": orbit.initial.p.tolist()},
        "winding": [int(v) for v in orbit.winding],
        "action_total": orbit.action_total,
        "residual": orbit.residual,
        "gap": orbit.gap,
        "det_m": orbit.det_m,
        "nondegenerate": orbit.nondegenerate,
        "morse_index": orbit.morse_index,
        "nullity": orbit.nullity,
        "mu_cz": orbit.mu_cz,
        "cz_index": orbit.cz_index,
        "max_p": orbit.max_p,
        "within_momentum_bound": orbit.within_momentum_bound,
        "samples": f"orbits/{oid}.csv",
    }


def prediction_record(pred: Optional[Prediction]) -> Optional[dict]:
    if pred is None:
        return None
    return {
        "k_total": pred.k_total,
        "hf_ranks": {str(j): r for j, r in sorted(pred.hf_ranks.items())},
        "min_count": pred.min_count,
        "generic_count": pred.generic_count,
        "novikov": {",".join(map(str, h)): {"phi": phi.tolist(), "gamma_rank": rank}
                    for h, (phi, rank) in sorted(pred.novikov.items())},
    }


def class_record(ci: int, res: SearchResult, pred: Optional[Prediction], V_zero: bool) -> dict:
    h = [int(v) for v in res.h]
    orbits = [orbit_record(o, f"{ci:02d}-{i:03d}") for i, o in enumerate(res.orbits)]
    notes = list(res.notes)
    audit = theorem_b = None
    if any(h):
        theorem_b = theorem_b_check(res.orbits, h)
        if V_zero and not res.orbits:
            notes.append("V = 0 and h != 0: empty list is consistent, "
                         "there are no non-constant solutions")
    elif pred is not None:
        try:
            audit = morse_audit(res.orbits, pred).as_dict()
        except DegenerateOrbitPresent:
            notes.append("audit skipped: degenerate orbits present")
    return {"h": h, "critical_manifold": res.critical_manifold, "n_seeds": res.n_seeds,
            "n_converged": res.n_converged, "certified": res.certified, "notes": notes,
            "orbits": orbits, "audit": audit, "theorem_b": theorem_b}


def build_catalog(config: dict, seed: int, cert: Optional[NonResCertificate],
                  pred: Optional[Prediction], results: list, V_zero: bool) -> dict:
    return {
        "tool": {"name": "magtorus", "version": VERSION},
        "seed": seed,
        "config": config,
        "certificate": None if cert is None else cert.as_dict(),
        "prediction": prediction_record(pred),
        "classes": [class_record(i, r, pred, V_zero) for i, r in enumerate(results)],
    }


def write_catalog(out_dir, catalog: dict, results: list) -> Path:
    out = Path(out_dir)
    (out / "orbits").mkdir(parents=True, exist_ok=True)
    for rec, res in zip(catalog["classes"], results):
        for orec, orbit in zip(rec["orbits"], res.orbits):
            (out / orec["samples"]).write_text(samples_csv(orbit), encoding="utf-8")
    path = out / "catalog.json"
    write_json(path, catalog)
    write_json(out / "config.resolved.json", catalog["config"])
    return path


def reaudit(catalog: dict) -> list:
    """Recompute the audit verdict of each contractible class from stored data."""
    verdicts = []
    pred = catalog.get("prediction")
    for rec in catalog["classes"]:
        if rec["audit"] is None or pred is None:
            verdicts.append(None)
            continue
        counts: dict = {}
        for o in rec["orbits"]:
            counts[o["cz_index"]] = counts.get(o["cz_index"], 0) + 1
        ranks = {int(j): r for j, r in pred["hf_ranks"].items()}
        verdicts.append(audit_counts(counts, ranks).as_dict())
    return verdicts


def run_search(cfg) -> tuple[dict, list]:
    """Certificate, prediction and orbit search for every class of a RunConfig."""
    field, V = cfg.magnetic_field(), cfg.potential_model()
    try:
        cert = certify_nonresonance(field, cfg.tau)
        pred = predict(field, cfg.tau, classes=[h for h in cfg.classes if any(h)])
    except Resonant:
        cert = pred = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        results = [find_orbits(field, V, cfg.tau, h, cfg.search) for h in cfg.classes]
    cat = build_catalog(cfg.to_dict(), cfg.search.seed, cert, pred, results, V.is_zero)
    return cat, results
