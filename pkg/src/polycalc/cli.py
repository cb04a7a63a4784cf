"""Batch harness: seeded experiment pipelines with JSON/CSV reports.

Usage:  polycalc <subcommand> --config file.json [--out dir] [--seed n]

Subcommands: classify | coeffs | dilate | vn | similarity | funcalc |
full-suite.  Exit codes: 0 all thresholds met, 1 threshold failure,
2 invalid input.  POLYCALC_THREADS overrides trial parallelism.  The
summary JSON segregates wall-clock numbers under "timing" so identical
configurations reproduce reports byte-identically elsewhere.
"""

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import dilation, ergodic, funcalc, generators, multivar, squarefn, taylor
from .errors import ConfigError, Infeasible, PolycalcError
from .numerics import opnorm
from .polygonal import PointSetE, build_Er, classify_ritt

SUBCOMMANDS = ("classify", "coeffs", "squarefn", "dilate", "vn", "similarity",
               "funcalc", "full-suite")


@dataclass
class ExperimentConfig:
    seed: int = 12345
    subcommand: str = "full-suite"
    e_angles: list = field(default_factory=lambda: [0.0])
    r: float = 0.5
    dim: int = 4
    trials: int = 8
    n_max: int = 20
    tol: float = 1e-8
    degree_max: int = 8
    d: int = 1
    m_max: int = 200
    cond_cap: float = 8.0
    phi_samples: int = 200

    def points(self):
        return PointSetE(np.exp(1j * np.array(self.e_angles, dtype=float)))

    def to_json(self):
        return {k: getattr(self, k) for k in (
            "seed", "subcommand", "e_angles", "r", "dim", "trials", "n_max",
            "tol", "degree_max", "d", "m_max", "cond_cap", "phi_samples")}


def _expect(cond, field_name, msg):
    if not cond:
        raise ConfigError("%s: %s" % (field_name, msg))


def load_config(obj, subcommand=None, seed=None):
    """Validate a config mapping; error messages name the offending field."""
    if not isinstance(obj, dict):
        raise ConfigError("config: expected a JSON object")
    cfg = ExperimentConfig()
    known = set(cfg.to_json())
    known.update({"e_points"})
    for key in obj:
        if key not in known:
            raise ConfigError("%s: unknown field" % key)
    if "e_points" in obj and "e_angles" in obj:
        raise ConfigError("e_points: give either e_points or e_angles, not both")
    if "e_points" in obj:
        pts = obj["e_points"]
        _expect(isinstance(pts, list) and pts, "e_points", "need a non-empty list")
        angles = []
        for i, p in enumerate(pts):
            _expect(isinstance(p, (list, tuple)) and len(p) == 2,
                    "e_points[%d]" % i, "expected [re, im]")
            z = complex(p[0], p[1])
            _expect(abs(abs(z) - 1.0) <= 1e-12, "e_points[%d]" % i,
                    "modulus %.12g is not unimodular" % abs(z))
            angles.append(math.atan2(p[1], p[0]))
        cfg.e_angles = angles
    elif "e_angles" in obj:
        a = obj["e_angles"]
        _expect(isinstance(a, list) and a, "e_angles", "need a non-empty list")
        cfg.e_angles = [float(x) for x in a]
    for key, typ, lo, hi in (
            ("seed", int, 0, 2 ** 64 - 1), ("dim", int, 1, 16),
            ("trials", int, 1, 10 ** 6), ("n_max", int, 1, 10 ** 4),
            ("degree_max", int, 1, 64), ("d", int, 1, 3),
            ("m_max", int, 1, 10 ** 6)):
        if key in obj:
            v = obj[key]
            _expect(isinstance(v, int) and not isinstance(v, bool),
                    key, "expected an integer")
            _expect(lo <= v <= hi, key, "out of range [%d, %d]" % (lo, hi))
            setattr(cfg, key, v)
    for key, lo, hi in (("r", 1e-8, 1 - 1e-12), ("tol", 1e-15, 1.0),
                        ("cond_cap", 1.0, 1e6)):
        if key in obj:
            v = obj[key]
            _expect(isinstance(v, (int, float)) and not isinstance(v, bool),
                    key, "expected a number")
            _expect(lo <= float(v) <= hi, key,
                    "out of range [%g, %g]" % (lo, hi))
            setattr(cfg, key, float(v))
    if "phi_samples" in obj:
        v = obj["phi_samples"]
        _expect(isinstance(v, int) and v >= 1, "phi_samples",
                "expected a positive integer")
        cfg.phi_samples = v
    if "subcommand" in obj:
        _expect(obj["subcommand"] in SUBCOMMANDS, "subcommand",
                "must be one of %s" % (SUBCOMMANDS,))
        cfg.subcommand = obj["subcommand"]
    try:
        cfg.points()
    except ValueError as exc:
        raise ConfigError("e_angles: %s" % exc)
    if subcommand:
        cfg.subcommand = subcommand
    if seed is not None:
        cfg.seed = int(seed)
    return cfg


def _threads():
    try:
        return max(1, int(os.environ.get("POLYCALC_THREADS", "1")))
    except ValueError:
        return 1


def _map_trials(fn, seeds):
    """Deterministic map over per-trial spawned seeds (ordered by index)."""
    nt = _threads()
    if nt == 1:
        return [fn(i, s) for i, s in enumerate(seeds)]
    with ThreadPoolExecutor(max_workers=nt) as ex:
        futs = [ex.submit(fn, i, s) for i, s in enumerate(seeds)]
        return [f.result() for f in futs]


def _spawn(seed, count):
    return np.random.SeedSequence(seed).spawn(count)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------------------
# pipelines

def run_classify(cfg, out_dir):
    E = cfg.points()
    seeds = _spawn(cfg.seed, cfg.trials)

    def one(i, s):
        T = generators.gen_ritt_matrix(E, cfg.r, cfg.dim,
                                       peripheral_count=min(1, E.size),
                                       cond_cap=cfg.cond_cap, seed=s)
        cert = classify_ritt(T, E)
        return (i, cfg.dim, cert.M_estimate, cert.refinement_ratio,
                cert.verdict)

    rows = _map_trials(one, seeds)
    _write_csv(os.path.join(out_dir, "classify.csv"),
               ["trial", "dim", "M_estimate", "refinement_ratio", "verdict"],
               rows)
    ok = all(r[-1] == "pass" for r in rows)
    return {"pass": ok, "n": len(rows),
            "max_M": max(r[2] for r in rows)}


def run_coeffs(cfg, out_dir):
    E = cfg.points()
    a = taylor.a_coeffs_recursive(E, cfg.m_max)
    apf = taylor.a_coeffs_partial_fraction(E, cfg.m_max)
    err = float(np.max(np.abs(a - apf)))
    _write_csv(os.path.join(out_dir, "coeffs.csv"),
               ["m", "re_a", "im_a"],
               [(m, repr(a[m].real), repr(a[m].imag)) for m in range(a.size)])
    return {"pass": err <= 1e-12, "max_abs_gap": err,
            "sup_a": float(np.max(np.abs(a)))}


def run_squarefn(cfg, out_dir):
    E = cfg.points()
    seeds = _spawn(cfg.seed, cfg.trials)

    def one(i, s):
        T = generators.gen_ritt_matrix(E, cfg.r, cfg.dim,
                                       peripheral_count=min(1, E.size),
                                       cond_cap=cfg.cond_cap, seed=s)
        est = squarefn.square_constant_estimate(T, E, trials=16, seed=i)
        return (i, est)

    rows = _map_trials(one, seeds)
    report = {"per_trial": [{"trial": i, "constant_estimate": v}
                            for i, v in rows],
              "max_constant": max(v for _, v in rows)}
    with open(os.path.join(out_dir, "squarefn.json"), "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    return {"pass": all(math.isfinite(v) for _, v in rows),
            "max_constant": report["max_constant"]}


def run_dilate(cfg, out_dir):
    E = cfg.points()
    seeds = _spawn(cfg.seed, cfg.trials)

    def one(i, s):
        T = generators.gen_ritt_matrix(E, cfg.r, cfg.dim,
                                       peripheral_count=min(1, E.size),
                                       cond_cap=cfg.cond_cap, seed=s)
        dil = dilation.specific_dilation(T, E, n_max=cfg.n_max, tol=cfg.tol)
        return (i, dil.certified_error, dil.K_max, dil.period)

    rows = _map_trials(one, seeds)
    _write_csv(os.path.join(out_dir, "dilate.csv"),
               ["trial", "certified_error", "K_max", "period"], rows)
    worst = max(r[1] for r in rows)
    return {"pass": worst <= cfg.tol, "max_error": worst, "n": len(rows)}


def run_vn(cfg, out_dir):
    seeds = _spawn(cfg.seed, cfg.trials)
    threshold = 1.0 + 1e-9 if cfg.d == 1 else 1.0 + 1e-6

    def one(i, s):
        rng = np.random.default_rng(s)
        Ts = generators.gen_commuting_tuple(cfg.d, cfg.dim, "shared_diagonal",
                                            seed=s, cond_cap=cfg.cond_cap)
        if cfg.d == 1:
            Ts = [Ts[0] / max(opnorm(Ts[0]), 1e-300) * 0.999]
        worst = 0.0
        for _ in range(max(1, cfg.phi_samples // cfg.trials)):
            phi = funcalc._random_poly(cfg.d, int(rng.integers(1, cfg.degree_max + 1)), rng)
            try:
                worst = max(worst, multivar.vn_ratio(Ts, phi))
            except multivar.DegeneratePoly:
                continue
        return (i, worst)

    rows = _map_trials(one, seeds)
    _write_csv(os.path.join(out_dir, "vn.csv"), ["trial", "max_ratio"], rows)
    worst = max(r[1] for r in rows)
    ok = (worst <= threshold) if cfg.d == 1 else True
    return {"pass": ok, "max_ratio": worst, "threshold": threshold,
            "enforced": cfg.d == 1}


def run_similarity(cfg, out_dir):
    seeds = _spawn(cfg.seed, cfg.trials)

    def one(i, s):
        Ts = generators.gen_commuting_tuple(max(cfg.d, 1), cfg.dim,
                                            "shared_diagonal", seed=s,
                                            cond_cap=cfg.cond_cap)
        try:
            res = multivar.joint_similarity(Ts)
            return (i, max(res.margins), res.iterations, True)
        except Infeasible:
            return (i, math.inf, -1, False)

    rows = _map_trials(one, seeds)
    jordan_ok = False
    try:
        multivar.joint_similarity([np.array([[1, 1], [0, 1]], dtype=complex)],
                                  max_iter=300)
    except Infeasible:
        jordan_ok = True
    _write_csv(os.path.join(out_dir, "similarity.csv"),
               ["trial", "max_margin", "iterations", "feasible"], rows)
    ok = all(r[3] and r[1] <= 1 + 1e-8 for r in rows) and jordan_ok
    return {"pass": ok, "jordan_infeasible": jordan_ok,
            "max_margin": max(r[1] for r in rows)}


def run_funcalc(cfg, out_dir):
    E = cfg.points()
    region = build_Er(E, cfg.r)
    quad = funcalc.ContourQuadrature.build(region, 64)
    wind_err = abs(quad.winding(0.0) - 1.0)
    rng = np.random.default_rng(cfg.seed)
    T = generators.gen_ritt_matrix(E, cfg.r, cfg.dim, peripheral_count=0,
                                   cond_cap=cfg.cond_cap, seed=cfg.seed)
    # shrink so the spectrum clears the contour
    T = 0.8 * T * cfg.r / max(opnorm(T), 1e-300)
    errs = []
    for _ in range(8):
        phi = funcalc._random_poly(1, cfg.degree_max, rng)
        direct = multivar.eval_multipoly(phi, [T])
        viaint = funcalc.contour_eval_1d(phi, T, quad)
        errs.append(opnorm(direct - viaint) / (1.0 + opnorm(direct)))
    cert = funcalc.theorem51_certificate(
        [T], E, cfg.r, phi_samples=cfg.phi_samples, seed=cfg.seed,
        deg_max=cfg.degree_max, check_gates=False)
    _write_csv(os.path.join(out_dir, "funcalc.csv"),
               ["degree", "ratio"],
               list(zip(cert.degrees.tolist(), cert.ratios.tolist())))
    ok = wind_err <= 1e-10 and max(errs) <= 1e-8 and cert.passed
    return {"pass": ok, "winding_error": wind_err,
            "max_contour_error": max(errs),
            "ratio_slope": cert.slope, "ratio_p": cert.p_value}


PIPELINES = {
    "classify": run_classify,
    "coeffs": run_coeffs,
    "squarefn": run_squarefn,
    "dilate": run_dilate,
    "vn": run_vn,
    "similarity": run_similarity,
    "funcalc": run_funcalc,
}


def run_experiment(cfg, out_dir):
    """Run the configured pipeline(s); returns (summary dict, all_pass)."""
    os.makedirs(out_dir, exist_ok=True)
    results = {}
    timing = {}
    names = list(PIPELINES) if cfg.subcommand == "full-suite" else [cfg.subcommand]
    for name in names:
        t0 = time.perf_counter()
        results[name] = PIPELINES[name](cfg, out_dir)
        timing[name] = time.perf_counter() - t0
    all_pass = all(bool(r.get("pass", False)) for r in results.values())
    summary = {"config": cfg.to_json(), "results": results,
               "pass": all_pass}

    def np_scalar(o):
        if isinstance(o, np.generic):
            return o.item()
        raise TypeError("not serializable: %r" % (o,))

    with open(os.path.join(out_dir, "summary.json"), "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True, default=np_scalar)
        f.write("\n")
    with open(os.path.join(out_dir, "timing.json"), "w") as f:
        json.dump({"timing": timing}, f, indent=2, sort_keys=True)
        f.write("\n")
    return summary, all_pass


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="polycalc",
        description="Batch experiments for peripheral-spectrum operator "
                    "constructions (dilations, von Neumann ratios, joint "
                    "similarity, contour calculus).")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--out", default="polycalc-out", help="report directory")
    ap.add_argument("--seed", type=int, default=None, help="override seed")
    args = ap.parse_args(argv)
    try:
        obj = {}
        if args.config:
            with open(args.config) as f:
                obj = json.load(f)
        cfg = load_config(obj, subcommand=args.subcommand, seed=args.seed)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    try:
        summary, ok = run_experiment(cfg, args.out)
    except PolycalcError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    for name, res in summary["results"].items():
        print("%-12s %s" % (name, "PASS" if res.get("pass") else "FAIL"))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
