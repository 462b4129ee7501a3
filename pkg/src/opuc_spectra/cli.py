"""Command-line front end: JSON-configured experiments writing CSV/JSON outputs.

Exit codes: 0 clean, 2 success with warnings, 1 failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import approximants as ap
from . import cmv
from . import diagonalization as dg
from . import predictor as pr
from .arcs import TWO_PI, ArcSet
from .errors import ConfigurationError, OpucError
from .io import write_csv, write_json
from .sequences import VerblunskySequence, parse_complex
from .transfer import BranchTracker, structure_report

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_WARN = 0, 1, 2


@dataclass
class ExperimentConfig:
    sequence: VerblunskySequence
    p: int = 1
    arc: ArcSet = field(default_factory=ArcSet.full)
    n_theta: int = 721
    m_window: tuple = (1000, 4000)
    sign_window: tuple = (0, 400)
    N_list: tuple = (25, 100)
    windows: tuple = tuple((2**k, 2 ** (k + 1)) for k in range(4, 10))
    tol_band: float = 1e-9
    drift_tol: float = 1e-6
    oracle_tol: float = 1e-3
    torus_tol: float = 1e-2
    weights: tuple = ("1",)
    oracle: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    seed: int = 0

    @property
    def gamma(self):
        if "gamma" in self.extra:
            return [parse_complex(g) for g in self.extra["gamma"]]
        if self.sequence.kind in ("p-periodic", "periodic-plus-decaying"):
            return [parse_complex(g) for g in self.sequence.params["period"]]
        if self.sequence.kind == "constant":
            return [parse_complex(self.sequence.params["value"])] * self.p
        raise ConfigurationError("config needs 'gamma' (the periodic model) for this command")


def _positive(name, value):
    if not value > 0:
        raise ConfigurationError(f"{name} must be positive, got {value!r}")
    return value


def load_config(obj: dict, seed: int | None = None) -> ExperimentConfig:
    if obj.get("schemaVersion") != SCHEMA_VERSION:
        raise ConfigurationError(f"config must declare \"schemaVersion\": {SCHEMA_VERSION}")
    if "sequence" not in obj:
        raise ConfigurationError("config needs a 'sequence' object")
    seq = VerblunskySequence.from_json(obj["sequence"])
    probe = 1024
    if seq.kind == "explicit-list":
        probe = max(probe, len(seq.params["values"]) + 1)
    seq.alphas(np.arange(probe))  # reject out-of-disk coefficients up front
    p = int(obj.get("p", 1))
    _positive("p", p)
    arc = obj.get("arc")
    arc_set = ArcSet.full() if arc is None else ArcSet(((float(arc[0]), float(arc[1])),))
    if arc_set.is_empty or arc_set.measure() <= 0:
        raise ConfigurationError("arc must be nonempty")
    grids = obj.get("grids", {})
    tol = obj.get("tolerances", {})
    cfg = ExperimentConfig(sequence=seq, p=p, arc=arc_set)
    cfg.n_theta = int(_positive("grids.theta", grids.get("theta", cfg.n_theta)))
    cfg.m_window = tuple(int(x) for x in grids.get("mWindow", cfg.m_window))
    cfg.sign_window = tuple(int(x) for x in grids.get("signWindow", cfg.sign_window))
    cfg.N_list = tuple(int(_positive("grids.N", int(x))) for x in grids.get("N", cfg.N_list))
    if "windows" in grids:
        cfg.windows = tuple(tuple(int(v) for v in w) for w in grids["windows"])
    for key, attr in (("band", "tol_band"), ("drift", "drift_tol"), ("oracle", "oracle_tol"), ("torus", "torus_tol")):
        if key in tol:
            setattr(cfg, attr, float(_positive(f"tolerances.{key}", float(tol[key]))))
    cfg.weights = tuple(obj.get("weights", cfg.weights))
    for w in cfg.weights:
        if w not in ap.WEIGHTS:
            raise ConfigurationError(f"unknown entropy weight {w!r}")
    cfg.oracle = dict(obj.get("oracle", {}))
    cfg.extra = {k: v for k, v in obj.items() if k in ("gamma", "A", "Aplus", "Aminus", "delta")}
    cfg.seed = int(seed if seed is not None else obj.get("seed", 0))
    return cfg


# ---------------------------------------------------------------------------
# commands


def _full_grid(n):
    return np.linspace(0.0, TWO_PI, n)


def _arc_grid(cfg, interior=0.0):
    return cfg.arc.grid(cfg.n_theta, interior=interior)


def cmd_lz(cfg, out: Path):
    theta = _full_grid(cfg.n_theta)
    prof = pr.compute_l(cfg.sequence, cfg.p, theta, cfg.m_window, cfg.drift_tol)
    lower, upper = pr.predict_from_l(prof, cfg.tol_band)
    write_csv(out / "lprofile.csv", ["theta", "L"], [prof.theta, prof.values])
    write_json(out / "prediction.json", {"lower": lower.to_json()["arcs"], "upper": upper.to_json()["arcs"],
                                         "window": list(prof.window), "drift": prof.drift,
                                         "drifting": prof.drifting})
    return {"lower": lower, "upper": upper}


def cmd_predict_p1(cfg, out: Path):
    if "A" in cfg.extra:
        A, source = float(cfg.extra["A"]), "config"
    else:
        A, source = pr.estimate_closed_form_constants(cfg.sequence, 1, cfg.m_window, cfg.drift_tol).values["A"], "estimated"
    pred = pr.predict_p1(A)
    write_json(out / "prediction.json", {"A": A, "source": source, "predicted": pred.to_json()["arcs"]})
    return pred


def cmd_predict_p2(cfg, out: Path):
    if "Aplus" in cfg.extra and "Aminus" in cfg.extra:
        a_p, a_m, source = float(cfg.extra["Aplus"]), float(cfg.extra["Aminus"]), "config"
    else:
        vals = pr.estimate_closed_form_constants(cfg.sequence, 2, cfg.m_window, cfg.drift_tol).values
        a_p, a_m, source = vals["Aplus"], vals["Aminus"], "estimated"
    pred = pr.predict_p2(a_p, a_m)
    write_json(out / "prediction.json", {"Aplus": a_p, "Aminus": a_m, "source": source,
                                         "predicted": pred.to_json()["arcs"]})
    return pred


def cmd_bands(cfg, out: Path):
    model = pr.periodic_bands(cfg.gamma)
    theta = _full_grid(cfg.n_theta)
    write_csv(out / "discriminant.csv", ["theta", "Delta"], [theta, model.discriminant(theta).real])
    write_json(out / "bands.json", {"gamma": list(model.gamma), "bands": model.bands.to_json()["arcs"],
                                    "degenerateEdges": model.degenerate_edges, "gridSize": model.grid_size})
    return model


def cmd_torus_check(cfg, out: Path):
    model = pr.periodic_bands(cfg.gamma)
    res = pr.torus_convergence_check(cfg.sequence, model, cfg.p, cfg.windows, tol=cfg.torus_tol)
    write_json(out / "torus.json", {"converges": res.converges, "supGap": res.sup_gap, "windows": res.windows})
    if not res.converges:
        warnings.warn("discriminants do not converge to the isospectral torus", pr.PredictionWarning)
    return res


def _sign_constants(cfg):
    return dg.detect_sign_constants(cfg.sequence, cfg.p, cfg.arc, m_window=cfg.sign_window)


def cmd_density(cfg, out: Path):
    sc = _sign_constants(cfg)
    theta = _arc_grid(cfg)
    reports = []
    for N in cfg.N_list:
        prof = ap.ac_density(ap.approximant_spec(cfg.sequence, N, cfg.p), theta, sc)
        write_csv(out / f"density_N{N}.csv", ["theta", "w"], [prof.theta, prof.w])
        for wname in cfg.weights:
            reports.append(ap.entropy_integral(prof, wname).to_json())
    write_json(out / "entropy.json", reports)
    return reports


def _oracle_rows(cfg, sc):
    theta = _arc_grid(cfg, interior=1e-3 * cfg.arc.measure())
    r = float(cfg.oracle.get("r", 1.0 - 1e-6))
    rows = []
    for N in cfg.N_list:
        approx = ap.approximant_spec(cfg.sequence, N, cfg.p)
        w = ap.ac_density(approx, theta, sc).w
        ref = ap.oracle_density(approx, theta, r=r)
        rows.append({"N": N, "supError": float(np.max(np.abs(w - ref))), "tolerance": cfg.oracle_tol})
    return rows


def cmd_oracle_compare(cfg, out: Path):
    sc = _sign_constants(cfg)
    rows = _oracle_rows(cfg, sc)
    report = {"approximants": rows}
    if cfg.oracle.get("cmv", False):
        theta = _arc_grid(cfg, interior=1e-3 * cfg.arc.measure())
        n = int(cfg.oracle.get("n", 256))
        K = int(cfg.oracle.get("phases", 32))
        est = cmv.density_estimate(cfg.sequence, theta, n=n, phases=K, kernel_order=cfg.oracle.get("kernelOrder"))
        N = max(cfg.N_list)
        ref = ap.ac_density(ap.approximant_spec(cfg.sequence, N, cfg.p), theta, sc)
        report["cmv"] = {"n": n, "phases": K, "N": N, **cmv.compare_densities(est, ref)}
    write_json(out / "oracle.json", report)
    if any(row["supError"] > row["tolerance"] for row in rows):
        raise OpucError("approximant density disagrees with the Caratheodory oracle")
    return report


def cmd_strip(cfg, out: Path):
    delta = float(cfg.extra.get("delta", 0.1))
    sc = _sign_constants(cfg)
    choice = ap.choose_stripping_offset(cfg.sequence, cfg.p, cfg.arc, delta, sc=sc)
    write_json(out / "strip.json", {"k": choice.k, "tailSum": choice.tail_sum, "delta": delta,
                                    "window": choice.window, "extrapolated": choice.extrapolated,
                                    "strippedSequence": cfg.sequence.strip(choice.k).to_json()})
    return choice


def _check(name, residual, tol, hard=True, **extra):
    ok = bool(np.isfinite(residual) and residual <= tol)
    return {"name": name, "pass": ok, "residual": float(residual), "tolerance": tol, "hard": hard, **extra}


def cmd_verify(cfg, out: Path):
    rng = np.random.default_rng(cfg.seed)
    checks = []
    # block structure on random points of the circle and the disk
    samples = np.concatenate([np.exp(1j * rng.uniform(0, TWO_PI, 64)),
                              rng.uniform(0.5, 1.0, 32) * np.exp(1j * rng.uniform(0, TWO_PI, 32))])
    ms = rng.integers(0, max(cfg.m_window[1], 1), 8)
    worst = {}
    for m in ms:
        rep = structure_report(cfg.sequence, int(m), cfg.p, samples, BranchTracker(cfg.p))
        for key in ("det", "tildeDet", "trace", "symplectic", "reality", "derivativeReality"):
            worst[key] = max(worst.get(key, 0.0), rep["max"][key])
    for key, val in worst.items():
        checks.append(_check(f"structure.{key}", val, 1e-10))

    sc = _sign_constants(cfg)
    checks.append(_check("signConstants.sEqualsT", 0.0 if sc.s == sc.t else 1.0, 0.0, s=sc.s, t=sc.t, m0=sc.m0,
                         marginC=sc.margin_c, epsilon=sc.epsilon))
    theta = _arc_grid(cfg, interior=1e-3 * cfg.arc.measure())
    sub = theta[:: max(1, len(theta) // 16)]
    window = np.arange(sc.m0, sc.m0 + 1001)
    norms, var = dg.perturbation_norms(cfg.sequence, cfg.p, sub, sc, window)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(var[:, None] > 0, norms / var[:, None], 0.0)
    checks.append(_check("perturbation.ratioFinite", 0.0 if np.all(np.isfinite(ratio)) else 1.0, 0.0, hard=True,
                         maxRatio=float(np.nanmax(ratio)) if ratio.size else 0.0))
    series = dg.frame_series(cfg.sequence, window, cfg.p, sub, 1.0, sc.s)
    sums = [dg.relative_increment_sums(sc.t * series.c[:, j]).max_modulus for j in range(len(sub))]
    checks.append(_check("incrementSums.bounded", 0.0 if np.all(np.isfinite(sums)) else 1.0, 0.0,
                         maxModulus=float(max(sums))))

    for N in cfg.N_list:
        approx = ap.approximant_spec(cfg.sequence, N, cfg.p)
        diag = ap.product_diagnostics(approx, sc=sc, theta=sub)
        checks.append(_check(f"product.N{N}", diag.product_residual, 1e-9))
        checks.append(_check(f"productNormalized.N{N}", diag.normalized_residual, 1e-9))
        trace = ap.weyl_solution(approx, sc=sc, theta=sub)
        checks.append(_check(f"weyl.roundtrip.N{N}", trace.roundtrip_residual, 1e-9))
        checks.append(_check(f"weyl.wronskian.N{N}", trace.wronskian_drift, 1e-8))
    for row in _oracle_rows(cfg, sc):
        checks.append(_check(f"oracle.N{row['N']}", row["supError"], row["tolerance"]))
    bound = ap.weyl_bound_report(cfg.sequence, cfg.p, cfg.N_list, sc, theta=sub)
    report = {"checks": checks, "weylBounds": bound.to_json(), "seed": cfg.seed,
              "allPass": all(c["pass"] for c in checks if c["hard"])}
    write_json(out / "report.json", report)
    if not report["allPass"]:
        failed = [c["name"] for c in checks if c["hard"] and not c["pass"]]
        raise OpucError(f"verification failed: {', '.join(failed)}")
    return report


COMMANDS = {
    "lz": cmd_lz,
    "predict-p1": cmd_predict_p1,
    "predict-p2": cmd_predict_p2,
    "bands": cmd_bands,
    "torus-check": cmd_torus_check,
    "density": cmd_density,
    "oracle-compare": cmd_oracle_compare,
    "verify": cmd_verify,
    "strip": cmd_strip,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opuc-spectra", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="path to the JSON experiment config")
    parser.add_argument("--out", default=".", help="output directory (default: current directory)")
    parser.add_argument("--seed", type=int, default=None, help="seed for randomized checks")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not (0 <= args.seed < 2**64):
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_FAIL
    out = Path(args.out)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            cfg = load_config(json.loads(Path(args.config).read_text()), args.seed)
            COMMANDS[args.command](cfg, out)
        except (OpucError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
            print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_FAIL
    relevant = [w for w in caught if not issubclass(w.category, (DeprecationWarning, PendingDeprecationWarning))]
    for w in relevant:
        print(f"warning: {w.message}", file=sys.stderr)
    return EXIT_WARN if relevant else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
