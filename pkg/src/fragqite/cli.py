"""Seeded experiment pipelines and command-line surface.

Commands emit CSV/JSON only (plotting is external); identical config and
seed give byte-identical output.  Exit codes: 0 ok, 2 config error,
3 validation failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys

import numpy as np

from . import bounds, master, parity, schedules, simulator
from .hamiltonians import CLASSES, diagonalize, gen_ensemble, rescale
from .schedules import fit_beta_crit, fit_power_law

DEFAULT_CLASSES = ("weighted_maxcut",)
DIAGONAL_CLASSES = ("maxcut", "weighted_maxcut", "noninteracting")


class ConfigError(ValueError):
    pass


@dataclasses.dataclass
class ExperimentConfig:
    """Desk-scale defaults: 50 instances per class, log beta grid over
    1..10^4, the three standard tolerated errors."""

    classes: tuple[str, ...] = DEFAULT_CLASSES
    n_values: tuple[int, ...] = (6, 8, 10, 12)
    instances: int = 50
    eps_values: tuple[float, ...] = (1e-1, 1e-2, 1e-3)
    beta_min: float = 1.0
    beta_max: float = 1e4
    beta_points: int = 25
    primitive: str = "p1"
    r_max: int = 8
    seed: int = 7
    out_dir: str = "out"

    def validate(self):
        if not self.classes:
            raise ConfigError("no Hamiltonian classes requested")
        for c in self.classes:
            if c not in CLASSES or c == "custom":
                raise ConfigError(f"unknown class {c!r}")
        if not self.n_values or any(n < 2 or n > 15 for n in self.n_values):
            raise ConfigError("qubit counts must lie in 2..15")
        for c in self.classes:
            if c not in DIAGONAL_CLASSES and max(self.n_values) > 12:
                raise ConfigError(f"class {c!r} needs a dense eigensolve; cap N at 12")
        if self.instances < 1:
            raise ConfigError("need at least one instance per class")
        if not self.eps_values or any(not (0 < e < 1) for e in self.eps_values):
            raise ConfigError("eps values must lie in (0, 1)")
        if not (0 < self.beta_min < self.beta_max) or self.beta_points < 2:
            raise ConfigError("need 0 < beta_min < beta_max and at least two grid points")
        if self.primitive not in ("p1", "p2"):
            raise ConfigError("primitive must be p1 or p2")
        if self.r_max < 1:
            raise ConfigError("r_max must be positive")
        return self

    @property
    def beta_grid(self) -> np.ndarray:
        return np.geomspace(self.beta_min, self.beta_max, self.beta_points)

    @staticmethod
    def from_args(args) -> "ExperimentConfig":
        data = {}
        if getattr(args, "config", None):
            with open(args.config) as fh:
                data.update(json.load(fh))
        overrides = {
            "classes": ("classes", lambda v: tuple(v.split(","))),
            "n": ("n_values", lambda v: tuple(int(x) for x in v.split(","))),
            "instances": ("instances", int),
            "eps": ("eps_values", lambda v: tuple(float(x) for x in v.split(","))),
            "beta_min": ("beta_min", float),
            "beta_max": ("beta_max", float),
            "beta_points": ("beta_points", int),
            "primitive": ("primitive", str),
            "rmax": ("r_max", int),
            "seed": ("seed", int),
            "out": ("out_dir", str),
        }
        for flag, (key, conv) in overrides.items():
            val = getattr(args, flag, None)
            if val is not None:
                data[key] = conv(val)
        known = {f.name for f in dataclasses.fields(ExperimentConfig)}
        bad = set(data) - known
        if bad:
            raise ConfigError(f"unknown config keys: {sorted(bad)}")
        if "classes" in data:
            data["classes"] = tuple(data["classes"])
        if "n_values" in data:
            data["n_values"] = tuple(int(x) for x in data["n_values"])
        if "eps_values" in data:
            data["eps_values"] = tuple(float(x) for x in data["eps_values"])
        return ExperimentConfig(**data).validate()


def instance_seed(root: int, class_idx: int, n: int, idx: int) -> int:
    return int(np.random.SeedSequence([root, class_idx, n, idx]).generate_state(1)[0])


def iter_instances(cfg: ExperimentConfig):
    for ci, klass in enumerate(cfg.classes):
        for n in cfg.n_values:
            for i in range(cfg.instances):
                seed = instance_seed(cfg.seed, ci, n, i)
                spec = rescale(gen_ensemble(klass, n, seed))
                yield klass, n, seed, diagonalize(spec, "mixed")


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


class CsvWriter:
    """Row-at-a-time CSV with flush, so partial results survive interrupts."""

    def __init__(self, path: str, columns: list[str]):
        self.columns = columns
        self.fh = open(path, "w")
        self.fh.write(",".join(columns) + "\n")
        self.fh.flush()

    def write(self, row: dict):
        self.fh.write(",".join(_fmt(row[c]) for c in self.columns) + "\n")
        self.fh.flush()

    def close(self):
        self.fh.close()


SCAN_COLUMNS = [
    "N", "class", "seed", "eps", "beta", "best_r", "best_a", "Q_frag", "Q_prob",
    "Q_coh", "depth_frag", "depth_prob", "r_uniform", "Q_uniform", "depth_uniform",
    "depth_coh", "dbeta1", "eps1",
]


def _scan_rows(cfg: ExperimentConfig, writer: CsvWriter):
    rows = []
    for klass, n, seed, spectrum in iter_instances(cfg):
        for eps in cfg.eps_values:
            for beta in cfg.beta_grid:
                pt = schedules.scan_point(spectrum, beta / 2.0, eps, cfg.primitive, cfg.r_max)
                row = {
                    "N": n, "class": klass, "seed": seed, "eps": eps, "beta": beta,
                    "best_r": pt.r_opt, "best_a": pt.a_opt, "Q_frag": pt.q_opt,
                    "Q_prob": pt.q_prob, "Q_coh": pt.q_coh, "depth_frag": pt.depth_opt,
                    "depth_prob": pt.depth_prob, "r_uniform": pt.r_uniform,
                    "Q_uniform": pt.q_uniform, "depth_uniform": pt.depth_uniform,
                    "depth_coh": pt.depth_coh, "dbeta1": pt.dbeta1_opt, "eps1": pt.eps1_opt,
                }
                writer.write(row)
                rows.append(row)
    return rows


MASTER_ROW_COLUMNS = ["class", "N", "seed", "beta", "eps", "kind", "r", "a", "Q", "depth"]


def _write_master_rows(rows, path):
    """Long-format per-master-variant rows, one per algorithm kind."""
    writer = CsvWriter(path, MASTER_ROW_COLUMNS)
    for r in rows:
        base = {"class": r["class"], "N": r["N"], "seed": r["seed"],
                "beta": r["beta"], "eps": r["eps"]}
        writer.write({**base, "kind": "prob", "r": 1, "a": 1.0,
                      "Q": r["Q_prob"], "depth": r["depth_prob"]})
        writer.write({**base, "kind": "coh", "r": 1, "a": 1.0,
                      "Q": r["Q_coh"], "depth": r["depth_coh"]})
        writer.write({**base, "kind": "frag-uniform", "r": r["r_uniform"], "a": 1.0,
                      "Q": r["Q_uniform"], "depth": r["depth_uniform"]})
        writer.write({**base, "kind": "frag-ansatz", "r": r["best_r"], "a": r["best_a"],
                      "Q": r["Q_frag"], "depth": r["depth_frag"]})
    writer.close()


def cmd_complexity_scan(cfg: ExperimentConfig) -> int:
    os.makedirs(cfg.out_dir, exist_ok=True)
    writer = CsvWriter(os.path.join(cfg.out_dir, "complexity_scan.csv"), SCAN_COLUMNS)
    rows = _scan_rows(cfg, writer)
    writer.close()
    _write_master_rows(rows, os.path.join(cfg.out_dir, "master_rows.csv"))
    summary = CsvWriter(
        os.path.join(cfg.out_dir, "complexity_summary.csv"),
        ["class", "N", "eps", "beta", "Q_prob_mean", "Q_prob_std", "Q_coh_mean",
         "Q_coh_std", "Q_uniform_mean", "Q_frag_mean", "Q_frag_std"],
    )
    keys = sorted({(r["class"], r["N"], r["eps"], r["beta"]) for r in rows},
                  key=lambda k: (k[0], k[1], k[2], k[3]))
    for klass, n, eps, beta in keys:
        sel = [r for r in rows if (r["class"], r["N"], r["eps"], r["beta"]) == (klass, n, eps, beta)]
        def stats(col):
            vals = np.array([r[col] for r in sel], dtype=float)
            return float(vals.mean()), float(vals.std(ddof=0))
        qp, qps = stats("Q_prob")
        qc, qcs = stats("Q_coh")
        qu, _ = stats("Q_uniform")
        qf, qfs = stats("Q_frag")
        summary.write({
            "class": klass, "N": n, "eps": eps, "beta": beta,
            "Q_prob_mean": qp, "Q_prob_std": qps, "Q_coh_mean": qc, "Q_coh_std": qcs,
            "Q_uniform_mean": qu, "Q_frag_mean": qf, "Q_frag_std": qfs,
        })
    summary.close()
    return 0


def cmd_beta_crit(cfg: ExperimentConfig) -> int:
    os.makedirs(cfg.out_dir, exist_ok=True)
    writer = CsvWriter(
        os.path.join(cfg.out_dir, "beta_crit.csv"),
        ["class", "N", "seed", "eps", "beta_c", "found"],
    )
    per_key: dict = {}
    for klass, n, seed, spectrum in iter_instances(cfg):
        for eps in cfg.eps_values:
            res = schedules.beta_crit_empirical(
                spectrum, eps, cfg.primitive, cfg.beta_grid / 2.0, cfg.r_max
            )
            beta_c = 2.0 * res.beta_c if res.found else float("nan")
            writer.write({"class": klass, "N": n, "seed": seed, "eps": eps,
                          "beta_c": beta_c, "found": int(res.found)})
            if res.found:
                per_key.setdefault((klass, eps), {}).setdefault(n, []).append(beta_c)
    writer.close()
    fits = {}
    for (klass, eps), by_n in sorted(per_key.items()):
        pts = [(n, float(np.mean(v))) for n, v in sorted(by_n.items())]
        entry = {"points": pts}
        if len(pts) >= 4:
            fit = fit_beta_crit(pts)
            entry.update({"A": fit.A, "eta": fit.eta, "B": fit.B, "rmsd": fit.rmsd, "ok": fit.ok})
        fits[f"{klass}|eps={eps:g}"] = entry
    with open(os.path.join(cfg.out_dir, "beta_crit_fit.json"), "w") as fh:
        json.dump(fits, fh, indent=2, sort_keys=True)
    return 0


def cmd_schedule_scan(cfg: ExperimentConfig) -> int:
    os.makedirs(cfg.out_dir, exist_ok=True)
    writer = CsvWriter(
        os.path.join(cfg.out_dir, "schedule_scan.csv"),
        ["class", "N", "seed", "eps", "beta", "r_uniform", "r_opt", "a_opt"],
    )
    rows = []
    for klass, n, seed, spectrum in iter_instances(cfg):
        for eps in cfg.eps_values:
            for beta in cfg.beta_grid:
                r_uni, _ = schedules.best_uniform(spectrum, beta / 2.0, eps, cfg.primitive, cfg.r_max)
                params, _ = schedules.optimize_schedule(spectrum, beta / 2.0, eps, cfg.primitive, cfg.r_max)
                row = {"class": klass, "N": n, "seed": seed, "eps": eps, "beta": beta,
                       "r_uniform": r_uni, "r_opt": params.r, "a_opt": params.a}
                writer.write(row)
                rows.append(row)
    writer.close()
    fits = {}
    for klass in cfg.classes:
        for n in cfg.n_values:
            for eps in cfg.eps_values:
                sel = [r for r in rows if (r["class"], r["N"], r["eps"]) == (klass, n, eps)]
                betas = sorted({r["beta"] for r in sel})
                r_mean = [np.mean([r["r_uniform"] for r in sel if r["beta"] == b]) for b in betas]
                a_mean = [np.mean([r["a_opt"] for r in sel if r["beta"] == b]) for b in betas]
                key = f"{klass}|N={n}|eps={eps:g}"
                entry = {}
                try:
                    A, eta = fit_power_law(betas, r_mean)
                    entry["r_uniform_fit"] = {"A": A, "eta": eta}
                except ValueError:
                    pass
                try:
                    A, eta = fit_power_law(betas, a_mean)
                    entry["a_opt_fit"] = {"A": A, "eta": eta}
                except ValueError:
                    pass
                fits[key] = entry
    with open(os.path.join(cfg.out_dir, "schedule_fits.json"), "w") as fh:
        json.dump(fits, fh, indent=2, sort_keys=True)
    return 0


def cmd_histogram(cfg: ExperimentConfig) -> int:
    os.makedirs(cfg.out_dir, exist_ok=True)
    points = []
    for klass, n, seed, spectrum in iter_instances(cfg):
        for eps in cfg.eps_values:
            for beta in cfg.beta_grid:
                points.append(schedules.scan_point(spectrum, beta / 2.0, eps, cfg.primitive, cfg.r_max))
    ratios, hist, edges = schedules.first_fragment_ratio(points)
    writer = CsvWriter(os.path.join(cfg.out_dir, "first_fragment_hist.csv"),
                       ["bin_lo", "bin_hi", "count"])
    for i, c in enumerate(hist):
        writer.write({"bin_lo": float(edges[i]), "bin_hi": float(edges[i + 1]), "count": int(c)})
    writer.close()
    with open(os.path.join(cfg.out_dir, "first_fragment_stats.json"), "w") as fh:
        json.dump({"max_ratio": float(ratios.max()), "mean_ratio": float(ratios.mean()),
                   "count": len(ratios)}, fh, indent=2, sort_keys=True)
    return 0


def cmd_lower_bound(args) -> int:
    betas = np.geomspace(args.beta_min, args.beta_max, args.points)
    rows = bounds.gap_grid(betas, [args.eps])
    out = args.out or "lower_bound.csv"
    writer = CsvWriter(out, ["beta", "eps", "alpha", "q_tilde", "q1", "ratio"])
    for r in rows:
        writer.write(r)
    writer.close()
    return 0


def cmd_parity_demo(args) -> int:
    rows = []
    rng = np.random.default_rng(args.seed)
    for n in range(args.n_min, args.n_max + 1):
        bits = tuple(int(b) for b in rng.integers(0, 2, size=n))
        ov = parity.overlap_formula(n, args.beta)
        ok = parity.parity_condition(n, args.beta, args.eps, args.alpha)
        outcome = parity.parity_via_qite(bits, args.beta, args.eps, args.alpha,
                                         require_condition=False)
        q_tilde = bounds.solve_lower_bound(args.beta, args.eps, args.alpha)
        rows.append({
            "N": n, "beta": args.beta, "eps": args.eps, "alpha": args.alpha,
            "overlap": ov, "condition_ok": int(ok),
            "success_prob": outcome.success_prob, "predicted_q_tilde": q_tilde,
        })
    out = args.out or "parity_demo.csv"
    writer = CsvWriter(out, ["N", "beta", "eps", "alpha", "overlap", "condition_ok",
                             "success_prob", "predicted_q_tilde"])
    for r in rows:
        writer.write(r)
    writer.close()
    return 0


def cmd_validate_primitive(args) -> int:
    seed = args.seed
    klass = args.hamiltonian_class
    spec = rescale(gen_ensemble(klass, args.n, seed))
    spectrum = diagonalize(spec, "mixed")
    if args.kind == "p1":
        enc, q = simulator.build_p1(spectrum, args.beta, args.eps)
        alpha = 1.0
    else:
        enc, q, alpha = simulator.build_p2(spectrum, args.beta, args.eps)
    err = enc.block_error()
    res = simulator.post_select(enc, "mixed")
    p = res.post_selection_prob
    # output-state degradation bound: with eps' = eps sqrt(p)/2 the distance is O(eps)
    eps_equiv = 2.0 * args.eps / math.sqrt(p) if p > 0 else float("inf")
    dist_bound = 1.5 * eps_equiv
    report = {
        "kind": args.kind, "N": args.n, "beta": args.beta, "eps_prime": args.eps,
        "seed": seed, "queries": q, "alpha": alpha, "block_error": err,
        "block_error_ok": bool(err <= args.eps),
        "post_selection_prob": p,
        "trace_distance": res.trace_distance_to_ideal,
        "trace_distance_bound": dist_bound,
        "trace_distance_ok": bool(res.trace_distance_to_ideal <= dist_bound),
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    ok = report["block_error_ok"] and report["trace_distance_ok"]
    return 0 if ok else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fragqite",
        description="Imaginary-time evolution primitives, fragmented master runs, and experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cfg_flags = argparse.ArgumentParser(add_help=False)
    cfg_flags.add_argument("--config", help="JSON config file")
    cfg_flags.add_argument("--classes", help="comma-separated Hamiltonian classes")
    cfg_flags.add_argument("--n", help="comma-separated qubit counts")
    cfg_flags.add_argument("--instances", type=int)
    cfg_flags.add_argument("--eps", help="comma-separated tolerated errors")
    cfg_flags.add_argument("--beta-min", dest="beta_min", type=float)
    cfg_flags.add_argument("--beta-max", dest="beta_max", type=float)
    cfg_flags.add_argument("--beta-points", dest="beta_points", type=int)
    cfg_flags.add_argument("--primitive", choices=("p1", "p2"))
    cfg_flags.add_argument("--rmax", type=int)
    cfg_flags.add_argument("--seed", type=int)
    cfg_flags.add_argument("--out", help="output directory")

    for name in ("complexity-scan", "beta-crit", "schedule-scan", "histogram"):
        sub.add_parser(name, parents=[cfg_flags])

    lb = sub.add_parser("lower-bound")
    lb.add_argument("--beta-min", dest="beta_min", type=float, default=0.1)
    lb.add_argument("--beta-max", dest="beta_max", type=float, default=100.0)
    lb.add_argument("--points", type=int, default=50)
    lb.add_argument("--eps", type=float, default=1e-3)
    lb.add_argument("--out")

    pd = sub.add_parser("parity-demo")
    pd.add_argument("--n-min", dest="n_min", type=int, default=2)
    pd.add_argument("--n-max", dest="n_max", type=int, default=6)
    pd.add_argument("--beta", type=float, default=4.0)
    pd.add_argument("--eps", type=float, default=1e-4)
    pd.add_argument("--alpha", type=float, default=1.0)
    pd.add_argument("--seed", type=int, default=7)
    pd.add_argument("--out")

    vp = sub.add_parser("validate-primitive")
    vp.add_argument("--n", type=int, default=2)
    vp.add_argument("--beta", type=float, default=1.0)
    vp.add_argument("--eps", type=float, default=1e-3)
    vp.add_argument("--kind", choices=("p1", "p2"), default="p1")
    vp.add_argument("--seed", type=int, default=7)
    vp.add_argument("--hamiltonian-class", default="sk_heisenberg")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("complexity-scan", "beta-crit", "schedule-scan", "histogram"):
            cfg = ExperimentConfig.from_args(args)
            handler = {
                "complexity-scan": cmd_complexity_scan,
                "beta-crit": cmd_beta_crit,
                "schedule-scan": cmd_schedule_scan,
                "histogram": cmd_histogram,
            }[args.command]
            return handler(cfg)
        if args.command == "lower-bound":
            return cmd_lower_bound(args)
        if args.command == "parity-demo":
            return cmd_parity_demo(args)
        if args.command == "validate-primitive":
            return cmd_validate_primitive(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
