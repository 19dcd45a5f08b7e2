"""Command-line front end.

Subcommands
-----------
ideal        joint photon distribution and distinguishability of the
             projection-filtered macro-qubit under loss
conditional  posterior of the incoming difference for a detected pair
pipeline     conditional transmitted statistics of the tap + feed-forward
             scheme (single copy, two copies, loss, processed distribution)
sweep        distinguishability over threshold and loss grids

A TOML config file (one table per subcommand) may supply any option;
explicit flags win.  Results are cached under a content hash of the resolved
configuration; ``--no-cache`` bypasses the cache entirely.

Exit codes: 0 success, 2 invalid configuration, 3 degenerate conditioning
(zero-probability outcome or an empty accepted set).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import shutil
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from . import __version__
from .errors import ConfigError, DegenerateConditioningError, EmptyAcceptanceError
from .fileio import fmt12, jsonable, write_csv, write_json
from .ideal import (FilterThreshold, LossChannel, distinguishability,
                    lossy_photon_distribution, summary_metrics,
                    threshold_sweep)
from .operational import (DetectionOutcome, SingleCopyConditionals, TapSpec,
                          TrustPolicy, acceptance_probability,
                          lossy_transmitted_joint, pbs_conditional_diff,
                          processed_photon_distributions, shutter_decision,
                          transmitted_diff_marginal, transmitted_joint,
                          two_mode_convolution)
from .states import macro_qubit, macro_qubit_mixture, uniform_diff_state


def _default_workers() -> int:
    return max(1, os.cpu_count() or 1)


@dataclass
class RunConfig:
    command: str
    g: float = 1.87
    s0: int = 200
    delta_th: int = 0
    trust: float = 0.9
    tap_r: float = 0.1
    loss_R: float = 0.0
    S: int = 20
    Delta: int = 0
    input: str = "uniform"
    two_mode: bool = False
    processed: bool = False
    weighting: str = "detection"
    tail: float = 1e-9
    grid_tail: float = 1e-6
    delta_th_list: list = field(default_factory=list)
    loss_R_list: list = field(default_factory=list)
    out: str = "."
    fmt: str = "csv"
    workers: int = 0
    no_cache: bool = False

    def validate(self) -> None:
        try:
            if self.command in ("ideal", "sweep") or self.input in ("macro", "mixture"):
                if not (self.g > 0 and np.isfinite(self.g)):
                    raise ValueError("g must be finite and positive")
            if self.command == "pipeline":
                TapSpec(self.tap_r)
                DetectionOutcome(self.S, self.Delta)
                if self.input not in ("uniform", "macro", "mixture"):
                    raise ValueError("input must be uniform, macro or mixture")
                if self.s0 < 0:
                    raise ValueError("s0 must be non-negative")
            if self.command == "conditional":
                DetectionOutcome(self.S, self.Delta)
            LossChannel(self.loss_R)
            FilterThreshold(self.delta_th)
            TrustPolicy(max(self.delta_th, 0), self.trust)
            if not (0.0 < self.tail < 1.0):
                raise ValueError("tail must lie in (0,1)")
            if not (0.0 < self.grid_tail < 1.0):
                raise ValueError("grid-tail must lie in (0,1)")
            if self.weighting not in ("detection", "uniform"):
                raise ValueError("weighting must be detection or uniform")
            if self.fmt not in ("csv", "json"):
                raise ValueError("format must be csv or json")
            if self.workers < 0:
                raise ValueError("workers must be >= 0")
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def resolved(self) -> dict:
        d = asdict(self)
        d["workers"] = self.workers or _default_workers()
        return d

    def cache_key(self) -> str:
        d = self.resolved()
        # worker count and cache/out plumbing never change the numbers
        for k in ("workers", "out", "no_cache"):
            d.pop(k, None)
        payload = json.dumps({"cfg": d, "version": __version__}, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()


_FLOAT_KEYS = {"g", "trust", "tap_r", "loss_R", "tail", "grid_tail"}
_INT_KEYS = {"s0", "delta_th", "S", "Delta", "workers"}
_BOOL_KEYS = {"two_mode", "processed", "no_cache"}


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file {path} not found")
        data = tomllib.loads(path.read_text())
        table = data.get(args.command, data)
        for key, val in table.items():
            attr = key.replace("-", "_")
            if attr == "format":
                attr = "fmt"
            if not hasattr(cfg, attr):
                raise ConfigError(f"unknown config key {key!r}")
            setattr(cfg, attr, val)
    for attr, val in vars(args).items():
        if attr in ("command", "config", "func") or val is None:
            continue
        setattr(cfg, attr, val)
    for k in _FLOAT_KEYS:
        setattr(cfg, k, float(getattr(cfg, k)))
    for k in _INT_KEYS:
        setattr(cfg, k, int(getattr(cfg, k)))
    for k in _BOOL_KEYS:
        setattr(cfg, k, bool(getattr(cfg, k)))
    if isinstance(cfg.delta_th_list, str):
        cfg.delta_th_list = _parse_list(cfg.delta_th_list, int)
    if isinstance(cfg.loss_R_list, str):
        cfg.loss_R_list = _parse_list(cfg.loss_R_list, float)
    cfg.validate()
    return cfg


def _parse_list(text: str, cast):
    try:
        return [cast(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"bad list value {text!r}") from exc


def _cache_dir() -> Path:
    root = os.environ.get("MDF_CACHE_DIR")
    if root:
        return Path(root)
    return Path.home() / ".cache" / "mdfilter"


def _run_with_cache(cfg: RunConfig, produce) -> list[str]:
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.no_cache:
        return produce(out_dir)
    entry = _cache_dir() / cfg.cache_key()
    manifest = entry / "MANIFEST"
    if manifest.exists():
        names = manifest.read_text().split()
        if all((entry / n).exists() for n in names):
            for n in names:
                shutil.copyfile(entry / n, out_dir / n)
            return names
    names = produce(out_dir)
    entry.mkdir(parents=True, exist_ok=True)
    for n in names:
        shutil.copyfile(out_dir / n, entry / n)
    manifest.write_text("\n".join(names) + "\n")
    return names


def _emit_joint(out_dir: Path, stem: str, fmt: str, header: list[str], rows,
                summary: dict) -> list[str]:
    names = []
    if fmt == "csv":
        write_csv(out_dir / f"{stem}.csv", header, rows)
        names.append(f"{stem}.csv")
    else:
        write_json(out_dir / f"{stem}.json",
                   {"header": header,
                    "rows": [[fmt12(x) for x in row] for row in rows]})
        names.append(f"{stem}.json")
    write_json(out_dir / "summary.json", jsonable(summary))
    names.append("summary.json")
    return names


# ---------------------------------------------------------------------------


def cmd_ideal(cfg: RunConfig) -> list[str]:
    workers = cfg.workers or _default_workers()

    def produce(out_dir: Path) -> list[str]:
        state = macro_qubit(cfg.g, "phi", cfg.tail)
        jpd = lossy_photon_distribution(state, LossChannel(cfg.loss_R),
                                        FilterThreshold(cfg.delta_th),
                                        cfg.grid_tail)
        jpd.meta.update({"delta_th": cfg.delta_th, "loss_R": cfg.loss_R})
        rep = distinguishability(jpd)
        metrics = summary_metrics(jpd)
        ks, ls = np.nonzero(jpd.probs)
        rows = [(int(k), int(l), float(jpd.probs[k, l]))
                for k, l in zip(ks.tolist(), ls.tolist())]
        summary = {"config": cfg.resolved(), "v": rep.v, "P_S1": rep.P_S1,
                   "P_S2": rep.P_S2, "success_prob": rep.success_prob,
                   "discarded_mass": jpd.discarded_mass, **metrics}
        return _emit_joint(out_dir, "ideal_joint", cfg.fmt, ["k", "l", "p"],
                           rows, summary)

    _ = workers
    return _run_with_cache(cfg, produce)


def cmd_conditional(cfg: RunConfig) -> list[str]:
    def produce(out_dir: Path) -> list[str]:
        d = pbs_conditional_diff(DetectionOutcome(cfg.S, cfg.Delta))
        acc = acceptance_probability(d, cfg.delta_th)
        decision = shutter_decision(d, TrustPolicy(cfg.delta_th, cfg.trust))
        rows = [(int(dr), float(p)) for dr, p in zip(d.deltas, d.probs)]
        summary = {"config": cfg.resolved(), "acceptance_prob": acc,
                   "shutter_open": bool(decision),
                   "strict_acceptance_prob": float(
                       d.probs[np.abs(d.deltas) > cfg.delta_th].sum())}
        return _emit_joint(out_dir, "conditional_diff", cfg.fmt,
                           ["delta_r", "p"], rows, summary)

    return _run_with_cache(cfg, produce)


def _pipeline_input(cfg: RunConfig):
    if cfg.input == "uniform":
        return uniform_diff_state(cfg.s0)
    if cfg.input == "macro":
        return macro_qubit(cfg.g, "phi", cfg.tail)
    return macro_qubit_mixture(cfg.g, cfg.tail)


def cmd_pipeline(cfg: RunConfig) -> list[str]:
    workers = cfg.workers or _default_workers()

    def produce(out_dir: Path) -> list[str]:
        obj = _pipeline_input(cfg)
        tap = TapSpec(cfg.tap_r)
        meta = {"g": cfg.g if cfg.input != "uniform" else None,
                "s0": cfg.s0 if cfg.input == "uniform" else None,
                "r": cfg.tap_r, "R": cfg.loss_R, "S": cfg.S,
                "Delta": cfg.Delta, "delta_th": cfg.delta_th,
                "trust": cfg.trust,
                "tail_mass": 0.0 if cfg.input == "uniform" else cfg.tail}

        if cfg.processed:
            from .states import StateEnsemble

            ens = obj if isinstance(obj, StateEnsemble) else macro_qubit_mixture(
                cfg.g, cfg.tail)
            (jpd, rep, accepted), = processed_photon_distributions(
                ens, tap, [TrustPolicy(cfg.delta_th, cfg.trust)],
                cfg.weighting, workers=workers)
            ks, ls = np.nonzero(jpd.probs)
            rows = [(int(k), int(l), float(jpd.probs[k, l]))
                    for k, l in zip(ks.tolist(), ls.tolist())]
            summary = {"config": cfg.resolved(), "meta": meta, "v": rep.v,
                       "P_S1": rep.P_S1, "P_S2": rep.P_S2,
                       "open_prob": jpd.success_prob,
                       "accepted_S": list(accepted)}
            return _emit_joint(out_dir, "processed_joint", cfg.fmt,
                               ["k", "l", "p"], rows, summary)

        out = DetectionOutcome(cfg.S, cfg.Delta)
        if cfg.two_mode:
            family = SingleCopyConditionals(obj, tap, workers=workers)
            joint = two_mode_convolution(family, out)
        elif cfg.loss_R > 0:
            joint = lossy_transmitted_joint(obj, tap, out,
                                            LossChannel(cfg.loss_R), workers)
        else:
            joint = transmitted_joint(obj, tap, out, workers)
        marg = transmitted_diff_marginal(joint)
        acc = acceptance_probability(marg, cfg.delta_th)
        rows = list(joint.st_dt_pairs())
        names = _emit_joint(out_dir, "pipeline_joint", cfg.fmt,
                            ["s_t", "delta_t", "p"], rows,
                            {"config": cfg.resolved(), "meta": meta,
                             "detection_prob": joint.detection_prob,
                             "acceptance_prob": acc,
                             "shutter_open": bool(acc >= cfg.trust)})
        keep = marg.probs > 0.0
        write_csv(out_dir / "pipeline_diff.csv", ["delta_t", "p"],
                  [(int(d), float(p)) for d, p
                   in zip(marg.deltas[keep], marg.probs[keep])])
        names.append("pipeline_diff.csv")
        return names

    return _run_with_cache(cfg, produce)


def cmd_sweep(cfg: RunConfig) -> list[str]:
    def produce(out_dir: Path) -> list[str]:
        dths = cfg.delta_th_list or [cfg.delta_th]
        rs = cfg.loss_R_list or [cfg.loss_R]
        rows = []
        for dth in dths:
            for rr in rs:
                for row in threshold_sweep(cfg.g, [dth], float(rr), cfg.tail,
                                           cfg.grid_tail):
                    rows.append((row.delta_th, row.R, row.v, row.success_prob))
        summary = {"config": cfg.resolved(), "points": len(rows)}
        return _emit_joint(out_dir, "sweep", cfg.fmt,
                           ["delta_th", "R", "v", "p_s"], rows, summary)

    return _run_with_cache(cfg, produce)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mdf",
        description="photon-number difference filtering for two-mode Fock states")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML config file (flags override)")
        p.add_argument("--g", type=float, default=None)
        p.add_argument("--s0", type=int, default=None)
        p.add_argument("--delta-th", dest="delta_th", type=int, default=None)
        p.add_argument("--trust", type=float, default=None)
        p.add_argument("--tap-r", dest="tap_r", type=float, default=None)
        p.add_argument("--loss-R", dest="loss_R", type=float, default=None)
        p.add_argument("--S", type=int, default=None)
        p.add_argument("--Delta", type=int, default=None)
        p.add_argument("--two-mode", dest="two_mode", action="store_const",
                       const=True, default=None)
        p.add_argument("--processed", action="store_const", const=True,
                       default=None)
        p.add_argument("--weighting", choices=("detection", "uniform"),
                       default=None)
        p.add_argument("--tail", type=float, default=None)
        p.add_argument("--grid-tail", dest="grid_tail", type=float, default=None)
        p.add_argument("--input", choices=("uniform", "macro", "mixture"),
                       default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--format", dest="fmt", choices=("csv", "json"),
                       default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--no-cache", dest="no_cache", action="store_const",
                       const=True, default=None)

    p_ideal = sub.add_parser("ideal", help="filtered macro-qubit distribution")
    common(p_ideal)
    p_ideal.set_defaults(func=cmd_ideal)

    p_cond = sub.add_parser("conditional",
                            help="incoming-difference posterior for a detection")
    common(p_cond)
    p_cond.set_defaults(func=cmd_conditional)

    p_pipe = sub.add_parser("pipeline", help="tap + feed-forward statistics")
    common(p_pipe)
    p_pipe.set_defaults(func=cmd_pipeline)

    p_sweep = sub.add_parser("sweep", help="threshold/loss grids")
    common(p_sweep)
    p_sweep.add_argument("--delta-th-list", dest="delta_th_list", default=None)
    p_sweep.add_argument("--loss-R-list", dest="loss_R_list", default=None)
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        args.func(cfg)
        return 0
    except ConfigError as exc:
        print(json.dumps({"error": str(exc), "code": 2}), file=sys.stderr)
        return 2
    except (DegenerateConditioningError, EmptyAcceptanceError) as exc:
        print(json.dumps({"error": str(exc), "code": 3}), file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
