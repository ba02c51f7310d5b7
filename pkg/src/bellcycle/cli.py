"""Command-line front end: configure runs, execute them, emit data files.

Two subcommands:

  run    one ensemble from flags and/or a TOML/JSON config file
  repro  named presets that regenerate the data behind the reference figures

Output is data only (CSV/JSON); plotting is left to external tools.  Every
run directory receives ensemble.csv, curves.csv and manifest.json; element
histograms and per-trajectory dumps are optional.  The manifest echoes the
full configuration, and re-running from it reproduces ensemble.csv byte for
byte.

Exit codes: 0 success, 2 configuration error, 3 runtime abort.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - python < 3.11
    import tomli as tomllib

from .dynmaps import (
    amp_flip_map,
    analytic_curves,
    cobweb,
    concurrence_map,
    peak_time,
)
from .ensemble import (
    EnsembleStats,
    Scheme,
    SimConfig,
    TrajectoryAbort,
    element_histograms,
    run_ensemble,
    run_trajectory,
)
from .feedback import FeedbackKind, FeedbackPolicy
from .measurement import ProbabilityDriftError
from .modealg import MeasurementSetup

__all__ = [
    "ConfigError",
    "RunRequest",
    "RunManifest",
    "parse_config",
    "emit_results",
    "figure_recipes",
    "main",
]

try:
    from importlib.metadata import version as _pkg_version

    _VERSION = _pkg_version("bellcycle")
except Exception:  # pragma: no cover - not installed
    _VERSION = "0.0.0"


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


_CONFIG_KEYS = (
    "scheme",
    "feedback",
    "eta3",
    "eta4",
    "dt",
    "t_max",
    "n_traj",
    "seed",
    "flip_period",
    "t_activate",
    "record_elements",
    "out",
    "workers",
    "dump_traj",
)

_DEFAULTS = {
    "feedback": "none",
    "eta3": 1.0,
    "eta4": 1.0,
    "dt": 0.01,
    "t_max": 10.0,
    "n_traj": 100,
    "seed": 0,
    "flip_period": 2,
    "t_activate": 0.0,
    "record_elements": False,
    "out": "out",
    "workers": 1,
    "dump_traj": 0,
}


@dataclass(frozen=True)
class RunRequest:
    """A fully resolved run: the simulation config plus emission options."""

    sim: SimConfig
    out_dir: Path
    workers: int = 1
    dump_traj: int = 0
    config_echo: dict | None = None


@dataclass
class RunManifest:
    """Provenance record emitted next to every run's data files."""

    version: str
    created_utc: str
    wall_seconds: float
    master_seed: int
    config: dict
    outputs: list

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n"


def _load_config_file(path: Path) -> dict:
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    if path.suffix == ".toml":
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    elif path.suffix == ".json":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    else:
        raise ConfigError(f"config file must be .toml or .json, got {path.name!r}")
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a table/object at top level")
    # a manifest is accepted directly: its config echo is the run config
    if "config" in data and isinstance(data["config"], dict):
        data = data["config"]
    for key in data:
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key: {key!r}")
    return data


def _merged_config(args: argparse.Namespace) -> dict:
    file_cfg = _load_config_file(Path(args.config)) if args.config else {}
    merged = dict(_DEFAULTS)
    merged["scheme"] = None
    merged.update(file_cfg)
    for key in _CONFIG_KEYS:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            merged[key] = flag_val
    return merged


def _build_request(cfg: dict) -> RunRequest:
    if cfg.get("scheme") is None:
        raise ConfigError("missing required scheme (pd or homodyne)")
    try:
        scheme = Scheme(str(cfg["scheme"]))
    except ValueError:
        raise ConfigError(f"out-of-range value: scheme must be pd or homodyne, got {cfg['scheme']!r}")
    try:
        kind = FeedbackKind(str(cfg["feedback"]))
    except ValueError:
        raise ConfigError(f"out-of-range value: unknown feedback {cfg['feedback']!r}")
    try:
        setup = MeasurementSetup(
            gamma=1.0,
            dt=float(cfg["dt"]),
            eta3=float(cfg["eta3"]),
            eta4=float(cfg["eta4"]),
        )
        policy = FeedbackPolicy(
            kind=kind,
            flip_period=int(cfg["flip_period"]),
            t_activate=float(cfg["t_activate"]),
        )
        sim = SimConfig(
            scheme=scheme,
            policy=policy,
            setup=setup,
            t_max=float(cfg["t_max"]),
            n_traj=int(cfg["n_traj"]),
            master_seed=int(cfg["seed"]),
            record_elements=bool(cfg["record_elements"]),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"out-of-range value: {exc}") from exc
    if int(cfg["workers"]) < 1:
        raise ConfigError("out-of-range value: workers must be >= 1")
    if int(cfg["dump_traj"]) < 0:
        raise ConfigError("out-of-range value: dump_traj must be >= 0")
    echo = {k: cfg[k] for k in _CONFIG_KEYS}
    echo["scheme"] = scheme.value
    echo["feedback"] = kind.value
    return RunRequest(
        sim=sim,
        out_dir=Path(str(cfg["out"])),
        workers=int(cfg["workers"]),
        dump_traj=int(cfg["dump_traj"]),
        config_echo=echo,
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bellcycle",
        description="Monte Carlo simulation of entanglement genesis and "
        "preservation under continuous fluorescence monitoring with feedback.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one configured ensemble")
    run_p.add_argument("--config", help="TOML or JSON config file (flags override)")
    run_p.add_argument("--scheme", choices=["pd", "homodyne"])
    run_p.add_argument("--feedback", choices=["none", "recycle", "mw", "mw-flips"])
    run_p.add_argument("--eta3", type=float, help="port-3 efficiency in [0, 1]")
    run_p.add_argument("--eta4", type=float, help="port-4 efficiency in [0, 1]")
    run_p.add_argument("--dt", type=float, help="measurement interval in units of T1")
    run_p.add_argument("--t-max", dest="t_max", type=float, help="total time in units of T1")
    run_p.add_argument("--n-traj", dest="n_traj", type=int, help="number of trajectories")
    run_p.add_argument("--seed", type=int, help="master seed")
    run_p.add_argument("--flip-period", dest="flip_period", type=int,
                       help="measurement intervals between scheduled flips")
    run_p.add_argument("--t-activate", dest="t_activate", type=float,
                       help="time at which scheduled flips switch on")
    run_p.add_argument("--record-elements", dest="record_elements",
                       action="store_true", default=None,
                       help="emit per-time histograms of density-matrix elements")
    run_p.add_argument("--out", help="output directory")
    run_p.add_argument("--workers", type=int, help="worker processes (results identical)")
    run_p.add_argument("--dump-traj", dest="dump_traj", type=int,
                       help="write traj_<k>.csv for the first K trajectories")

    repro_p = sub.add_parser("repro", help="regenerate data for a reference figure")
    repro_p.add_argument("name", help="preset name, e.g. fig3-pd or fig6e")
    repro_p.add_argument("--out", default="out", help="output root directory")
    repro_p.add_argument("--workers", type=int, default=1)
    return parser


def parse_config(argv: list[str]) -> RunRequest:
    """Resolve `run` flags plus optional config file into a RunRequest."""
    args = _build_parser().parse_args(["run", *argv] if argv and argv[0] != "run" else argv)
    return _build_request(_merged_config(args))


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if not isinstance(v, str) else v for v in row) + "\n")


def emit_results(
    stats: EnsembleStats,
    req: RunRequest,
    wall_seconds: float,
    traj_records=(),
) -> list[str]:
    """Write ensemble.csv, curves.csv, optional element histograms and
    trajectory dumps, then manifest.json listing every file."""
    out = req.out_dir
    out.mkdir(parents=True, exist_ok=True)
    outputs: list[str] = []

    rows = zip(stats.times, stats.mean_c, stats.std_c, stats.mean_purity, stats.q05, stats.q95)
    _write_csv(out / "ensemble.csv", ["t", "mean_C", "std_C", "mean_purity", "q05", "q95"], rows)
    outputs.append("ensemble.csv")

    setup = req.sim.setup
    eta_ref = 0.5 * (setup.eta3 + setup.eta4)
    curves = analytic_curves(stats.times, gamma=setup.gamma, eta=eta_ref)
    names = list(curves)
    _write_csv(
        out / "curves.csv",
        ["t", *names],
        zip(stats.times, *[curves[n] for n in names]),
    )
    outputs.append("curves.csv")

    if stats.element_samples is not None:
        hists = element_histograms(stats.element_samples)
        n_traj = stats.element_samples.shape[0]
        for name, (edges, counts) in hists.items():
            centers = 0.5 * (edges[:-1] + edges[1:])
            width = edges[1] - edges[0]
            rows = (
                (stats.times[r], centers[b], counts[r, b] / (n_traj * width))
                for r in range(counts.shape[0])
                for b in range(counts.shape[1])
            )
            fname = f"elements_{name}.csv"
            _write_csv(out / fname, ["t", "bin_center", "density"], rows)
            outputs.append(fname)

    for k, rec in traj_records:
        fname = f"traj_{k}.csv"
        rows = zip(
            rec.times, rec.concurrence, rec.purity,
            rec.elements[:, 0], rec.elements[:, 1], rec.elements[:, 2],
        )
        _write_csv(out / fname, ["t", "C", "purity", "rho00", "rho33", "re_rho03"], rows)
        outputs.append(fname)

    manifest = RunManifest(
        version=_VERSION,
        created_utc=datetime.now(timezone.utc).isoformat(),
        wall_seconds=wall_seconds,
        master_seed=req.sim.master_seed,
        config=req.config_echo or {},
        outputs=[*outputs, "manifest.json"],
    )
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    outputs.append("manifest.json")
    return outputs


def _execute(req: RunRequest) -> None:
    try:
        req.out_dir.mkdir(parents=True, exist_ok=True)
        probe = req.out_dir / ".write-probe"
        probe.write_text("", encoding="utf-8")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory not writable: {exc}") from exc
    start = time.perf_counter()
    stats = run_ensemble(req.sim, n_workers=req.workers)
    dumps = [
        (k, run_trajectory(req.sim, k))
        for k in range(min(req.dump_traj, req.sim.n_traj))
    ]
    wall = time.perf_counter() - start
    emit_results(stats, req, wall, traj_records=dumps)


_T_E = peak_time()


def _preset_request(
    name: str,
    out_root: Path,
    workers: int,
    *,
    scheme: Scheme,
    kind: FeedbackKind,
    seed: int,
    eta: float = 1.0,
    dt: float = 0.01,
    t_max: float = 10.0,
    n_traj: int = 1000,
    flip_period: int = 2,
    t_activate: float = 0.0,
    stride: int = 1,
    record_elements: bool = False,
) -> RunRequest:
    sim = SimConfig(
        scheme=scheme,
        policy=FeedbackPolicy(kind=kind, flip_period=flip_period, t_activate=t_activate),
        setup=MeasurementSetup(gamma=1.0, dt=dt, eta3=eta, eta4=eta),
        t_max=t_max,
        n_traj=n_traj,
        master_seed=seed,
        record_stride=stride,
        record_elements=record_elements,
    )
    echo = {
        "scheme": scheme.value,
        "feedback": kind.value,
        "eta3": eta,
        "eta4": eta,
        "dt": dt,
        "t_max": t_max,
        "n_traj": n_traj,
        "seed": seed,
        "flip_period": flip_period,
        "t_activate": t_activate,
        "record_elements": record_elements,
        "out": str(out_root / name),
        "workers": workers,
        "dump_traj": 0,
    }
    return RunRequest(
        sim=sim,
        out_dir=out_root / name,
        workers=workers,
        config_echo=echo,
    )


def figure_recipes(out_root: Path = Path("out"), workers: int = 1) -> dict:
    """Parameter table for the `repro` presets.

    Each preset maps to a list of (subdirectory, RunRequest) ensemble runs;
    fig4 is the exception and is handled by _emit_cobwebs.
    """
    pd, hom = Scheme.PD, Scheme.HOMODYNE
    none, rec = FeedbackKind.NONE, FeedbackKind.PD_RECYCLE
    mw, mwf = FeedbackKind.HOM_MW, FeedbackKind.HOM_MW_FLIPS

    def req(sub, **kw):
        return (sub, _preset_request(sub, out_root, workers, **kw))

    recipes = {
        "fig3-pd": [
            req("fig3-pd/feedback", scheme=pd, kind=rec, seed=314159, t_max=10.0),
            req("fig3-pd/nofeedback", scheme=pd, kind=none, seed=314160, t_max=10.0),
        ],
        "fig3-hom-a": [
            req("fig3-hom-a/main", scheme=hom, kind=mwf, seed=271828,
                t_max=8.0, n_traj=500, t_activate=0.0),
        ],
        "fig3-hom-b": [
            req("fig3-hom-b/main", scheme=hom, kind=mwf, seed=271829,
                t_max=8.0, n_traj=500, t_activate=_T_E),
        ],
        "fig4": [],
        "fig5a": [
            req("fig5a/feedback", scheme=pd, kind=rec, seed=161803, eta=0.98),
            req("fig5a/nofeedback", scheme=pd, kind=none, seed=161804, eta=0.98),
        ],
        "fig5b": [
            req("fig5b/feedback", scheme=pd, kind=rec, seed=161805, eta=0.90),
            req("fig5b/nofeedback", scheme=pd, kind=none, seed=161806, eta=0.90),
        ],
        "fig5c": [
            req("fig5c/feedback", scheme=pd, kind=rec, seed=161807, eta=0.50),
            req("fig5c/nofeedback", scheme=pd, kind=none, seed=161808, eta=0.50),
        ],
        "fig6a": [req("fig6a/main", scheme=hom, kind=mw, seed=602214, eta=0.98,
                      t_max=8.0, n_traj=500)],
        "fig6b": [req("fig6b/main", scheme=hom, kind=mwf, seed=602215, eta=0.98,
                      t_max=8.0, n_traj=500, flip_period=1)],
        "fig6c": [req("fig6c/main", scheme=hom, kind=mw, seed=602216, eta=0.95,
                      t_max=8.0, n_traj=500)],
        "fig6d": [req("fig6d/main", scheme=hom, kind=mwf, seed=602217, eta=0.95,
                      t_max=8.0, n_traj=500, flip_period=1)],
        "fig6e": [req("fig6e/main", scheme=hom, kind=mw, seed=602218, eta=0.75,
                      t_max=8.0, n_traj=500)],
        "fig6f": [req("fig6f/main", scheme=hom, kind=mwf, seed=602219, eta=0.75,
                      t_max=8.0, n_traj=500, flip_period=1)],
        "fig7": [
            req("fig7/a", scheme=hom, kind=mwf, seed=141421, dt=1e-3,
                t_max=8.0, n_traj=500, t_activate=_T_E, stride=10),
            req("fig7/b", scheme=hom, kind=mwf, seed=141422, dt=1e-3,
                t_max=8.0, n_traj=500, t_activate=0.0, stride=10),
        ],
        "fig8": [
            req("fig8/a", scheme=hom, kind=mwf, seed=173205, t_max=8.0,
                n_traj=1000, t_activate=_T_E, stride=10, record_elements=True),
            req("fig8/b", scheme=hom, kind=mwf, seed=173206, t_max=8.0,
                n_traj=1000, t_activate=0.0, stride=10, record_elements=True),
        ],
    }
    return recipes


def _emit_cobwebs(out_dir: Path) -> None:
    """Flip-map cobweb data at the two reference step sizes, in both the
    amplitude and the concurrence representation."""
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    n_iter = 600
    for eps in (0.1, 0.02):
        series = cobweb(lambda a: amp_flip_map(a, eps), 1.0, n_iter, -1.0, 1.0)
        rows = []
        for k, a in enumerate(series.iterates):
            rows.append(("iterate", k, a, a))
        for i in range(len(series.seg_x)):
            rows.append(("segment", i, series.seg_x[i], series.seg_y[i]))
        for i in range(len(series.curve_x)):
            rows.append(("curve", i, series.curve_x[i], series.curve_y[i]))
        fname = f"cobweb_amp_eps{eps}.csv"
        _write_csv(out_dir / fname, ["kind", "idx", "x", "y"], rows)
        outputs.append(fname)

        cs = np.empty(n_iter + 1)
        cs[0] = 0.0
        rising = True
        for k in range(n_iter):
            cs[k + 1] = concurrence_map(cs[k], eps, rising)
            rising = not rising
        rows = []
        for k, c in enumerate(cs):
            rows.append(("iterate", k, c, c))
        for k in range(n_iter):
            rows.append(("segment", 2 * k, cs[k], cs[k + 1]))
            rows.append(("segment", 2 * k + 1, cs[k + 1], cs[k + 1]))
        grid = np.linspace(0.0, 1.0, 1001)
        for i, c in enumerate(grid):
            rows.append(("curve_rising", i, c, concurrence_map(c, eps, True)))
        for i, c in enumerate(grid):
            rows.append(("curve_falling", i, c, concurrence_map(c, eps, False)))
        fname = f"cobweb_conc_eps{eps}.csv"
        _write_csv(out_dir / fname, ["kind", "idx", "x", "y"], rows)
        outputs.append(fname)

    manifest = RunManifest(
        version=_VERSION,
        created_utc=datetime.now(timezone.utc).isoformat(),
        wall_seconds=0.0,
        master_seed=0,
        config={"repro": "fig4", "eps": [0.1, 0.02], "n_iter": n_iter},
        outputs=[*outputs, "manifest.json"],
    )
    (out_dir / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")


def _execute_repro(name: str, out_root: Path, workers: int) -> None:
    recipes = figure_recipes(out_root, workers)
    if name not in recipes:
        raise ConfigError(
            f"unknown figure name {name!r}; choose from {', '.join(sorted(recipes))}"
        )
    if name == "fig4":
        _emit_cobwebs(out_root / "fig4")
        return
    for _sub, req in recipes[name]:
        _execute(req)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            req = _build_request(_merged_config(args))
            _execute(req)
        else:
            _execute_repro(args.name, Path(args.out), args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (TrajectoryAbort, ProbabilityDriftError) as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
