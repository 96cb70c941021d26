"""Command-line entry point: ``teleport <subcommand> --config c.json --seed S``.

Subcommands
    simulate   run ensembles for every configured size, write raw.csv and aggregate.csv
    analyze    collapse fit (+ bootstrap when raw samples are present) -> fit.json, collapse.csv
    kt-scan    KT-form fit at every time -> kt_scan.csv, kt_scan.json
    crossings  pairwise crossing times -> crossings.csv, crossings.json
    meanfield  critical time and exponents of the mean-field theory -> meanfield.json, psi_curve.csv
    verify     oracle suites; exit status 1 if any check fails

Every CSV starts with a ``# manifest: {...}`` comment and every output
directory gets a ``manifest.json`` sidecar.  Paths, wall-clock data and the thread
count only go to the sidecar, so the other files are byte-identical for the
same manifest.  Relative input paths in a config are taken relative to the
config file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__

log = logging.getLogger("teleport")

SUBCOMMANDS = ("simulate", "analyze", "kt-scan", "crossings", "meanfield", "verify")
NEEDS_CONFIG = {"simulate", "analyze", "kt-scan", "crossings"}


class UsageError(Exception):
    """Bad invocation or config; maps to exit code 2."""


class StageError(Exception):
    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"{stage} failed: {exc}")
        self.stage = stage


@dataclass
class RunManifest:
    subcommand: str
    config_path: str | None
    seed: int
    out: str
    version: str = __version__
    config: dict = field(default_factory=dict)
    threads: int = 1
    trajectories: int | None = None
    quick: bool = False
    started: str = ""

    def reproducible(self) -> dict:
        """Everything that determines the outputs.

        Paths, thread count and wall clock are left out (they go to the
        sidecar), so the same config and seed give the same bytes anywhere.
        """
        d = {"subcommand": self.subcommand, "seed": self.seed, "version": self.version, "config": self.config}
        if self.trajectories is not None:
            d["trajectories"] = self.trajectories
        if self.quick:
            d["quick"] = True
        return d

    def comment(self) -> str:
        return "manifest: " + json.dumps(self.reproducible(), sort_keys=True, separators=(",", ":"))


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="teleport", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="subcommand", metavar="{" + ",".join(SUBCOMMANDS) + "}")
    sub.required = True
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON config (required except for meanfield and verify)")
        s.add_argument("--seed", type=_u64, required=True,
                       help="master seed; mandatory so every run is reproducible")
        s.add_argument("--out", default="results", help="output directory (default: results)")
        s.add_argument("--threads", type=_positive, default=1, help="worker processes (wall time only)")
        s.add_argument("--trajectories", type=_positive, help="override n_trajectories of the config")
        s.add_argument("-v", "--verbose", action="store_true")
        if name == "verify":
            s.add_argument("--quick", action="store_true", help="reduced sample counts")
    return p


def parse_invocation(argv: list[str]) -> RunManifest:
    """Parse argv into a manifest.  Raises ``SystemExit(2)`` on usage errors."""
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        raise SystemExit(2)
    args = parser.parse_args(argv)
    if args.subcommand in NEEDS_CONFIG and not args.config:
        parser.error(f"{args.subcommand} needs --config")
    config: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            parser.error(f"config file not found: {path}")
        try:
            config = json.loads(path.read_text())
        except OSError as exc:
            raise StageError("config", OSError(f"cannot read {path}: {exc}"))
        except json.JSONDecodeError as exc:
            parser.error(f"{path} is not valid JSON: {exc}")
        if not isinstance(config, dict):
            parser.error(f"{path} must hold a JSON object")
        if "master_seed" in config and int(config["master_seed"]) != args.seed:
            parser.error(f"--seed {args.seed} disagrees with master_seed {config['master_seed']} in {path}")
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    return RunManifest(
        args.subcommand, args.config, args.seed, args.out, config=config, threads=args.threads,
        trajectories=args.trajectories, quick=getattr(args, "quick", False),
    )


# ---------------------------------------------------------------- helpers

def _resolve(m: RunManifest, key: str) -> Path:
    if key not in m.config:
        raise UsageError(f"config needs an {key!r} entry")
    p = Path(m.config[key])
    if not p.is_absolute() and m.config_path:
        p = Path(m.config_path).parent / p
    return p


def _times(spec) -> np.ndarray:
    from .experiment import default_checkpoints

    if isinstance(spec, dict):
        return default_checkpoints(float(spec.get("t_max", 6.0)), float(spec.get("step", 0.1)),
                                   float(spec.get("t_min", 0.0)))
    return np.asarray(spec, dtype=float)


def _write_csv(path: Path, header: list[str], rows, m: RunManifest) -> None:
    buf = io.StringIO()
    buf.write(f"# {m.comment()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())


def _write_json(path: Path, payload: dict, m: RunManifest) -> None:
    payload = {"manifest": m.reproducible(), **payload}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _g(x: float | None) -> float | None:
    """Round floats for text output so results do not depend on the last ulp."""
    return None if x is None or not math.isfinite(x) else float(f"{x:.10g}")


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (UsageError, StageError):
        raise
    except Exception as exc:  # any module error is reported with its stage
        raise StageError(name, exc) from exc


def _load_dataset(m: RunManifest):
    from .experiment import read_table
    from .scaling import ScalingDataset

    table = _stage("read input", read_table, _resolve(m, "input"))
    data = ScalingDataset.from_table(table)
    if "t_window" in m.config:
        lo, hi = m.config["t_window"]
        data = data.window(float(lo), float(hi))
    return table, data


# ---------------------------------------------------------------- subcommands

def cmd_simulate(m: RunManifest, out: Path) -> list[str]:
    from .experiment import ExperimentConfig, aggregate, merge_samples, run_trajectories, write_aggregate_csv, write_raw_csv
    from .geometry import from_descriptor

    c = m.config
    family = c.get("family", "alltoall")
    sizes = c.get("sizes")
    if not sizes:
        raise UsageError("config needs a nonempty 'sizes' list (N, or L for lattice2d)")
    n_traj = m.trajectories or int(c.get("n_trajectories", 0))
    if n_traj < 1:
        raise UsageError("config needs n_trajectories >= 1 (or pass --trajectories)")
    times = _times(c.get("checkpoints", {"t_min": 0.0, "t_max": 6.0, "step": 0.1}))
    samples = []
    alpha = None
    for size in sizes:
        desc = {"family": family, "alpha": c.get("alpha"), ("L" if family == "lattice2d" else "N"): int(size)}
        geom = _stage("config", from_descriptor, desc)
        alpha = getattr(geom, "alpha", None)
        cfg = _stage("config", ExperimentConfig, geom, tuple(float(t) for t in times), n_traj, m.seed,
                     c.get("t_max"))
        log.info("simulating %s size %s: %d trajectories", family, size, n_traj)
        data = _stage("simulate", run_trajectories, cfg, m.threads)
        samples.append({(geom.n_sites, float(t)): data[:, k] for k, t in enumerate(times)})
    table = aggregate(merge_samples(*samples), family, alpha)
    _stage("write", write_raw_csv, out / "raw.csv", table, m.comment())
    _stage("write", write_aggregate_csv, out / "aggregate.csv", table, m.comment())
    return ["raw.csv", "aggregate.csv"]


def cmd_analyze(m: RunManifest, out: Path) -> list[str]:
    from .scaling import WEIGHT_WIDTH, bootstrap_collapse, collapse_points, fit_collapse

    c = m.config
    table, data = _load_dataset(m)
    guess = tuple(c.get("initial_guess", (2.0, 2.0, 0.3)))
    width = float(c.get("width", WEIGHT_WIDTH))
    fit = _stage("fit_collapse", fit_collapse, data, guess, width)
    payload = {"family": table.family, "alpha": table.alpha, "sizes": [int(s) for s in data.sizes()],
               "collapse": {k: (_g(v) if isinstance(v, float) else v) for k, v in fit.as_dict().items()}}
    if data.samples and int(c.get("n_boot", 1000)) > 0:
        boot = _stage("bootstrap", bootstrap_collapse, data, int(c.get("n_boot", 1000)),
                      float(c.get("resample_fraction", 0.5)), m.seed, fit.params, width)
        payload["bootstrap"] = {
            "n_boot": int(len(boot.params)), "resample_fraction": boot.fraction, "seed": boot.seed,
            "mean": {k: _g(v) for k, v in boot.mean.items()}, "std": {k: _g(v) for k, v in boot.std.items()},
        }
    _write_json(out / "fit.json", payload, m)
    x, y, N = collapse_points(data, fit)
    _write_csv(out / "collapse.csv", ["x", "y", "N"],
               ([f"{a:.10g}", f"{b:.10g}", int(n)] for a, b, n in zip(x, y, N)), m)
    return ["fit.json", "collapse.csv"]


def cmd_kt_scan(m: RunManifest, out: Path) -> list[str]:
    from .scaling import kt_scan

    _, data = _load_dataset(m)
    scan = _stage("kt_scan", kt_scan, data)
    _write_csv(out / "kt_scan.csv", ["t", "a", "b", "lse_over_var"],
               ([f"{t:.10g}", f"{a:.10g}", f"{b:.10g}", f"{r:.10g}"]
                for t, a, b, r in zip(scan.t, scan.a, scan.b, scan.ratio)), m)
    _write_json(out / "kt_scan.json", {"t_c": _g(scan.t_c), "t_lo": _g(scan.t_lo), "t_hi": _g(scan.t_hi),
                                       "error": _g(scan.error)}, m)
    return ["kt_scan.csv", "kt_scan.json"]


def cmd_crossings(m: RunManifest, out: Path) -> list[str]:
    from .scaling import crossing_scan

    _, data = _load_dataset(m)
    found = _stage("crossing_scan", crossing_scan, data, float(m.config.get("threshold", 2.0)))
    _write_csv(out / "crossings.csv", ["N1", "N2", "t"],
               ([c.N1, c.N2, "none" if c.t is None else f"{c.t:.10g}"] for c in found), m)
    _write_json(out / "crossings.json",
                {"crossings": [{"N1": c.N1, "N2": c.N2, "t": _g(c.t)} for c in found]}, m)
    return ["crossings.csv", "crossings.json"]


def run_meanfield(c: dict) -> dict:
    """The mean-field pipeline: t_c, beta, delta and nu = beta (delta + 1)."""
    from .meanfield import (MfParams, critical_time_from_stability, field_response, fit_beta, fit_delta,
                            scan_critical_time, solve_self_consistency)

    params = MfParams(N=int(c.get("N", 200)), dt=float(c.get("dt", 0.02)), tol=float(c.get("tol", 1e-8)))
    grid = _times(c.get("t_grid", {"t_min": 1.0, "t_max": 3.0, "step": 0.1}))
    scan = _stage("scan_critical_time", scan_critical_time, params, grid, float(c.get("eps", 1e-3)))
    if scan.t_c is None:
        raise StageError("scan_critical_time", ValueError("no transition inside t_grid"))
    t_c = scan.t_c
    t_stab = _stage("stability", critical_time_from_stability, params, float(grid[0]), float(grid[-1]))
    lo, hi, n = c.get("beta_offsets", (0.002, 0.2, 10))
    offsets = np.geomspace(float(lo), float(hi), int(n))
    slow = MfParams(params.N, params.dt, params.t, params.tol, params.damping, 200_000)
    psi_b = np.array([_stage("beta points", solve_self_consistency, slow.at_time(t_c + d)).global_psi for d in offsets])
    beta = _stage("fit_beta", fit_beta, t_c + offsets, psi_b, t_c, float(hi) * 1.0001)
    lo, hi, n = c.get("h_z_grid", (1e-4, 1e-1, 13))
    h_z = np.geomspace(float(lo), float(hi), int(n))
    psi_h = _stage("field_response", field_response, slow, t_c, h_z)
    delta = _stage("fit_delta", fit_delta, h_z, psi_h)
    nu = beta.value * (delta.value + 1)
    nu_err = math.hypot(beta.stderr * (delta.value + 1), beta.value * delta.stderr)
    return {
        "params": asdict(params), "t_c": t_c, "t_c_stability": t_stab, "scan": scan,
        "beta": beta, "delta": delta, "nu": nu, "nu_stderr": nu_err,
        "beta_points": (t_c + offsets, psi_b), "field_points": (h_z, psi_h),
    }


def cmd_meanfield(m: RunManifest, out: Path) -> list[str]:
    r = run_meanfield(m.config)
    scan = r["scan"]

    def fit(e):
        return {"value": _g(e.value), "stderr": _g(e.stderr), "sensitivity": _g(e.sensitivity), "n_points": e.n_points}

    _write_json(out / "meanfield.json", {
        "params": r["params"], "t_c": _g(r["t_c"]), "t_c_stability": _g(r["t_c_stability"]),
        "beta": fit(r["beta"]), "delta": fit(r["delta"]), "nu": _g(r["nu"]), "nu_stderr": _g(r["nu_stderr"]),
    }, m)
    _write_csv(out / "psi_curve.csv", ["t", "psi", "converged", "iters"],
               ([f"{t:.10g}", f"{p:.10g}", int(cv), int(it)]
                for t, p, cv, it in zip(scan.t, scan.psi, scan.converged, scan.iterations)), m)
    h, p = r["field_points"]
    _write_csv(out / "field_response.csv", ["h_z", "psi"], ([f"{a:.10g}", f"{b:.10g}"] for a, b in zip(h, p)), m)
    return ["meanfield.json", "psi_curve.csv", "field_response.csv"]


def cmd_verify(m: RunManifest, out: Path | None) -> tuple[list[str], bool]:
    from .verify import run_all

    results = _stage("verify", run_all, m.quick, m.seed % 2**32)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    print("all oracle checks passed" if ok else "ORACLE CHECK FAILURE")
    return [], ok


COMMANDS = {
    "simulate": cmd_simulate, "analyze": cmd_analyze, "kt-scan": cmd_kt_scan,
    "crossings": cmd_crossings, "meanfield": cmd_meanfield,
}


def dispatch(m: RunManifest) -> int:
    t0 = time.perf_counter()
    m.started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    try:
        if m.subcommand == "verify":
            _, ok = cmd_verify(m, None)
            return 0 if ok else 1
        out = Path(m.out)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StageError("output", OSError(f"cannot create {out}: {exc}"))
        files = COMMANDS[m.subcommand](m, out)
    except UsageError as exc:
        print(f"teleport {m.subcommand}: usage error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"teleport {m.subcommand}: {exc}", file=sys.stderr)
        return 1
    sidecar = {**m.reproducible(), "config_path": m.config_path, "out": m.out, "threads": m.threads, "files": files, "started_utc": m.started,
               "wall_seconds": round(time.perf_counter() - t0, 3)}
    (out / "manifest.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    print(f"wrote {', '.join(str(out / f) for f in files)}")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        manifest = parse_invocation(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except StageError as exc:
        print(f"teleport: {exc}", file=sys.stderr)
        return 1
    return dispatch(manifest)


if __name__ == "__main__":
    sys.exit(main())
