"""Experiment harness: configs, recipes, histogram resampling and file output.

Usage::

    chanmix run <config.json | preset> [--seed N] [--threads N] [--out DIR]
    chanmix scan-ab --epsilon 0.05 --grid 200 [--out FILE]
    chanmix oracle-check
    chanmix histogram samples.csv [--out FILE]
    chanmix presets [NAME]
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from chanmix import circuits, estimator, mixture, oracle
from chanmix.errors import ChanmixError, ConfigError
from chanmix.noise import ErrorModel, build_unstructured, extract_error_angles, random_direction

log = logging.getLogger("chanmix")

EXPERIMENTS = (
    "constant_overrotation",
    "uniform_overrotation",
    "unstructured_modeled",
    "unstructured_modeled_sweep",
    "external_synthesis_angles",
    "ab_scan",
    "instance_count_study",
)
ARMS = ("exact", "noisy", "twirl", "mixture", "mixture_plus_twirl")
_OVERROTATION = ("constant_overrotation", "uniform_overrotation", "instance_count_study")


@dataclass(frozen=True)
class HistogramSpec:
    resample_size: int = 10_000
    n_resamples: int = 10_000
    bins: int = 50

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 1:
                raise ConfigError(f"histogram.{f.name}: must be positive")


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    batch_means: np.ndarray

    @property
    def center(self) -> float:
        return float(np.mean(self.batch_means))

    @property
    def bin_width(self) -> float:
        return float(self.edges[1] - self.edges[0])

    def write_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_left", "bin_right", "count"])
            for lo, hi, c in zip(self.edges[:-1].tolist(), self.edges[1:].tolist(), self.counts.tolist()):
                w.writerow([repr(lo), repr(hi), c])


def resample_histogram(weighted_samples, spec: HistogramSpec, rng: np.random.Generator) -> Histogram:
    """Bootstrap batch means (drawn with replacement), binned over their observed range."""
    x = np.asarray(weighted_samples, dtype=float)
    if x.size < spec.resample_size:
        raise ValueError(f"need at least {spec.resample_size} samples, got {x.size}")
    means = np.empty(spec.n_resamples)
    per_chunk = max(1, (1 << 22) // spec.resample_size)
    for start in range(0, spec.n_resamples, per_chunk):
        stop = min(start + per_chunk, spec.n_resamples)
        idx = rng.integers(0, x.size, size=(stop - start, spec.resample_size))
        means[start:stop] = x[idx].mean(axis=1)
    lo, hi = float(means.min()), float(means.max())
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(means, bins=spec.bins, range=(lo, hi))
    return Histogram(edges, counts, means)


# ---------------------------------------------------------------- config


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    N: int = 8
    L: int = 10
    T: float = 1.0
    h: float = 1.0
    J: float = 1.0
    error: ErrorModel = field(default_factory=ErrorModel.none)
    epsilon: float | None = None
    direction: tuple | None = None
    S: int = 100_000
    s: int = estimator.DEFAULT_SHOTS_PER_INSTANCE
    seed: int = 0
    time_sweep: tuple | None = None
    step_sweep: tuple | None = None
    arms: tuple | None = None
    delta: float = 0.01
    histogram: HistogramSpec | None = None
    write_samples: bool = True
    synthesis: tuple | None = None
    grid: int = 200
    shots_per_instance: tuple | None = None
    output_dir: str = "out"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: unknown value {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.S < 1 or self.s < 1:
            raise ConfigError("S, s: shot counts must be positive")
        if self.S % self.s:
            raise ConfigError(f"s: {self.s} does not divide S={self.S}")
        for k in self.shots_per_instance or ():
            if k < 1 or self.S % k:
                raise ConfigError(f"shots_per_instance: {k} does not divide S={self.S}")
        for a in self.arms or ():
            if a not in ARMS:
                raise ConfigError(f"arms: unknown arm {a!r}; expected a subset of {ARMS}")
        if self.N < 2 or self.L < 1:
            raise ConfigError("N, L: need N >= 2 and L >= 1")
        if self.time_sweep and self.step_sweep:
            raise ConfigError("step_sweep: cannot be combined with time_sweep")
        if any(k < 1 for k in self.step_sweep or ()):
            raise ConfigError("step_sweep: step counts must be positive")

    def default_arms(self) -> tuple:
        if self.arms:
            return tuple(self.arms)
        if self.experiment in ("constant_overrotation", "uniform_overrotation"):
            return ("exact", "noisy", "mixture")
        return ARMS

    def to_dict(self) -> dict:
        d = asdict(self)
        d["error"] = self.error.to_dict()
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


_INT_FIELDS = {"N", "L", "S", "s", "seed", "grid"}
_FLOAT_FIELDS = {"T", "h", "J", "epsilon", "delta"}


def parse_config(d: dict) -> ExperimentConfig:
    """Build a config from a JSON object, naming the offending field on error."""
    if not isinstance(d, dict):
        raise ConfigError("config: expected a JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"config: unknown fields {sorted(unknown)}")
    if "experiment" not in d:
        raise ConfigError("config.experiment: missing")
    kw = {}
    for k, v in d.items():
        try:
            if k in _INT_FIELDS:
                if isinstance(v, bool) or not float(v).is_integer():
                    raise ValueError("expected an integer")
                kw[k] = int(v)
            elif k in _FLOAT_FIELDS:
                kw[k] = None if v is None else float(v)
            elif k == "error":
                kw[k] = ErrorModel.from_dict(v)
            elif k == "histogram":
                kw[k] = None if v is None else HistogramSpec(**{kk: int(vv) for kk, vv in v.items()})
            elif k in ("direction", "arms"):
                kw[k] = None if v is None else tuple(v)
            elif k in ("time_sweep",):
                kw[k] = None if v is None else tuple(float(x) for x in v)
            elif k in ("shots_per_instance", "step_sweep"):
                kw[k] = None if v is None else tuple(int(x) for x in v)
            elif k == "synthesis":
                kw[k] = None if v is None else tuple(v)
            else:
                kw[k] = v
        except ConfigError as exc:
            raise ConfigError(f"config.{k}: {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config.{k}: {exc}") from exc
    return ExperimentConfig(**kw)


def load_config(path_or_preset: str) -> ExperimentConfig:
    p = Path(path_or_preset)
    if p.exists():
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON: {exc}") from exc
        return parse_config(data)
    if path_or_preset in PRESETS:
        return parse_config(PRESETS[path_or_preset])
    raise ConfigError(f"{path_or_preset!r} is neither a config file nor a preset ({', '.join(sorted(PRESETS))})")


# ---------------------------------------------------------------- recipes


def _arm_seed(seed: int, point: int, arm: int) -> int:
    return int(np.random.SeedSequence([seed, point, arm]).generate_state(1)[0])


def _steps_for(cfg: ExperimentConfig, t: float) -> int:
    """Time sweeps keep the step size T/L fixed and vary the step count."""
    L = round(t * cfg.L / cfg.T)
    if L < 1 or not math.isclose(L * cfg.T / cfg.L, t, rel_tol=1e-9, abs_tol=1e-12):
        raise ConfigError(f"time_sweep: {t} is not a whole number of steps of size {cfg.T / cfg.L}")
    return L


def _circuit(cfg: ExperimentConfig, L: int, T: float, model: ErrorModel):
    c = circuits.build_trotter_ising(cfg.N, L, T, cfg.h, cfg.J)
    if cfg.experiment not in _OVERROTATION:
        c = circuits.compile_to_rz(c)
    return circuits.attach_errors(c, model)


def _schedule(cfg: ExperimentConfig) -> list[tuple[str, float, int]]:
    """(label, time, step count) for every evaluation point."""
    if cfg.time_sweep:
        return [(f"T={t:g}", t, _steps_for(cfg, t)) for t in cfg.time_sweep]
    if cfg.step_sweep:
        return [(f"L={L}", cfg.T, L) for L in cfg.step_sweep]
    return [(f"T={cfg.T:g}", cfg.T, cfg.L)]


def _point_models(cfg: ExperimentConfig, schedule):
    """(label, time, steps, error model) for every evaluation point."""
    if cfg.experiment == "external_synthesis_angles":
        if not cfg.synthesis:
            raise ConfigError("synthesis: required for external_synthesis_angles")
        theta = 2 * cfg.T / cfg.L
        out = []
        for i, entry in enumerate(cfg.synthesis):
            label = entry.get("label", str(i))
            if "eps" in entry:
                ex, ey, ez = (float(x) for x in entry["eps"])
            elif "unitary" in entry:
                u = np.array([[complex(*z) for z in row] for row in entry["unitary"]])
                ex, ey, ez = extract_error_angles(theta, u)
            else:
                raise ConfigError(f"synthesis[{i}]: needs 'eps' or 'unitary'")
            out.append((label, cfg.T, cfg.L, ErrorModel.unstructured(ex, ey, ez)))
        return out
    if cfg.experiment in ("unstructured_modeled", "unstructured_modeled_sweep"):
        if cfg.epsilon is None:
            raise ConfigError("epsilon: required for unstructured experiments")
        out = []
        for k, (label, t, L) in enumerate(schedule):
            if cfg.direction is not None:
                eta = np.asarray(cfg.direction, dtype=float)
            else:
                eta = random_direction(np.random.default_rng([cfg.seed, k, 0x5EED]))
            out.append((label, t, L, build_unstructured(cfg.epsilon, eta)))
        return out
    return [(label, t, L, cfg.error) for label, t, L in schedule]


def _run_arm(cfg, circ, arm, seed, threads):
    if arm == "exact":
        return estimator.estimate_unmitigated(circuits.ideal(circ), None, cfg.S, seed)
    if arm == "noisy":
        return estimator.estimate_unmitigated(circ, None, cfg.S, seed)
    return estimator.estimate(circuits.with_policy(circ, arm), None, cfg.S, cfg.s, seed, threads)


def _run_point(cfg, k, label, t, L, model, out: Path | None, threads):
    circ = _circuit(cfg, L, t, model)
    point = {
        "label": label,
        "T": t,
        "L": L,
        "nu": circ.nu,
        "error": model.to_dict(),
        "exact_value": estimator.exact_expectation(circ),
        "noisy_value": estimator.noisy_expectation(circ, seed=_arm_seed(cfg.seed, k, ARMS.index("noisy"))),
        "arms": {},
    }
    eps = model.mitigation_epsilon
    for arm in cfg.default_arms():
        seed = _arm_seed(cfg.seed, k, ARMS.index(arm))
        log.info("%s: arm %s (nu=%d, S=%d)", label, arm, circ.nu, cfg.S)
        res = _run_arm(cfg, circ, arm, seed, threads)
        d = res.to_dict()
        if arm in ("mixture", "mixture_plus_twirl"):
            d["shot_bound"] = estimator.shot_bound(eps, circ.nu, cfg.delta)
            d["accuracy_at_S"] = estimator.accuracy_at(eps, circ.nu, cfg.S)
        arm_dir = out / arm if out is not None else None
        if arm_dir is not None and cfg.write_samples:
            res.write_samples_csv(arm_dir / "samples.csv")
            d["weighted_samples_path"] = str((arm_dir / "samples.csv").relative_to(cfg.output_dir))
        if cfg.histogram is not None:
            hist = resample_histogram(res.weighted_samples, cfg.histogram, np.random.default_rng([seed, 0x4157]))
            d["histogram_center"] = hist.center
            d["histogram_bin_width"] = hist.bin_width
            if arm_dir is not None:
                hist.write_csv(arm_dir / "histogram.csv")
        point["arms"][arm] = d
    return point


def run(cfg: ExperimentConfig, threads: int = 1, write: bool = True) -> dict:
    """Execute one experiment config; returns the results.json payload."""
    out = Path(cfg.output_dir)
    if write:
        out.mkdir(parents=True, exist_ok=True)
    if cfg.experiment == "ab_scan":
        results = _run_ab_scan(cfg, out if write else None)
    elif cfg.experiment == "instance_count_study":
        results = _run_instance_study(cfg, out if write else None, threads)
    else:
        models = _point_models(cfg, _schedule(cfg))
        points = []
        for k, (label, t, L, model) in enumerate(models):
            sub = None
            if write:
                sub = out / f"point_{k:03d}" if len(models) > 1 else out
            points.append(_run_point(cfg, k, label, t, L, model, sub, threads))
        results = {"config": cfg.to_dict(), "points": points}
        if write and len(points) > 1:
            _write_sweep_csv(out / "sweep.csv", points)
    if write:
        (out / "results.json").write_text(json.dumps(results, indent=2, sort_keys=True) + "\n")
    return results


def _write_sweep_csv(path: Path, points) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "T", "L", "nu", "arm", "mean", "stderr", "cluster_stderr", "exact_value", "noisy_value"])
        for p in points:
            for arm, d in p["arms"].items():
                w.writerow([p["label"], repr(p["T"]), p["L"], p["nu"], arm, repr(d["mean"]), repr(d["stderr"]),
                            repr(d["cluster_stderr"]), repr(p["exact_value"]), repr(p["noisy_value"])])


def _run_ab_scan(cfg: ExperimentConfig, out: Path | None) -> dict:
    eps = cfg.epsilon if cfg.epsilon is not None else cfg.error.mitigation_epsilon
    scan = mixture.scan_ab(eps, cfg.grid)
    a, b, best = scan.argmin()
    default_a = (2 * math.pi - math.pi / 4) if eps >= 0 else math.pi / 4
    default = mixture.gamma_general(eps, default_a, math.pi).one_norm
    if out is not None:
        scan.write_csv(out / "ab_scan.csv")
    return {
        "config": cfg.to_dict(),
        "epsilon": eps,
        "grid": cfg.grid,
        "argmin": {"A": a, "B": b, "one_norm": best},
        "default_point": {"A": default_a, "B": math.pi, "one_norm": default},
        "per_a_argmin": [{"A": r[0], "B": r[1], "one_norm": r[2]} for r in scan.per_a_argmin().tolist()],
    }


def _run_instance_study(cfg: ExperimentConfig, out: Path | None, threads: int) -> dict:
    circ = circuits.attach_errors(circuits.build_trotter_ising(cfg.N, cfg.L, cfg.T, cfg.h, cfg.J), cfg.error, "mixture")
    exact = estimator.exact_expectation(circ)
    rows = []
    for k, s in enumerate(cfg.shots_per_instance or (cfg.s,)):
        res = estimator.estimate(circ, None, cfg.S, s, _arm_seed(cfg.seed, k, 0), threads)
        rows.append({"s": s, "n_instances": res.n_instances, "mean": res.mean,
                     "empirical_std": res.empirical_std, "stderr": res.stderr, "cluster_stderr": res.cluster_stderr})
    if out is not None:
        with open(out / "instance_count.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n_instances", "s", "mean", "empirical_std", "stderr", "cluster_stderr", "exact_value"])
            for r in rows:
                w.writerow([r["n_instances"], r["s"], repr(r["mean"]), repr(r["empirical_std"]), repr(r["stderr"]),
                            repr(r["cluster_stderr"]), repr(exact)])
    return {"config": cfg.to_dict(), "exact_value": exact, "rows": rows}


# ---------------------------------------------------------------- presets


def _sweep(T: float, L: int, every: int = 1) -> list:
    return [round(T * l / L, 12) for l in range(every, L + 1, every)]


_HIST = {"resample_size": 10_000, "n_resamples": 10_000, "bins": 50}

PRESETS: dict[str, dict] = {
    "fig1-paper": {
        "experiment": "unstructured_modeled", "N": 15, "L": 70, "T": 1.0, "epsilon": 0.001,
        "S": 100_000, "s": 100, "seed": 1, "arms": ["exact", "noisy", "mixture", "mixture_plus_twirl"],
        "histogram": _HIST, "output_dir": "out/fig1-paper",
    },
    "fig1-desk": {
        "experiment": "unstructured_modeled", "N": 8, "L": 20, "T": 2.7, "epsilon": 0.002,
        "direction": [0.3, 0.3, 0.9055385138137417], "S": 16_000_000, "s": 500, "seed": 1,
        "arms": ["exact", "noisy", "mixture", "mixture_plus_twirl"], "histogram": _HIST,
        "write_samples": False, "output_dir": "out/fig1-desk",
    },
    "fig2-paper": {
        "experiment": "unstructured_modeled_sweep", "N": 12, "L": 30, "T": 1.0, "epsilon": 0.02,
        "time_sweep": _sweep(1.0, 30), "S": 100_000, "s": 100, "seed": 2, "write_samples": False,
        "output_dir": "out/fig2-paper",
    },
    "fig2-desk": {
        "experiment": "unstructured_modeled_sweep", "N": 6, "L": 10, "T": 1.0, "epsilon": 0.02,
        "time_sweep": _sweep(1.0, 10), "S": 20_000, "s": 100, "seed": 2, "write_samples": False,
        "output_dir": "out/fig2-desk",
    },
    "fig4-paper": {
        "experiment": "constant_overrotation", "N": 15, "L": 70, "T": 1.0,
        "error": {"kind": "constant", "epsilon": 0.001}, "S": 3_000_000, "s": 100, "seed": 4,
        "histogram": _HIST, "output_dir": "out/fig4-paper",
    },
    "fig4-desk": {
        "experiment": "constant_overrotation", "N": 8, "L": 10, "T": 2.7,
        "error": {"kind": "constant", "epsilon": 0.005}, "S": 200_000, "s": 100, "seed": 4,
        "histogram": _HIST, "output_dir": "out/fig4-desk",
    },
    "fig5-paper": {"experiment": "ab_scan", "epsilon": 0.05, "grid": 200, "output_dir": "out/fig5-paper"},
    "fig5-desk": {"experiment": "ab_scan", "epsilon": 0.05, "grid": 60, "output_dir": "out/fig5-desk"},
    "fig8-paper": {
        "experiment": "constant_overrotation", "N": 12, "L": 30, "T": 1.0,
        "error": {"kind": "constant", "epsilon": 0.01}, "time_sweep": _sweep(1.0, 30), "S": 100_000,
        "s": 100, "seed": 8, "write_samples": False, "output_dir": "out/fig8-paper",
    },
    "fig8-desk": {
        "experiment": "constant_overrotation", "N": 6, "L": 12, "T": 0.3,
        "error": {"kind": "constant", "epsilon": 0.01}, "step_sweep": list(range(2, 13)), "S": 100_000,
        "s": 1, "seed": 8, "write_samples": False, "output_dir": "out/fig8-desk",
    },
    "fig9-paper": {
        "experiment": "instance_count_study", "N": 12, "L": 30, "T": 1.0,
        "error": {"kind": "constant", "epsilon": 0.01}, "S": 100_000,
        "shots_per_instance": [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000, 20_000, 50_000],
        "seed": 9, "output_dir": "out/fig9-paper",
    },
    "fig9-desk": {
        "experiment": "instance_count_study", "N": 6, "L": 10, "T": 1.0,
        "error": {"kind": "constant", "epsilon": 0.01}, "S": 100_000,
        "shots_per_instance": [10, 100, 1000, 10_000, 50_000], "seed": 9, "output_dir": "out/fig9-desk",
    },
    "fig10-paper": {
        "experiment": "uniform_overrotation", "N": 15, "L": 70, "T": 1.0,
        "error": {"kind": "uniform", "epsilon0": 0.001}, "S": 3_000_000, "s": 100, "seed": 10,
        "histogram": _HIST, "output_dir": "out/fig10-paper",
    },
    "fig10-desk": {
        "experiment": "uniform_overrotation", "N": 8, "L": 10, "T": 2.7,
        "error": {"kind": "uniform", "epsilon0": 0.005}, "S": 200_000, "s": 100, "seed": 10,
        "histogram": _HIST, "output_dir": "out/fig10-desk",
    },
}


# ---------------------------------------------------------------- entry point


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = args.out
    if overrides:
        cfg = parse_config({**cfg.to_dict(), **overrides})
    run(cfg, threads=args.threads)
    print(f"wrote {Path(cfg.output_dir) / 'results.json'}")
    return 0


def _cmd_scan(args) -> int:
    scan = mixture.scan_ab(args.epsilon, args.grid)
    out = Path(args.out or "ab_scan.csv")
    scan.write_csv(out)
    a, b, best = scan.argmin()
    print(f"argmin A={a:.6f} B={b:.6f} one_norm={best:.9f}; wrote {out}")
    return 0


def _cmd_oracle(args) -> int:
    worst = oracle.run_checks(seed=args.seed or 0)
    bad = False
    for name, r in worst.items():
        ok = r < 1e-12
        bad |= not ok
        print(f"{name:20s} max residual {r:.3e} {'ok' if ok else 'FAIL'}")
    return 1 if bad else 0


def _cmd_histogram(args) -> int:
    with open(args.samples, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "weighted_value" not in reader.fieldnames:
            raise ConfigError(f"{args.samples}: no weighted_value column")
        values = np.array([float(row["weighted_value"]) for row in reader])
    spec = HistogramSpec(args.resample_size, args.n_resamples, args.bins)
    hist = resample_histogram(values, spec, np.random.default_rng(args.seed or 0))
    out = Path(args.out or Path(args.samples).with_name("histogram.csv"))
    hist.write_csv(out)
    print(f"center {hist.center:.6f} bin width {hist.bin_width:.3e}; wrote {out}")
    return 0


def _cmd_presets(args) -> int:
    if args.name:
        if args.name not in PRESETS:
            raise ConfigError(f"unknown preset {args.name!r}")
        print(json.dumps(PRESETS[args.name], indent=2))
    else:
        print("\n".join(sorted(PRESETS)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chanmix", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for instance batches")
    parser.add_argument("--out", default=None, help="output directory or file")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config or preset")
    p.add_argument("config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("scan-ab", help="scan ||gamma||_1 over the (A, B) plane")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--grid", type=int, default=200)
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("oracle-check", help="verify the channel identities at random angles")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("histogram", help="resample a samples.csv into histogram.csv")
    p.add_argument("samples")
    p.add_argument("--resample-size", type=int, default=HistogramSpec.resample_size)
    p.add_argument("--n-resamples", type=int, default=HistogramSpec.n_resamples)
    p.add_argument("--bins", type=int, default=HistogramSpec.bins)
    p.set_defaults(func=_cmd_histogram)

    p = sub.add_parser("presets", help="list presets or print one")
    p.add_argument("name", nargs="?")
    p.set_defaults(func=_cmd_presets)
    return parser


def main(argv=None) -> int:
    args = _parse(build_parser(), argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ChanmixError, ValueError, OSError) as exc:
        print(f"chanmix: error: {exc}", file=sys.stderr)
        return 2


def _parse(parser, argv):
    """Parse, accepting --seed/--threads/--out on either side of the subcommand."""
    argv = list(sys.argv[1:] if argv is None else argv)
    front, back = [], []
    i = 0
    while i < len(argv):
        a = argv[i]
        key = a.split("=", 1)[0]
        if key in ("--seed", "--threads", "--out"):
            if "=" in a:
                front.append(a)
            else:
                front += argv[i : i + 2]
                i += 1
        else:
            back.append(a)
        i += 1
    return parser.parse_args(front + back)


if __name__ == "__main__":
    sys.exit(main())
