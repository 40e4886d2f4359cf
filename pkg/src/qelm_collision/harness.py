"""Experiment orchestration: parameter sweeps, seeded realizations, CSV output, CLI.

One realization samples all random couplings (system, bath, reservoir) from a
child seed, runs the collision model over the target-parameter grid, maps every
trajectory through the QELM, and trains/evaluates a linear readout per collision
step and feature-extension mode. Realizations are independent and run in a
process pool; aggregation is sorted by realization index so thread count never
changes the output.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
import yaml

from . import collision, qelm, readout
from .collision import CollisionConfig
from .qelm import EXTENSIONS, QELMFeatureMap, ReservoirConfig

CHI_RANGE = (0.0, float(np.pi / 2))
LAMBDA_RANGE = (0.0, 1.0)

# Fixed "other parameter" values for each task.
DEFAULT_FIXED_LAMBDAS = (0.10, 0.50, 1.00)
DEFAULT_FIXED_CHIS = (0.1, 0.5, 1.0, 1.57)

CSV_HEADER = "task,fixed_param,fixed_value,step,extension,nmse_mean,nmse_std,n_realizations"


@dataclass(frozen=True)
class CollisionDefaults:
    n_sys: int = 2
    n_bath: int = 2
    j_scale: float = 1.0
    dt: float = 1.0
    boundary: str = "open"
    bath_interacting: bool = True  # zeroed bath couplings switch the bath off


@dataclass(frozen=True)
class ReservoirDefaults:
    n_res: int = 5
    h: float = 1.0
    j_scale: float = 1.0
    evolve_time: float = 10.0
    input_sites: tuple = (0, 1)


@dataclass(frozen=True)
class ReadoutDefaults:
    epsilon: float = 0.0
    add_bias: bool = True


@dataclass(frozen=True)
class ExperimentSpec:
    task: str
    output_path: str = "results.csv"
    fixed_values: tuple = ()
    grid_size: int = 40
    grid_range: tuple = ()
    steps: int = 10
    realizations: int = 200
    extensions: tuple = EXTENSIONS
    k1: int = 1
    train_fraction: float = 0.75
    master_seed: int = 12345
    collision: CollisionDefaults = field(default_factory=CollisionDefaults)
    reservoir: ReservoirDefaults = field(default_factory=ReservoirDefaults)
    readout: ReadoutDefaults = field(default_factory=ReadoutDefaults)

    def __post_init__(self):
        if self.task not in ("estimate_chi", "estimate_lambda"):
            raise ValueError(f"unknown task {self.task!r}")
        domain = CHI_RANGE if self.task == "estimate_chi" else LAMBDA_RANGE
        if not self.grid_range:
            object.__setattr__(self, "grid_range", domain)
        if not self.fixed_values:
            defaults = DEFAULT_FIXED_LAMBDAS if self.task == "estimate_chi" else DEFAULT_FIXED_CHIS
            object.__setattr__(self, "fixed_values", defaults)
        lo, hi = self.grid_range
        if not (domain[0] <= lo < hi <= domain[1] + 1e-12):
            raise ValueError(
                f"grid_range {self.grid_range} outside physical domain {domain} of the target")
        if self.grid_size < 4:
            raise ValueError("grid_size must be at least 4")
        if self.steps < 2:
            raise ValueError("steps must be at least 2")
        if self.realizations < 1:
            raise ValueError("realizations must be at least 1")
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")
        if not 1 <= self.k1 <= self.steps:
            raise ValueError(f"k1={self.k1} must lie in 1..steps")
        bad = [e for e in self.extensions if e not in EXTENSIONS]
        if bad:
            raise ValueError(f"unknown extensions {bad}; valid: {list(EXTENSIONS)}")

    @property
    def fixed_param(self) -> str:
        return "lambda" if self.task == "estimate_chi" else "chi"


@dataclass(frozen=True)
class NmseResult:
    task: str
    fixed_param: str
    fixed_value: float
    step: int
    extension: str
    nmse_mean: float
    nmse_std: float
    n_realizations: int


_SCHEMA = {
    "experiment": {"task", "output_path", "fixed_values", "grid_size", "grid_range",
                   "steps", "realizations", "extensions", "k1", "train_fraction",
                   "master_seed"},
    "collision": {"n_sys", "n_bath", "j_scale", "dt", "boundary", "bath_interacting"},
    "reservoir": {"n_res", "h", "j_scale", "evolve_time", "input_sites"},
    "readout": {"epsilon", "add_bias"},
}


def parse_spec(text: str) -> ExperimentSpec:
    """Parse and validate a YAML experiment config. Unknown keys are rejected."""
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ValueError("config must be a mapping of sections")
    unknown_sections = set(data) - set(_SCHEMA)
    if unknown_sections:
        raise ValueError(f"unknown config sections: {sorted(unknown_sections)}")
    for section, keys in _SCHEMA.items():
        extra = set(data.get(section) or {}) - keys
        if extra:
            raise ValueError(f"unknown keys in [{section}]: {sorted(extra)}")
    exp = dict(data.get("experiment") or {})
    if "task" not in exp:
        raise ValueError("missing required key experiment.task")
    for key in ("fixed_values", "grid_range", "extensions"):
        if key in exp:
            exp[key] = tuple(exp[key])
    kwargs = dict(exp)
    if "collision" in data:
        kwargs["collision"] = CollisionDefaults(**data["collision"])
    if "reservoir" in data:
        res = dict(data["reservoir"])
        if "input_sites" in res:
            res["input_sites"] = tuple(res["input_sites"])
        kwargs["reservoir"] = ReservoirDefaults(**res)
    if "readout" in data:
        kwargs["readout"] = ReadoutDefaults(**data["readout"])
    return ExperimentSpec(**kwargs)


def serialize_spec(spec: ExperimentSpec) -> str:
    """YAML text that parse_spec maps back to an equal spec."""
    d = asdict(spec)
    doc = {
        "experiment": {k: v for k, v in d.items()
                       if k not in ("collision", "reservoir", "readout")},
        "collision": d["collision"],
        "reservoir": d["reservoir"],
        "readout": d["readout"],
    }

    def plain(obj):
        if isinstance(obj, dict):
            return {k: plain(v) for k, v in obj.items()}
        if isinstance(obj, (tuple, list)):
            return [plain(v) for v in obj]
        if isinstance(obj, (np.floating, np.integer)):
            return obj.item()
        return obj

    return yaml.safe_dump(plain(doc), sort_keys=True)


def target_grid(spec: ExperimentSpec) -> np.ndarray:
    lo, hi = spec.grid_range
    return np.linspace(lo, hi, spec.grid_size)


def train_test_indices(spec: ExperimentSpec) -> tuple[np.ndarray, np.ndarray]:
    """Interleaved split: test points sit strictly inside the training grid."""
    stride = max(2, round(1.0 / (1.0 - spec.train_fraction)))
    idx = np.arange(spec.grid_size)
    test = idx[idx % stride == stride // 2]
    train = np.setdiff1d(idx, test)
    return train, test


def realization_rng(master_seed: int, index: int) -> np.random.Generator:
    """Child generator for one realization; adding realizations never perturbs others."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(index,)))


def run_realization(spec: ExperimentSpec, index: int) -> list[tuple]:
    """All per-(fixed value, step, extension) NMSE values for one realization."""
    if not 0 <= index < spec.realizations:
        raise ValueError(f"realization index {index} out of range")
    rng = realization_rng(spec.master_seed, index)
    col = spec.collision
    nb = collision.num_bonds(col.n_sys, col.boundary)
    j_sys = tuple(collision.sample_couplings(rng, nb, col.j_scale))
    j_bath = tuple(collision.sample_couplings(rng, nb, col.j_scale))
    if not col.bath_interacting:
        j_bath = (0.0,) * nb
    res = spec.reservoir
    j_matrix = qelm.sample_reservoir_couplings(rng, res.n_res, res.j_scale)
    rcfg = ReservoirConfig(j_matrix=j_matrix, n_res=res.n_res, h=res.h,
                           j_scale=res.j_scale, evolve_time=res.evolve_time,
                           input_sites=tuple(res.input_sites))
    fmap = QELMFeatureMap(rcfg).fit()

    grid = target_grid(spec)
    train_idx, test_idx = train_test_indices(spec)
    rows = []
    for fixed in spec.fixed_values:
        raw_z = np.empty((spec.grid_size, spec.steps, res.n_res))
        raw_x = np.empty_like(raw_z)
        for g, value in enumerate(grid):
            chi, lam = ((value, fixed) if spec.task == "estimate_chi" else (fixed, value))
            cfg = CollisionConfig(chi=chi, lam=lam, j_sys=j_sys, j_bath=j_bath,
                                  n_sys=col.n_sys, n_bath=col.n_bath,
                                  j_scale=col.j_scale, dt=col.dt,
                                  boundary=col.boundary, seed=index)
            traj = collision.generate_trajectory(cfg, spec.steps)
            raw_z[g], raw_x[g] = fmap.transform(traj)
        for ext in spec.extensions:
            for k in qelm.valid_steps(ext, spec.steps, spec.k1):
                feats = np.array([qelm.augment(raw_z[g], raw_x[g], k, ext, spec.k1)
                                  for g in range(spec.grid_size)])
                err = readout.train_eval_step(
                    feats[train_idx], grid[train_idx], feats[test_idx], grid[test_idx],
                    epsilon=spec.readout.epsilon, add_bias=spec.readout.add_bias)
                rows.append((float(fixed), k, ext, err))
    return rows


def _worker(args):
    spec, index = args
    return index, run_realization(spec, index)


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> list[NmseResult]:
    """Run all realizations and aggregate mean/std NMSE per (fixed value, step, extension)."""
    indices = range(spec.realizations)
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            per_real = list(pool.map(_worker, [(spec, i) for i in indices]))
    else:
        per_real = [_worker((spec, i)) for i in indices]
    per_real.sort(key=lambda item: item[0])

    collected: dict[tuple, list[float]] = {}
    for _, rows in per_real:
        for fixed, k, ext, err in rows:
            collected.setdefault((fixed, k, ext), []).append(err)
    results = []
    for (fixed, k, ext), values in sorted(collected.items()):
        arr = np.asarray(values)
        std = float(np.std(arr, ddof=1)) if len(arr) > 1 else 0.0
        results.append(NmseResult(
            task=spec.task, fixed_param=spec.fixed_param, fixed_value=fixed,
            step=k, extension=ext, nmse_mean=float(np.mean(arr)), nmse_std=std,
            n_realizations=len(arr)))
    return results


def format_csv(results: list[NmseResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    ordered = sorted(results, key=lambda r: (r.task, r.fixed_value, r.step, r.extension))
    for r in ordered:
        writer.writerow([r.task, r.fixed_param, f"{r.fixed_value:.10g}", r.step,
                         r.extension, f"{r.nmse_mean:.10g}", f"{r.nmse_std:.10g}",
                         r.n_realizations])
    return buf.getvalue()


def write_csv(results: list[NmseResult], path: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_csv(results))


def write_gnuplot(csv_path: str, script_path: str) -> None:
    """Companion gnuplot script: NMSE vs step, one curve per extension."""
    lines = [
        "set datafile separator ','",
        "set logscale y",
        "set xlabel 'collision step k'",
        "set ylabel 'NMSE'",
        "set key outside",
        f"csv = '{csv_path}'",
        "plot for [ext in 'none past_step fixed_step extra_observable'] \\",
        "    csv using 4:(strcol(5) eq ext ? $6 : 1/0) with linespoints title ext",
    ]
    with open(script_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def run_selftest() -> int:
    """Fast invariant checks over the core modules; returns a process exit code."""
    from . import qcore, channels

    rng = np.random.default_rng(7)
    failures = []

    def check(name, ok):
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        if not ok:
            failures.append(name)

    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = qcore.HermitianOperator(m + m.conj().T)
    u = qcore.herm_expm(h, 0.7)
    check("herm_expm unitarity", qcore.is_unitary(u))
    check("herm_expm group property",
          np.allclose(qcore.herm_expm(h, 1.1), qcore.herm_expm(h, 0.4) @ qcore.herm_expm(h, 0.7),
                      atol=1e-9))
    for lam in (0.0, 0.5, 1.0):
        check(f"depolarizing CPTP lam={lam}",
              channels.verify_cptp(channels.depolarizing_kraus(lam, 0, 1)))
    p = channels.partial_swap(0.3, (0, 1), 2)
    check("partial swap unitarity", qcore.is_unitary(p, atol=1e-12))
    rho = qcore.zero_state(1)
    out = channels.depolarize_qubit(rho, 0.5, 0)
    check("depolarize closed form",
          np.allclose(out, 0.5 * rho + 0.5 * qcore.maximally_mixed(1), atol=1e-12))
    cfg = CollisionConfig(chi=0.4, lam=1.0, j_sys=(0.3,), j_bath=(-0.2,))
    traj = collision.generate_trajectory(cfg, 3)
    phi = collision.derive_markov_map(cfg)
    rho_s = qcore.zero_state(cfg.n_sys)
    ok = True
    for state in traj.states:
        rho_s = phi.apply(rho_s)
        ok = ok and qcore.trace_distance(rho_s, state) < 1e-9
    check("lambda=1 Markov map matches trajectory", ok)
    model = readout.LinearReadout().fit([[1.0], [2.0], [3.0]], [2.0, 4.0, 6.0])
    check("readout exact linear recovery",
          np.allclose(model.predict([[4.0]]), [8.0], atol=1e-8))
    return 1 if failures else 0


def resolve_threads(value: str | None) -> int:
    if value is None:
        value = os.environ.get("QELM_THREADS", "1")
    if value == "auto":
        return os.cpu_count() or 1
    n = int(value)
    if n < 1:
        raise ValueError("threads must be >= 1 or 'auto'")
    return n


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qelm-collision",
        description="Collision-model QELM parameter-estimation sweeps")
    sub = parser.add_subparsers(dest="command")
    for name, helptext in (
        ("estimate-chi", "estimate the partial-swap strength chi at fixed lambda values"),
        ("estimate-lambda", "estimate the depolarization rate lambda at fixed chi values"),
        ("sweep", "run both estimation tasks into one CSV"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--realizations", type=int)
        p.add_argument("--steps", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--extensions", help="comma-separated extension modes")
        p.add_argument("--grid", type=int, help="target-parameter grid size")
        p.add_argument("--out", help="output CSV path")
        p.add_argument("--threads", help="worker count or 'auto'")
        p.add_argument("--emit-gnuplot", action="store_true",
                       help="write a companion gnuplot script next to the CSV")
    sub.add_parser("selftest", help="run fast invariant checks")
    return parser


def _spec_for(task: str, args) -> ExperimentSpec:
    if args.config:
        with open(args.config) as fh:
            spec = parse_spec(fh.read())
        if spec.task != task:
            spec = _replace_task(spec, task)
    else:
        spec = ExperimentSpec(task=task)
    overrides = {}
    if args.realizations is not None:
        overrides["realizations"] = args.realizations
    if args.steps is not None:
        overrides["steps"] = args.steps
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.grid is not None:
        overrides["grid_size"] = args.grid
    if args.extensions is not None:
        overrides["extensions"] = tuple(e.strip() for e in args.extensions.split(","))
    if args.out is not None:
        overrides["output_path"] = args.out
    if overrides:
        spec = _replace(spec, **overrides)
    return spec


def _replace(spec: ExperimentSpec, **kwargs) -> ExperimentSpec:
    d = {f: getattr(spec, f) for f in spec.__dataclass_fields__}
    d.update(kwargs)
    return ExperimentSpec(**d)


def _replace_task(spec: ExperimentSpec, task: str) -> ExperimentSpec:
    # Task-dependent defaults must be recomputed, not carried over.
    return _replace(spec, task=task, fixed_values=(), grid_range=())


def cli_main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    if args.command == "selftest":
        return run_selftest()
    try:
        threads = resolve_threads(args.threads)
        tasks = {"estimate-chi": ["estimate_chi"],
                 "estimate-lambda": ["estimate_lambda"],
                 "sweep": ["estimate_chi", "estimate_lambda"]}[args.command]
        results = []
        out_path = None
        for task in tasks:
            spec = _spec_for(task, args)
            out_path = spec.output_path
            results.extend(run_experiment(spec, threads=threads))
        write_csv(results, out_path)
        print(f"wrote {len(results)} rows to {out_path}")
        if args.emit_gnuplot:
            script = os.path.splitext(out_path)[0] + ".gp"
            write_gnuplot(out_path, script)
            print(f"wrote {script}")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def cli_entry() -> None:
    raise SystemExit(cli_main())
