"""Experiment harness: deterministic sweeps, verification suites, fits.

Sweeps are described by flat ``key = value`` config files (lists are
comma-separated; unknown keys are rejected).  A sweep expands its config
into a cartesian product of configurations, runs ``seeds`` tasks per
configuration, and emits one CSV row per task in canonical
(config_index, seed_index) order.  Rows are computed in a thread pool --
the TWOPT_THREADS environment variable overrides the width -- but the
output is independent of scheduling: every task derives its own RNG seed as

    SeedSequence([base_seed, config_index, seed_index]) -> uint64

and results are buffered and written in canonical order, floats formatted
with shortest-repr.  Running the same config twice yields byte-identical
files; ``replay_row`` recomputes any single row from the config alone.

The verification suites re-check the probability estimates behind the
smoothed analysis against simulation: Gaussian ball mass, distance-to-line
mass, norm stochastic dominance, the chi density and its inverse moments,
the norm tail bound, and the linked-pair counting bound on real runs.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import itertools
import math
import os
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.integrate import quad

from .exact import held_karp, mst_length, estimate_two_opt_max
from .geometry import Metric
from .layered import LayeredInstance, build_layered, build_long_tour, check_containers
from .stochastic import (
    chi_inverse_moment,
    chi_pdf,
    chi_square_tail,
    make_origins,
    mc_ball_mass,
    mc_dominance,
    mc_line_closeness,
    perturb,
)
from .tour import (
    certify_two_optimality,
    count_disjoint_linked_pairs,
    linked_pair_bound,
    min_improvement,
    run_two_opt,
    tour_length,
)

__all__ = [
    "VerificationError",
    "SweepConfig",
    "parse_config",
    "load_config",
    "task_seed",
    "resolve_threads",
    "run_sweep",
    "replay_row",
    "write_csv",
    "ROW_COLUMNS",
    "FitResult",
    "scaling_fit",
    "ratio_experiment",
    "VerifyCheck",
    "VerifyReport",
    "verify_suite",
    "VERIFY_SUITES",
]


class VerificationError(Exception):
    """A verification or certification step failed (CLI exit code 2)."""


# ---------------------------------------------------------------------------
# sweep configuration


_LIST_KEYS = {"n", "sigma", "metric", "pivot", "init"}
_KNOWN_KEYS = {
    "experiment", "n", "dim", "sigma", "metric", "pivot", "init", "origins",
    "seeds", "base_seed", "eps", "max_iter", "ratio", "delta_min", "linked",
    "p", "t",
}

_RATIO_EXACT_MAX_N = 14
_DELTA_MIN_AUTO_MAX_N = 12


@dataclasses.dataclass
class SweepConfig:
    """A parsed sweep description; see parse_config for the file format."""

    experiment: str = "two_opt"
    n: tuple[int, ...] = ()
    dim: int = 2
    sigma: tuple[float, ...] = ()
    metric: tuple[str, ...] = ("l2",)
    pivot: tuple[str, ...] = ("first",)
    init: tuple[str, ...] = ("random",)
    origins: str = "uniform"
    seeds: int = 1
    base_seed: int = 0
    eps: float = 1e-12
    max_iter: int | None = None
    ratio: str = "auto"
    delta_min: str = "auto"
    linked: bool = False
    p: int | None = None
    t: int | None = None

    def configurations(self) -> list[dict]:
        """Expand into the canonical configuration list.

        two_opt: product over (n, sigma, metric, pivot, init), in that
        nesting order.  lb: product over sigma.
        """
        if self.experiment == "two_opt":
            combos = itertools.product(self.n, self.sigma, self.metric, self.pivot, self.init)
            return [
                {"n": n, "sigma": s, "metric": m, "pivot": pv, "init": ini}
                for n, s, m, pv, ini in combos
            ]
        return [{"p": self.p, "t": self.t, "sigma": s} for s in self.sigma]

    def validate(self) -> None:
        if self.experiment not in ("two_opt", "lb"):
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.seeds < 1:
            raise ValueError(f"seeds must be >= 1, got {self.seeds}")
        if self.base_seed < 0:
            raise ValueError(f"base_seed must be >= 0, got {self.base_seed}")
        if self.eps <= 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.experiment == "two_opt":
            if not self.n:
                raise ValueError("two_opt sweep needs n = ...")
            if not self.sigma:
                raise ValueError("two_opt sweep needs sigma = ...")
            if min(self.n) < 4:
                raise ValueError("two_opt sweep needs n >= 4")
            for m in self.metric:
                Metric.parse(m)
            for pv in self.pivot:
                if pv not in ("first", "best", "random"):
                    raise ValueError(f"unknown pivot {pv!r}")
            for ini in self.init:
                if ini not in ("random", "nn", "nearest_neighbor", "greedy", "greedy_insertion"):
                    raise ValueError(f"unknown init rule {ini!r}")
            if self.origins not in ("uniform", "grid", "single-point"):
                raise ValueError(f"unknown origins rule {self.origins!r}")
            if self.ratio not in ("auto", "exact", "bound", "none"):
                raise ValueError(f"unknown ratio mode {self.ratio!r}")
            if self.ratio == "exact" and max(self.n) > 20:
                raise ValueError("ratio = exact needs n <= 20 (exact solver range)")
            if self.delta_min not in ("auto", "always", "never"):
                raise ValueError(f"unknown delta_min mode {self.delta_min!r}")
        else:
            if self.p is None:
                raise ValueError("lb sweep needs p = ...")
            if not self.sigma:
                raise ValueError("lb sweep needs sigma = ...")


def parse_config(text: str) -> SweepConfig:
    """Parse the flat key=value format; reject unknown or repeated keys."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"config line {lineno}: expected key = value, got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].strip()
        if key not in _KNOWN_KEYS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ValueError(f"config line {lineno}: repeated key {key!r}")
        raw[key] = value

    cfg = SweepConfig()
    for key, value in raw.items():
        if key in _LIST_KEYS:
            parts = [v.strip() for v in value.split(",") if v.strip()]
            if not parts:
                raise ValueError(f"config key {key!r} has an empty list")
            if key == "n":
                cfg.n = tuple(int(v) for v in parts)
            elif key == "sigma":
                cfg.sigma = tuple(float(v) for v in parts)
            else:
                setattr(cfg, key, tuple(parts))
        elif key in ("dim", "seeds", "base_seed"):
            setattr(cfg, key, int(value))
        elif key == "eps":
            cfg.eps = float(value)
        elif key == "max_iter":
            cfg.max_iter = None if value in ("", "none") else int(value)
        elif key == "linked":
            if value not in ("true", "false"):
                raise ValueError(f"config key 'linked' must be true or false, got {value!r}")
            cfg.linked = value == "true"
        elif key in ("p", "t"):
            setattr(cfg, key, None if value in ("", "none", "default") else int(value))
        else:
            setattr(cfg, key, value)
    cfg.validate()
    return cfg


def load_config(path: str) -> SweepConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


# ---------------------------------------------------------------------------
# sweep execution


def task_seed(base_seed: int, config_index: int, seed_index: int) -> int:
    """The documented per-task seed derivation (order-independent)."""
    ss = np.random.SeedSequence([base_seed, config_index, seed_index])
    return int(ss.generate_state(1, np.uint64)[0])


def resolve_threads(flag: int | None = None) -> int:
    """Thread-pool width: TWOPT_THREADS env var > explicit flag > cpu count."""
    env = os.environ.get("TWOPT_THREADS", "").strip()
    if env:
        try:
            width = int(env)
        except ValueError:
            raise ValueError(f"TWOPT_THREADS must be an integer, got {env!r}") from None
        if width < 1:
            raise ValueError(f"TWOPT_THREADS must be >= 1, got {env!r}")
        return width
    if flag is not None:
        if flag < 1:
            raise ValueError(f"thread count must be >= 1, got {flag}")
        return flag
    return os.cpu_count() or 1


ROW_COLUMNS = [
    "row_id", "experiment", "config_index", "seed_index", "seed",
    "n", "dim", "sigma", "metric", "pivot", "init", "origins", "eps", "p", "t",
    "iterations", "initial_length", "final_length", "converged",
    "min_gain_observed", "delta_min", "iter_bound", "ratio", "ratio_kind",
    "linked_pairs", "linked_bound", "container_ok", "worst_offset_ratio",
    "certified", "max_violation_gain", "tour_length", "mst2", "ratio_lb",
]


def _two_opt_row(cfg: SweepConfig, conf: dict, config_index: int, seed_index: int) -> dict:
    seed = task_seed(cfg.base_seed, config_index, seed_index)
    n, sigma, metric = conf["n"], conf["sigma"], conf["metric"]
    origins = make_origins(cfg.origins, n, cfg.dim, seed)
    inst = perturb(origins, sigma, seed)
    want_linked = cfg.linked
    rec = run_two_opt(
        inst, metric, init=conf["init"], pivot=conf["pivot"], eps=cfg.eps,
        seed=seed, max_iter=cfg.max_iter, keep_changes=want_linked,
    )
    row = {
        "experiment": "two_opt", "config_index": config_index,
        "seed_index": seed_index, "seed": seed, "n": n, "dim": cfg.dim,
        "sigma": sigma, "metric": rec.metric, "pivot": rec.pivot,
        "init": rec.init, "origins": cfg.origins, "eps": cfg.eps,
        "iterations": rec.iterations, "initial_length": rec.initial_length,
        "final_length": rec.final_length, "converged": rec.converged,
        "min_gain_observed": rec.min_gain_observed,
    }
    mode = cfg.ratio
    if mode == "auto":
        mode = "exact" if n <= _RATIO_EXACT_MAX_N else "bound"
    if mode == "exact":
        opt = held_karp(inst, metric).length
        row["ratio"] = rec.final_length / opt
        row["ratio_kind"] = "exact"
    elif mode == "bound":
        row["ratio"] = rec.final_length / (2.0 * mst_length(inst, metric))
        row["ratio_kind"] = "bound"
    dm_mode = cfg.delta_min
    if dm_mode == "always" or (dm_mode == "auto" and n <= _DELTA_MIN_AUTO_MAX_N):
        dm = min_improvement(inst, metric, cfg.eps)
        row["delta_min"] = dm
        if dm is not None:
            row["iter_bound"] = rec.initial_length / dm
    if want_linked:
        count, _pairs = count_disjoint_linked_pairs(rec.changes, n=n)
        row["linked_pairs"] = count
        row["linked_bound"] = linked_pair_bound(rec.iterations, n)
    return row


def _lb_row(
    cfg: SweepConfig,
    conf: dict,
    config_index: int,
    seed_index: int,
    li: LayeredInstance,
) -> dict:
    seed = task_seed(cfg.base_seed, config_index, seed_index)
    inst = li.perturbed(seed)
    tour = build_long_tour(li, inst)
    ok, worst = check_containers(li, inst)
    violation = certify_two_optimality(inst.points, tour, Metric.EUCLIDEAN, cfg.eps)
    length = tour_length(tour, inst.points, Metric.EUCLIDEAN)
    mst2 = 2.0 * mst_length(inst.points, Metric.EUCLIDEAN)
    return {
        "experiment": "lb", "config_index": config_index,
        "seed_index": seed_index, "seed": seed, "n": li.n, "dim": 2,
        "sigma": li.params.sigma, "metric": "l2", "eps": cfg.eps,
        "p": li.params.p, "t": li.params.t,
        "container_ok": ok, "worst_offset_ratio": worst,
        "certified": violation is None,
        "max_violation_gain": None if violation is None else violation.gain,
        "tour_length": length, "mst2": mst2, "ratio_lb": length / mst2,
    }


def run_sweep(cfg: SweepConfig, threads: int | None = None) -> list[dict]:
    """Run all tasks of a sweep; rows come back in canonical order."""
    cfg.validate()
    confs = cfg.configurations()
    layered: dict[int, LayeredInstance] = {}
    if cfg.experiment == "lb":
        for ci, conf in enumerate(confs):
            layered[ci] = build_layered(conf["p"], conf["sigma"], conf["t"])

    def compute(ci: int, si: int) -> dict:
        if cfg.experiment == "two_opt":
            return _two_opt_row(cfg, confs[ci], ci, si)
        return _lb_row(cfg, confs[ci], ci, si, layered[ci])

    tasks = [(ci, si) for ci in range(len(confs)) for si in range(cfg.seeds)]
    width = resolve_threads(threads)
    results: dict[tuple[int, int], dict] = {}
    if width == 1 or len(tasks) == 1:
        for ci, si in tasks:
            results[(ci, si)] = compute(ci, si)
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=width) as pool:
            futures = {pool.submit(compute, ci, si): (ci, si) for ci, si in tasks}
            for fut in concurrent.futures.as_completed(futures):
                results[futures[fut]] = fut.result()
    rows = []
    for row_id, (ci, si) in enumerate(tasks):
        row = results[(ci, si)]
        row["row_id"] = row_id
        rows.append(row)
    return rows


def replay_row(cfg: SweepConfig, row_id: int) -> dict:
    """Recompute a single sweep row from the config; no CSV needed."""
    cfg.validate()
    confs = cfg.configurations()
    total = len(confs) * cfg.seeds
    if not 0 <= row_id < total:
        raise ValueError(f"row_id {row_id} out of range (sweep has {total} rows)")
    ci, si = divmod(row_id, cfg.seeds)
    if cfg.experiment == "two_opt":
        row = _two_opt_row(cfg, confs[ci], ci, si)
    else:
        li = build_layered(confs[ci]["p"], confs[ci]["sigma"], confs[ci]["t"])
        row = _lb_row(cfg, confs[ci], ci, si, li)
    row["row_id"] = row_id
    return row


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(rows: Iterable[Mapping], path: str, columns: Sequence[str] = ROW_COLUMNS) -> None:
    """Write rows atomically; floats use shortest-repr so reruns match byte-for-byte.

    The file appears only when complete: data goes to a temp file that is
    renamed into place, and a partially written temp file is removed on error.
    """
    tmp = path + ".tmp"
    try:
        with open(tmp, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_format_cell(row.get(col)) for col in columns) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


# ---------------------------------------------------------------------------
# fits and ratio experiment


@dataclasses.dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float


def scaling_fit(rows: Sequence[Mapping], x_field: str, y_field: str) -> FitResult:
    """Least-squares fit of log y against log x over the given rows.

    Needs at least three distinct positive x values; y must be positive.  A
    constant-in-log y (zero residual, zero variance) fits perfectly.
    """
    xs = np.asarray([float(r[x_field]) for r in rows])
    ys = np.asarray([float(r[y_field]) for r in rows])
    if xs.size < 3 or np.unique(xs).size < 3:
        raise ValueError("scaling_fit needs at least three distinct x values")
    if (xs <= 0).any() or (ys <= 0).any():
        raise ValueError("scaling_fit needs positive x and y (log-log fit)")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_res = float(np.dot(resid, resid))
    centered = ly - ly.mean()
    ss_tot = float(np.dot(centered, centered))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return FitResult(slope=float(slope), intercept=float(intercept), r_squared=r2)


def ratio_experiment(
    n: int,
    sigma_grid: Sequence[float],
    restarts: int = 50,
    seeds: int = 50,
    base_seed: int = 0,
    origins: str = "grid",
    origin_scale: float = 0.1,
    pivot: str = "first",
    eps: float = 1e-12,
) -> list[dict]:
    """Worst-local-optimum to optimum ratio across a sigma grid.

    The design is paired: seed index si fixes one noise draw and one restart
    stream, reused for every sigma in the grid (the noise is drawn at unit
    scale and multiplied by sigma, so columns differ only in noise magnitude).
    Pairing removes column-to-column sampling noise from the trend, which is
    the quantity of interest; unpaired seeds would need far more than 50 seeds
    to resolve it.

    Origins follow the given layout rule scaled by origin_scale about the
    coordinate origin.  The default (grid, scale 0.1) puts the lattice spacing
    near sigma=0.01, so the smallest sigma sees the most confusable geometry
    and the worst-ratio trend decays across the default grid
    {0.01, 0.03, 0.1, 0.3, 1}.  At scale 1.0 the decay would start only past
    sigma=0.1.  n is capped by the exact solver (<= 20).
    """
    if n > 20:
        raise ValueError(f"ratio experiment needs n <= 20 for the exact optimum, got {n}")
    if origin_scale <= 0.0:
        raise ValueError(f"origin_scale must be positive, got {origin_scale}")
    rows = []
    row_id = 0
    for ci, sigma in enumerate(sigma_grid):
        for si in range(seeds):
            inst_seed = task_seed(base_seed, 0, si)
            est_seed = task_seed(base_seed, 1, si)
            origins_arr = make_origins(origins, n, 2, inst_seed) * origin_scale
            inst = perturb(origins_arr, sigma, inst_seed)
            worst = estimate_two_opt_max(
                inst, Metric.EUCLIDEAN, restarts=restarts, pivot=pivot, eps=eps, seed=est_seed
            )
            opt = held_karp(inst, Metric.EUCLIDEAN).length
            rows.append({
                "row_id": row_id, "experiment": "ratio", "config_index": ci,
                "seed_index": si, "seed": inst_seed, "n": n, "dim": 2,
                "sigma": sigma, "metric": "l2", "pivot": pivot,
                "init": "random", "origins": origins, "eps": eps,
                "restarts": restarts, "two_opt_max": worst, "optimum": opt,
                "ratio": worst / opt,
            })
            row_id += 1
    return rows


RATIO_COLUMNS = [
    "row_id", "experiment", "config_index", "seed_index", "seed", "n", "dim",
    "sigma", "metric", "pivot", "init", "origins", "eps", "restarts",
    "two_opt_max", "optimum", "ratio",
]


# ---------------------------------------------------------------------------
# verification suites


@dataclasses.dataclass
class VerifyCheck:
    name: str
    statistic: float
    bound: float
    slack: float
    passed: bool


@dataclasses.dataclass
class VerifyReport:
    suite: str
    samples: int
    seed: int
    checks: list[VerifyCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _mc_slack(phat: float, samples: int, z: float = 3.0) -> float:
    var = max(phat * (1.0 - phat), 1.0 / samples)
    return z * math.sqrt(var / samples)


def _suite_ball(samples: int, seed: int) -> list[VerifyCheck]:
    grid = [
        (1, 1.0, 0.5, 0.0),
        (2, 1.0, 0.5, 0.0),
        (3, 0.5, 0.2, 0.3),
    ]
    checks = []
    for k, (d, sigma, eps, off) in enumerate(grid):
        center = np.zeros(d)
        center[0] = off
        freq = mc_ball_mass(d, sigma, eps, samples, seed + k, center=center)
        bound = (eps / sigma) ** d
        slack = _mc_slack(freq, samples)
        checks.append(VerifyCheck(
            name=f"ball d={d} sigma={sigma} eps={eps} offset={off}",
            statistic=freq, bound=bound, slack=slack,
            passed=freq <= bound + slack,
        ))
    return checks


def _suite_line(samples: int, seed: int) -> list[VerifyCheck]:
    grid = [
        (2, 1.0, 0.1, None),
        (3, 1.0, 0.3, None),
        (3, 0.5, 0.1, ([0.2, 0.0, 0.0], [0.2, 1.0, 0.0])),
    ]
    checks = []
    for k, (d, sigma, eps, line) in enumerate(grid):
        a, b = line if line is not None else (None, None)
        freq = mc_line_closeness(d, sigma, eps, samples, seed + k, a=a, b=b)
        bound = (eps / sigma) ** (d - 1)
        slack = _mc_slack(freq, samples)
        checks.append(VerifyCheck(
            name=f"line d={d} sigma={sigma} eps={eps} axis={'shifted' if line else 'mean'}",
            statistic=freq, bound=bound, slack=slack,
            passed=freq <= bound + slack,
        ))
    return checks


def _suite_dominance(samples: int, seed: int) -> list[VerifyCheck]:
    grid = [
        (2, 1.0, [1.0, 0.0]),
        (3, 1.0, [0.5, 0.0, 0.0]),
        (2, 0.5, [1.5, 0.0]),
    ]
    checks = []
    for k, (d, sigma, mu) in enumerate(grid):
        sample = mc_dominance(d, sigma, mu, samples, seed + k)
        qs = np.percentile(np.concatenate([sample.a, sample.b]), np.arange(5, 100, 5))
        fa = sample.cdf_a(qs)
        fb = sample.cdf_b(qs)
        diff = fb - fa
        worst = int(np.argmax(diff))
        fbar = 0.5 * (fa[worst] + fb[worst])
        slack = 3.0 * math.sqrt(max(2.0 * fbar * (1.0 - fbar), 2.0 / samples) / samples)
        checks.append(VerifyCheck(
            name=f"dominance d={d} sigma={sigma} |mu|={np.linalg.norm(mu):g}",
            statistic=float(diff[worst]), bound=0.0, slack=slack,
            passed=bool(diff[worst] <= slack),
        ))
    return checks


def _suite_tail(samples: int, seed: int) -> list[VerifyCheck]:
    grid = [(1, 1.0, 3.0), (2, 1.0, 3.0), (2, 1.0, 5.0)]
    checks = []
    for k, (d, sigma, t) in enumerate(grid):
        threshold, bound = chi_square_tail(d, sigma, t)
        rng = np.random.default_rng(seed + k)
        z = sigma * rng.standard_normal((samples, d))
        freq = float(np.mean(np.einsum("ij,ij->i", z, z) >= threshold * threshold))
        slack = _mc_slack(freq, samples)
        checks.append(VerifyCheck(
            name=f"tail d={d} sigma={sigma} t={t:g}",
            statistic=freq, bound=bound, slack=slack,
            passed=freq <= bound + slack,
        ))
    return checks


def _suite_chi(samples: int, seed: int) -> list[VerifyCheck]:
    checks = []
    for d in range(1, 7):
        total, quad_err = quad(lambda x: chi_pdf(x, d, 1.3), 0.0, 26.0)
        err = abs(total - 1.0)
        checks.append(VerifyCheck(
            name=f"chi normalization d={d} sigma=1.3",
            statistic=err, bound=1e-8, slack=0.0, passed=err <= 1e-8,
        ))
    # d = 1, 2, 3 against the textbook half-normal / Rayleigh / Maxwell forms
    xs = np.linspace(0.05, 6.0, 40)
    for d, sigma, reference in [
        (1, 0.7, lambda x, s: math.sqrt(2.0 / math.pi) / s * np.exp(-(x / s) ** 2 / 2.0)),
        (2, 1.1, lambda x, s: x / s**2 * np.exp(-(x / s) ** 2 / 2.0)),
        (3, 0.9, lambda x, s: math.sqrt(2.0 / math.pi) * x**2 / s**3 * np.exp(-(x / s) ** 2 / 2.0)),
    ]:
        ours = chi_pdf(xs, d, sigma)
        ref = reference(xs, sigma)
        rel = float(np.max(np.abs(ours - ref) / ref))
        checks.append(VerifyCheck(
            name=f"chi closed form d={d} sigma={sigma}",
            statistic=rel, bound=1e-10, slack=0.0, passed=rel <= 1e-10,
        ))
    if samples > 0:
        d, sigma = 3, 0.8
        rng = np.random.default_rng(seed)
        z = sigma * rng.standard_normal((samples, d))
        norms = np.sqrt(np.einsum("ij,ij->i", z, z))
        x0 = sigma  # compare the empirical CDF at x0 with the integrated density
        cdf_true, _ = quad(lambda x: chi_pdf(x, d, sigma), 0.0, x0)
        freq = float(np.mean(norms <= x0))
        slack = _mc_slack(freq, samples)
        checks.append(VerifyCheck(
            name=f"chi empirical cdf d={d} sigma={sigma} x={x0}",
            statistic=abs(freq - cdf_true), bound=0.0, slack=slack,
            passed=abs(freq - cdf_true) <= slack,
        ))
    return checks


def _suite_integral(samples: int, seed: int) -> list[VerifyCheck]:
    checks = []
    for d in range(2, 13):
        for c in (1, 2):
            if c >= d:
                continue
            sigma = 1.0 if d % 2 == 0 else 0.7
            closed = chi_inverse_moment(d, c, sigma)
            numeric, _ = quad(
                lambda x: chi_pdf(x, d, sigma) * x ** (-c), 0.0, 30.0 * sigma,
                points=[sigma * 1e-6, sigma],
            )
            rel = abs(closed - numeric) / closed
            checks.append(VerifyCheck(
                name=f"inverse moment d={d} c={c} sigma={sigma}",
                statistic=rel, bound=1e-6, slack=0.0, passed=rel <= 1e-6,
            ))
    if samples > 0:
        # replacing |mean-shifted| norms by centered chi is pessimistic for
        # any decreasing positive h; spot-check h(x) = 1/x
        d, sigma, mu = 3, 1.0, np.array([1.0, 0.0, 0.0])
        rng = np.random.default_rng(seed)
        b = sigma * rng.standard_normal((samples, d)) + mu
        inv = 1.0 / np.sqrt(np.einsum("ij,ij->i", b, b))
        mean = float(inv.mean())
        bound = chi_inverse_moment(d, 1, sigma)
        slack = 3.0 * float(inv.std(ddof=1)) / math.sqrt(samples)
        checks.append(VerifyCheck(
            name=f"inverse-moment dominance d={d} c=1 |mu|=1",
            statistic=mean, bound=bound, slack=slack,
            passed=mean <= bound + slack,
        ))
    return checks


def _suite_linked(runs: int, seed: int) -> list[VerifyCheck]:
    sizes = [30, 40, 50, 60]
    checks = []
    for k in range(runs):
        n = sizes[k % len(sizes)]
        run_seed = task_seed(seed, 0, k)
        origins = make_origins("uniform", n, 2, run_seed)
        inst = perturb(origins, 0.3, run_seed)
        rec = run_two_opt(inst, Metric.EUCLIDEAN, init="random", pivot="first", seed=run_seed)
        count, _ = count_disjoint_linked_pairs(rec.changes, n=n)
        bound = linked_pair_bound(rec.iterations, n)
        checks.append(VerifyCheck(
            name=f"linked run {k} n={n} t={rec.iterations}",
            statistic=float(count), bound=float(bound), slack=0.0,
            passed=count >= bound,
        ))
    return checks


VERIFY_SUITES = {
    "ball": (_suite_ball, 10**6),
    "line": (_suite_line, 10**6),
    "dominance": (_suite_dominance, 10**6),
    "tail": (_suite_tail, 10**6),
    "chi": (_suite_chi, 10**6),
    "integral": (_suite_integral, 10**6),
    "linked": (_suite_linked, 20),
}


def verify_suite(name: str, samples: int | None = None, seed: int = 0) -> VerifyReport:
    """Run one verification suite.

    ``samples`` defaults per suite (10^6 Monte-Carlo samples; 20 recorded
    runs for "linked").  The MC suites compare an empirical frequency
    against its closed-form bound plus three standard errors; the
    deterministic checks ("chi" normalization/closed forms, "integral"
    quadrature) use fixed tolerances and ignore the sample count, except
    that passing samples > 0 keeps their Monte-Carlo spot checks enabled.
    """
    try:
        fn, default_samples = VERIFY_SUITES[name]
    except KeyError:
        names = ", ".join(sorted(VERIFY_SUITES))
        raise ValueError(f"unknown verify suite {name!r} (expected one of: {names})") from None
    m = default_samples if samples is None else samples
    if m < 0:
        raise ValueError(f"samples must be >= 0, got {m}")
    if m == 0 and name not in ("chi", "integral"):
        raise ValueError(f"suite {name!r} is purely Monte-Carlo; samples must be >= 1")
    checks = fn(m, seed)
    return VerifyReport(suite=name, samples=m, seed=seed, checks=checks)
