"""Monte-Carlo experiment harness.

Generates noisy replicates of a measurement model, solves the lasso
instance per replicate, and scores the resulting empirical distributions
and characteristic-function grids against the closed-form laws. Replicate
r always draws from a child stream derived from (seed, r), so serial and
parallel execution produce identical reports.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cfalgebra, distributions
from .cfalgebra import SignPolicy
from .distributions import MarginalLaw
from .linmodel import (MeasurementModel, ModelKind, build_bernoulli_model,
                       build_hadamard_model, sample_measurement)
from .solver import ConvergenceError, solve_lasso

# fraction of replicates allowed to fail solver convergence
EXCLUSION_BUDGET = 1e-3
# residual every included replicate must satisfy for a passing run
KKT_BUDGET = 1e-8
KS_MIN_SAMPLES = 50
N_BALL_POINTS = 20
BALL_RADIUS = 2.0

_DOMAIN_MODEL = 0
_DOMAIN_REPLICATE = 1
_DOMAIN_UGRID = 2


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class ExclusionBudgetError(RuntimeError):
    """Too many replicates failed to converge."""

    def __init__(self, excluded: int, total: int):
        super().__init__(
            f"{excluded} of {total} replicates failed to converge "
            f"(budget {EXCLUSION_BUDGET:.1%})")
        self.excluded = excluded
        self.total = total


@dataclass
class ExperimentConfig:
    """Inputs of one Monte-Carlo run. Component indices are 1-based."""

    model_kind: str
    M: int
    N: int
    x_spec: list[tuple[int, float]]
    sigma: float
    tau: float
    L: int
    seed: int
    bins: int = 60
    component_indices: list[int] | None = None
    u_grid: list[list[float]] | None = None
    solver_tol: float = 1e-10
    solver_max_iter: int | None = None

    def validate(self) -> None:
        if self.model_kind not in ("orthogonal", "full_rank", "singular"):
            raise ConfigError(f"unknown model_kind {self.model_kind!r}")
        if self.M < 1 or self.N < 1:
            raise ConfigError("M and N must be positive")
        if self.model_kind == "orthogonal":
            if self.M != self.N:
                raise ConfigError("orthogonal models require M == N")
            if self.M & (self.M - 1) != 0:
                raise ConfigError("orthogonal models require M to be a power of two")
        if self.L < 1:
            raise ConfigError("L must be at least 1")
        if self.bins < 10:
            raise ConfigError("bins must be at least 10")
        if self.sigma < 0 or self.tau < 0:
            raise ConfigError("sigma and tau must be nonnegative")
        if self.solver_tol <= 0:
            raise ConfigError("solver_tol must be positive")
        seen = set()
        for comp, _val in self.x_spec:
            if not 1 <= comp <= self.N:
                raise ConfigError(f"x_spec component {comp} out of range 1..{self.N}")
            if comp in seen:
                raise ConfigError(f"x_spec component {comp} listed twice")
            seen.add(comp)
        for comp in self.components():
            if not 1 <= comp <= self.N:
                raise ConfigError(f"component index {comp} out of range 1..{self.N}")
        if self.u_grid is not None:
            for row in self.u_grid:
                if len(row) != self.N:
                    raise ConfigError("u_grid vectors must have length N")

    def components(self) -> list[int]:
        if self.component_indices is None:
            return list(range(1, self.N + 1))
        return list(self.component_indices)

    def x_vector(self) -> np.ndarray:
        x = np.zeros(self.N)
        for comp, val in self.x_spec:
            x[comp - 1] = float(val)
        return x

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        missing = {"model_kind", "M", "N", "x_spec", "sigma", "tau", "L", "seed"} - set(raw)
        if missing:
            raise ConfigError(f"missing config fields: {sorted(missing)}")
        raw = dict(raw)
        raw["x_spec"] = [(int(c), float(v)) for c, v in raw["x_spec"]]
        if raw.get("component_indices") is not None:
            raw["component_indices"] = [int(c) for c in raw["component_indices"]]
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def resolved(self) -> dict:
        """Fully resolved echo of the configuration, defaults included."""
        return {
            "model_kind": self.model_kind,
            "M": self.M,
            "N": self.N,
            "x_spec": [[c, v] for c, v in self.x_spec],
            "sigma": self.sigma,
            "tau": self.tau,
            "L": self.L,
            "seed": self.seed,
            "bins": self.bins,
            "component_indices": self.components(),
            "u_grid": None if self.u_grid is None else [list(map(float, r)) for r in self.u_grid],
            "solver_tol": self.solver_tol,
            "solver_max_iter": (self.solver_max_iter if self.solver_max_iter is not None
                                else 100 * self.N),
        }


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return ExperimentConfig.from_dict(raw)


def build_model(config: ExperimentConfig) -> MeasurementModel:
    """Construct the measurement model a configuration describes."""
    config.validate()
    x = config.x_vector()
    if config.model_kind == "orthogonal":
        return build_hadamard_model(config.M, x, config.sigma, config.tau)
    model_seed = int(np.random.SeedSequence(
        config.seed, spawn_key=(_DOMAIN_MODEL,)).generate_state(1)[0])
    model = build_bernoulli_model(config.M, config.N, x, config.sigma, config.tau,
                                  seed=model_seed)
    if config.model_kind == "full_rank" and model.rank < config.N:
        raise ConfigError(
            f"seed {config.seed} yields a rank-{model.rank} Gram matrix; "
            f"a full_rank config needs rank {config.N} (pick another seed)")
    if config.model_kind == "singular" and model.rank >= config.N:
        raise ConfigError(
            f"seed {config.seed} yields a full-rank Gram matrix; "
            "a singular config needs rank < N (pick another seed)")
    return model


@dataclass(frozen=True)
class UPoint:
    kind: str  # "zero" | "axis" | "ball" | "custom"
    u: np.ndarray
    component: int | None = None  # 1-based, axis rows only


def default_u_grid(N: int, seed: int) -> list[UPoint]:
    """Zero, the N unit axis vectors, and 20 points uniform in the ball |u| <= 2."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_DOMAIN_UGRID,)))
    points = [UPoint("zero", np.zeros(N))]
    for k in range(N):
        e = np.zeros(N)
        e[k] = 1.0
        points.append(UPoint("axis", e, component=k + 1))
    for _ in range(N_BALL_POINTS):
        direction = rng.standard_normal(N)
        direction /= np.linalg.norm(direction)
        radius = BALL_RADIUS * rng.uniform() ** (1.0 / N)
        points.append(UPoint("ball", radius * direction))
    return points


def resolve_u_grid(config: ExperimentConfig) -> list[UPoint]:
    if config.u_grid is None:
        return default_u_grid(config.N, config.seed)
    return [UPoint("custom", np.asarray(row, dtype=np.float64)) for row in config.u_grid]


@dataclass(frozen=True)
class ReplicateRecord:
    index: int
    ok: bool
    x_hat: np.ndarray | None
    gamma: np.ndarray | None
    atb: np.ndarray | None
    kkt_residual: float
    iterations: int


def _replicate_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(_DOMAIN_REPLICATE, index)))


def _solve_batch(model: MeasurementModel, seed: int, tol: float, max_iter: int,
                 start: int, stop: int) -> list[ReplicateRecord]:
    out = []
    for r in range(start, stop):
        b = sample_measurement(model, _replicate_rng(seed, r))
        atb = model.A.T @ b
        try:
            sol = solve_lasso(model, b, tol=tol, max_iter=max_iter)
        except ConvergenceError as exc:
            out.append(ReplicateRecord(r, False, None, None, None,
                                       exc.residual, exc.iterations))
            continue
        out.append(ReplicateRecord(r, True, np.asarray(sol.x_hat), np.asarray(sol.gamma),
                                   atb, sol.kkt_residual, sol.iterations))
    return out


def solve_replicates(config: ExperimentConfig, model: MeasurementModel,
                     workers: int = 1) -> list[ReplicateRecord]:
    """Per-replicate solves; deterministic in (seed, r) regardless of workers."""
    max_iter = config.solver_max_iter or 100 * config.N
    if workers <= 1 or config.L < 2 * workers:
        return _solve_batch(model, config.seed, config.solver_tol, max_iter, 0, config.L)
    chunk = math.ceil(config.L / workers)
    bounds = [(s, min(s + chunk, config.L)) for s in range(0, config.L, chunk)]
    records: list[ReplicateRecord] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_solve_batch, model, config.seed, config.solver_tol,
                               max_iter, s, e) for s, e in bounds]
        for fut in futures:
            records.extend(fut.result())
    return records


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted per-component samples with zero fraction and a density histogram."""

    component: int
    samples: np.ndarray  # sorted, zeros included
    zero_count: int
    bin_edges: np.ndarray
    densities: np.ndarray

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def n_nonzero(self) -> int:
        return self.n - self.zero_count

    @property
    def zero_fraction(self) -> float:
        return self.zero_count / self.n

    @property
    def nonzero_samples(self) -> np.ndarray:
        return self.samples[self.samples != 0]

    def ecdf(self, v):
        """Fraction of samples <= v (right-continuous)."""
        return np.searchsorted(self.samples, np.asarray(v), side="right") / self.n

    @classmethod
    def build(cls, component: int, values: np.ndarray, bins: int) -> "EmpiricalDistribution":
        values = np.asarray(values, dtype=np.float64)
        ordered = np.sort(values)
        zero_count = int(np.sum(values == 0))
        nonzero = ordered[ordered != 0]
        if nonzero.size == 0:
            edges = np.array([])
            dens = np.array([])
        else:
            lo, hi = float(nonzero[0]), float(nonzero[-1])
            if lo == hi:
                lo, hi = lo - 0.5, hi + 0.5
            dens, edges = np.histogram(nonzero, bins=bins, range=(lo, hi), density=True)
        return cls(component=component, samples=ordered, zero_count=zero_count,
                   bin_edges=edges, densities=dens)


@dataclass(frozen=True)
class KsResult:
    distance: float | None
    n_nonzero: int
    insufficient: bool


def ks_distance(empirical: EmpiricalDistribution, theoretical_cdf,
                min_samples: int = KS_MIN_SAMPLES) -> KsResult:
    """Sup over the sorted nonzero samples of |conditional ECDF - conditional CDF|.

    Results from fewer than ``min_samples`` nonzero samples are flagged
    insufficient rather than rejected.
    """
    xs = empirical.nonzero_samples
    n = xs.size
    if n == 0:
        return KsResult(None, 0, True)
    ecdf = np.searchsorted(xs, xs, side="right") / n
    distance = float(np.max(np.abs(ecdf - np.asarray(theoretical_cdf(xs), dtype=np.float64))))
    return KsResult(distance, n, n < min_samples)


@dataclass(frozen=True)
class CfGridRow:
    kind: str
    component: int | None
    u: np.ndarray
    lhs_gamma: complex
    lhs_zero: complex
    ecf_atb: complex
    rhs: complex
    gap_exact: float      # |lhs_gamma - ecf_atb|, algebraic identity
    gap_expansion: float  # |lhs_zero - rhs|, statistical noise plus atom
    gap_mc: float         # |ecf_atb - rhs|, pure Monte-Carlo noise
    slice_lhs: complex | None = None
    slice_rhs: complex | None = None
    gap_slice: float | None = None


def cf_grid_compare(x_hats: np.ndarray, gammas: np.ndarray, model: MeasurementModel,
                    u_points: list[UPoint], atbs: np.ndarray | None = None,
                    slice_samples: dict[int, np.ndarray] | None = None) -> list[CfGridRow]:
    """Three-way CF comparison at every grid point.

    When ``atbs`` is omitted the Gaussian statistic is reconstructed as
    W x_hat + tau gamma, which the subgradient identity makes exact. Axis
    rows additionally carry the scalar slice comparison for their component
    when ``slice_samples`` provides that component's samples.
    """
    if atbs is None:
        atbs = x_hats @ model.W + model.tau * gammas
    rows = []
    for point in u_points:
        u = point.u
        lhs_gamma = cfalgebra.sign_expansion_cf(x_hats, u, model, SignPolicy.FROM_GAMMA, gammas)
        lhs_zero = cfalgebra.sign_expansion_cf(x_hats, u, model, SignPolicy.ZERO)
        ecf = cfalgebra.empirical_cf(atbs, u)
        rhs = cfalgebra.gaussian_rhs_cf(u, model)
        slice_lhs = slice_rhs = gap_slice = None
        if point.kind == "axis" and slice_samples and point.component in slice_samples:
            t = float(u[point.component - 1])
            slice_lhs = cfalgebra.slice_lhs_cf(
                slice_samples[point.component], t, model.tau)
            slice_rhs = cfalgebra.slice_rhs_cf(t, model, point.component)
            gap_slice = abs(slice_lhs - slice_rhs)
        rows.append(CfGridRow(
            kind=point.kind, component=point.component, u=u,
            lhs_gamma=lhs_gamma, lhs_zero=lhs_zero, ecf_atb=ecf, rhs=rhs,
            gap_exact=abs(lhs_gamma - ecf),
            gap_expansion=abs(lhs_zero - rhs),
            gap_mc=abs(ecf - rhs),
            slice_lhs=slice_lhs, slice_rhs=slice_rhs, gap_slice=gap_slice))
    return rows


@dataclass(frozen=True)
class ComponentReport:
    component: int
    law: MarginalLaw
    point_mass: float
    distribution: EmpiricalDistribution
    ks: KsResult
    binomial_se: float
    zero_within_5se: bool


@dataclass(frozen=True)
class ExperimentReport:
    config_resolved: dict
    model_summary: dict
    components: list[ComponentReport]
    cf_rows: list[CfGridRow]
    solver_stats: dict
    wall_clock_s: float

    def component(self, index: int) -> ComponentReport:
        for comp in self.components:
            if comp.component == index:
                return comp
        raise KeyError(f"component {index} not analyzed")

    def hard_invariants_ok(self) -> bool:
        return (self.solver_stats["max_kkt_residual"] <= KKT_BUDGET
                and self.config_resolved == self.solver_stats["_config_echo"])


def _component_values(model: MeasurementModel, x_hats: np.ndarray,
                      z_hats: np.ndarray, component: int) -> np.ndarray:
    # orthogonal analysis reads x_hat directly: z = W x_hat only differs by
    # rounding there, which would destroy the exact-zero counts
    if model.kind is ModelKind.ORTHOGONAL:
        return x_hats[:, component - 1]
    return z_hats[:, component - 1]


def _component_law(model: MeasurementModel, component: int) -> MarginalLaw:
    if model.kind is ModelKind.ORTHOGONAL:
        return distributions.orthogonal_law(
            float(model.x_true[component - 1]), model.sigma, model.tau)
    return distributions.transformed_law_for_component(model, component)


def aggregate(config: ExperimentConfig, model: MeasurementModel,
              u_points: list[UPoint], records: list[ReplicateRecord],
              wall_clock_s: float) -> ExperimentReport:
    """Order-insensitive aggregation of replicate records into a report."""
    records = sorted(records, key=lambda rec: rec.index)
    excluded = sum(1 for rec in records if not rec.ok)
    if excluded > EXCLUSION_BUDGET * len(records):
        raise ExclusionBudgetError(excluded, len(records))
    included = [rec for rec in records if rec.ok]
    x_hats = np.stack([rec.x_hat for rec in included])
    gammas = np.stack([rec.gamma for rec in included])
    atbs = np.stack([rec.atb for rec in included])
    z_hats = x_hats @ model.W  # W symmetric
    residuals = np.array([rec.kkt_residual for rec in included])
    iterations = np.array([rec.iterations for rec in included])

    components = []
    for comp in config.components():
        values = _component_values(model, x_hats, z_hats, comp)
        law = _component_law(model, comp)
        dist = EmpiricalDistribution.build(comp, values, config.bins)
        ks = ks_distance(dist, lambda v: distributions.conditional_cdf(v, law))
        atom = distributions.point_mass_zero(law)
        se = math.sqrt(max(atom * (1.0 - atom), 0.0) / dist.n)
        gap = abs(dist.zero_fraction - atom)
        components.append(ComponentReport(
            component=comp, law=law, point_mass=atom, distribution=dist, ks=ks,
            binomial_se=se, zero_within_5se=bool(gap <= 5.0 * se or se == 0.0)))

    slice_samples = {point.component: _component_values(model, x_hats, z_hats, point.component)
                     for point in u_points if point.kind == "axis"}
    cf_rows = cf_grid_compare(x_hats, gammas, model, u_points, atbs=atbs,
                              slice_samples=slice_samples)

    config_echo = config.resolved()
    solver_stats = {
        "max_kkt_residual": float(np.max(residuals, initial=0.0)),
        "iterations_p50": float(np.percentile(iterations, 50)) if included else 0.0,
        "iterations_p90": float(np.percentile(iterations, 90)) if included else 0.0,
        "iterations_max": int(np.max(iterations, initial=0)),
        "replicates": len(records),
        "included": len(included),
        "excluded": excluded,
        "exclusion_budget": EXCLUSION_BUDGET,
        "_config_echo": config_echo,
    }
    model_summary = {
        "kind": model.kind.value,
        "M": model.n_measurements,
        "N": model.n_params,
        "rank": model.rank,
        "sparsity": model.sparsity,
        "x_true": [float(v) for v in model.x_true],
        "w_diag": [float(v) for v in np.diag(model.W)],
    }
    return ExperimentReport(
        config_resolved=config_echo, model_summary=model_summary,
        components=components, cf_rows=cf_rows, solver_stats=solver_stats,
        wall_clock_s=wall_clock_s)


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """Run the full protocol: replicates, solves, scoring, report."""
    config.validate()
    model = build_model(config)
    u_points = resolve_u_grid(config)
    t0 = time.perf_counter()
    records = solve_replicates(config, model, workers=workers)
    return aggregate(config, model, u_points, records, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# serialization


def _c2l(z: complex | None):
    return None if z is None else [z.real, z.imag]


def report_json_dict(report: ExperimentReport) -> dict:
    """Deterministic report content; volatile fields (wall clock) stay out."""
    return {
        "config": report.config_resolved,
        "model": report.model_summary,
        "components": [
            {
                "component": c.component,
                "law": {
                    "kind": c.law.kind.value,
                    "location": c.law.location,
                    "scale2": c.law.scale2,
                    "tau": c.law.tau,
                },
                "point_mass_theory": c.point_mass,
                "n": c.distribution.n,
                "n_nonzero": c.distribution.n_nonzero,
                "zero_fraction": c.distribution.zero_fraction,
                "binomial_se": c.binomial_se,
                "zero_within_5se": c.zero_within_5se,
                "ks_distance": c.ks.distance,
                "ks_insufficient": c.ks.insufficient,
            }
            for c in report.components
        ],
        "cf_grid": [
            {
                "kind": row.kind,
                "component": row.component,
                "u": [float(v) for v in row.u],
                "lhs_gamma": _c2l(row.lhs_gamma),
                "lhs_zero": _c2l(row.lhs_zero),
                "ecf_atb": _c2l(row.ecf_atb),
                "rhs": _c2l(row.rhs),
                "gap_exact": row.gap_exact,
                "gap_expansion": row.gap_expansion,
                "gap_mc": row.gap_mc,
                "slice_lhs": _c2l(row.slice_lhs),
                "slice_rhs": _c2l(row.slice_rhs),
                "gap_slice": row.gap_slice,
            }
            for row in report.cf_rows
        ],
        "solver": {k: v for k, v in report.solver_stats.items() if not k.startswith("_")},
        "notes": [
            "The transformed-component law uses variance scale2 = sigma^2 * w_kk "
            "in both the normalizer and the exponent, matching its slice "
            "characteristic function exp(-u^2 sigma^2 w_kk / 2).",
        ],
    }


def report_json_bytes(report: ExperimentReport) -> bytes:
    return (json.dumps(report_json_dict(report), sort_keys=True, indent=2) + "\n").encode()


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_report_files(report: ExperimentReport, outdir, emit_samples: bool = False,
                       include_histograms: bool = True) -> dict:
    """Write report.json, per-component histogram CSVs, cf_grid.csv, run_meta.json."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {"report": outdir / "report.json"}
    paths["report"].write_bytes(report_json_bytes(report))

    for comp in report.components if include_histograms else []:
        dist = comp.distribution
        lines = ["bin_left,bin_right,density"]
        for i in range(dist.densities.size):
            lines.append(",".join([_fmt(dist.bin_edges[i]), _fmt(dist.bin_edges[i + 1]),
                                   _fmt(dist.densities[i])]))
        path = outdir / f"hist_{comp.component}.csv"
        path.write_text("\n".join(lines) + "\n")
        paths[f"hist_{comp.component}"] = path
        if emit_samples:
            spath = outdir / f"samples_{comp.component}.csv"
            spath.write_text("value\n" + "\n".join(_fmt(v) for v in dist.samples) + "\n")
            paths[f"samples_{comp.component}"] = spath

    N = report.model_summary["N"]
    header = ([f"u_{k}" for k in range(1, N + 1)]
              + ["kind", "component",
                 "lhs_gamma_re", "lhs_gamma_im", "lhs_zero_re", "lhs_zero_im",
                 "ecf_atb_re", "ecf_atb_im", "rhs_re", "rhs_im",
                 "gap_exact", "gap_expansion", "gap_mc",
                 "slice_lhs_re", "slice_lhs_im", "slice_rhs_re", "slice_rhs_im",
                 "gap_slice"])
    lines = [",".join(header)]
    for row in report.cf_rows:
        cells = [_fmt(v) for v in row.u]
        cells += [row.kind, "" if row.component is None else str(row.component)]
        for z in (row.lhs_gamma, row.lhs_zero, row.ecf_atb, row.rhs):
            cells += [_fmt(z.real), _fmt(z.imag)]
        cells += [_fmt(row.gap_exact), _fmt(row.gap_expansion), _fmt(row.gap_mc)]
        if row.slice_lhs is None:
            cells += ["", "", "", "", ""]
        else:
            cells += [_fmt(row.slice_lhs.real), _fmt(row.slice_lhs.imag),
                      _fmt(row.slice_rhs.real), _fmt(row.slice_rhs.imag),
                      _fmt(row.gap_slice)]
        lines.append(",".join(cells))
    paths["cf_grid"] = outdir / "cf_grid.csv"
    paths["cf_grid"].write_text("\n".join(lines) + "\n")

    meta = {"wall_clock_s": report.wall_clock_s}
    paths["run_meta"] = outdir / "run_meta.json"
    paths["run_meta"].write_text(json.dumps(meta, indent=2) + "\n")
    return paths
