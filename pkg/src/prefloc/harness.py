"""Batch experiments, metric aggregation, rank-sum tests, and reporting.

A plan crosses an instance with facility counts, user families, and
algorithm variants; every cell runs a fixed number of independent seeded
runs. Summaries follow the convention that generation/comparison/time
statistics cover only the runs that discovered the optimum, while the mean
relative score distance covers only the runs that did not.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from hashlib import sha256
from pathlib import Path

from .algorithms import ALGO_NEMO, ALGORITHMS, RunConfig, RunRecord, run
from .dm import best_subset, parse_family
from .errors import ValidationError
from .instance import BoundsBudget, Instance, compute_bounds, generate_instance, load_instance
from .numerics import SimplexSearchConfig

NEMO_LABELS = {5: "NIICh_5", 10: "NIICh_10", 20: "NIICh_20"}
BASELINE_LABELS = {"ea_uvf": "EA-UVF", "ea_uvf1": "EA-UVF1", "ea_uvf2": "EA-UVF2"}

SUMMARY_COLUMNS = ("SR", "M#G", "S#G", "A#P", "S#P", "MT", "ST", "A_BRSD")


def stable_hash(*parts) -> int:
    """Platform-stable 60-bit hash used to derive per-run seeds."""
    digest = sha256("|".join(str(p) for p in parts).encode("utf-8")).hexdigest()
    return int(digest[:15], 16)


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    period: int | None = None

    def __post_init__(self):
        if self.name not in ALGORITHMS:
            raise ValidationError(f"unknown algorithm {self.name!r}")
        if self.name == ALGO_NEMO and (self.period is None or self.period < 1):
            raise ValidationError("the interactive algorithm needs a positive period")
        if self.name != ALGO_NEMO and self.period is not None:
            raise ValidationError(f"{self.name} takes no interaction period")

    @property
    def label(self) -> str:
        if self.name == ALGO_NEMO:
            return NEMO_LABELS.get(self.period, f"NIICh_{self.period}")
        return BASELINE_LABELS[self.name]


@dataclass
class ExperimentPlan:
    instance_path: str | None = None
    generator: dict | None = None
    p_values: list[int] = field(default_factory=lambda: [3])
    algorithms: list[AlgorithmSpec] = field(default_factory=list)
    dm_families: list[str] = field(default_factory=lambda: ["U_N"])
    runs: int = 50
    base_seed: int = 0
    max_generations: int = 1000
    pop_size: int = 30
    bounds_method: str = "exhaustive"
    jobs: int = 1
    search: SimplexSearchConfig = field(default_factory=SimplexSearchConfig)

    def __post_init__(self):
        if self.runs < 1:
            raise ValidationError("runs must be >= 1")
        if (self.instance_path is None) == (self.generator is None):
            raise ValidationError("give exactly one of instance_path or generator")
        if not self.algorithms:
            raise ValidationError("plan needs at least one algorithm")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentPlan":
        algos = [AlgorithmSpec(a["name"], a.get("period")) for a in doc.get("algorithms", [])]
        search = SimplexSearchConfig(**doc["search"]) if "search" in doc else SimplexSearchConfig()
        return cls(
            instance_path=doc.get("instance"),
            generator=doc.get("generator"),
            p_values=list(doc.get("p", [3])),
            algorithms=algos,
            dm_families=list(doc.get("dm_families", ["U_N"])),
            runs=int(doc.get("runs", 50)),
            base_seed=int(doc.get("base_seed", 0)),
            max_generations=int(doc.get("max_generations", 1000)),
            pop_size=int(doc.get("pop_size", 30)),
            bounds_method=doc.get("bounds_method", "exhaustive"),
            jobs=int(doc.get("jobs", 1)),
            search=search,
        )

    @classmethod
    def load(cls, path) -> "ExperimentPlan":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read plan {path}: {exc}") from exc
        return cls.from_dict(doc)

    def load_instance(self) -> Instance:
        if self.instance_path is not None:
            return load_instance(self.instance_path)
        gen = dict(self.generator)
        return generate_instance(gen.pop("q"), gen.pop("m"), gen.pop("seed"), None)


@dataclass(frozen=True)
class CellKey:
    p: int
    dm_family: str
    algorithm: AlgorithmSpec

    @property
    def label(self) -> str:
        return f"p{self.p}_{self.dm_family}_{self.algorithm.label}"


@dataclass
class CellSummary:
    runs: int
    sr: int
    m_g: float | None
    s_g: float | None
    a_p: float | None
    s_p: float | None
    mt: float | None
    st: float | None
    a_brsd: float | None

    def as_row(self) -> dict:
        return {
            "SR": self.sr,
            "M#G": self.m_g,
            "S#G": self.s_g,
            "A#P": self.a_p,
            "S#P": self.s_p,
            "MT": self.mt,
            "ST": self.st,
            "A_BRSD": self.a_brsd,
        }


def _mean(xs) -> float | None:
    xs = list(xs)
    return sum(xs) / len(xs) if xs else None


def _stdev(xs) -> float | None:
    xs = list(xs)
    if len(xs) < 2:
        return None
    mu = sum(xs) / len(xs)
    return math.sqrt(sum((x - mu) ** 2 for x in xs) / (len(xs) - 1))


def summarize_cell(records: list[RunRecord]) -> CellSummary:
    """Aggregate one cell per the metric conventions (discovery-scoped
    means, failure-scoped relative distance)."""
    converged = [r for r in records if r.converged]
    failed = [r for r in records if not r.converged]
    brsds = [r.brsd for r in failed if r.brsd is not None]
    return CellSummary(
        runs=len(records),
        sr=len(converged),
        m_g=_mean(r.generations_used for r in converged),
        s_g=_stdev([r.generations_used for r in converged]),
        a_p=_mean(r.comparisons_asked for r in converged),
        s_p=_stdev([r.comparisons_asked for r in converged]),
        mt=_mean(r.wall_time for r in converged),
        st=_stdev([r.wall_time for r in converged]),
        a_brsd=_mean(brsds) if failed else None,
    )


@dataclass(frozen=True)
class MwuResult:
    u: float
    p_value: float
    means: tuple[float, float]


def _u_statistic(sample_a, sample_b) -> float:
    u = 0.0
    for x in sample_a:
        for y in sample_b:
            if x > y:
                u += 1.0
            elif x == y:
                u += 0.5
    return u


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def mann_whitney_u(sample_a, sample_b) -> MwuResult:
    """Two-sided rank-sum test.

    Small pooled samples (n <= 12) are handled exactly by enumerating every
    group assignment of the pooled values; larger samples use the normal
    approximation with tie and continuity corrections. All-tied samples
    yield p = 1.
    """
    a = [float(x) for x in sample_a]
    b = [float(x) for x in sample_b]
    if not a or not b:
        raise ValidationError("both samples must be non-empty")
    n1, n2 = len(a), len(b)
    u_obs = _u_statistic(a, b)
    mu = n1 * n2 / 2.0
    means = (sum(a) / n1, sum(b) / n2)

    if n1 + n2 <= 12:
        pooled = a + b
        total = 0
        extreme = 0
        dev = abs(u_obs - mu)
        for combo in itertools.combinations(range(n1 + n2), n1):
            chosen = set(combo)
            xa = [pooled[i] for i in combo]
            xb = [pooled[i] for i in range(n1 + n2) if i not in chosen]
            total += 1
            if abs(_u_statistic(xa, xb) - mu) >= dev - 1e-12:
                extreme += 1
        return MwuResult(u_obs, extreme / total, means)

    n = n1 + n2
    counts: dict[float, int] = {}
    for x in a + b:
        counts[x] = counts.get(x, 0) + 1
    tie_term = sum(t ** 3 - t for t in counts.values()) / (n * (n - 1))
    sigma_sq = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if sigma_sq <= 0.0:
        return MwuResult(u_obs, 1.0, means)
    diff = u_obs - mu
    if diff > 0.5:
        z = (diff - 0.5) / math.sqrt(sigma_sq)
    elif diff < -0.5:
        z = (diff + 0.5) / math.sqrt(sigma_sq)
    else:
        z = 0.0
    p = min(1.0, 2.0 * _normal_sf(abs(z)))
    return MwuResult(u_obs, p, means)


@dataclass
class CellResult:
    key: CellKey
    records: list[RunRecord]
    summary: CellSummary


@dataclass
class ExperimentResult:
    plan: ExperimentPlan
    cells: list[CellResult]

    def cell(self, p: int, dm_family: str, label: str) -> CellResult:
        for c in self.cells:
            if c.key.p == p and c.key.dm_family == dm_family and c.key.algorithm.label == label:
                return c
        raise KeyError((p, dm_family, label))


def _run_one(args) -> tuple[int, str]:
    idx, inst, cfg = args
    record = run(inst, cfg)
    return idx, record.to_json_line()


def run_experiment(plan: ExperimentPlan, jobs: int | None = None, progress=None) -> ExperimentResult:
    """Execute every cell of the plan; per-run seeds derive from the base
    seed and cell coordinates so any run can be reproduced in isolation."""
    inst = plan.load_instance()
    jobs = jobs or plan.jobs
    cells: list[CellResult] = []

    bounds_by_p = {}
    pb_by_key = {}
    for p in plan.p_values:
        bounds_by_p[p] = compute_bounds(
            inst, p, plan.bounds_method,
            BoundsBudget(seed=stable_hash(plan.base_seed, "bounds", p) % (2 ** 31)),
        )
        for family in plan.dm_families:
            dm = parse_family(family, bounds_by_p[p])
            pb_by_key[(p, family)] = best_subset(dm, inst, p)

    tasks = []
    layout = []
    for p in plan.p_values:
        for family in plan.dm_families:
            dm = parse_family(family, bounds_by_p[p])
            pb = pb_by_key[(p, family)]
            for spec in plan.algorithms:
                key = CellKey(p, family, spec)
                layout.append(key)
                for run_idx in range(plan.runs):
                    seed = stable_hash(plan.base_seed, spec.label, family, p, run_idx) % (2 ** 31)
                    cfg = RunConfig(
                        algorithm=spec.name,
                        p=p,
                        seed=seed,
                        dm=dm,
                        bounds=bounds_by_p[p],
                        pb=pb,
                        interaction_period=spec.period or 10,
                        max_generations=plan.max_generations,
                        pop_size=plan.pop_size,
                        search=plan.search,
                    )
                    tasks.append((len(tasks), inst, cfg))

    lines: list[str | None] = [None] * len(tasks)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for idx, line in pool.map(_run_one, tasks, chunksize=4):
                lines[idx] = line
                if progress:
                    progress(sum(1 for x in lines if x is not None), len(tasks))
    else:
        for task in tasks:
            idx, line = _run_one(task)
            lines[idx] = line
            if progress:
                progress(idx + 1, len(tasks))

    records = [RunRecord.from_json_line(line) for line in lines]
    pos = 0
    for key in layout:
        cell_records = records[pos:pos + plan.runs]
        pos += plan.runs
        cells.append(CellResult(key, cell_records, summarize_cell(cell_records)))
    return ExperimentResult(plan, cells)


def comparison_counts(cell: CellResult, max_generations: int) -> list[float]:
    """Per-run comparison counts with the non-convergence imputation: a run
    that never found the optimum counts the maximum possible number of
    queries for its period."""
    period = cell.key.algorithm.period
    if period is None:
        raise ValidationError("comparison counts only apply to the interactive variants")
    ceiling = max_generations // period
    return [
        float(r.comparisons_asked if r.converged else ceiling)
        for r in cell.records
    ]


def brsd_sample(cell: CellResult) -> list[float]:
    """Per-run relative score distances; converged runs contribute 0."""
    out = []
    for r in cell.records:
        if r.converged:
            out.append(0.0)
        elif r.brsd is not None:
            out.append(float(r.brsd))
    return out


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(round(x, 10))
    return str(x)


def emit_report(result: ExperimentResult, out_dir, fmt: str = "both") -> list[str]:
    """Write records, summaries, and the pairwise test matrices.

    Produces per-cell JSON-lines record files, a CSV and JSON summary with
    one row per cell, a relative-distance test matrix over all algorithms,
    and a comparison-count test matrix over the interactive variants only.
    Returns the list of files written.
    """
    out = Path(out_dir)
    (out / "records").mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    for cell in result.cells:
        path = out / "records" / f"{cell.key.label}.jsonl"
        with open(path, "w", encoding="utf-8") as fh:
            for rec in cell.records:
                fh.write(rec.to_json_line() + "\n")
        written.append(str(path))

    if fmt in ("csv", "both"):
        path = out / "summary.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["p", "dm", "algorithm", *SUMMARY_COLUMNS])
            for cell in result.cells:
                row = cell.summary.as_row()
                writer.writerow(
                    [cell.key.p, cell.key.dm_family, cell.key.algorithm.label]
                    + [_fmt(row[c]) for c in SUMMARY_COLUMNS]
                )
        written.append(str(path))

    if fmt in ("json", "both"):
        path = out / "summary.json"
        doc = {
            "cells": [
                {
                    "p": cell.key.p,
                    "dm": cell.key.dm_family,
                    "algorithm": cell.key.algorithm.label,
                    "summary": cell.summary.as_row(),
                }
                for cell in result.cells
            ],
            "runs": result.plan.runs,
            "max_generations": result.plan.max_generations,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(str(path))

    written.extend(emit_mwu_matrices(result, out))
    return written


def emit_mwu_matrices(result: ExperimentResult, out_dir) -> list[str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    groups: dict[tuple[int, str], list[CellResult]] = {}
    for cell in result.cells:
        groups.setdefault((cell.key.p, cell.key.dm_family), []).append(cell)

    for (p, family), cells in groups.items():
        tag = f"p{p}_{family}"
        labels = [c.key.algorithm.label for c in cells]
        samples = [brsd_sample(c) for c in cells]
        path = out / f"mwu_brsd_{tag}.csv"
        _write_matrix(path, labels, samples)
        written.append(str(path))

        nemo_cells = [c for c in cells if c.key.algorithm.name == ALGO_NEMO]
        if len(nemo_cells) >= 2:
            labels = [c.key.algorithm.label for c in nemo_cells]
            samples = [comparison_counts(c, result.plan.max_generations) for c in nemo_cells]
            path = out / f"mwu_comparisons_{tag}.csv"
            _write_matrix(path, labels, samples)
            written.append(str(path))
    return written


def _write_matrix(path, labels, samples) -> None:
    """Upper-triangular matrix of p-values with the two means in brackets."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([""] + labels)
        for i, row_label in enumerate(labels):
            row = [row_label]
            for j in range(len(labels)):
                if j <= i:
                    row.append("")
                elif not samples[i] or not samples[j]:
                    row.append("NaN")
                else:
                    res = mann_whitney_u(samples[i], samples[j])
                    row.append(
                        f"{res.p_value:.6g} ({res.means[0]:.6g}-{res.means[1]:.6g})"
                    )
            writer.writerow(row)


def load_summary(out_dir) -> dict:
    with open(Path(out_dir) / "summary.json", "r", encoding="utf-8") as fh:
        return json.load(fh)


def load_records(out_dir) -> dict[str, list[RunRecord]]:
    records_dir = Path(out_dir) / "records"
    out = {}
    for path in sorted(records_dir.glob("*.jsonl")):
        with open(path, "r", encoding="utf-8") as fh:
            out[path.stem] = [RunRecord.from_json_line(line) for line in fh if line.strip()]
    return out
