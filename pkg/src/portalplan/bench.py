"""Benchmark records, CSV serialization and the scenario-sweep runner."""

from __future__ import annotations

import csv
import json
import statistics
import time
from dataclasses import dataclass, field

from .cellgraph import build_graph
from .decomp2d import triangulate
from .decomp3d import slab_decompose
from .errors import NoSolution, PlannerError
from .evaluators import FunnelEvaluator, SampledFaceEvaluator
from .scenarios import (DynamicScenario, ScenarioSpec, default_query, generate,
                        generate_dynamic, post_validate)
from .search import DEFAULT_BETA, plan

CSV_SCHEMA_VERSION = 1

_COLUMNS = [
    "schema_version", "scenario_id", "family", "seed", "step", "config_name",
    "guided", "k", "beta", "success", "time_to_first_ms", "total_ms",
    "final_cost", "corridors_enumerated_p1", "corridors_evaluated_p1",
    "corridors_enumerated_p2", "corridors_evaluated_p2", "trace",
]


@dataclass
class BenchmarkRecord:
    scenario_id: str
    family: str
    seed: int
    step: int                    # dynamic timestep, -1 for static maps
    config_name: str
    guided: bool
    k: int
    beta: float
    success: bool
    time_to_first_ms: float
    total_ms: float
    final_cost: float
    corridors_enumerated_p1: int
    corridors_evaluated_p1: int
    corridors_enumerated_p2: int
    corridors_evaluated_p2: int
    trace: list = field(default_factory=list)  # (ms, cost) improvements

    def to_row(self):
        return {
            "schema_version": CSV_SCHEMA_VERSION,
            "scenario_id": self.scenario_id,
            "family": self.family,
            "seed": self.seed,
            "step": self.step,
            "config_name": self.config_name,
            "guided": int(self.guided),
            "k": self.k,
            "beta": repr(self.beta),
            "success": int(self.success),
            "time_to_first_ms": repr(self.time_to_first_ms),
            "total_ms": repr(self.total_ms),
            "final_cost": repr(self.final_cost),
            "corridors_enumerated_p1": self.corridors_enumerated_p1,
            "corridors_evaluated_p1": self.corridors_evaluated_p1,
            "corridors_enumerated_p2": self.corridors_enumerated_p2,
            "corridors_evaluated_p2": self.corridors_evaluated_p2,
            "trace": ";".join(f"{t!r}:{c!r}" for t, c in self.trace),
        }

    @classmethod
    def from_row(cls, row):
        if int(row["schema_version"]) != CSV_SCHEMA_VERSION:
            raise ValueError(f"unsupported CSV schema {row['schema_version']}")
        trace = []
        if row["trace"]:
            for item in row["trace"].split(";"):
                t, c = item.split(":")
                trace.append((float(t), float(c)))
        return cls(
            scenario_id=row["scenario_id"], family=row["family"],
            seed=int(row["seed"]), step=int(row["step"]),
            config_name=row["config_name"], guided=bool(int(row["guided"])),
            k=int(row["k"]), beta=float(row["beta"]),
            success=bool(int(row["success"])),
            time_to_first_ms=float(row["time_to_first_ms"]),
            total_ms=float(row["total_ms"]),
            final_cost=float(row["final_cost"]),
            corridors_enumerated_p1=int(row["corridors_enumerated_p1"]),
            corridors_evaluated_p1=int(row["corridors_evaluated_p1"]),
            corridors_enumerated_p2=int(row["corridors_enumerated_p2"]),
            corridors_evaluated_p2=int(row["corridors_evaluated_p2"]),
            trace=trace,
        )


def write_records(path, records):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_COLUMNS)
        writer.writeheader()
        for r in records:
            writer.writerow(r.to_row())


def read_records(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return [BenchmarkRecord.from_row(row) for row in csv.DictReader(fh)]


@dataclass
class PlannerConfig:
    name: str
    guided: bool = False
    weights: object = None
    k: int = None
    beta: float = DEFAULT_BETA
    timeout_s: float = 2.0
    n_samples: int = 16
    refine_rounds: int = 3


def run_instance(m, q_s, q_g, config: PlannerConfig):
    """Full pipeline on one map, timed without file I/O. Returns (result,
    graph, pipeline seconds) with result None on NoSolution."""
    t0 = time.perf_counter()
    if m.dim == 2:
        decomp = triangulate(m.bounds, m.obstacles)
    else:
        decomp = slab_decompose(m.bounds, m.obstacles)
    g = build_graph(decomp, q_s, q_g)
    if m.dim == 2:
        evaluator = FunnelEvaluator(g)
    else:
        evaluator = SampledFaceEvaluator(g, n_samples=config.n_samples,
                                         refine_rounds=config.refine_rounds)
    weights = config.weights if config.guided else None
    try:
        res = plan(g, evaluator, weights=weights, k=config.k,
                   beta=config.beta, timeout=config.timeout_s)
    except NoSolution:
        return None, g, time.perf_counter() - t0
    return res, g, time.perf_counter() - t0


def _decomp_overhead(res, total_s):
    """Decomposition+features time: total minus the in-planner clock."""
    in_plan = max(res.counters.get("phase1_elapsed_s", 0.0),
                  res.trace[-1][0] if res.trace else 0.0)
    return total_s - in_plan if total_s > in_plan else 0.0


def run_benchmark(specs, configs, validate_density=200.0):
    """One record per (scenario instance, planner config)."""
    records = []
    for spec in specs:
        if spec.family in ("dynamic2d",):
            dyn = generate_dynamic(spec)
            instances = [(f"{spec.family}-{spec.seed}-t{i}", i, m, dyn.query)
                         for i, m in enumerate(dyn.steps)]
        else:
            m = generate(spec)
            q = default_query(spec, m)
            instances = [(f"{spec.family}-{spec.seed}", -1, m, q)]
        for scenario_id, step, m, (q_s, q_g) in instances:
            for cfg in configs:
                try:
                    res, g, total_s = run_instance(m, q_s, q_g, cfg)
                except PlannerError:
                    res, total_s = None, 0.0
                if res is None:
                    records.append(BenchmarkRecord(
                        scenario_id=scenario_id, family=spec.family,
                        seed=spec.seed, step=step, config_name=cfg.name,
                        guided=cfg.guided, k=cfg.k or -1, beta=cfg.beta,
                        success=False, time_to_first_ms=float("nan"),
                        total_ms=total_s * 1e3, final_cost=float("inf"),
                        corridors_enumerated_p1=0, corridors_evaluated_p1=0,
                        corridors_enumerated_p2=0, corridors_evaluated_p2=0))
                    continue
                overhead = _decomp_overhead(res, total_s)
                violations = post_validate(res.solution.waypoints, m,
                                           validate_density)
                c = res.counters
                records.append(BenchmarkRecord(
                    scenario_id=scenario_id, family=spec.family,
                    seed=spec.seed, step=step, config_name=cfg.name,
                    guided=cfg.guided,
                    k=cfg.k or (8 if m.dim == 2 else (16 if cfg.guided else 32)),
                    beta=cfg.beta, success=violations == 0,
                    time_to_first_ms=(overhead + c["phase1_elapsed_s"]) * 1e3,
                    total_ms=total_s * 1e3, final_cost=res.cost,
                    corridors_enumerated_p1=c["phase1_enumerated"],
                    corridors_evaluated_p1=c["phase1_evaluated"],
                    corridors_enumerated_p2=c["phase2_enumerated"],
                    corridors_evaluated_p2=c["phase2_evaluated"],
                    trace=[((overhead + t) * 1e3, cost) for t, cost in res.trace]))
    return records


def summarize(records):
    """Per-config medians; returns {config: {...}} and prints nothing."""
    out = {}
    by_cfg = {}
    for r in records:
        by_cfg.setdefault(r.config_name, []).append(r)
    for name, rows in sorted(by_cfg.items()):
        ok = [r for r in rows if r.success]
        out[name] = {
            "runs": len(rows),
            "success_rate": len(ok) / len(rows) if rows else 0.0,
            "median_time_to_first_ms": statistics.median(
                [r.time_to_first_ms for r in ok]) if ok else float("nan"),
            "median_final_cost": statistics.median(
                [r.final_cost for r in ok]) if ok else float("nan"),
        }
    return out


def load_benchmark_file(path):
    """Scenario sweep description: {"scenarios": [...], "configs": [...]}"""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    specs = [ScenarioSpec.from_dict(d) for d in doc.get("scenarios", [])]
    configs = []
    for c in doc.get("configs", [{"name": "unguided"}]):
        configs.append(PlannerConfig(
            name=c.get("name", "unguided"),
            guided=bool(c.get("guided", False)),
            weights=c.get("model"),  # path; resolved by the CLI
            k=c.get("k"),
            beta=float(c.get("beta", DEFAULT_BETA)),
            timeout_s=float(c.get("timeout_ms", 2000.0)) / 1e3,
        ))
    return specs, configs
