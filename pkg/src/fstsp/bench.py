"""Gap arithmetic, reference optima and the benchmark runner."""

from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

from fstsp.exact import DEFAULT_CAP, brute_force_optimum
from fstsp.instance import InstanceError, load_instance
from fstsp.rrls import RrlsConfig, rrls

GAP_KINDS = ("vs-opt", "opt-gap", "vs-best-ub")
MATCH_TOL = 0.005  # two sides of a 2-decimal rounding


def compute_gap(value: float, reference: float, kind: str = "vs-opt") -> float:
    """Percentage 100 * (value - reference) / reference; negative means below the reference.

    ``kind`` only documents which pair is compared: a heuristic value against
    an optimum, an upper against a lower bound, or an upper bound against the
    best known one.  The arithmetic is the same.
    """
    if kind not in GAP_KINDS:
        raise ValueError(f"kind must be one of {GAP_KINDS}")
    if not reference > 0:
        raise ValueError(f"reference must be positive, got {reference}")
    return 100.0 * (value - reference) / reference


@dataclass(frozen=True)
class ReferenceValue:
    instance: str
    endurance: float
    opt: float
    rrls_gap_percent: float | None = None


def load_reference_values(path: str | Path | None = None) -> dict[tuple[str, float], ReferenceValue]:
    """Reference optima keyed by (instance name, endurance); the packaged table by default."""
    if path is None:
        text = resources.files("fstsp.data").joinpath("reference_values.csv").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    out = {}
    for row in csv.DictReader(io.StringIO(text)):
        gap = row.get("rrls_gap_percent")
        ref = ReferenceValue(row["instance"], float(row["endurance"]), float(row["opt"]), float(gap) if gap else None)
        out[(ref.instance, ref.endurance)] = ref
    return out


def match_reference(refs: dict, name: str, endurance: float) -> ReferenceValue | None:
    """Exact name match first, then the longest reference name the instance name ends with."""
    if (name, endurance) in refs:
        return refs[(name, endurance)]
    hits = [ref for (key, e), ref in refs.items() if e == endurance and name.endswith(key)]
    return max(hits, key=lambda r: len(r.instance)) if hits else None


@dataclass(frozen=True)
class BenchRecord:
    instance_name: str
    method: str  # rrls | oracle | external-ub | skipped
    objective: float | None
    reference_value: float | None
    gap_percent: float | None
    wall_seconds: float | None = None
    seed: int | None = None
    note: str = ""


@dataclass(frozen=True)
class BenchConfig:
    seeds: tuple[int, ...] = (0,)
    time_limit: float | None = 20.0
    max_iterations: int | None = None
    oracle_cap: int = 0  # run the brute-force oracle when c <= cap; 0 disables it
    reference_file: str | None = None
    use_packaged_references: bool = True
    record_wall_time: bool = False


@dataclass
class BenchTable:
    records: list[BenchRecord] = field(default_factory=list)

    def summary(self) -> list[tuple[str, int, float | None, int]]:
        """(method, records with a gap, average gap, matches) per method."""
        out = []
        for method in ("rrls", "oracle", "external-ub"):
            gaps = [r.gap_percent for r in self.records if r.method == method and r.gap_percent is not None]
            if not gaps and not any(r.method == method for r in self.records):
                continue
            avg = statistics.fmean(gaps) if gaps else None
            matches = sum(1 for g in gaps if abs(g) < MATCH_TOL)
            out.append((method, len(gaps), avg, matches))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["instance_name", "method", "seed", "objective", "reference_value", "gap_percent", "wall_seconds", "note"]
        )
        for r in self.records:
            writer.writerow(
                [r.instance_name, r.method, _cell(r.seed), _cell(r.objective), _cell(r.reference_value),
                 _cell(r.gap_percent), _cell(r.wall_seconds), r.note]
            )
        writer.writerow([])
        writer.writerow(["summary_method", "records", "avg_gap_percent", "matches"])
        for method, n, avg, matches in self.summary():
            writer.writerow([method, n, _cell(avg), matches])
        return buf.getvalue()


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def instance_files(directory: str | Path) -> list[Path]:
    return sorted(Path(directory).glob("*.json"))


def run_bench(instance_dir: str | Path, config: BenchConfig) -> BenchTable:
    """RRLS (one record per seed) and optionally the oracle on every instance file."""
    refs: dict = {}
    if config.use_packaged_references:
        refs.update(load_reference_values())
    if config.reference_file:
        refs.update(load_reference_values(config.reference_file))
    table = BenchTable()
    for path in instance_files(instance_dir):
        name = path.stem
        try:
            inst = load_instance(path)
        except (InstanceError, OSError, ValueError) as exc:
            table.records.append(BenchRecord(name, "skipped", None, None, None, note=f"unreadable: {exc}"))
            continue
        ref = match_reference(refs, name, inst.endurance)
        reference = ref.opt if ref else None
        if config.oracle_cap and inst.num_customers <= config.oracle_cap:
            start = time.perf_counter()
            _, opt = brute_force_optimum(inst, max(config.oracle_cap, DEFAULT_CAP))
            wall = time.perf_counter() - start if config.record_wall_time else None
            gap = compute_gap(opt, reference) if reference else None
            table.records.append(BenchRecord(name, "oracle", opt, reference, gap, wall))
            if reference is None:
                reference = opt
        for seed in config.seeds:
            rc = RrlsConfig(time_limit=config.time_limit, rng_seed=seed, max_iterations=config.max_iterations)
            start = time.perf_counter()
            result = rrls(inst, rc)
            wall = time.perf_counter() - start if config.record_wall_time else None
            gap = compute_gap(result.objective, reference) if reference else None
            table.records.append(BenchRecord(name, "rrls", result.objective, reference, gap, wall, seed))
    return table


def best_of_seeds(records: Iterable[BenchRecord]) -> dict[str, float]:
    best: dict[str, float] = {}
    for r in records:
        if r.method == "rrls" and r.objective is not None:
            best[r.instance_name] = min(best.get(r.instance_name, float("inf")), r.objective)
    return best
