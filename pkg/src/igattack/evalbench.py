"""Attack campaigns and their summary metrics.

A campaign attacks up to ``sample_limit`` correctly classified samples and
reports the crafting rate plus mean/std of the L0, L1 and L2 distances over
the successful adversarial examples. Standard deviations are population
(divide-by-N) values.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .attacks import AttackConfig, AttackOutcome, run_attack
from .dataio.datasets import Dataset
from .nncore import Model, predict

NORMS = ("l0", "l1", "l2")
THREADS_ENV = "IGATTACK_WORKERS"


class CampaignError(RuntimeError):
    pass


@dataclass(frozen=True)
class Campaign:
    attack: AttackConfig
    sample_limit: int = 200
    seed: int = 0
    model_id: str = ""
    dataset_id: str = ""

    def __post_init__(self):
        if self.sample_limit < 1:
            raise ValueError("sample_limit must be >= 1")


@dataclass
class MetricsReport:
    crafting_rate: float
    n_attacked: int
    n_success: int
    stats: dict = field(default_factory=dict)  # norm -> (mean, std), or None without successes
    runtime: float = 0.0

    def mean(self, norm: str):
        s = self.stats.get(norm)
        return None if s is None else s[0]

    def std(self, norm: str):
        s = self.stats.get(norm)
        return None if s is None else s[1]

    def to_record(self, include_runtime: bool = False) -> dict:
        rec = {
            "crafting_rate": self.crafting_rate,
            "n_attacked": self.n_attacked,
            "n_success": self.n_success,
        }
        for norm in NORMS:
            s = self.stats.get(norm)
            rec[f"{norm}_mean"] = None if s is None else s[0]
            rec[f"{norm}_std"] = None if s is None else s[1]
        if include_runtime:
            rec["runtime"] = self.runtime
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "MetricsReport":
        stats = {}
        for norm in NORMS:
            mean, std = rec.get(f"{norm}_mean"), rec.get(f"{norm}_std")
            stats[norm] = None if mean is None else (float(mean), float(std))
        return cls(float(rec["crafting_rate"]), int(rec["n_attacked"]), int(rec["n_success"]),
                   stats, float(rec.get("runtime", 0.0)))


def summarize(values) -> tuple[float, float] | None:
    """Mean and population std; sorting first makes the result order-independent."""
    vals = sorted(float(v) for v in values)
    if not vals:
        return None
    mean = math.fsum(vals) / len(vals)
    var = math.fsum((v - mean) ** 2 for v in vals) / len(vals)
    return mean, math.sqrt(var)


def metrics_from_outcomes(outcomes, runtime: float = 0.0) -> MetricsReport:
    outcomes = list(outcomes)
    wins = [o for o in outcomes if o.success]
    n = len(outcomes)
    stats = {norm: summarize(getattr(o, norm) for o in wins) for norm in NORMS}
    return MetricsReport(len(wins) / n if n else 0.0, n, len(wins), stats, runtime)


def select_pool(model: Model, dataset: Dataset, sample_limit: int, seed: int) -> np.ndarray:
    """Seeded draw of up to ``sample_limit`` row indices the model gets right."""
    if len(dataset) == 0:
        raise CampaignError("dataset is empty")
    if dataset.n_features != model.input_dim:
        raise CampaignError(f"dataset width {dataset.n_features} != model input_dim {model.input_dim}")
    preds = predict(model, dataset.features)
    correct = np.flatnonzero(preds == dataset.labels)
    if correct.size == 0:
        acc = 100.0 * float(np.mean(preds == dataset.labels))
        raise CampaignError(f"no correctly classified samples to attack (model accuracy {acc:.2f}%)")
    order = np.random.default_rng(seed).permutation(correct)
    return order[:sample_limit]


def _attack_one(args):
    model, x, y, cfg = args
    return run_attack(model, x, y, cfg)


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def attack_rows(model: Model, dataset: Dataset, rows, cfg: AttackConfig, seed: int,
                workers: int | None = None) -> list[AttackOutcome]:
    """Attack the given rows; per-row seeds are ``seed ^ row`` so scheduling never matters."""
    jobs = [(model, dataset.features[i], int(dataset.labels[i]), cfg.with_seed(seed ^ int(i))) for i in rows]
    workers = _default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(jobs) < 2:
        return [_attack_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_attack_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def run_campaign(model: Model, dataset: Dataset, campaign: Campaign,
                 workers: int | None = None) -> tuple[MetricsReport, list[AttackOutcome]]:
    """Run one campaign over the pool :func:`select_pool` draws for it."""
    rows = select_pool(model, dataset, campaign.sample_limit, campaign.seed)
    start = time.perf_counter()
    outcomes = attack_rows(model, dataset, rows, campaign.attack, campaign.seed, workers)
    return metrics_from_outcomes(outcomes, time.perf_counter() - start), outcomes


def sweep_points(model: Model, dataset: Dataset, base: Campaign, points_list,
                 workers: int | None = None) -> list[tuple[int, MetricsReport]]:
    """IFPA campaigns over several point budgets, sharing seed and sample pool."""
    if base.attack.kind != "ifpa":
        raise ValueError("sweep_points needs an ifpa campaign")
    out = []
    for points in points_list:
        camp = replace(base, attack=replace(base.attack, points=int(points)))
        report, _ = run_campaign(model, dataset, camp, workers)
        out.append((int(points), report))
    return out


def campaign_record(campaign: Campaign, report: MetricsReport, outcomes, rows, dataset: Dataset,
                    include_runtime: bool = False) -> dict:
    """Self-describing record: config echo, metrics, and one row per attacked sample."""
    samples = []
    for i, o in zip(rows, outcomes):
        rec = o.to_record()
        rec["index"] = int(i)
        rec["label"] = int(dataset.labels[i])
        rec["x"] = [float(v) for v in dataset.features[i]]
        samples.append(rec)
    return {
        "kind": "campaign",
        "model_id": campaign.model_id,
        "dataset_id": campaign.dataset_id,
        "seed": campaign.seed,
        "sample_limit": campaign.sample_limit,
        "attack": campaign.attack.to_record(),
        "metrics": report.to_record(include_runtime),
        "samples": samples,
    }


TABLE_COLUMNS = ("Attack", "Crafting Rate", "L0 Mean", "L0 Std", "L1 Mean", "L1 Std", "L2 Mean", "L2 Std")
ABSENT = "—"


def _fmt(v) -> str:
    return ABSENT if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.2f}"


def report_to_table(report: MetricsReport, name: str = "") -> tuple[str, dict]:
    """One table row (crafting rate as a percentage, then mean/std per norm) and its record."""
    cells = [name, f"{100.0 * report.crafting_rate:.2f}%"]
    for norm in NORMS:
        cells += [_fmt(report.mean(norm)), _fmt(report.std(norm))]
    return "\t".join(cells), report.to_record()


def table_header() -> str:
    return "\t".join(TABLE_COLUMNS)


def curve_text(rows) -> str:
    """Columnar text for crafting-rate / distance curves against the point budget."""
    lines = ["points\tcrafting_rate\tl0_mean\tl0_std\tl1_mean\tl1_std\tl2_mean\tl2_std"]
    for points, report in rows:
        cells = [str(points), repr(report.crafting_rate)]
        for norm in NORMS:
            for v in (report.mean(norm), report.std(norm)):
                cells.append("nan" if v is None else repr(v))
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"
