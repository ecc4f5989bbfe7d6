"""Monte Carlo experiments: sample, plan, execute and audit many trials.

Reports are plain dicts. ``canonical_json`` renders them with sorted keys
and floats rounded to 12 significant digits, so identical configurations
give byte-identical output whatever the worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

from .bellcore import (
    BellDiagonalDist,
    binary_entropy,
    computational_basis_di,
    entropy_bits,
    hashing_yield,
    measurement_budget,
    single_copy_mdi,
)
from .errors import CapacityError, ValidationError
from .posterior import (
    DEFAULT_EXACT_CAP,
    DEFAULT_XSECTOR_CAP,
    PosteriorReport,
    exact_posterior,
    xsector_posterior,
)
from .protocol import STRATEGIES, MeasurementEvent, execute, plan_cascade, plan_random_subsets, sample_string
from .seeding import MASK64, make_rng, trial_seed

SCHEMA_VERSION = 1
AUDIT_MODES = ("exact", "xsector", "none")
FORMATS = ("json", "csv")

CSV_COLUMNS = (
    "trial",
    "seed",
    "budget",
    "n_events",
    "survivor_count",
    "outcomes",
    "first_outcome_class",
    "residual_entropy",
    "parity_residual",
    "phase_residual",
    "cumulative_di",
    "first_step_di",
    "mean_step_di",
    "success",
    "yield",
)


@dataclass(frozen=True)
class ExperimentConfig:
    dist: BellDiagonalDist
    n: int
    strategy: str = "cascade"
    budget: int | str = "auto"
    delta: int = 0
    trials: int = 1
    master_seed: int = 0
    epsilon: float = 1e-6
    audit_mode: str = "xsector"
    record_events: bool = False
    output: str | None = None
    format: str = "json"

    def __post_init__(self):
        if not isinstance(self.dist, BellDiagonalDist):
            raise ValidationError("dist must be a BellDiagonalDist")
        if not isinstance(self.n, int) or self.n < 1:
            raise ValidationError(f"n must be an integer >= 1, got {self.n!r}")
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.budget != "auto":
            if not isinstance(self.budget, int) or not 1 <= self.budget <= self.n:
                raise ValidationError(f"budget must be 'auto' or an integer in [1, {self.n}], got {self.budget!r}")
        if not isinstance(self.delta, int) or self.delta < 0:
            raise ValidationError(f"delta must be a non-negative integer, got {self.delta!r}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ValidationError(f"trials must be an integer >= 1, got {self.trials!r}")
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed <= MASK64:
            raise ValidationError("master_seed must be a 64-bit unsigned integer")
        if not self.epsilon >= 0:
            raise ValidationError(f"epsilon must be >= 0, got {self.epsilon!r}")
        if self.audit_mode not in AUDIT_MODES:
            raise ValidationError(f"audit_mode must be one of {AUDIT_MODES}, got {self.audit_mode!r}")
        if self.format not in FORMATS:
            raise ValidationError(f"format must be one of {FORMATS}, got {self.format!r}")

    def resolved_budget(self) -> int:
        """Explicit budget, or the minimal measured-pair count at 1 bit per
        measurement plus ``delta``, clamped to [1, n]."""
        if self.budget != "auto":
            return self.budget
        base = measurement_budget(self.n, entropy_bits(self.dist), 1.0)
        return min(self.n, max(1, base + self.delta))

    def check_capacity(self) -> None:
        cap = {"exact": DEFAULT_EXACT_CAP, "xsector": DEFAULT_XSECTOR_CAP}.get(self.audit_mode)
        if cap is not None and self.n > cap:
            raise CapacityError(
                f"audit mode {self.audit_mode!r} supports n <= {cap}, got n={self.n}"
            )

    def echo(self) -> dict:
        # Output location and worker count are deliberately not part of the echo.
        return {
            "dist": list(self.dist.probs),
            "n": self.n,
            "strategy": self.strategy,
            "budget": self.resolved_budget(),
            "budget_request": self.budget,
            "delta": self.delta,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "epsilon": self.epsilon,
            "audit_mode": self.audit_mode,
        }


def parse_dist(text: str | Sequence[float]) -> BellDiagonalDist:
    """Parse ``"p1,p2,p3,p4"`` (or a 4-sequence) into a distribution."""
    if isinstance(text, str):
        parts = [p for p in text.replace(" ", "").split(",") if p != ""]
        try:
            values = [float(p) for p in parts]
        except ValueError as exc:
            raise ValidationError(f"dist entries must be numbers: {text!r}") from exc
    else:
        values = list(text)
    if len(values) != 4:
        raise ValidationError(f"dist needs exactly 4 entries p1,p2,p3,p4, got {len(values)}")
    return BellDiagonalDist(tuple(values))


def analytic_block(dist: BellDiagonalDist, n: int | None = None, budget: int | None = None) -> dict:
    S = entropy_bits(dist)
    block: dict[str, Any] = {
        "entropy_bits": S,
        "computational_basis_di": computational_basis_di(dist),
        "single_copy_mdi": single_copy_mdi(dist),
        "hashing_yield": hashing_yield(dist),
    }
    if n is not None:
        q = dist.psi_mass
        block["measurement_budget"] = measurement_budget(n, S, 1.0)
        block["prior_joint_entropy"] = n * S
        block["cascade_first_step_di"] = binary_entropy((1.0 - (1.0 - 2.0 * q) ** n) / 2.0)
    if n is not None and budget is not None:
        # Information accounting at 1 bit per measured pair.
        block["predicted_residual_entropy"] = max(0.0, n * S - budget * 1.0)
        block["nominal_yield"] = (n - budget) / n
    return block


def audit(dist: BellDiagonalDist, n: int, events: Iterable, mode: str = "auto") -> PosteriorReport:
    if mode == "auto":
        mode = "exact" if n <= DEFAULT_EXACT_CAP else "xsector"
    if mode == "exact":
        return exact_posterior(dist, n, events)
    if mode == "xsector":
        return xsector_posterior(dist, n, events)
    raise ValidationError(f"audit mode must be exact, xsector or auto, got {mode!r}")


def run_trial(config: ExperimentConfig, trial: int) -> dict:
    seed = trial_seed(config.master_seed, trial)
    rng = make_rng(seed)
    budget = config.resolved_budget()
    string = sample_string(config.dist, config.n, rng)
    if config.strategy == "cascade":
        plan = plan_cascade(config.n, budget)
    else:
        plan = plan_random_subsets(config.n, budget, rng)
    events, survivors = execute(plan, string, rng)

    classes = [ev.outcome.parity_class for ev in events]
    record: dict[str, Any] = {
        "trial": trial,
        "seed": seed,
        "budget": budget,
        "n_events": len(events),
        "survivor_count": len(survivors),
        "outcomes": "".join(str(c) for c in classes),
        "first_outcome_class": classes[0],
        "residual_entropy": None,
        "parity_residual": None,
        "phase_residual": None,
        "cumulative_di": None,
        "per_step_di": None,
        "first_step_di": None,
        "mean_step_di": None,
        "success": None,
        "yield": None,
    }
    if config.audit_mode != "none":
        report = audit(config.dist, config.n, events, config.audit_mode)
        success = report.residual_entropy <= config.epsilon
        record.update(
            residual_entropy=report.residual_entropy,
            parity_residual=report.parity_residual,
            phase_residual=report.phase_residual,
            cumulative_di=report.cumulative_di,
            per_step_di=list(report.per_step_di),
            first_step_di=report.per_step_di[0],
            mean_step_di=statistics.fmean(report.per_step_di),
            success=success,
            # One ebit per surviving pair, counted only when the string is resolved.
            **{"yield": len(survivors) / config.n if success else 0.0},
        )
    if config.record_events:
        record["events"] = [ev.to_dict() for ev in events]
    return record


def _run_trial_star(args):
    return run_trial(*args)


def aggregate(records: Sequence[dict]) -> dict:
    out: dict[str, Any] = {
        "trials": len(records),
        "first_outcome_psi_fraction": statistics.fmean(r["first_outcome_class"] for r in records),
        "mean_survivor_count": statistics.fmean(r["survivor_count"] for r in records),
    }
    audited = records[0]["residual_entropy"] is not None
    keys = (
        "mean_residual_entropy",
        "median_residual_entropy",
        "mean_parity_residual",
        "mean_phase_residual",
        "mean_cumulative_di",
        "mean_first_step_di",
        "mean_step_di",
        "success_fraction",
        "mean_yield",
    )
    if not audited:
        out.update({k: None for k in keys})
        return out
    residuals = [r["residual_entropy"] for r in records]
    out.update(
        mean_residual_entropy=statistics.fmean(residuals),
        median_residual_entropy=statistics.median(residuals),
        mean_parity_residual=statistics.fmean(r["parity_residual"] for r in records),
        mean_phase_residual=statistics.fmean(r["phase_residual"] for r in records),
        mean_cumulative_di=statistics.fmean(r["cumulative_di"] for r in records),
        mean_first_step_di=statistics.fmean(r["first_step_di"] for r in records),
        mean_step_di=statistics.fmean(d for r in records for d in r["per_step_di"]),
        success_fraction=statistics.fmean(1.0 if r["success"] else 0.0 for r in records),
        mean_yield=statistics.fmean(r["yield"] for r in records),
    )
    return out


def run_simulation(config: ExperimentConfig, workers: int = 1) -> dict:
    config.check_capacity()
    jobs = [(config, t) for t in range(config.trials)]
    if workers > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_trial_star, jobs, chunksize=max(1, config.trials // (4 * workers))))
    else:
        records = [_run_trial_star(job) for job in jobs]
    budget = config.resolved_budget()
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "simulation",
        "config": config.echo(),
        "analytic": analytic_block(config.dist, config.n, budget),
        "aggregates": aggregate(records),
        "trials": records,
    }


def _canonical_value(value):
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValidationError(f"non-finite value {value!r} cannot be serialized")
        return float(f"{value:.12g}") + 0.0
    if isinstance(value, dict):
        return {str(k): _canonical_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canonical_value(v) for v in value]
    if hasattr(value, "item"):
        return _canonical_value(value.item())
    raise TypeError(f"cannot serialize {type(value).__name__}")


def canonical_json(report: dict) -> str:
    return json.dumps(_canonical_value(report), sort_keys=True, indent=2) + "\n"


def trials_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for record in report["trials"]:
        row = []
        for col in CSV_COLUMNS:
            value = _canonical_value(record[col])
            row.append("" if value is None else (int(value) if isinstance(value, bool) else value))
        writer.writerow(row)
    return buf.getvalue()


def render(report: dict, fmt: str = "json") -> str:
    if fmt == "json":
        return canonical_json(report)
    if fmt == "csv":
        if "trials" not in report:
            raise ValidationError("CSV output is only available for simulation reports")
        return trials_csv(report)
    raise ValidationError(f"unknown format {fmt!r}")


def load_events(data: Any, trial: int | None = None) -> list[MeasurementEvent]:
    """Accept an events log ``{"events": [...]}``, a bare list of events, or a
    simulation report recorded with events (``trial`` selects the run)."""
    if isinstance(data, dict) and "trials" in data:
        trials = data["trials"]
        index = 0 if trial is None else trial
        if not 0 <= index < len(trials) or "events" not in trials[index]:
            raise ValidationError(f"report has no recorded events for trial {index}")
        raw = trials[index]["events"]
    elif isinstance(data, dict) and "events" in data:
        raw = data["events"]
    elif isinstance(data, list):
        raw = data
    else:
        raise ValidationError("events file must hold an events list, an events log or a simulation report")
    if not isinstance(raw, list):
        raise ValidationError("events must be a list")
    out = []
    for k, item in enumerate(raw):
        try:
            out.append(MeasurementEvent.from_dict(item))
        except (ValidationError, ValueError, TypeError, AttributeError) as exc:
            raise ValidationError(f"event {k}: {exc}") from exc
    return out


def audit_report(dist: BellDiagonalDist, n: int, events: Sequence[MeasurementEvent], mode: str = "auto") -> dict:
    report = audit(dist, n, events, mode)
    resolved = mode if mode != "auto" else ("exact" if n <= DEFAULT_EXACT_CAP else "xsector")
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "audit",
        "dist": list(dist.probs),
        "n": n,
        "audit_mode": resolved,
        "n_events": len(events),
        "posterior": report.to_dict(),
        "analytic": analytic_block(dist, n, len(events) if events else None),
    }


_NUM = {"type": "number"}
_NULLABLE_NUM = {"type": ["number", "null"]}

EVENT_SCHEMA = {
    "type": "object",
    "required": ["step", "target", "observable", "outcome"],
    "properties": {
        "step": {"type": "integer", "minimum": 0},
        "target": {"type": "integer", "minimum": 0},
        "observable": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "outcome": {
            "type": "object",
            "required": ["alice_bit", "bob_bit", "parity_class"],
            "properties": {k: {"enum": [0, 1]} for k in ("alice_bit", "bob_bit", "parity_class")},
        },
    },
}

ANALYTIC_SCHEMA = {
    "type": "object",
    "required": ["entropy_bits", "computational_basis_di", "single_copy_mdi", "hashing_yield"],
    "properties": {
        "entropy_bits": _NUM,
        "computational_basis_di": _NUM,
        "single_copy_mdi": _NUM,
        "hashing_yield": _NUM,
        "measurement_budget": {"type": "integer"},
        "prior_joint_entropy": _NUM,
        "cascade_first_step_di": _NUM,
        "predicted_residual_entropy": _NUM,
        "nominal_yield": _NUM,
    },
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "simulation report",
    "type": "object",
    "required": ["schema_version", "kind", "config", "analytic", "aggregates", "trials"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"const": "simulation"},
        "config": {
            "type": "object",
            "required": ["dist", "n", "strategy", "budget", "budget_request", "delta",
                         "trials", "master_seed", "epsilon", "audit_mode"],
            "properties": {
                "dist": {"type": "array", "items": _NUM, "minItems": 4, "maxItems": 4},
                "n": {"type": "integer", "minimum": 1},
                "strategy": {"enum": list(STRATEGIES)},
                "budget": {"type": "integer", "minimum": 1},
                "budget_request": {"oneOf": [{"type": "integer"}, {"const": "auto"}]},
                "delta": {"type": "integer", "minimum": 0},
                "trials": {"type": "integer", "minimum": 1},
                "master_seed": {"type": "integer", "minimum": 0},
                "epsilon": _NUM,
                "audit_mode": {"enum": list(AUDIT_MODES)},
            },
        },
        "analytic": ANALYTIC_SCHEMA,
        "aggregates": {
            "type": "object",
            "required": ["trials", "first_outcome_psi_fraction", "mean_survivor_count",
                         "mean_residual_entropy", "median_residual_entropy", "mean_parity_residual",
                         "mean_phase_residual", "mean_cumulative_di", "mean_first_step_di",
                         "mean_step_di", "success_fraction", "mean_yield"],
            "additionalProperties": _NULLABLE_NUM,
            "properties": {"trials": {"type": "integer"}},
        },
        "trials": {
            "type": "array",
            "items": {
                "type": "object",
                "required": [c for c in CSV_COLUMNS] + ["per_step_di"],
                "properties": {
                    "trial": {"type": "integer", "minimum": 0},
                    "seed": {"type": "integer", "minimum": 0},
                    "budget": {"type": "integer"},
                    "n_events": {"type": "integer"},
                    "survivor_count": {"type": "integer"},
                    "outcomes": {"type": "string", "pattern": "^[01]*$"},
                    "first_outcome_class": {"enum": [0, 1]},
                    "residual_entropy": _NULLABLE_NUM,
                    "parity_residual": _NULLABLE_NUM,
                    "phase_residual": _NULLABLE_NUM,
                    "cumulative_di": _NULLABLE_NUM,
                    "per_step_di": {"type": ["array", "null"], "items": _NUM},
                    "first_step_di": _NULLABLE_NUM,
                    "mean_step_di": _NULLABLE_NUM,
                    "success": {"type": ["boolean", "null"]},
                    "yield": _NULLABLE_NUM,
                    "events": {"type": "array", "items": EVENT_SCHEMA},
                },
            },
        },
    },
}

AUDIT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "audit report",
    "type": "object",
    "required": ["schema_version", "kind", "dist", "n", "audit_mode", "n_events", "posterior", "analytic"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"const": "audit"},
        "dist": {"type": "array", "items": _NUM, "minItems": 4, "maxItems": 4},
        "n": {"type": "integer", "minimum": 1},
        "audit_mode": {"enum": ["exact", "xsector"]},
        "n_events": {"type": "integer", "minimum": 0},
        "posterior": {
            "type": "object",
            "required": ["survivors", "per_step_di", "cumulative_di", "residual_entropy",
                         "parity_residual", "phase_residual", "survivor_marginals"],
            "properties": {
                "survivors": {"type": "array", "items": {"type": "integer"}},
                "per_step_di": {"type": "array", "items": _NUM},
                "survivor_marginals": {
                    "type": "array",
                    "items": {"type": "array", "items": _NUM, "minItems": 4, "maxItems": 4},
                },
            },
            "additionalProperties": True,
        },
        "analytic": ANALYTIC_SCHEMA,
    },
}

ANALYZE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "analytic report",
    "type": "object",
    "required": ["schema_version", "kind", "dist", "analytic"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"const": "analysis"},
        "dist": {"type": "array", "items": _NUM, "minItems": 4, "maxItems": 4},
        "n": {"type": ["integer", "null"]},
        "analytic": ANALYTIC_SCHEMA,
    },
}

SCHEMAS = {"simulation": REPORT_SCHEMA, "audit": AUDIT_SCHEMA, "analysis": ANALYZE_SCHEMA, "event": EVENT_SCHEMA}
