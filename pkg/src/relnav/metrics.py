"""Episode results and the SR / SPL summary metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import EmptyResults


@dataclass
class EpisodeResult:
    episode_id: int
    success: bool
    steps: int
    path_length: float
    shortest_path_m: float
    spl_term: float = 0.0
    verdicts: dict = field(default_factory=lambda: {"tp": 0, "fp_rejected": 0, "fn_recovered": 0})
    reason: str = ""
    trace_path: Optional[str] = None


def spl_term(success: bool, shortest_m: float, path_m: float) -> float:
    """Per-episode efficiency credit: shortest / max(actual, shortest) when
    successful, else 0. The max clamps noisy shortest-path estimates to 1."""
    if not success:
        return 0.0
    denom = max(path_m, shortest_m)
    if denom <= 0.0:
        return 1.0  # started on top of the target
    return shortest_m / denom


def make_result(episode_id: int, success: bool, steps: int, path_length: float,
                shortest_path_m: float, verdicts: dict, reason: str,
                trace_path: Optional[str] = None) -> EpisodeResult:
    return EpisodeResult(
        episode_id=episode_id,
        success=success,
        steps=steps,
        path_length=path_length,
        shortest_path_m=shortest_path_m,
        spl_term=spl_term(success, shortest_path_m, path_length),
        verdicts=dict(verdicts),
        reason=reason,
        trace_path=trace_path,
    )


def compute_metrics(results: list[EpisodeResult]) -> dict:
    """SR, SPL, mean steps over successes, and verdict totals."""
    if not results:
        raise EmptyResults("no episode results")
    n = len(results)
    successes = [r for r in results if r.success]
    sr = len(successes) / n
    spl = sum(r.spl_term for r in results) / n
    avg_steps = (sum(r.steps for r in successes) / len(successes)) if successes else 0.0
    totals = {"tp": 0, "fp_rejected": 0, "fn_recovered": 0}
    for r in results:
        for key in totals:
            totals[key] += r.verdicts.get(key, 0)
    return {
        "sr": sr,
        "spl": spl,
        "n": n,
        "avg_steps_success": avg_steps,
        "verdict_totals": totals,
    }


def result_to_json(result: EpisodeResult) -> dict:
    return {
        "episode_id": result.episode_id,
        "success": result.success,
        "steps": result.steps,
        "path_length": result.path_length,
        "shortest_path_m": result.shortest_path_m,
        "spl_term": result.spl_term,
        "verdicts": result.verdicts,
        "reason": result.reason,
        "trace_path": result.trace_path,
    }


def result_from_json(doc: dict) -> EpisodeResult:
    return EpisodeResult(
        episode_id=doc["episode_id"],
        success=doc["success"],
        steps=doc["steps"],
        path_length=doc["path_length"],
        shortest_path_m=doc["shortest_path_m"],
        spl_term=doc["spl_term"],
        verdicts=doc.get("verdicts", {}),
        reason=doc.get("reason", ""),
        trace_path=doc.get("trace_path"),
    )
