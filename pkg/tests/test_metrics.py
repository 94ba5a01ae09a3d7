from __future__ import annotations

import numpy as np
import pytest

from relnav.errors import EmptyResults
from relnav.metrics import (
    compute_metrics,
    make_result,
    result_from_json,
    result_to_json,
    spl_term,
)


def result(eid, success, steps=100, path=5.0, shortest=4.0):
    return make_result(eid, success, steps, path, shortest,
                       {"tp": 1, "fp_rejected": 0, "fn_recovered": 0}, "stopped")


class TestSplTerm:
    def test_success_ratio(self):
        assert spl_term(True, 4.0, 5.0) == pytest.approx(0.8)

    def test_failure_zero(self):
        assert spl_term(False, 4.0, 5.0) == 0.0

    def test_shorter_actual_clamped_to_one(self):
        assert spl_term(True, 5.0, 4.0) == pytest.approx(1.0)

    def test_degenerate_zero_lengths(self):
        assert spl_term(True, 0.0, 0.0) == 1.0


class TestComputeMetrics:
    def test_hand_worked_pair(self):
        results = [result(0, True, steps=100, path=5.0, shortest=4.0),
                   result(1, False)]
        metrics = compute_metrics(results)
        assert metrics["sr"] == pytest.approx(0.5)
        assert metrics["spl"] == pytest.approx(0.4)
        assert metrics["n"] == 2
        assert metrics["avg_steps_success"] == 100

    def test_all_failures(self):
        metrics = compute_metrics([result(i, False) for i in range(4)])
        assert metrics["sr"] == 0.0
        assert metrics["spl"] == 0.0

    def test_empty_raises(self):
        with pytest.raises(EmptyResults):
            compute_metrics([])

    def test_spl_never_exceeds_sr(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            results = []
            for eid in range(int(rng.integers(1, 30))):
                results.append(result(
                    eid, bool(rng.random() < 0.5),
                    steps=int(rng.integers(1, 500)),
                    path=float(rng.uniform(0.1, 30)),
                    shortest=float(rng.uniform(0.1, 30))))
            metrics = compute_metrics(results)
            assert metrics["spl"] <= metrics["sr"] + 1e-12

    def test_verdict_totals(self):
        metrics = compute_metrics([result(0, True), result(1, True)])
        assert metrics["verdict_totals"]["tp"] == 2


class TestJsonRoundTrip:
    def test_round_trip(self):
        r = result(7, True)
        assert result_to_json(result_from_json(result_to_json(r))) == result_to_json(r)
