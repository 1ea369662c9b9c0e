import math

import numpy as np
import pytest

from aeroloop import objective
from aeroloop.errors import DegenerateReferenceError
from aeroloop.objective import ObjectiveWeights, evaluate_candidate
from aeroloop.physics import PhysicsBounds

# Published benchmark table: (baseline, ours, improvement %) per
# text-to-3D model and prompt-generating model.
BENCHMARK_TABLE = [
    ("shap-e/mistral", 0.8350, 0.9557, 14.46),
    ("shap-e/gpt35", 0.8972, 0.9637, 7.41),
    ("shap-e/gpt4omini", 0.6891, 1.0000, 45.12),
    ("shap-e/gemini", 0.7697, 0.9173, 19.18),
    ("trellis/mistral", 0.8131, 0.8494, 4.46),
    ("trellis/gpt35", 0.8562, 0.9531, 11.32),
    ("trellis/gpt4omini", 0.6139, 1.0000, 62.89),
    ("trellis/gemini", 0.4660, 0.9634, 106.74),
]


class TestNoveltyWeight:
    def test_unit_ratio(self):
        # mean == population std for [0, 2]: mean 1, std 1
        value = objective.novelty_weight_from_scores([0.0, 2.0])
        assert value == pytest.approx(math.exp(-1.0), abs=1e-12)

    def test_direct_evaluation(self):
        # [0.4, 0.8]: mean 0.6, population std 0.2 -> e^-3
        value = objective.novelty_weight_from_scores([0.4, 0.8])
        assert value == pytest.approx(math.exp(-3.0), abs=1e-12)
        assert value == pytest.approx(0.049787, abs=1e-6)

    def test_zero_spread_rejected(self):
        with pytest.raises(DegenerateReferenceError):
            objective.novelty_weight_from_scores([0.7, 0.7, 0.7])

    def test_too_few_scores(self):
        with pytest.raises(ValueError):
            objective.novelty_weight_from_scores([0.5])

    def test_matches_formula_on_random_sets(self, rng):
        for _ in range(500):
            scores = rng.random(int(rng.integers(2, 30))).tolist()
            mean = np.mean(scores)
            std = np.std(scores)  # population convention
            if std == 0.0:
                continue
            value = objective.novelty_weight_from_scores(scores)
            assert value == pytest.approx(math.exp(-mean / std), abs=1e-12)


class TestEvaluateCandidate:
    def weights(self, **kwargs):
        defaults = dict(
            novelty_weight=0.5,
            temperature=0.01,
            physics_bounds=PhysicsBounds(-1.0, 1.0),
        )
        defaults.update(kwargs)
        return ObjectiveWeights(**defaults)

    def test_penalty_mode_direct(self):
        score = evaluate_candidate(0.5, 0.9, 0.2, self.weights())
        assert score.objective == pytest.approx(0.5 + 0.1 - 0.1, abs=1e-12)

    def test_zero_novelty_removes_weight(self):
        for beta in (0.0, 0.3, 5.0):
            score = evaluate_candidate(0.4, 0.7, 0.0, self.weights(novelty_weight=beta))
            assert score.objective == pytest.approx(0.4 + 0.3, abs=1e-12)

    def test_constraint_band(self):
        score = evaluate_candidate(0.99, 0.5, 0.0, self.weights())
        assert not score.physical_constraint_ok
        score = evaluate_candidate(0.5, 0.5, 0.0, self.weights())
        assert score.physical_constraint_ok
        score = evaluate_candidate(0.01, 0.5, 0.0, self.weights())
        assert not score.physical_constraint_ok

    def test_infeasible_prompt_gets_infinite_objective(self):
        score = evaluate_candidate(
            0.5, 0.5, 0.5, self.weights(), prompt_feasible=False
        )
        assert math.isinf(score.objective)
        assert not score.prompt_feasible

    def test_penalty_mode_monotonicities(self):
        w = self.weights()
        base = evaluate_candidate(0.5, 0.5, 0.5, w).objective
        assert evaluate_candidate(0.6, 0.5, 0.5, w).objective > base
        assert evaluate_candidate(0.5, 0.6, 0.5, w).objective < base
        assert evaluate_candidate(0.5, 0.5, 0.6, w).objective < base

    def test_additive_mode_monotonicities(self):
        w = self.weights(domain_term_mode=objective.DOMAIN_TERM_ADDITIVE)
        base = evaluate_candidate(0.5, 0.5, 0.5, w).objective
        assert evaluate_candidate(0.6, 0.5, 0.5, w).objective > base
        assert evaluate_candidate(0.5, 0.6, 0.5, w).objective > base
        assert evaluate_candidate(0.5, 0.5, 0.6, w).objective < base

    def test_weight_validation(self):
        with pytest.raises(ValueError):
            self.weights(novelty_weight=-0.1)
        with pytest.raises(ValueError):
            self.weights(constraint_low=0.0)
        with pytest.raises(ValueError):
            self.weights(domain_term_mode="bogus")


class TestDpar:
    def test_single_candidate(self):
        result = objective.dpar([(0.9, 0.5)])
        assert result.value == pytest.approx(1.8, abs=1e-12)

    def test_permutation_invariant(self, rng):
        pairs = [(float(d), float(p)) for d, p in rng.random((20, 2)) + 0.1]
        base = objective.dpar(pairs).value
        shuffled = [pairs[i] for i in rng.permutation(len(pairs))]
        assert objective.dpar(shuffled).value == pytest.approx(base, abs=1e-12)

    def test_union_is_weighted_mean(self, rng):
        a = [(float(d), float(p)) for d, p in rng.random((8, 2)) + 0.1]
        b = [(float(d), float(p)) for d, p in rng.random((12, 2)) + 0.1]
        da = objective.dpar(a).value
        db = objective.dpar(b).value
        together = objective.dpar(a + b).value
        assert together == pytest.approx((8 * da + 12 * db) / 20, abs=1e-12)

    def test_zero_physical_excluded_with_flag(self):
        result = objective.dpar([(0.9, 0.5), (0.8, 0.0)])
        assert result.value == pytest.approx(1.8)
        assert result.excluded == 1
        assert result.count == 1

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            objective.dpar([(0.9, 0.0)])


class TestImprovement:
    @pytest.mark.parametrize("name,baseline,ours,expected", BENCHMARK_TABLE)
    def test_published_rows(self, name, baseline, ours, expected):
        percent = objective.improvement_percent(baseline, ours)
        assert abs(percent - expected) <= 0.01

    def test_formatting(self):
        assert objective.format_improvement(14.455) == "+14.46%"
        assert objective.format_improvement(0.0) == "+0.00%"
        assert objective.format_improvement(-3.21) == "-3.21%"

    def test_zero_baseline_rejected(self):
        with pytest.raises(ValueError):
            objective.improvement_percent(0.0, 1.0)
