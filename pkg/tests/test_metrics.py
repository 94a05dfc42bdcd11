import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from laserlife.metrics import evaluate, mse, score, score_terms

finite = st.floats(-50, 50, allow_nan=False)


class TestMse:
    def test_identical(self):
        assert mse([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0

    def test_hand_value(self):
        assert mse([1, 2], [0, 0]) == 2.5

    def test_single_pair(self):
        assert mse([3.0], [3.0 + 0.25]) == pytest.approx(0.0625)

    @pytest.mark.parametrize("a,b", [([1, 2], [1]), ([], [])])
    def test_bad_lengths(self, a, b):
        with pytest.raises(ValueError):
            mse(a, b)

    @given(st.lists(st.tuples(finite, finite), min_size=1, max_size=20), st.randoms())
    def test_permutation_invariant(self, pairs, rnd):
        shuffled = list(pairs)
        rnd.shuffle(shuffled)
        p, t = zip(*pairs)
        ps, ts = zip(*shuffled)
        assert mse(p, t) == pytest.approx(mse(ps, ts), rel=1e-12, abs=1e-12)
        assert score(p, t) == pytest.approx(score(ps, ts), rel=1e-12, abs=1e-12)


class TestScore:
    def test_zero_error(self):
        assert score([4.0, 5.0], [4.0, 5.0]) == 0.0

    def test_branch_values(self):
        assert score([10.0], [0.0]) == pytest.approx(math.e - 1, rel=1e-12)
        assert score([-13.0], [0.0]) == pytest.approx(math.e - 1, rel=1e-12)

    def test_over_penalized_more(self):
        # exp(0.5) - 1 vs exp(5/13) - 1
        assert score([5.0], [0.0]) == pytest.approx(0.6487213, rel=1e-7)
        assert score([-5.0], [0.0]) == pytest.approx(0.4690492, rel=1e-7)

    def test_sum_not_mean(self):
        assert score([10.0, 10.0], [0.0, 0.0]) == pytest.approx(2 * (math.e - 1))

    def test_asymmetry_grid(self):
        h = np.linspace(0.1, 20, 200)
        assert np.all(score_terms(h) > score_terms(-h))

    def test_monotone_branches(self):
        neg = score_terms(np.linspace(-30, -1e-9, 300))
        pos = score_terms(np.linspace(0, 30, 300))
        assert np.all(np.diff(neg) <= 0) and np.all(np.diff(pos) >= 0)

    def test_continuous_at_zero(self):
        assert score_terms(-1e-12) == pytest.approx(0, abs=1e-12)
        assert score_terms(0.0) == 0.0

    @given(st.lists(st.floats(-50, 50, allow_nan=False, allow_subnormal=False), min_size=1, max_size=30))
    def test_non_negative(self, h):
        s = score_terms(np.array(h))
        assert np.all(s >= 0)
        assert (s.sum() == 0) == all(x == 0 for x in h)


class TestReport:
    def test_fields(self):
        r = evaluate([11.0, 8.0, 5.0], [10.0, 10.0, 5.0])
        assert r.n == 3 and r.h == [1.0, -2.0, 0.0]
        assert r.mse == pytest.approx(5 / 3)
        assert r.max_overestimate_years == 1.0 and r.max_underestimate_years == 2.0
        assert r.max_abs_error_years == 2.0
        assert r.score == pytest.approx(sum(r.s))
        assert r.score_per_point == pytest.approx(r.score / 3)

    def test_serialization(self, tmp_path):
        r = evaluate([1.0, 2.0], [1.5, 1.0])
        r.write_json(tmp_path / "r.json")
        r.write_points_csv(tmp_path / "p.csv")
        lines = (tmp_path / "p.csv").read_text().splitlines()
        assert lines[0] == "h_years,s" and len(lines) == 3
        import json

        doc = json.loads((tmp_path / "r.json").read_text())
        assert doc["n"] == 2 and doc["h"] == [-0.5, 1.0]
