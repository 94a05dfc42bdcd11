import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laserlife.datagen import (
    FEATURES,
    FIELDS,
    Dataset,
    DatasetParseError,
    DegenerateColumnError,
    apply_norm,
    build_dataset,
    fit_norm,
    invert_norm,
    read_csv,
    sample_conditions,
    split_indices,
    write_csv,
)
from laserlife.physics import OperatingCondition


@pytest.fixture(scope="module")
def small():
    return build_dataset(sample_conditions(100, seed=11))


class TestSampling:
    def test_empty(self):
        assert sample_conditions(0, seed=1) == []

    def test_deterministic(self):
        a = sample_conditions(50, 5, (-40, 85), (0.5, 10))
        b = sample_conditions(50, 5, (-40, 85), (0.5, 10))
        assert a == b
        assert a != sample_conditions(50, 6, (-40, 85), (0.5, 10))

    def test_uniform_mean(self):
        conds = sample_conditions(10_000, 2, (-40.0, 85.0), (0.1, 10.0))
        tc = np.array([c.tc_c for c in conds])
        assert abs(tc.mean() - 22.5) < 2.0
        assert tc.min() >= -40 and tc.max() <= 85

    @pytest.mark.parametrize("tc,pop", [((50, 40), (5, 10)), ((25, 85), (10, 5)), ((-50, 20), (1, 5)), ((25, 85), (1, 12))])
    def test_bad_ranges(self, tc, pop):
        with pytest.raises(ValueError):
            sample_conditions(3, 0, tc, pop)


class TestBuild:
    def test_reference_condition(self):
        ds = build_dataset([OperatingCondition(50.0, 10.0)])
        assert ds.rows[0].mttf_years == pytest.approx(7e5 / 8760, rel=1e-12)

    def test_empty(self):
        ds = build_dataset([])
        assert len(ds) == 0 and ds.values.shape == (0, len(FIELDS))

    def test_cooler_lives_longer(self):
        ds = build_dataset([OperatingCondition(25.0, 10.0), OperatingCondition(50.0, 10.0)])
        assert ds.rows[0].mttf_years > ds.rows[1].mttf_years

    def test_preserves_order(self):
        conds = sample_conditions(20, 3)
        ds = build_dataset(conds)
        np.testing.assert_array_equal(ds.column("tc_c"), [c.tc_c for c in conds])

    def test_feature_matrix_order(self, small):
        assert small.feature_names == FEATURES
        np.testing.assert_array_equal(small.features[:, 0], small.column("pop_mw"))
        np.testing.assert_array_equal(small.features[:, 6], small.column("tj_k"))

    def test_targets_positive_over_full_envelope(self):
        conds = sample_conditions(100_000, 9, (-40.0, 85.0), (0.0, 10.0))
        y = build_dataset(conds).targets
        assert np.all(np.isfinite(y)) and np.all(y > 0)

    def test_error_carries_row_index(self):
        from laserlife.physics import LaserCurveConfig

        # forward voltage turns negative only at the cold end
        bad = LaserCurveConfig(dv_dt_v_per_k=0.02)
        with pytest.raises(ValueError, match="row 1"):
            build_dataset([OperatingCondition(25.0, 5.0), OperatingCondition(-40.0, 5.0)], bad)


class TestNorm:
    def test_hand_zscore(self):
        values = np.zeros((3, len(FIELDS)))
        values[:] = np.arange(1, 4)[:, None] * np.arange(1, len(FIELDS) + 1)
        ds = Dataset(values)
        X, _ = apply_norm(ds, fit_norm(ds))
        np.testing.assert_allclose(X[:, 0], [-1.2247449, 0.0, 1.2247449], atol=1e-7)

    def test_moments(self, small):
        X, y = apply_norm(small, fit_norm(small))
        np.testing.assert_allclose(X.mean(axis=0), 0, atol=1e-10)
        np.testing.assert_allclose(X.std(axis=0), 1, atol=1e-10)
        assert abs(y.mean()) < 1e-10 and abs(y.std() - 1) < 1e-10

    def test_round_trip(self, small):
        stats = fit_norm(small)
        X, y = apply_norm(small, stats)
        np.testing.assert_allclose(invert_norm(y, stats), small.targets, rtol=1e-10)
        np.testing.assert_allclose(invert_norm(X, stats, features=True), small.features, rtol=1e-10)

    def test_constant_column_named(self):
        ds = build_dataset([OperatingCondition(float(t), 10.0) for t in (30, 40, 50)])
        with pytest.raises(DegenerateColumnError, match="pop_mw"):
            fit_norm(ds)

    def test_empty(self):
        with pytest.raises(ValueError):
            fit_norm(build_dataset([]))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.floats(-40, 85), st.floats(0.5, 10)), min_size=3, max_size=30, unique=True))
    def test_round_trip_property(self, pts):
        ds = build_dataset([OperatingCondition(t, p) for t, p in pts])
        try:
            stats = fit_norm(ds)
        except DegenerateColumnError:
            return
        _, y = apply_norm(ds, stats)
        np.testing.assert_allclose(invert_norm(y, stats), ds.targets, rtol=1e-10)


class TestSplit:
    def test_disjoint_cover(self):
        tr, va = split_indices(100, 0.2, 4)
        assert len(va) == 20 and len(tr) == 80
        assert sorted(np.concatenate([tr, va]).tolist()) == list(range(100))

    def test_deterministic(self):
        assert all(np.array_equal(a, b) for a, b in zip(split_indices(50, 0.2, 1), split_indices(50, 0.2, 1)))


class TestCsv:
    def test_empty_header_only(self, tmp_path):
        p = tmp_path / "e.csv"
        write_csv(build_dataset([]), p)
        assert p.read_text() == ",".join(FIELDS) + "\n"
        assert len(read_csv(p)) == 0

    def test_round_trip(self, small, tmp_path):
        p = tmp_path / "d.csv"
        write_csv(small, p)
        back = read_csv(p)
        assert back == small
        assert back.feature_names == FEATURES
        assert len(p.read_text().splitlines()) == 101

    def test_missing_column(self, small, tmp_path):
        p = tmp_path / "d.csv"
        write_csv(small, p)
        lines = p.read_text().splitlines()
        cut = [",".join(x.split(",")[:-1]) for x in lines]
        p.write_text("\n".join(cut) + "\n")
        with pytest.raises(DatasetParseError, match="mttf_years"):
            read_csv(p)

    def test_non_numeric_reports_line(self, small, tmp_path):
        p = tmp_path / "d.csv"
        write_csv(small.subset(slice(0, 3)), p)
        lines = p.read_text().splitlines()
        lines[2] = "abc" + lines[2][lines[2].index(","):]
        p.write_text("\n".join(lines) + "\n")
        with pytest.raises(DatasetParseError, match=":3:"):
            read_csv(p)

    def test_written_bytes_deterministic(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(build_dataset(sample_conditions(200, 8)), a)
        write_csv(build_dataset(sample_conditions(200, 8)), b)
        assert a.read_bytes() == b.read_bytes()
