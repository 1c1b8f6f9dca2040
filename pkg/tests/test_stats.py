import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from axialmap.stats import (
    EmptyInput,
    InsufficientData,
    LengthSummary,
    ReportError,
    RunReport,
    hierarchy_contrast,
    length_summary,
    run_report,
)


class TestLengthSummary:
    def test_constant(self):
        s = length_summary([5, 5, 5, 5])
        assert (s.cv, s.skewness, s.top_decile_share) == (0.0, 0.0, 0.25)

    def test_one_long(self):
        s = length_summary([1, 1, 1, 1, 10])
        assert s.mean == pytest.approx(2.8)
        assert s.top_decile_share == pytest.approx(10 / 14)

    def test_single(self):
        s = length_summary([1])
        assert s.n == 1 and s.skewness == 0.0

    def test_empty(self):
        with pytest.raises(EmptyInput):
            length_summary([])

    def test_non_positive(self):
        with pytest.raises(ValueError):
            length_summary([1, 0])

    def test_moments_against_direct_formulas(self):
        x = np.array([1.0, 2.0, 2.5, 4.0, 9.0, 0.5])
        s = length_summary(x)
        n, m = len(x), x.mean()
        sd = math.sqrt(((x - m) ** 2).sum() / n)
        m2, m3 = ((x - m) ** 2).mean(), ((x - m) ** 3).mean()
        g1 = m3 / m2 ** 1.5
        assert s.cv == pytest.approx(sd / m)
        assert s.skewness == pytest.approx(math.sqrt(n * (n - 1)) / (n - 2) * g1)
        assert s.top_decile_share == pytest.approx(9.0 / x.sum())


lengths = st.lists(st.floats(0.01, 1e4, allow_nan=False), min_size=1, max_size=60)


@settings(max_examples=80, deadline=None)
@given(lengths, st.randoms(use_true_random=False))
def test_permutation_invariant(xs, rnd):
    ys = list(xs)
    rnd.shuffle(ys)
    a, b = length_summary(xs), length_summary(ys)
    for f in ("mean", "cv", "skewness", "top_decile_share"):
        assert getattr(a, f) == pytest.approx(getattr(b, f), rel=1e-9, abs=1e-9)


@settings(max_examples=80, deadline=None)
@given(lengths, st.floats(0.1, 100))
def test_scale_invariant_shape(xs, k):
    a, b = length_summary(xs), length_summary([k * x for x in xs])
    assert b.cv == pytest.approx(a.cv, rel=1e-6, abs=1e-9)
    assert b.top_decile_share == pytest.approx(a.top_decile_share, rel=1e-9)
    assert 0 < a.top_decile_share <= 1


class TestContrast:
    def s(self, skew, cv, share, n=20):
        return LengthSummary(n, 1.0, cv, skew, share)

    def test_hierarchical(self):
        assert hierarchy_contrast(self.s(0.1, 0.3, 0.15), self.s(2.0, 1.1, 0.45)) == "hierarchical"

    def test_flat(self):
        assert hierarchy_contrast(self.s(2.0, 1.1, 0.45), self.s(0.1, 0.3, 0.15)) == "flat"

    def test_identical(self):
        a = self.s(0.5, 0.5, 0.2)
        assert hierarchy_contrast(a, a) == "inconclusive"

    def test_small_n(self):
        with pytest.raises(InsufficientData):
            hierarchy_contrast(self.s(0.1, 0.3, 0.15, n=5), self.s(2.0, 1.1, 0.45))


class TestReport:
    def make(self, axial):
        med = list(np.linspace(1, 3, 30))
        return run_report("x", {"angular_step": 1.0}, {"medial_s": 0.5, "rays_s": 0.25, "reduce_s": 0.25},
                          med, axial, 40)

    def test_schema_and_round_trip(self):
        r = self.make([1, 2, 3, 4, 5, 6, 7, 8, 9, 30])
        d = json.loads(r.to_json())
        assert set(d) >= {"scene", "params", "timings", "counts", "summaries", "verdict"}
        assert d["counts"] == {"medial_segments": 30, "rays": 40, "axial_lines": 10}
        assert set(d["timings"]) == {"medial_s", "rays_s", "reduce_s"}
        back = RunReport.from_dict(d)
        assert back.to_json() == r.to_json()
        assert back.total_seconds == pytest.approx(1.0)

    def test_small_axial_is_insufficient(self):
        assert self.make([5.0]).verdict == "insufficient_data"

    def test_malformed(self):
        with pytest.raises(ReportError):
            RunReport.from_dict({"scene": "x"})
        with pytest.raises(ReportError):
            RunReport.from_dict([1, 2])

    def test_skew_matches_scipy(self):
        x = [1, 1, 2, 3, 5, 8, 13, 21]
        assert length_summary(x).skewness == pytest.approx(sps.skew(x, bias=False))
