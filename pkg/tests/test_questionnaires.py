import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gazesteer.errors import OutOfRange
from gazesteer.questionnaires import (
    SSQ_SUBSETS,
    CountHigh,
    PresenceResponse,
    SsqResponse,
    SsqWeights,
    SumNormalized,
    TlxResponse,
    read_presence_csv,
    read_ssq_csv,
    read_tlx_csv,
    score_presence,
    score_ssq,
    score_tlx,
)

ssq_items = st.lists(st.integers(0, 3), min_size=16, max_size=16)


def spreadsheet_ssq(items, w=(9.54, 7.58, 13.92, 3.74)):
    # independent column-sum oracle using 0-based item columns
    cols = {
        "N": [0, 5, 6, 7, 8, 14, 15],
        "O": [0, 1, 2, 3, 4, 8, 10],
        "D": [4, 7, 9, 10, 11, 12, 13],
    }
    raw = {k: sum(items[c] for c in v) for k, v in cols.items()}
    return raw["N"] * w[0], raw["O"] * w[1], raw["D"] * w[2], (raw["N"] + raw["O"] + raw["D"]) * w[3]


class TestSsq:
    def test_zero(self):
        assert score_ssq(SsqResponse([0] * 16)) == (0, 0, 0, 0)

    def test_all_three(self):
        s = score_ssq(SsqResponse([3] * 16))
        assert s.nausea == pytest.approx(200.34, abs=1e-9)
        assert s.oculomotor == pytest.approx(159.18, abs=1e-9)
        assert s.disorientation == pytest.approx(292.32, abs=1e-9)
        assert s.total == pytest.approx(235.62, abs=1e-9)

    def test_unit_weights_give_counts(self):
        s = score_ssq(SsqResponse([1] * 16), SsqWeights(1, 1, 1, 1))
        assert (s.nausea, s.oculomotor, s.disorientation) == tuple(len(SSQ_SUBSETS[k]) for k in ("nausea", "oculomotor", "disorientation"))

    def test_validation(self):
        with pytest.raises(OutOfRange):
            SsqResponse([0] * 15)
        with pytest.raises(OutOfRange):
            SsqResponse([4] + [0] * 15)

    @given(ssq_items)
    def test_spreadsheet_oracle(self, items):
        assert tuple(score_ssq(SsqResponse(items))) == pytest.approx(spreadsheet_ssq(items))

    @given(ssq_items, st.floats(0, 20), st.floats(0, 20))
    def test_linear_in_weights(self, items, a, b):
        r = SsqResponse(items)
        w1, w2 = SsqWeights(1, 2, 3, 4), SsqWeights(5, 1, 0.5, 2)
        mix = SsqWeights(*(a * x + b * y for x, y in zip((1, 2, 3, 4), (5, 1, 0.5, 2))))
        expect = [a * x + b * y for x, y in zip(score_ssq(r, w1), score_ssq(r, w2))]
        assert tuple(score_ssq(r, mix)) == pytest.approx(expect)

    @given(ssq_items, st.integers(0, 15))
    def test_monotone(self, items, j):
        if items[j] == 3:
            return
        up = list(items)
        up[j] += 1
        a, b = score_ssq(SsqResponse(items)), score_ssq(SsqResponse(up))
        assert all(y >= x for x, y in zip(a, b))


class TestTlx:
    def test_endpoints(self):
        assert score_tlx([0] * 6, 20) == 0.0
        assert score_tlx([20] * 6, 20) == 100.0

    def test_published_means(self):
        assert score_tlx(TlxResponse(2.41, 1.55, 2.91, 2.23, 1.54, 1.45), 5) == pytest.approx(40.3)

    def test_out_of_range(self):
        with pytest.raises(OutOfRange):
            score_tlx([0, 0, 0, 0, 0, 21], 20)
        with pytest.raises(OutOfRange):
            score_tlx([0] * 5, 20)

    @given(st.lists(st.floats(0, 100), min_size=6, max_size=6), st.integers(0, 5), st.floats(0, 100))
    def test_monotone(self, r, j, v):
        up = list(r)
        up[j] = max(r[j], v)
        assert score_tlx(up) >= score_tlx(r)


class TestPresence:
    def test_count_high(self):
        assert score_presence(PresenceResponse([7] * 6), CountHigh()) == 6
        assert score_presence(PresenceResponse([5, 6, 7, 1, 2, 6]), CountHigh(6)) == 3

    def test_sum_normalized(self):
        assert score_presence(PresenceResponse([1] * 6), SumNormalized(20)) == 0
        assert score_presence(PresenceResponse([7] * 6), SumNormalized(20)) == 20

    def test_range(self):
        with pytest.raises(OutOfRange):
            PresenceResponse([0, 1, 2])
        with pytest.raises(OutOfRange):
            PresenceResponse([8])

    @given(st.lists(st.integers(1, 7), min_size=1, max_size=10), st.integers(0, 9), st.integers(0, 6))
    def test_monotone(self, items, j, bump):
        j %= len(items)
        up = list(items)
        up[j] = min(7, up[j] + bump)
        for mode in (CountHigh(), SumNormalized(20)):
            assert score_presence(PresenceResponse(up), mode) >= score_presence(PresenceResponse(items), mode)


class TestCsv:
    def test_ssq(self):
        text = "respondent," + ",".join(f"s{i}" for i in range(1, 17)) + "\nA," + ",".join(["3"] * 16) + "\n"
        rows = read_ssq_csv(io.StringIO(text))
        assert rows[0][0] == "A" and score_ssq(rows[0][1]).total == pytest.approx(235.62)

    def test_tlx_without_id(self):
        rows = read_tlx_csv(io.StringIO("mental,physical,temporal,performance,effort,frustration\n1,2,3,4,5,6\n"))
        assert rows == [("1", TlxResponse(1, 2, 3, 4, 5, 6))]

    def test_presence_bad_width(self):
        with pytest.raises(OutOfRange):
            read_presence_csv(io.StringIO("1,2,3\n"))
