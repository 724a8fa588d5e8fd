import numpy as np
import pytest
from hypothesis import given, strategies as st

from cvetag.corpus import Sentence, TagSet
from cvetag.metrics import (build_report, entity_prf, macro_average, prf,
                            render_keyvalue, render_table, report_percent,
                            token_accuracy)


class TestTokenAccuracy:
    def test_identical(self):
        seqs = [["O", "B-a"], ["I-a"]]
        assert token_accuracy(seqs, seqs) == 1.0

    def test_all_different(self):
        assert token_accuracy([["O", "O"]], [["B-a", "B-a"]]) == 0.0

    def test_three_of_four(self):
        assert token_accuracy([["O", "O", "B-a", "O"]],
                              [["O", "O", "B-b", "O"]]) == 0.75

    def test_reorder_invariance(self):
        gold = [["O", "B-a"], ["B-b"], ["O", "O", "I-a"]]
        pred = [["O", "B-b"], ["B-b"], ["O", "B-a", "I-a"]]
        fwd = token_accuracy(gold, pred)
        rev = token_accuracy(gold[::-1], pred[::-1])
        assert fwd == rev

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            token_accuracy([["O"]], [["O", "O"]])
        with pytest.raises(ValueError):
            token_accuracy([["O"]], [])

    def test_accepts_sentences(self):
        s = Sentence.from_pairs(["a", "b"], ["O", "B-x"])
        assert token_accuracy([s], [["O", "B-x"]]) == 1.0


class TestEntityPrf:
    def test_boundary_mismatch_kills_span(self):
        gold = [["B-vendor", "O", "B-version", "I-version"]]
        pred = [["B-vendor", "O", "B-version", "O"]]
        assert entity_prf(gold, pred, "vendor") == (1.0, 1.0, 1.0)
        assert entity_prf(gold, pred, "version") == (0.0, 0.0, 0.0)

    def test_perfect_prediction(self):
        seqs = [["B-a", "I-a", "O", "B-b"]]
        assert entity_prf(seqs, seqs, "a") == (1.0, 1.0, 1.0)
        assert entity_prf(seqs, seqs, "b") == (1.0, 1.0, 1.0)

    def test_zero_denominator_convention(self):
        gold = [["B-a", "O"]]
        pred = [["O", "O"]]
        assert entity_prf(gold, pred, "a") == (0.0, 0.0, 0.0)

    def test_token_mode_gives_partial_credit(self):
        gold = [["B-version", "I-version"]]
        pred = [["B-version", "O"]]
        p, r, f1 = entity_prf(gold, pred, "version", mode="token")
        assert (p, r) == (1.0, 0.5)
        assert f1 == pytest.approx(2 / 3)

    def test_tp_symmetry(self):
        gold = [["B-a", "I-a", "O", "B-a"], ["O", "B-a"]]
        pred = [["B-a", "O", "O", "B-a"], ["B-a", "I-a"]]
        p_g, r_g, _ = entity_prf(gold, pred, "a")
        p_r, r_r, _ = entity_prf(pred, gold, "a")
        # swapping roles swaps precision and recall, TP is shared
        assert p_g == r_r and r_g == p_r


class TestMacroAverage:
    def test_seven_type_test_column(self):
        value = macro_average([93, 89, 98, 60, 95, 46, 99])
        assert value == pytest.approx(580 / 7)
        assert report_percent(value) == 82.8

    def test_seven_type_dev_column(self):
        assert report_percent(macro_average([94, 90, 98, 80, 95, 60, 99])) == 88.0

    def test_recall_test_column(self):
        assert report_percent(macro_average([92, 90, 98, 50, 93, 39, 99])) == 80.1

    def test_constant_values(self):
        assert macro_average([7.0, 7.0, 7.0]) == 7.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            macro_average([])


class TestF1Properties:
    @given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
    def test_f1_between_p_and_r(self, tp, extra_pred, extra_gold):
        pred_n = tp + extra_pred
        gold_n = tp + extra_gold
        p, r, f1 = prf(tp, pred_n, gold_n)
        assert min(p, r) - 1e-12 <= f1 <= max(p, r) + 1e-12
        if p == 0.0 or r == 0.0:
            assert f1 == 0.0
        else:
            assert f1 == pytest.approx(2 * p * r / (p + r))


def _sample_reports():
    gold = [["B-vendor", "I-vendor", "O", "B-os"],
            ["B-version", "O", "B-vendor"]]
    pred = [["B-vendor", "I-vendor", "O", "B-vendor"],
            ["B-version", "O", "B-vendor"]]
    tagset = TagSet(["O", "B-vendor", "I-vendor", "B-os", "B-version"])
    return gold, pred, tagset


class TestBuildReport:
    def test_identity_report(self):
        gold, _, tagset = _sample_reports()
        report = build_report(gold, gold, tagset)
        assert report.token_accuracy == 1.0
        for score in report.per_type.values():
            assert (score.precision, score.recall, score.f1) == (1.0, 1.0, 1.0)
        assert report.macro == (1.0, 1.0, 1.0)

    def test_counts_and_macro(self):
        gold, pred, tagset = _sample_reports()
        report = build_report(gold, pred, tagset)
        assert list(report.per_type) == ["os", "vendor", "version"]
        assert report.per_type["vendor"].gold_count == 2
        assert report.per_type["vendor"].pred_count == 3
        assert report.per_type["vendor"].tp == 2
        assert report.per_type["os"].gold_count == 1
        assert sum(s.gold_count for s in report.per_type.values()) == 4
        assert report.macro[2] == pytest.approx(macro_average(
            [s.f1 for s in report.per_type.values()]))

    def test_selected_types_restrict_and_order(self):
        gold, pred, tagset = _sample_reports()
        report = build_report(gold, pred, tagset,
                              selected_types=["vendor", "os"])
        assert list(report.per_type) == ["vendor", "os"]
        assert report.macro[2] == pytest.approx(macro_average(
            [report.per_type["vendor"].f1, report.per_type["os"].f1]))

    def test_unknown_selected_type_rejected(self):
        gold, pred, tagset = _sample_reports()
        with pytest.raises(ValueError):
            build_report(gold, pred, tagset, selected_types=["nevermet"])

    def test_alignment_error_propagates(self):
        gold, pred, tagset = _sample_reports()
        with pytest.raises(ValueError):
            build_report(gold, pred[:1], tagset)

    def test_token_mode(self):
        gold, pred, tagset = _sample_reports()
        report = build_report(gold, pred, tagset, mode="token")
        assert report.mode == "token"
        assert report.per_type["vendor"].gold_count == 3  # token count now

    def test_bad_mode(self):
        gold, pred, tagset = _sample_reports()
        with pytest.raises(ValueError):
            build_report(gold, pred, tagset, mode="span")


EXPECTED_TABLE = """\
Token accuracy: 85.7 (entity-level report)
Entity type  Precision     Recall         F1    Gold    Pred      TP
--------------------------------------------------------------------
os                 0.0        0.0        0.0       1       0       0
vendor            66.6      100.0       80.0       2       3       2
version          100.0      100.0      100.0       1       1       1
Average           55.5       66.6       60.0
"""


class TestRendering:
    def test_golden_table(self):
        gold, pred, tagset = _sample_reports()
        table = render_table(build_report(gold, pred, tagset))
        assert table == EXPECTED_TABLE

    def test_stable_across_runs(self):
        gold, pred, tagset = _sample_reports()
        a = render_table(build_report(gold, pred, tagset))
        b = render_table(build_report(gold, pred, tagset))
        assert a == b

    def test_average_row_present(self):
        gold, pred, tagset = _sample_reports()
        assert "Average" in render_table(build_report(gold, pred, tagset))

    def test_keyvalue_lines(self):
        gold, pred, tagset = _sample_reports()
        out = render_keyvalue(build_report(gold, pred, tagset))
        lines = out.splitlines()
        assert lines[0].startswith("token_accuracy ")
        assert lines[1].split() == ["os", "0.0", "0.0", "0.0", "1", "0", "0"]
        assert lines[-1].startswith("macro ")
