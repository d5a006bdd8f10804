import math

import numpy as np
import pytest

from rgl.attacks import deepfool
from rgl.errors import ParameterError
from rgl.margins import (MarginSummary, SUMMARY_HEADER, margin_profile, records_csv,
                         summary_csv)
from rgl.models import Classifier
from rgl.rng import RngStream
from rgl.spectral import canonical_axis, full_space, orthogonal_complement


def test_full_space_margin_equals_deepfool():
    r = RngStream(0)
    m = Classifier.mlp(5, [8], 1, r)
    x = r.normal(5)
    records, _ = margin_profile(m, x, [full_space(5)], refine=False)
    assert records[0].margin == deepfool(m, x).boundary_distance


def test_affine_refined_margin_is_exact():
    r = RngStream(1)
    w = r.normal(6)
    m = Classifier.affine(w, 0.3)
    xs = r.normal((20, 6))
    records, summaries = margin_profile(m, xs, [full_space(6)])
    exact = np.abs(xs @ w + 0.3) / np.linalg.norm(w)
    np.testing.assert_allclose([rec.margin for rec in records], exact, rtol=1e-12)
    assert summaries[0].median == pytest.approx(np.median(exact), rel=1e-12)


def test_degenerate_subspace_marked_unavailable():
    r = RngStream(2)
    w = r.normal(4)
    m = Classifier.affine(w)
    records, summaries = margin_profile(m, r.normal((3, 4)),
                                        [canonical_axis(w), orthogonal_complement([w])])
    assert summaries[0].available and summaries[0].n_fail == 0
    s = summaries[1]
    assert not s.available and s.n_fail == 3 and s.median is None
    assert all(math.isinf(rec.margin) for rec in records if rec.subspace_index == 1)
    lines = summary_csv(summaries).splitlines()
    assert lines[0].split(",") == SUMMARY_HEADER
    assert lines[2].split(",")[3:6] == ["NA", "NA", "NA"]


def test_records_csv_sample_major():
    r = RngStream(3)
    m = Classifier.affine(r.normal(3))
    records, _ = margin_profile(m, r.normal((2, 3)), [full_space(3), full_space(3)])
    rows = [line.split(",")[:2] for line in records_csv(records).splitlines()[1:]]
    assert rows == [["0", "0"], ["0", "1"], ["1", "0"], ["1", "1"]]


def test_summary_start_index_formatting():
    s = MarginSummary(0, 4, 12, 1.0, 2.0, 3.0, 5, 0)
    assert summary_csv([s]).splitlines()[1] == "0,4,12,1,2,3,5,0"


def test_empty_inputs_rejected():
    m = Classifier.affine(np.ones(3))
    with pytest.raises(ParameterError):
        margin_profile(m, np.ones((1, 3)), [])
