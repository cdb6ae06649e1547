from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from iconforge import aggregate
from iconforge.boxes import BBox, iou
from iconforge.proposals import Detection


def det(x, y, w, h, s):
    return Detection(BBox(x, y, w, h), s)


def nms_oracle(dets, thr):
    """The greedy result is the unique subset S where each detection is in S
    iff no better-ranked member of S overlaps it by more than thr."""
    rank = sorted(range(len(dets)), key=lambda i: (-dets[i].score, -dets[i].box.area, i))
    pos = {i: r for r, i in enumerate(rank)}
    found = []
    for k in range(len(dets) + 1):
        for subset in combinations(range(len(dets)), k):
            s = set(subset)
            ok = all(
                (i in s) == (not any(pos[j] < pos[i] and iou(dets[i].box, dets[j].box) > thr for j in s))
                for i in range(len(dets))
            )
            if ok:
                found.append(s)
    assert len(found) == 1
    return found[0]


def test_threshold():
    ds = [det(0, 0, 1, 1, s) for s in (0.2, 0.5, 0.9, 1.0)]
    assert aggregate.threshold(ds, 0) == ds
    assert [d.score for d in aggregate.threshold(ds, 1)] == [1.0]
    assert [d.score for d in aggregate.threshold(ds[:3], 0.5)] == [0.5, 0.9]


def test_nms_simple():
    a = det(0, 0, 10, 10, 0.9)
    assert aggregate.nms([a]) == [a]
    b = det(0, 0, 10, 10, 0.8)
    assert aggregate.nms([b, a]) == [a]


def test_nms_chain():
    A, B, C = det(0, 0, 10, 10, 0.9), det(0, 0, 20, 10, 0.8), det(10, 0, 10, 10, 0.7)
    assert iou(A.box, B.box) == 0.5 and iou(B.box, C.box) == 0.5 and iou(A.box, C.box) == 0
    kept = aggregate.nms([A, B, C], 0.3)
    assert kept == [A, C]
    assert nms_oracle([A, B, C], 0.3) == {0, 2}


def test_nms_tie_breaks():
    small, large = det(0, 0, 10, 10, 0.5), det(0, 0, 11, 11, 0.5)
    assert aggregate.nms([small, large]) == [large]
    first, second = det(0, 0, 10, 10, 0.5), det(1, 0, 10, 10, 0.5)
    assert aggregate.nms([first, second]) == [first]


boxes = st.builds(
    det,
    st.integers(0, 60), st.integers(0, 60), st.integers(1, 40), st.integers(1, 40),
    st.floats(0, 1),
)


@settings(max_examples=150, deadline=None)
@given(st.lists(boxes, max_size=7), st.floats(0, 1))
def test_nms_matches_oracle(ds, thr):
    kept = aggregate.nms(ds, thr)
    assert {id(d) for d in kept} == {id(ds[i]) for i in nms_oracle(ds, thr)}


@settings(max_examples=200, deadline=None)
@given(st.lists(boxes, max_size=30), st.floats(0, 1))
def test_nms_idempotent_and_bounded(ds, thr):
    once = aggregate.nms(ds, thr)
    assert aggregate.nms(once, thr) == once
    for a, b in combinations(once, 2):
        assert iou(a.box, b.box) <= thr


def test_merge_examples():
    a, b = det(0, 0, 10, 10, 0.9), det(50, 50, 10, 10, 0.8)
    assert aggregate.merge_multiscale([a, b]) == [a, b]

    big, part = det(0, 0, 100, 100, 0.6), det(10, 10, 30, 30, 0.9)
    assert iou(big.box, part.box) < 0.3
    assert aggregate.merge_multiscale([big, part]) == [big]

    l1, l2 = det(0, 0, 100, 100, 0.9), det(5, 5, 95, 95, 0.85)
    assert iou(l1.box, l2.box) > 0.3
    assert aggregate.merge_multiscale([l1, l2]) == [l1]


@settings(max_examples=100, deadline=None)
@given(st.lists(boxes, max_size=25))
def test_merge_subset(ds):
    out = aggregate.merge_multiscale(ds)
    assert len(out) <= len(ds)
    assert all(any(o is d for d in ds) for o in out)


def test_merge_by_image_ids():
    ds = [Detection(BBox(0, 0, 5, 5), 0.9, image_id="b"), Detection(BBox(0, 0, 5, 5), 0.9, image_id="a")]
    out = aggregate.merge_by_image(ds)
    assert [d.id for d in out] == ["a#0", "b#0"]
    assert ds[0].id is None


def test_threshold_range():
    with pytest.raises(ValueError):
        aggregate.threshold([], 1.5)
