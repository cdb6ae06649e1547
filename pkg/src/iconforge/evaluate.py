"""Detection metrics: IOU matching, precision/recall, F-beta, VOC average precision.

Also the visual-hashtag top-1 evaluation and annotator-consistency reports.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Mapping, Sequence

import numpy as np

from .boxes import BBox, iou

log = logging.getLogger(__name__)

__all__ = [
    "EvalConfig", "EvalReport", "HashtagReport", "iou", "match", "f_measure",
    "average_precision", "ap_from_flags", "evaluate_proposals", "evaluate_hashtags",
    "consistency",
]


@dataclass
class EvalConfig:
    iou_match: float = 0.5
    beta: float = 0.3

    def __post_init__(self):
        if not 0.0 < self.iou_match <= 1.0:
            raise ValueError("iou_match must be in (0, 1]")
        if self.beta <= 0:
            raise ValueError("beta must be positive")


@dataclass
class EvalReport:
    precision: float
    recall: float
    f_beta: float
    map: float
    n_detections: int
    n_ground_truth: int
    per_image: list[tuple[str, int, int, int]] = field(default_factory=list)
    curve: list[tuple[float, float]] = field(default_factory=list)
    unmatched_ids: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_image"] = [
            {"image_id": i, "tp": tp, "fp": fp, "fn": fn} for i, tp, fp, fn in self.per_image
        ]
        d["curve"] = [{"recall": r, "precision": p} for r, p in self.curve]
        return d


def match(dets: Sequence[BBox], gts: Sequence[BBox], iou_match: float = 0.5, strict: bool = False):
    """Greedy VOC-style matching of score-sorted detections to ground truth.

    Each detection takes the still-unmatched ground-truth box it overlaps most,
    provided that overlap reaches ``iou_match`` (exceeds it when ``strict``).
    Returns ``(tp_flags, gt_matched)``.
    """
    gt_matched = [False] * len(gts)
    tp = []
    for d in dets:
        best, best_iou = -1, -1.0
        for j, g in enumerate(gts):
            if gt_matched[j]:
                continue
            o = iou(d, g)
            if o > best_iou:
                best, best_iou = j, o
        hit = best >= 0 and (best_iou > iou_match if strict else best_iou >= iou_match)
        if hit:
            gt_matched[best] = True
        tp.append(hit)
    return tp, gt_matched


def f_measure(prec: float, rec: float, beta: float = 0.3) -> float:
    """(1 + b^2) P R / (b^2 P + R); 0 when both are 0."""
    b2 = beta * beta
    denom = b2 * prec + rec
    if denom == 0:
        return 0.0
    return (1 + b2) * prec * rec / denom


def pr_curve(tp_flags: Sequence[bool], n_gt: int):
    tp = np.cumsum(np.asarray(tp_flags, dtype=np.float64))
    k = np.arange(1, len(tp_flags) + 1)
    recall = tp / n_gt if n_gt else np.zeros_like(tp)
    return recall, tp / k


def ap_from_flags(tp_flags: Sequence[bool], n_gt: int) -> float:
    """All-points interpolated AP of a ranked TP/FP sequence.

    Recall rises by 1/n_gt at each TP, so the area is the mean over TP ranks
    of the best precision at that rank or later.  Summed in exact rationals
    and rounded once.
    """
    if n_gt == 0 or len(tp_flags) == 0:
        return 0.0
    prec, tp = [], 0
    for k, f in enumerate(tp_flags, 1):
        tp += bool(f)
        prec.append(Fraction(tp, k))
    total, best = Fraction(0), Fraction(0)
    for f, p in zip(reversed(tp_flags), reversed(prec)):
        best = max(best, p)
        if f:
            total += best
    return float(total / n_gt)


def _rank(dets):
    # stable: ties keep input order
    return sorted(range(len(dets)), key=lambda i: -dets[i][1])


def _ranked_flags(dets, gts, iou_match, strict=False):
    """``dets``: (image_id, score, box) triples; ``gts``: image_id -> boxes."""
    matched = {k: [False] * len(v) for k, v in gts.items()}
    flags = []
    for i in _rank(dets):
        image_id, _, box = dets[i]
        g = gts.get(image_id, ())
        best, best_iou = -1, -1.0
        for j, gb in enumerate(g):
            if matched[image_id][j]:
                continue
            o = iou(box, gb)
            if o > best_iou:
                best, best_iou = j, o
        hit = best >= 0 and (best_iou > iou_match if strict else best_iou >= iou_match)
        if hit:
            matched[image_id][best] = True
        flags.append(hit)
    return flags


def average_precision(dets, gts: Mapping[str, Sequence[BBox]], iou_match: float = 0.5, strict: bool = False) -> float:
    """AP over a dataset.

    ``dets`` is a sequence of ``(image_id, score, box)``; ground truth maps
    image ids to box lists.  Matching is done in global score order.
    """
    n_gt = sum(len(v) for v in gts.values())
    return ap_from_flags(_ranked_flags(dets, gts, iou_match, strict), n_gt)


def evaluate_proposals(
    proposals: Mapping[str, Sequence[tuple[BBox, float]]],
    gts: Mapping[str, Sequence[BBox]],
    config: EvalConfig | None = None,
) -> EvalReport:
    """Class-agnostic Prec/Rec/F/mAP (percentages) of final proposals against ground truth.

    Proposals for images absent from the ground truth are listed in
    ``unmatched_ids`` and left out of the scores.
    """
    config = config or EvalConfig()
    unmatched = sorted(set(proposals) - set(gts))
    if unmatched:
        log.warning("%d proposal image ids have no ground truth: %s", len(unmatched), unmatched[:5])
    per_image = []
    tp_total = fp_total = 0
    for image_id in sorted(gts):
        props = proposals.get(image_id, [])
        order = _rank([(image_id, s, b) for b, s in props])
        flags, gt_hit = match([props[i][0] for i in order], gts[image_id], config.iou_match)
        tp = sum(flags)
        per_image.append((image_id, tp, len(flags) - tp, len(gt_hit) - sum(gt_hit)))
        tp_total += tp
        fp_total += len(flags) - tp

    n_det = tp_total + fp_total
    n_gt = sum(len(v) for v in gts.values())
    prec = tp_total / n_det if n_det else 0.0
    rec = tp_total / n_gt if n_gt else 0.0

    flat = [(i, s, b) for i in sorted(gts) for b, s in proposals.get(i, [])]
    flags = _ranked_flags(flat, gts, config.iou_match)
    r, p = pr_curve(flags, n_gt)
    return EvalReport(
        precision=100 * prec,
        recall=100 * rec,
        f_beta=100 * f_measure(prec, rec, config.beta),
        map=100 * ap_from_flags(flags, n_gt),
        n_detections=n_det,
        n_ground_truth=n_gt,
        per_image=per_image,
        curve=[(float(a), float(b)) for a, b in zip(r, p)],
        unmatched_ids=unmatched,
    )


@dataclass
class HashtagReport:
    top1_precision: float
    map: float | None
    n_pairs: int
    hits: int
    missing_gt: list[tuple[str, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["missing_gt"] = [list(p) for p in self.missing_gt]
        return d


def evaluate_hashtags(
    predictions: Mapping[tuple[str, str], BBox],
    gts: Mapping[tuple[str, str], Sequence[BBox]],
    ranked: Mapping[tuple[str, str], Sequence[tuple[BBox, float]]] | None = None,
    iou_match: float = 0.5,
) -> HashtagReport:
    """Top-1 precision of one hashtag box per (image, tag) pair.

    A hashtag succeeds when its IOU with some ground-truth box of the pair is
    strictly greater than ``iou_match``.  With ``ranked`` proposals per pair,
    also reports the mean per-pair AP under the same strict rule.
    """
    missing = sorted(k for k in predictions if k not in gts)
    if missing:
        log.warning("%d image-tag pairs have no ground truth and are excluded", len(missing))
    pairs = sorted(k for k in predictions if k in gts)
    hits = sum(any(iou(predictions[k], g) > iou_match for g in gts[k]) for k in pairs)
    mean_ap = None
    if ranked is not None:
        aps = []
        for k in pairs:
            dets = [(k, s, b) for b, s in ranked.get(k, [])]
            aps.append(average_precision(dets, {k: gts[k]}, iou_match, strict=True))
        mean_ap = 100 * float(np.mean(aps)) if aps else 0.0
    return HashtagReport(
        top1_precision=100 * hits / len(pairs) if pairs else 0.0,
        map=mean_ap,
        n_pairs=len(pairs),
        hits=hits,
        missing_gt=missing,
    )


def consistency(
    annotations: Mapping[str, Mapping[str, Sequence[BBox]]],
    config: EvalConfig | None = None,
) -> dict:
    """Mean pairwise agreement between annotators.

    ``annotations`` maps image id -> annotator -> boxes.  Every ordered pair
    of annotators on an image is scored with one set as unit-score
    predictions and the other as ground truth; the per-pair precision,
    recall, F and AP are averaged (percentages).
    """
    config = config or EvalConfig()
    rows = []
    for image_id in sorted(annotations):
        sets = annotations[image_id]
        if len(sets) < 2:
            raise ValueError(f"image {image_id}: need at least 2 annotation sets")
        for a, b in permutations(sorted(sets), 2):
            pred, ref = list(sets[a]), list(sets[b])
            if not pred and not ref:
                continue
            flags, _ = match(pred, ref, config.iou_match)
            tp = sum(flags)
            p = tp / len(pred) if pred else 0.0
            r = tp / len(ref) if ref else 0.0
            rows.append((p, r, f_measure(p, r, config.beta), ap_from_flags(flags, len(ref))))
    if not rows:
        return {"precision": 0.0, "recall": 0.0, "f_beta": 0.0, "map": 0.0, "n_pairs": 0}
    m = 100 * np.mean(rows, axis=0)
    return {"precision": float(m[0]), "recall": float(m[1]), "f_beta": float(m[2]),
            "map": float(m[3]), "n_pairs": len(rows)}
