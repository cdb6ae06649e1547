"""Merging multi-scale detections: score threshold, greedy NMS, containment suppression."""
from __future__ import annotations

from dataclasses import replace
from typing import Sequence

from .boxes import containment, iou
from .proposals import Detection

DETECTION_THRESHOLD = 0.8
NMS_IOU = 0.3
CONTAINMENT = 0.9


def threshold(dets: Sequence[Detection], t: float = DETECTION_THRESHOLD) -> list[Detection]:
    if not 0.0 <= t <= 1.0:
        raise ValueError("threshold must be in [0, 1]")
    return [d for d in dets if d.score >= t]


def nms(dets: Sequence[Detection], iou_thresh: float = NMS_IOU) -> list[Detection]:
    """Greedy NMS. Returns survivors best-first; ties go to the larger box, then input order."""
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, -dets[i].box.area, i))
    keep: list[Detection] = []
    for i in order:
        d = dets[i]
        if all(iou(d.box, k.box) <= iou_thresh for k in keep):
            keep.append(d)
    return keep


def suppress_contained(dets: Sequence[Detection], containment_thresh: float = CONTAINMENT) -> list[Detection]:
    """Drop every box that lies (by own-area fraction) inside a strictly larger one."""
    return [
        d for d in dets
        if not any(
            o.box.area > d.box.area and containment(d.box, o.box) >= containment_thresh
            for o in dets
        )
    ]


def merge_multiscale(
    dets: Sequence[Detection],
    iou_thresh: float = NMS_IOU,
    containment_thresh: float = CONTAINMENT,
) -> list[Detection]:
    """Final proposals for one image from detections already in image coordinates."""
    return suppress_contained(nms(dets, iou_thresh), containment_thresh)


def merge_by_image(dets: Sequence[Detection], **kw) -> list[Detection]:
    by_image: dict = {}
    for d in dets:
        by_image.setdefault(d.image_id, []).append(d)
    out = []
    for image_id in sorted(by_image, key=str):
        merged = merge_multiscale(by_image[image_id], **kw)
        out.extend(replace(d, id=f"{image_id}#{k}") for k, d in enumerate(merged))
    return out
