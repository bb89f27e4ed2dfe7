#!/usr/bin/env python3
"""Builds the bundled evaluation fixture and its brute-force expectations.

The expected metric values are computed here, in plain Python, straight
from the documented semantics (greedy per-image-per-class matching,
all-point interpolated AP, size-bucketed AP, log-average miss rate as an
exhaustive threshold sweep). The C++ library must reproduce them to 1e-9;
any shared bug would have to be implemented twice independently to slip
through.

Usage: python3 scripts/make_eval_fixture.py [out_dir]
"""

import json
import math
import random
import sys
from pathlib import Path

CLASSES = ["prohibitory", "mandatory", "warning", "other"]
N_IMAGES = 20
IMG_SIDE = 256
IOU_THR = 0.5
T1 = 32.0 * 32.0
T2 = 96.0 * 96.0


# ---- plain-python geometry -------------------------------------------------


def iou(a, b):
    ix = max(0.0, min(a[2], b[2]) - max(a[0], b[0]))
    iy = max(0.0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = ix * iy
    if inter <= 0.0:
        return 0.0
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (area_a + area_b - inter)


def match(dets, gts, thr):
    """Greedy: detections by descending score (ties keep input order), each
    takes the best still-free same-image same-class truth at IoU >= thr."""
    order = sorted(range(len(dets)), key=lambda i: -dets[i]["score"])
    used = set()
    out = [-1] * len(dets)
    for i in order:
        best, arg = thr, -1
        for g, gt in enumerate(gts):
            if g in used:
                continue
            if gt["image_id"] != dets[i]["image_id"]:
                continue
            if gt["class"] != dets[i]["class"]:
                continue
            v = iou(dets[i]["box"], gt["box"])
            if v > best or (arg < 0 and v == best):
                best, arg = v, g
        if arg >= 0:
            used.add(arg)
            out[i] = arg
    return out


def average_precision(flags, n_gt):
    """flags: (score, is_tp) pairs. All-point interpolation, summed from the
    high-recall end exactly like the library does."""
    if not flags or n_gt == 0:
        return 0.0
    flags = sorted(flags, key=lambda f: -f[0])
    prec, rec = [], []
    tp = fp = 0
    for _, is_tp in flags:
        if is_tp:
            tp += 1
        else:
            fp += 1
        prec.append(tp / (tp + fp))
        rec.append(tp / n_gt)
    ap, env = 0.0, 0.0
    for i in range(len(prec) - 1, -1, -1):
        env = max(env, prec[i])
        r_lo = rec[i - 1] if i > 0 else 0.0
        if rec[i] > r_lo:
            ap += (rec[i] - r_lo) * env
    return ap


def per_class_ap(dets, gts, thr):
    matched = match(dets, gts, thr)
    classes = sorted({g["class"] for g in gts}, key=CLASSES.index)
    out = {}
    for cls in classes:
        n_gt = sum(1 for g in gts if g["class"] == cls)
        flags = [(d["score"], matched[i] >= 0)
                 for i, d in enumerate(dets) if d["class"] == cls]
        out[cls] = average_precision(flags, n_gt)
    return out


def size_bucketed_ap(dets, gts, thr):
    def bucket(area):
        if area < T1:
            return 0
        if area < T2:
            return 1
        return 2

    matched = match(dets, gts, thr)
    buckets = []
    for b in range(3):
        gt_count = {}
        for g in gts:
            area = (g["box"][2] - g["box"][0]) * (g["box"][3] - g["box"][1])
            if bucket(area) == b:
                gt_count[g["class"]] = gt_count.get(g["class"], 0) + 1
        flags = {}
        for i, d in enumerate(dets):
            if matched[i] >= 0:
                g = gts[matched[i]]
                area = (g["box"][2] - g["box"][0]) * (g["box"][3] - g["box"][1])
                if bucket(area) == b:
                    flags.setdefault(d["class"], []).append((d["score"], True))
                # matched outside this bucket: ignored entirely
            else:
                flags.setdefault(d["class"], []).append((d["score"], False))
        if not gt_count:
            buckets.append(None)
            continue
        total = 0.0
        for cls in sorted(gt_count, key=CLASSES.index):
            total += average_precision(flags.get(cls, []), gt_count[cls])
        buckets.append(total / len(gt_count))
    return buckets


def lamr(dets, gts, n_images, thr):
    """Exhaustive sweep: at every score cut re-match the kept detections."""
    if not gts:
        return None
    points = [(0.0, 1.0)]
    for cut in sorted({d["score"] for d in dets}):
        kept = [d for d in dets if d["score"] >= cut]
        matched = match(kept, gts, thr)
        tp = sum(1 for m in matched if m >= 0)
        points.append(((len(kept) - tp) / n_images, 1.0 - tp / len(gts)))
    acc = 0.0
    for i in range(9):
        ref = 10.0 ** (-2.0 + 0.25 * i)
        best, mr = -1.0, 1.0
        for fppi, m in points:
            if fppi > ref:
                continue
            if fppi > best or (fppi == best and m < mr):
                best, mr = fppi, m
        acc += math.log(max(mr, 1e-10))
    return math.exp(acc / 9.0)


# ---- fixture construction ---------------------------------------------------


def build():
    rng = random.Random(20260814)
    gts = []

    def add_gt(image_id, cls, x0, y0, w, h):
        gts.append({"image_id": image_id, "class": cls,
                    "box": (x0, y0, x0 + w, y0 + h)})

    # Small prohibitory signs (area < 1024), two per image on half the set.
    small_sizes = [(16.0, 20.0), (24.0, 24.0), (20.0, 28.0), (28.0, 20.0)]
    for i in range(10):
        w, h = small_sizes[i % len(small_sizes)]
        add_gt(i, "prohibitory", 16.0 + 8 * i, 32.0 + 4 * i, w, h)
        if i % 2 == 0:
            w2, h2 = small_sizes[(i + 1) % len(small_sizes)]
            add_gt(i, "prohibitory", 160.0 + 4 * i, 180.0 - 4 * i, w2, h2)

    # Medium mandatory signs.
    medium_sizes = [(48.0, 48.0), (64.0, 40.0), (40.0, 64.0), (56.0, 56.0)]
    for i in range(8):
        w, h = medium_sizes[i % len(medium_sizes)]
        add_gt(6 + i, "mandatory", 96.0 + 6 * i, 48.0 + 8 * i, w, h)

    # Large warning signs.
    large_sizes = [(112.0, 112.0), (128.0, 104.0), (104.0, 128.0)]
    for i in range(6):
        w, h = large_sizes[i % len(large_sizes)]
        add_gt(13 + i, "warning", 32.0 + 10 * i, 96.0, w, h)

    # One mix: a medium warning sign, so "warning" spans two buckets.
    add_gt(4, "warning", 60.0, 60.0, 72.0, 64.0)

    dets = []

    def add_det(image_id, cls, box, score):
        dets.append({"image_id": image_id, "class": cls,
                     "box": tuple(float(v) for v in box), "score": score})

    score_grid = [0.95, 0.9, 0.85, 0.8, 0.75, 0.7, 0.65, 0.6, 0.55,
                  0.5, 0.45, 0.4, 0.35, 0.3]
    jitters = [0.5, -0.5, 1.5, -1.5, 1.0, -1.0, 2.5, -2.5]

    for k, g in enumerate(gts):
        x0, y0, x1, y1 = g["box"]
        w, h = x1 - x0, y1 - y0
        roll = rng.random()
        if roll < 0.8:  # detected, comfortably above the IoU threshold
            dx = jitters[k % len(jitters)] * min(1.0, w / 40.0)
            dy = jitters[(k + 3) % len(jitters)] * min(1.0, h / 40.0)
            add_det(g["image_id"], g["class"],
                    (x0 + dx, y0 + dy, x1 + dx, y1 + dy),
                    score_grid[k % len(score_grid)])
            if roll < 0.2:  # duplicate hit at a lower score -> false positive
                add_det(g["image_id"], g["class"],
                        (x0 - dx, y0 + dy, x1 - dx, y1 + dy),
                        score_grid[(k + 5) % len(score_grid)] / 2.0)
        elif roll < 0.9:  # badly localized: IoU well under 0.5
            add_det(g["image_id"], g["class"],
                    (x0 + 0.75 * w, y0, x1 + 0.75 * w, y1),
                    score_grid[(k + 7) % len(score_grid)])
        # else: missed entirely

    # Pure false positives in empty corners, including a class that has no
    # ground truth anywhere ("other").
    for j in range(7):
        cls = CLASSES[j % 4]
        side = 20.0 + 6 * j
        add_det(j, cls, (200.0, 8.0 + 2 * j, 200.0 + side, 8.0 + 2 * j + side),
                score_grid[(j * 3 + 1) % len(score_grid)])

    # Class confusion: a warning-shaped detection labeled mandatory.
    g = gts[-1]
    add_det(g["image_id"], "mandatory", g["box"], 0.6)

    return gts, dets


def main():
    out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "data/eval_fixture")
    out_dir.mkdir(parents=True, exist_ok=True)
    gts, dets = build()

    annotations = {
        "categories": CLASSES,
        "images": [
            {"image_id": i, "path": f"img_{i:02d}.ppm",
             "width": IMG_SIDE, "height": IMG_SIDE}
            for i in range(N_IMAGES)
        ],
        "ground_truths": [
            {"image_id": g["image_id"], "class": g["class"],
             "x_min": g["box"][0], "y_min": g["box"][1],
             "x_max": g["box"][2], "y_max": g["box"][3]}
            for g in gts
        ],
    }
    detections = {
        "detections": [
            {"image_id": d["image_id"], "class": d["class"],
             "x_min": d["box"][0], "y_min": d["box"][1],
             "x_max": d["box"][2], "y_max": d["box"][3], "score": d["score"]}
            for d in dets
        ],
    }

    aps = per_class_ap(dets, gts, IOU_THR)
    buckets = size_bucketed_ap(dets, gts, IOU_THR)
    per_class = {}
    for cls in sorted(aps, key=CLASSES.index):
        cls_dets = [d for d in dets if d["class"] == cls]
        cls_gts = [g for g in gts if g["class"] == cls]
        per_class[cls] = {"ap": aps[cls],
                          "lamr": lamr(cls_dets, cls_gts, N_IMAGES, IOU_THR)}
    expected = {
        "map50": sum(aps.values()) / len(aps),
        "ap_s": buckets[0],
        "ap_m": buckets[1],
        "ap_l": buckets[2],
        "per_class": per_class,
    }

    for name, doc in [("annotations.json", annotations),
                      ("detections.json", detections),
                      ("expected.json", expected)]:
        (out_dir / name).write_text(
            json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out_dir}: {len(gts)} truths, {len(dets)} detections")
    print(json.dumps(expected, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
