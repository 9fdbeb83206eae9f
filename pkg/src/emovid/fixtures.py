"""Deterministic synthetic dataset generator for desk-scale tests.

Each instance is a short clip of a moving "body" box on a noisy background.
With separable=True the instance's dominant label is rendered as a distinct
pattern inside the body box and encoded into the VAD targets, so a small
model can overfit the set.
"""

import json
from pathlib import Path

import numpy as np

from . import data as D
from .taxonomy import DEFAULT_LABELS, N_LABELS

TOY_EMB_DIM = 8


def _label_color(label_idx, rng):
    # distinct, saturated color per label
    hue = (label_idx * 97) % 256
    return np.array([hue, (hue * 3 + 64) % 256, 255 - hue], dtype=np.uint8)


def _render_frame(rng, image_size, box, label_idx, separable):
    frame = rng.integers(0, 64, size=(image_size, image_size, 3), dtype=np.uint8)
    x1, y1, x2, y2 = box
    if separable:
        color = _label_color(label_idx, rng)
        patch = np.zeros((y2 - y1, x2 - x1, 3), dtype=np.uint8)
        patch[:] = color
        period = 2 + label_idx % 4
        yy = np.arange(y2 - y1)[:, None]
        xx = np.arange(x2 - x1)[None, :]
        stripes = ((yy + (label_idx % 3) * xx) // period) % 2 == 0
        patch[stripes] = 255 - color
        frame[y1:y2, x1:x2] = patch
    else:
        frame[y1:y2, x1:x2] = rng.integers(128, 256, size=(y2 - y1, x2 - x1, 3),
                                           dtype=np.uint8)
    return frame


def write_toy_taxonomy(root, seed=0, dim=TOY_EMB_DIM):
    """Write the default label list and deterministic toy embeddings."""
    root = Path(root)
    labels_file = root / "labels.txt"
    labels_file.write_text("\n".join(DEFAULT_LABELS) + "\n", encoding="utf-8")
    rng = np.random.default_rng(seed)
    tokens = sorted({t.lower() for lab in DEFAULT_LABELS
                     for part in lab.split("/") for t in part.split()})
    lines = []
    for tok in tokens:
        vec = rng.normal(size=dim).round(4)
        lines.append(tok + " " + " ".join(f"{v:.4f}" for v in vec))
    emb_file = root / "embeddings.txt"
    emb_file.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return labels_file, emb_file


def generate_fixture(root, seed, n_instances, frames_per_clip, image_size,
                     separable=True, split="train"):
    """Materialize a synthetic Dataset on disk; identical seed => identical bytes."""
    if n_instances < 1:
        raise ValueError("n_instances must be >= 1")
    if frames_per_clip < 3:
        raise ValueError("frames_per_clip must be >= 3")
    if image_size < 16:
        raise ValueError("image_size must be >= 16")
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    records = []
    body = image_size // 2
    for i in range(n_instances):
        clip_id = f"clip{i:03d}"
        clip_dir = root / clip_id
        clip_dir.mkdir(exist_ok=True)
        label_idx = i % N_LABELS
        # body box drifts by a per-clip constant velocity
        max_off = image_size - body
        x = int(rng.integers(0, max_off // 2 + 1))
        y = int(rng.integers(0, max_off // 2 + 1))
        dx = int(rng.integers(-1, 2))
        dy = int(rng.integers(-1, 2))
        regions = []
        boxes = []
        for f in range(frames_per_clip):
            bx = int(np.clip(x + dx * f, 0, max_off))
            by = int(np.clip(y + dy * f, 0, max_off))
            boxes.append((bx, by, bx + body, by + body))
            regions.append([bx, by, bx + body, by + body])
        for f, box in enumerate(boxes):
            frame = _render_frame(rng, image_size, box, label_idx, separable)
            D.save_frame(clip_dir / D.FRAME_FMT.format(f), frame)
        for f in range(frames_per_clip - 1):
            flow_x = np.zeros((image_size, image_size))
            flow_y = np.zeros((image_size, image_size))
            x1, y1, x2, y2 = boxes[f]
            # flow magnitude carries the label signal in separable mode
            mag = 1.0 + (label_idx % 5) if separable else float(dx)
            flow_x[y1:y2, x1:x2] = dx * mag
            flow_y[y1:y2, x1:x2] = dy * mag
            D.save_frame(clip_dir / D.FLOW_X_FMT.format(f), D.encode_flow(flow_x))
            D.save_frame(clip_dir / D.FLOW_Y_FMT.format(f), D.encode_flow(flow_y))

        scores = rng.uniform(0.0, 0.4, size=N_LABELS)
        if separable:
            scores[label_idx] = rng.uniform(0.75, 0.95)
            vad = [(label_idx + 1) / 27.0,
                   ((label_idx * 7) % 26 + 1) / 27.0,
                   ((label_idx * 11) % 26 + 1) / 27.0]
        else:
            vad = rng.uniform(0.0, 1.0, size=3).tolist()
        records.append({
            "clip_id": clip_id, "frames_dir": clip_id, "person_id": 0,
            "frame_start": 0, "frame_end": frames_per_clip,
            "regions": regions,
            "categorical": [round(float(s), 6) for s in scores],
            "vad": [round(float(v), 6) for v in vad],
        })

    ann_file = root / "annotations.jsonl"
    with open(ann_file, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    write_toy_taxonomy(root, seed=seed)
    return D.parse_annotations(ann_file, root, split=split)
