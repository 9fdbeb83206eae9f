"""Annotation schema, JSON-lines ingestion, target binarization, image/flow IO."""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .taxonomy import N_LABELS

N_VAD = 3

FRAME_FMT = "frame_{:05d}.png"
FLOW_X_FMT = "flow_x_{:05d}.png"
FLOW_Y_FMT = "flow_y_{:05d}.png"

# Fixed-point flow encoding: pixel = round(flow * 16) + 128.
FLOW_CENTER = 128.0
FLOW_SCALE = 16.0


@dataclass(frozen=True)
class InstanceAnnotation:
    """One annotated person in one clip."""

    clip_id: str
    frames_dir: str
    person_id: int
    frame_start: int
    frame_end: int  # exclusive
    regions: np.ndarray  # (n_frames, 4) int boxes x1,y1,x2,y2
    categorical: np.ndarray  # (26,) crowd scores in [0, 1]
    vad: np.ndarray  # (3,) in [0, 1]

    @property
    def n_frames(self):
        return self.frame_end - self.frame_start

    def region_for(self, frame_index):
        """Body box for an absolute frame index inside the range."""
        return self.regions[frame_index - self.frame_start]

    def frame_path(self, root, frame_index):
        return Path(root) / self.frames_dir / FRAME_FMT.format(frame_index)

    def flow_paths(self, root, frame_index):
        # Flow pair i maps frame i to i+1; last frame clamps to the last pair.
        i = min(frame_index, self.frame_end - 2)
        d = Path(root) / self.frames_dir
        return d / FLOW_X_FMT.format(i), d / FLOW_Y_FMT.format(i)


@dataclass(frozen=True)
class Dataset:
    split: str
    instances: tuple
    root: Path

    def __len__(self):
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)


def _check_record(rec, line_no):
    def fail(msg):
        raise ValueError(f"{msg}, line {line_no}")

    for key in ("clip_id", "frames_dir", "person_id", "frame_start",
                "frame_end", "regions", "categorical", "vad"):
        if key not in rec:
            fail(f"missing field '{key}'")
    start, end = rec["frame_start"], rec["frame_end"]
    if not (0 <= start < end):
        fail(f"invalid frame range [{start}, {end})")
    regions = np.asarray(rec["regions"], dtype=np.int64)
    if regions.shape != (end - start, 4):
        fail(f"expected {end - start} regions, got {regions.shape}")
    if np.any(regions[:, 0] >= regions[:, 2]) or np.any(regions[:, 1] >= regions[:, 3]):
        fail("degenerate region box")
    if np.any(regions < 0):
        fail("region outside image bounds")
    cat = np.asarray(rec["categorical"], dtype=np.float64)
    if cat.shape != (N_LABELS,):
        fail(f"expected {N_LABELS} categorical scores, got {cat.shape}")
    if np.any(cat < 0) or np.any(cat > 1):
        fail("score out of range")
    vad = np.asarray(rec["vad"], dtype=np.float64)
    if vad.shape != (N_VAD,):
        fail(f"expected {N_VAD} vad values, got {vad.shape}")
    if np.any(vad < 0) or np.any(vad > 1):
        fail("vad value out of range")
    return InstanceAnnotation(
        clip_id=str(rec["clip_id"]), frames_dir=str(rec["frames_dir"]),
        person_id=int(rec["person_id"]), frame_start=int(start),
        frame_end=int(end), regions=regions, categorical=cat, vad=vad)


def parse_annotations(file, root, split="train"):
    """Parse and validate a JSON-lines annotation file into a Dataset."""
    instances = []
    seen = set()
    with open(file, "r", encoding="utf-8") as fh:
        for line_no, ln in enumerate(fh, start=1):
            if not ln.strip():
                continue
            try:
                rec = json.loads(ln)
            except json.JSONDecodeError as e:
                raise ValueError(f"malformed JSON, line {line_no}: {e}") from e
            inst = _check_record(rec, line_no)
            key = (inst.clip_id, inst.person_id)
            if key in seen:
                raise ValueError(f"duplicate instance {key}, line {line_no}")
            seen.add(key)
            instances.append(inst)
    return Dataset(split=split, instances=tuple(instances), root=Path(root))


def binarize_targets(scores, threshold=0.5):
    """Multilabel targets: 1 where score >= threshold (inclusive), else 0."""
    scores = np.asarray(scores, dtype=np.float64)
    if np.any(scores < 0) or np.any(scores > 1):
        raise ValueError("scores must lie in [0, 1]")
    return (scores >= threshold).astype(np.int64)


def load_frame(path):
    """Read a frame as uint8 HxWx3."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def save_frame(path, array):
    Image.fromarray(np.asarray(array, dtype=np.uint8)).save(path)


def encode_flow(flow):
    """Flow displacement (pixels) -> uint8 fixed point."""
    return np.clip(np.rint(np.asarray(flow) * FLOW_SCALE) + FLOW_CENTER,
                   0, 255).astype(np.uint8)


def decode_flow(pixels):
    """Uint8 fixed point -> flow displacement in pixels."""
    return (np.asarray(pixels, dtype=np.float64) - FLOW_CENTER) / FLOW_SCALE


def load_flow_pair(x_path, y_path):
    with Image.open(x_path) as im:
        fx = decode_flow(np.asarray(im.convert("L")))
    with Image.open(y_path) as im:
        fy = decode_flow(np.asarray(im.convert("L")))
    return fx, fy
