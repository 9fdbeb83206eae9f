"""Construction of the three model input streams.

rgb_b: body crop, rgb_c: full frame with the body zeroed, flow_b: stacked
optical-flow crop.  Masking and cropping operate on raw pixel arrays;
normalization happens when a Snippet is built.
"""

from dataclasses import dataclass

import numpy as np

RGB_B = "rgb_b"
RGB_C = "rgb_c"
FLOW_B = "flow_b"

# Standard pretrained-backbone RGB normalization.
RGB_MEAN = np.array([0.485, 0.456, 0.406])
RGB_STD = np.array([0.229, 0.224, 0.225])

CROP_MARGIN = 0.1  # body box expansion per side


@dataclass(frozen=True)
class Snippet:
    stream: str
    data: np.ndarray  # float32, C x H x W
    frame_indices: tuple

    def __post_init__(self):
        if not np.all(np.isfinite(self.data)):
            raise ValueError("non-finite values in snippet")


def mask_body(frame, region):
    """Zero every pixel inside the (exclusive-end) box; copy the rest bit-exact."""
    x1, y1, x2, y2 = (int(v) for v in region)
    h, w = frame.shape[:2]
    if not (0 <= x1 < x2 <= w and 0 <= y1 < y2 <= h):
        raise ValueError(f"region {region} outside {w}x{h} image")
    out = frame.copy()
    out[y1:y2, x1:x2] = 0
    return out


def expand_region(region, width, height, margin=CROP_MARGIN):
    """Grow the box by `margin` of its size per side, clamped to the image."""
    x1, y1, x2, y2 = (int(v) for v in region)
    mx = int(round((x2 - x1) * margin))
    my = int(round((y2 - y1) * margin))
    return (max(0, x1 - mx), max(0, y1 - my),
            min(width, x2 + mx), min(height, y2 + my))


def bilinear_resize(img, out_h, out_w):
    """Bilinear resize with half-pixel-center alignment (identity at same size)."""
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    ys = np.clip((np.arange(out_h) + 0.5) * h / out_h - 0.5, 0, h - 1)
    xs = np.clip((np.arange(out_w) + 0.5) * w / out_w - 0.5, 0, w - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    if img.ndim == 2:
        wy2, wx2 = wy, wx
    else:
        wy2, wx2 = wy[..., None], wx[..., None]
    top = img[y0][:, x0] * (1 - wx2) + img[y0][:, x1] * wx2
    bot = img[y1][:, x0] * (1 - wx2) + img[y1][:, x1] * wx2
    return top * (1 - wy2) + bot * wy2


def crop_body(frame, region, out_size):
    """Crop the body box expanded by 10% per side and resize to out_size."""
    h, w = frame.shape[:2]
    x1, y1, x2, y2 = expand_region(region, w, h)
    return bilinear_resize(frame[y1:y2, x1:x2], out_size, out_size)


def _normalize_rgb(img):
    return ((img / 255.0 - RGB_MEAN) / RGB_STD).transpose(2, 0, 1).astype(np.float32)


def rgb_body_snippet(frame, region, out_size, frame_index=0):
    """RGB-b: normalized body crop as a 3xHxW snippet."""
    return Snippet(stream=RGB_B, data=_normalize_rgb(crop_body(frame, region, out_size)),
                   frame_indices=(frame_index,))


def rgb_context_snippet(frame, region, out_size, frame_index=0):
    """RGB-c: full frame with the body zeroed, resized and normalized."""
    masked = mask_body(frame, region)
    resized = bilinear_resize(masked, out_size, out_size)
    return Snippet(stream=RGB_C, data=_normalize_rgb(resized),
                   frame_indices=(frame_index,))


def stack_flow(flow_frames, region, out_size, frame_indices=None):
    """Flow-b: crop each (x, y) flow pair to the expanded body box, resize,
    stack to 2 * snippet_len channels in temporal order (x0, y0, x1, y1, ...)."""
    if not flow_frames:
        raise ValueError("empty flow snippet")
    shape = np.asarray(flow_frames[0][0]).shape
    channels = []
    for fx, fy in flow_frames:
        fx, fy = np.asarray(fx, dtype=np.float64), np.asarray(fy, dtype=np.float64)
        if fx.shape != shape or fy.shape != shape:
            raise ValueError("mixed flow frame shapes")
        h, w = shape
        x1, y1, x2, y2 = expand_region(region, w, h)
        channels.append(bilinear_resize(fx[y1:y2, x1:x2], out_size, out_size))
        channels.append(bilinear_resize(fy[y1:y2, x1:x2], out_size, out_size))
    if frame_indices is None:
        frame_indices = tuple(range(len(flow_frames)))
    return Snippet(stream=FLOW_B, data=np.stack(channels).astype(np.float32),
                   frame_indices=tuple(frame_indices))
