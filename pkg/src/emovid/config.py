"""Run configuration with training-protocol defaults."""

import hashlib
import json
from dataclasses import dataclass, asdict, replace
from pathlib import Path

RGB_BC = "rgb_bc"
RGB_B = "rgb_b"
FLOW_B = "flow_b"

STREAM_SETS = (RGB_BC, RGB_B, FLOW_B)


@dataclass(frozen=True)
class RunConfig:
    streams: str = RGB_BC  # one network per run: rgb_bc, rgb_b, or flow_b
    k_train: int = 3
    k_test: int = 25
    rgb_snippet_len: int = 1
    flow_snippet_len: int = 5
    lr: float = 1e-3
    lr_drop_factor: float = 10.0
    lr_drop_epoch: int = 20  # 0-based epoch at which lr divides by the factor
    epochs: int = 50
    batch_size: int = 4
    momentum: float = 0.9
    weight_decay: float = 0.0
    seed: int = 0
    partial_bn: bool = True
    emb_loss: bool = True
    squared_emb: bool = False
    threshold: float = 0.5
    image_size: int = 32
    backbone: str = "tiny"
    context_backbone: str = "tiny"
    max_steps: int = 0  # 0 = no step cap

    def __post_init__(self):
        if self.streams not in STREAM_SETS:
            raise ValueError(f"streams must be one of {STREAM_SETS}")

    def lr_at(self, epoch):
        return self.lr if epoch < self.lr_drop_epoch else self.lr / self.lr_drop_factor

    def to_dict(self):
        return asdict(self)

    def config_hash(self):
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def with_overrides(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


_BOOLS = {"true": True, "false": False, "1": True, "0": False,
          "yes": True, "no": False}


def load_config(path):
    """Read a key=value config file (``#`` comments, blank lines allowed)."""
    values = {}
    fields = RunConfig.__dataclass_fields__
    for line_no, ln in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        if "=" not in ln:
            raise ValueError(f"bad config line {line_no}: {ln!r}")
        key, raw = (s.strip() for s in ln.split("=", 1))
        if key not in fields:
            raise ValueError(f"unknown config key {key!r}, line {line_no}")
        typ = fields[key].type
        typ = typ if isinstance(typ, str) else typ.__name__
        if typ == "bool":
            if raw.lower() not in _BOOLS:
                raise ValueError(f"bad boolean {raw!r} for {key}, line {line_no}")
            values[key] = _BOOLS[raw.lower()]
        elif typ == "int":
            values[key] = int(raw)
        elif typ == "float":
            values[key] = float(raw)
        else:
            values[key] = raw
    return RunConfig(**values)
