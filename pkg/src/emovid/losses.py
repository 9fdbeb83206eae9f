"""The four training loss terms and their unweighted sum.

All terms accept torch tensors (differentiable) or array-likes; reductions
are mean over classes/dims and mean over the batch.
"""

from dataclasses import dataclass

import torch

BCE_EPS = 1e-7
_NORM_FLOOR = 1e-24  # keeps sqrt differentiable; zero-distance grad defined as 0


def _as_tensor(x):
    return x if torch.is_tensor(x) else torch.as_tensor(x, dtype=torch.float64)


@dataclass
class LossBreakdown:
    cls1: torch.Tensor
    cls2: torch.Tensor
    cont: torch.Tensor
    emb: torch.Tensor

    @property
    def total(self):
        return self.cls1 + self.cls2 + self.cont + self.emb

    def as_floats(self):
        detach = lambda t: float(t.detach()) if torch.is_tensor(t) else float(t)
        return {k: detach(getattr(self, k))
                for k in ("cls1", "cls2", "cont", "emb", "total")}


def loss_cls1(pred, target):
    """Binary cross-entropy between predicted scores and the binarized target,
    mean over classes (and batch).  Predictions are clamped to [eps, 1-eps]."""
    pred, target = _as_tensor(pred), _as_tensor(target)
    p = pred.clamp(BCE_EPS, 1 - BCE_EPS)
    return -(target * p.log() + (1 - target) * (1 - p).log()).mean()


def loss_cls2(pred, scores):
    """Mean squared error between predicted scores and the crowd scores."""
    pred, scores = _as_tensor(pred), _as_tensor(scores)
    return ((pred - scores) ** 2).mean()


def loss_cont(pred, vad):
    """Mean squared error between regressed values and the continuous targets."""
    return loss_cls2(pred, vad)


def _emb_distance(projected, target_mean, squared):
    sq = ((projected - target_mean) ** 2).sum(dim=-1)
    if squared:
        return sq
    return torch.where(sq > 0, sq.clamp_min(_NORM_FLOOR).sqrt(), sq * 0.0)


def loss_emb(projected, target_mean, squared=False):
    """Euclidean distance between the projected feature and the mean positive
    embedding (the norm itself; `squared=True` selects the squared variant)."""
    projected, target_mean = _as_tensor(projected), _as_tensor(target_mean)
    if projected.shape[-1] != target_mean.shape[-1]:
        raise ValueError(
            f"dimension mismatch: {projected.shape[-1]} != {target_mean.shape[-1]}")
    return _emb_distance(projected, target_mean, squared).mean()


def total_loss(cat_pred, cat_scores, cont_pred, vad, projected, emb_targets,
               emb_mask=None, threshold=0.5, squared_emb=False):
    """Batched sum of the four terms.

    `emb_mask` marks samples with at least one positive label; samples without
    positives contribute no embedding term and are excluded from its mean.
    """
    cat_pred, cat_scores = _as_tensor(cat_pred), _as_tensor(cat_scores)
    cont_pred, vad = _as_tensor(cont_pred), _as_tensor(vad)
    projected, emb_targets = _as_tensor(projected), _as_tensor(emb_targets)
    binary = (cat_scores >= threshold).to(cat_pred.dtype)
    cls1 = loss_cls1(cat_pred, binary)
    cls2 = loss_cls2(cat_pred, cat_scores)
    cont = loss_cont(cont_pred, vad)
    dist = _emb_distance(projected, emb_targets, squared_emb)
    if emb_mask is None:
        emb = dist.mean()
    else:
        mask = _as_tensor(emb_mask).to(dist.dtype)
        n = mask.sum()
        emb = (dist * mask).sum() / n if float(n) > 0 else dist.sum() * 0.0
    return LossBreakdown(cls1=cls1, cls2=cls2, cont=cont, emb=emb)
