"""Categorical emotion label set, word embeddings, and PCA projection."""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# Default 26-category label set (override with a labels file).
DEFAULT_LABELS = [
    "Affection", "Anger", "Annoyance", "Anticipation", "Aversion",
    "Confidence", "Disapproval", "Disconnection", "Disquietment",
    "Doubt/Confusion", "Embarrassment", "Engagement", "Esteem",
    "Excitement", "Fatigue", "Fear", "Happiness", "Pain", "Peace",
    "Pleasure", "Sadness", "Sensitivity", "Suffering", "Surprise",
    "Sympathy", "Yearning",
]

N_LABELS = 26

VAD_NAMES = ("valence", "arousal", "dominance")


@dataclass(frozen=True)
class EmotionTaxonomy:
    """Immutable label set with one embedding row per label."""

    labels: tuple
    embeddings: np.ndarray  # shape (26, D)
    vad_names: tuple = VAD_NAMES

    def __post_init__(self):
        if len(self.labels) != N_LABELS:
            raise ValueError(f"expected {N_LABELS} labels, got {len(self.labels)}")
        if len(set(self.labels)) != N_LABELS:
            raise ValueError("labels must be distinct")
        if self.embeddings.shape[0] != N_LABELS:
            raise ValueError("one embedding row per label required")
        if np.any(np.all(self.embeddings == 0, axis=1)):
            raise ValueError("all-zero embedding row after load")

    @property
    def dim(self):
        return self.embeddings.shape[1]

    def index(self, label):
        return self.labels.index(label)


def _constituent_tokens(label):
    """Lowercase tokens a label resolves to ('Doubt/Confusion' -> doubt, confusion)."""
    return [t for part in label.split("/") for t in part.split() if t]


def load_taxonomy(labels_file, embeddings_file):
    """Load the label list and per-label word-embedding rows.

    The labels file holds one label per line.  The embeddings file is standard
    text word-vector format: ``word v1 ... vD`` per line.  Multiword or
    slash-joined labels resolve to the mean of their constituent token vectors.
    """
    labels = [ln.strip() for ln in Path(labels_file).read_text(encoding="utf-8").splitlines()
              if ln.strip()]
    if len(labels) != N_LABELS:
        raise ValueError(f"expected {N_LABELS} labels in {labels_file}, got {len(labels)}")

    needed = set()
    for lab in labels:
        needed.update(t.lower() for t in _constituent_tokens(lab))

    vectors = {}
    dim = None
    with open(embeddings_file, "r", encoding="utf-8") as fh:
        for ln in fh:
            parts = ln.rstrip("\n").split()
            if not parts:
                continue
            word = parts[0].lower()
            if word not in needed or word in vectors:
                continue
            vec = np.asarray([float(x) for x in parts[1:]], dtype=np.float64)
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise ValueError(
                    f"inconsistent embedding dimension for '{word}': {vec.size} != {dim}")
            vectors[word] = vec

    rows = []
    for lab in labels:
        toks = [t.lower() for t in _constituent_tokens(lab)]
        missing = [t for t in toks if t not in vectors]
        if missing:
            raise ValueError(
                f"no embedding for token(s) {missing} of label '{lab}'")
        rows.append(np.mean([vectors[t] for t in toks], axis=0))

    return EmotionTaxonomy(labels=tuple(labels), embeddings=np.stack(rows))


def mean_positive_embedding(tax, positives):
    """Arithmetic mean of the embedding rows of the positive label indices."""
    idx = sorted(set(positives))
    if not idx:
        raise ValueError("no positive labels")
    if min(idx) < 0 or max(idx) >= N_LABELS:
        raise ValueError(f"label index out of range: {idx}")
    return tax.embeddings[idx].mean(axis=0)


def pca_project(tax, k=2):
    """Project the 26 label embeddings onto their top-k principal directions.

    Deterministic sign convention: each direction's largest-magnitude
    component is nonnegative.
    """
    if not 1 <= k <= min(N_LABELS, tax.dim):
        raise ValueError(f"k={k} out of range")
    x = tax.embeddings - tax.embeddings.mean(axis=0)
    if np.allclose(x, 0):
        raise ValueError("zero variance: all embeddings identical")
    # SVD of centered data: columns of vt.T are principal directions in
    # descending singular-value order.
    _, _, vt = np.linalg.svd(x, full_matrices=False)
    dirs = vt[:k]
    for i in range(k):
        j = np.argmax(np.abs(dirs[i]))
        if dirs[i, j] < 0:
            dirs[i] = -dirs[i]
    return x @ dirs.T
