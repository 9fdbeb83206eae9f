import numpy as np
import pytest

from emovid.fixtures import generate_fixture, write_toy_taxonomy
from emovid.taxonomy import DEFAULT_LABELS, load_taxonomy


@pytest.fixture(scope="session")
def toy_taxonomy(tmp_path_factory):
    root = tmp_path_factory.mktemp("tax")
    labels_file, emb_file = write_toy_taxonomy(root, seed=13)
    return load_taxonomy(labels_file, emb_file)


@pytest.fixture(scope="session")
def small_fixture(tmp_path_factory):
    """8-instance separable fixture shared by read-only tests."""
    root = tmp_path_factory.mktemp("fixture")
    ds = generate_fixture(root, seed=7, n_instances=8, frames_per_clip=10,
                          image_size=32, separable=True)
    return ds


def write_labels(path, labels=DEFAULT_LABELS):
    path.write_text("\n".join(labels) + "\n", encoding="utf-8")
    return path


def write_embeddings(path, vectors):
    lines = [w + " " + " ".join(str(v) for v in vec) for w, vec in vectors.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def rng(seed=0):
    return np.random.default_rng(seed)
