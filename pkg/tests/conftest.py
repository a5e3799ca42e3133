import numpy as np
import pytest

from vngender import data_io, featurize, names_core
from vngender.classical import LabeledMatrix
from vngender.featurize import SparseVector


def sv(pairs) -> SparseVector:
    if isinstance(pairs, dict):
        pairs = pairs.items()
    return SparseVector.from_pairs(pairs)


def docs_to_matrix(docs, labels, n_features) -> LabeledMatrix:
    """docs as dicts feature -> count."""
    rows = [sv(d) for d in docs]
    return LabeledMatrix(rows, list(labels), n_features)


def random_instance(seed, max_docs=8, max_features=6, max_count=4):
    """Small random counts instance with both classes present."""
    rng = np.random.default_rng(seed)
    n_docs = int(rng.integers(2, max_docs + 1))
    n_features = int(rng.integers(1, max_features + 1))
    docs = []
    for _ in range(n_docs):
        doc = {}
        for f in range(n_features):
            c = int(rng.integers(0, max_count + 1))
            if c and rng.random() < 0.7:
                doc[f] = c
        docs.append(doc)
    labels = [int(rng.integers(0, 2)) for _ in range(n_docs)]
    labels[0] = 1
    labels[-1] = 0
    return docs, labels, n_features


def planted_docs(n, fidelity, seed, mask_label="mn+fin"):
    """Selected-component token docs plus labels from a synthetic corpus."""
    dataset = data_io.generate_synthetic(n, fidelity, seed)
    mask = names_core.parse_mask(mask_label)
    docs, labels = [], []
    for rec in dataset.records:
        comps = names_core.segment(names_core.normalize(rec.full_name))
        docs.append(names_core.select_components(comps, mask))
        labels.append(rec.gender)
    return docs, labels


@pytest.fixture(scope="session")
def planted_small():
    return data_io.generate_synthetic(800, 1.0, 21)


@pytest.fixture(scope="session")
def planted_noisy():
    return data_io.generate_synthetic(2400, 0.9, 22)
