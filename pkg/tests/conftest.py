import numpy as np
import pytest

from nnrex import data, mlp


@pytest.fixture(scope="session")
def xor_ds():
    return data.gen_xor(1000, 10, seed=7)


@pytest.fixture(scope="session")
def xor_folds(xor_ds):
    return data.stratified_kfold(xor_ds, 5, seed=7)


@pytest.fixture(scope="session")
def quick_xor_net(xor_ds, xor_folds):
    """A cheaply trained net on fold-0 training data, for extraction units."""
    fold = xor_folds[0]
    train_ds = data.Dataset(
        xor_ds.features[list(fold.train_indices)],
        xor_ds.labels[list(fold.train_indices)],
        xor_ds.feature_names,
        xor_ds.class_names,
    )
    return mlp.train(train_ds, [16, 8], "tanh", mlp.TrainConfig(epochs=40, batch_size=32, seed=3))


def random_net(sizes, activation="tanh", seed=0):
    """Build an untrained network with seeded random weights."""
    rng = np.random.default_rng(seed)
    layers = []
    for k in range(len(sizes) - 1):
        W = rng.normal(0.0, 1.0 / np.sqrt(sizes[k]), size=(sizes[k + 1], sizes[k]))
        b = rng.normal(0.0, 0.1, size=sizes[k + 1])
        kind = "softmax" if k == len(sizes) - 2 else activation
        layers.append(mlp.Layer(W, b, kind))
    return mlp.Mlp(tuple(layers))
