import pytest

from oodbound import TrainConfig, fit, synth_blobs


@pytest.fixture(scope="session")
def blob_data():
    """Small, well-separated clusters shared by read-only tests."""
    return synth_blobs(k=4, dim=16, per_class=12, sigma=0.05, seed=11)


@pytest.fixture(scope="session")
def fitted_model(blob_data):
    train, _ = blob_data
    return fit(train, TrainConfig(epochs=30, batch_size=16, seed=5))
