"""Shared fixtures: a small but fully trained pipeline for fast tests."""

import numpy as np
import pytest

from ecumon import ForestConfig, TrainConfig, default_catalog
from ecumon.monitor import MonitorPipeline
from ecumon.synthetic import ScenarioConfig, generate
from ecumon.training import train_pipeline


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def small_scenario(catalog):
    # seed 11 gives a 3000-frame drive where every channel varies in
    # every split (both state-channel classes are present)
    return generate(catalog, ScenarioConfig(n_frames=3000, seed=11))


@pytest.fixture(scope="session")
def small_training(catalog, small_scenario):
    dataset, _ = small_scenario
    return train_pipeline(
        dataset,
        seed=17,
        ae_config=TrainConfig(epochs=20, batch_size=64, learning_rate=2e-3, early_stop_patience=20),
        forest_config=ForestConfig(n_trees=3, max_depth=8, min_samples_leaf=4),
    )


@pytest.fixture(scope="session")
def small_pipeline(catalog, small_training):
    art = small_training.artifact
    return MonitorPipeline(
        catalog=catalog,
        normalizer=art.normalizer,
        autoencoder=art.autoencoder,
        profile=art.profile,
        bank=art.bank,
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
