import pytest

from regional_bandits.harness import basic_instance, classic_instance, global_instance, pricing_instance


@pytest.fixture(scope="session")
def basic():
    return basic_instance()


@pytest.fixture(scope="session")
def pricing_inst():
    return pricing_instance()


@pytest.fixture(scope="session")
def classic():
    return classic_instance()


@pytest.fixture(scope="session")
def global_inst():
    return global_instance()
