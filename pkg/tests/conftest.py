import pytest

from marginalia.fixtures import standard_fixtures
from marginalia.provider.mock import MockProvider


@pytest.fixture(scope="session")
def corpus():
    """All standard synthetic folios, keyed by name."""
    return {fx.name: fx for fx in standard_fixtures()}


@pytest.fixture()
def mock_provider(corpus):
    provider = MockProvider()
    for fx in corpus.values():
        provider.register(fx.image, fx.regions)
    return provider
