import pytest

from ccsketch.harness import synthesize_zipf

D = 65536

# Zipf test vectors with entropies spanning roughly 6.5 to 8.5 nats
ZIPF_SPECS = [(D, 0.9, 1e5), (D, 1.0, 1e6), (D, 1.1, 1e6)]


@pytest.fixture(scope="session")
def zipf_vectors():
    return [(f"zipf-s{s:g}-M{m:g}", synthesize_zipf(d, s, m)) for d, s, m in ZIPF_SPECS]
