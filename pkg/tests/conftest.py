import pytest

from henonsplit.homoclinic import find_primary_homoclinic
from henonsplit.manifolds import compute_unstable_series
from henonsplit.maps import MapFamily
from henonsplit.numerics import PrecisionContext


@pytest.fixture(scope="session")
def pc256():
    return PrecisionContext(256)


@pytest.fixture(scope="session")
def family_h03():
    return MapFamily.from_h(PrecisionContext.for_h(0.3), "0.3")


@pytest.fixture(scope="session")
def series_h03(family_h03):
    return compute_unstable_series(family_h03)


@pytest.fixture(scope="session")
def homoclinic_h03(series_h03):
    return find_primary_homoclinic(series_h03)
