import warnings

import pytest


@pytest.fixture(autouse=True)
def _quiet_small_l_warning():
    # small test configurations trigger the empty-remainder warning on purpose
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="the deletion check set is empty", category=RuntimeWarning)
        yield
