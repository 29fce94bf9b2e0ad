import numpy as np
import pytest

from plugsense.trace import PowerTrace


@pytest.fixture
def gapless_trace():
    def make(seconds=600, start=1_000_000, power=None, user="u"):
        ts = start + np.arange(seconds, dtype=np.int64)
        if power is None:
            power = np.full(seconds, 30.0)
        return PowerTrace(user_id=user, timestamps=ts, watts=np.asarray(power, dtype=float))

    return make
