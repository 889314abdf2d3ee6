import numpy as np
import pytest

from factorvol import DgpSpec, GarchParams, ReturnPanel, generate


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_panel(returns, start="2020-01-01"):
    """Wrap a raw matrix in a ReturnPanel with generated labels."""
    import datetime as dt

    returns = np.asarray(returns, dtype=float)
    T, p = returns.shape
    d0 = dt.date.fromisoformat(start)
    stamps = tuple((d0 + dt.timedelta(days=t)).isoformat() for t in range(T))
    ids = tuple(f"S{i:03d}" for i in range(p))
    return ReturnPanel(returns=returns, asset_ids=ids, timestamps=stamps)


@pytest.fixture
def small_panel(rng):
    return make_panel(0.01 * rng.standard_normal((60, 4)))


@pytest.fixture
def sim_panel():
    """A medium factor-model panel (truth discarded)."""
    spec = DgpSpec(p=12, T=500)
    panel, _ = generate(spec, seed=42)
    return panel


def scalar_theta(omega=0.1, a=0.2, b=0.3):
    return GarchParams(omega=np.array([omega]), amat=np.array([[a]]), bmat=np.array([[b]]))
