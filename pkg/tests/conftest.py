import numpy as np
import pytest

from isingfit import CouplingMatrix, IsingModel


def random_coupling(n, rng, scale=1.0):
    """Random symmetric zero-diagonal matrix with N(0, scale^2) upper triangle."""
    raw = np.triu(rng.normal(size=(n, n)) * scale, k=1)
    return CouplingMatrix(raw + raw.T)


def rescale_spread(entries, s):
    """Scale a symmetric zero-diag matrix so lambda_max - lambda_min == s."""
    w = np.linalg.eigvalsh(entries)
    return entries * (s / (w[-1] - w[0]))


def rescale_width(entries, width):
    """Scale so the max row l1 norm equals width."""
    return entries * (width / np.abs(entries).sum(axis=1).max())


def dobrushin_model(n, width, seed):
    rng = np.random.default_rng(seed)
    return IsingModel.zero_field(
        CouplingMatrix(rescale_width(random_coupling(n, rng).entries, width))
    )


def spread_model(n, s, seed):
    rng = np.random.default_rng(seed)
    return IsingModel.zero_field(
        CouplingMatrix(rescale_spread(random_coupling(n, rng).entries, s))
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)
