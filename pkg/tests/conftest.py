import numpy as np
import pytest

from pawsr.model import ChannelSet, NoiseModel, SystemDims


def rng_for(seed, stream=0):
    return np.random.Generator(np.random.Philox(key=np.array([seed, stream], dtype=np.uint64)))


def random_channel(dims, seed, stream=0):
    r = rng_for(seed, stream)
    H = (r.standard_normal((dims.N, dims.M_total))
         + 1j * r.standard_normal((dims.N, dims.M_total))) / np.sqrt(2.0)
    return ChannelSet(dims, H)


def random_precoder(dims, seed, scale=1.0, stream=1):
    r = rng_for(seed, stream)
    B = (r.standard_normal((dims.N, dims.S_total))
         + 1j * r.standard_normal((dims.N, dims.S_total))) / np.sqrt(2.0)
    return scale * B


def random_decoder_blocks(dims, seed, scale=1.0, stream=2):
    r = rng_for(seed, stream)
    out = []
    for m, s in zip(dims.M, dims.S):
        out.append(scale * (r.standard_normal((m, s)) + 1j * r.standard_normal((m, s))) / np.sqrt(2.0))
    return out


@pytest.fixture
def paper_dims():
    return SystemDims(2, 4, (2, 2), (2, 2))


@pytest.fixture
def paper_omega():
    return np.array([0.4, 0.2, 0.6, 0.25])
