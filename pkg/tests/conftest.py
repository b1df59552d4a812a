from types import SimpleNamespace

import numpy as np
import pytest

from ksrecon.core import ComplexVolume, Domain
from ksrecon.phantom import default_phantom_spec, gen_phantom, gen_sensitivities, simulate_kspace


def random_complex(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_kspace(rng):
    return ComplexVolume(domain=Domain.KSPACE, data=random_complex(rng, (3, 6, 16, 12)))


@pytest.fixture(scope="session")
def small_phantom():
    """4-coil noiseless phantom on a 12x32x24 grid, shared by the reconstruction tests"""
    spec = default_phantom_spec((12, 32, 24), seed=0)
    image = gen_phantom(spec)
    maps = gen_sensitivities(4, spec.dims, seed=3)
    return SimpleNamespace(spec=spec, image=image, maps=maps, kspace=simulate_kspace(image, maps))
