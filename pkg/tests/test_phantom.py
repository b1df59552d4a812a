import math

import numpy as np
import pytest

from ksrecon.core import ComplexVolume, Domain, ifft3, rss_combine
from ksrecon.errors import ConfigurationError
from ksrecon.phantom import (
    CoilMaps,
    EllipsoidSpec,
    PhantomSpec,
    VesselSpec,
    add_noise,
    default_phantom_spec,
    gen_phantom,
    gen_sensitivities,
    load_phantom_spec,
    simulate_kspace,
    vessel_probe,
)

from tests.conftest import random_complex


def straight_vessel(radius: float = 3.0, peak: float = 0.9) -> PhantomSpec:
    return PhantomSpec(
        dims=(16, 17, 17),
        vessel=VesselSpec(points=[(3.0, 8.0, 8.0), (12.0, 8.0, 8.0)], radius=radius, peak=peak),
    )


class TestPhantom:
    def test_empty_spec_is_zero(self):
        assert not gen_phantom(PhantomSpec(dims=(4, 5, 6))).any()

    def test_centered_sphere(self):
        spec = PhantomSpec(
            dims=(9, 9, 9),
            ellipsoids=[EllipsoidSpec(center=(4, 4, 4), semi_axes=(3, 3, 3), intensity=0.8)],
        )
        image = gen_phantom(spec)
        assert image[4, 4, 4] == 0.8
        assert image[0, 0, 0] == 0.0

    def test_later_ellipsoids_overwrite(self):
        spec = PhantomSpec(
            dims=(9, 9, 9),
            ellipsoids=[
                EllipsoidSpec(center=(4, 4, 4), semi_axes=(4, 4, 4), intensity=0.2),
                EllipsoidSpec(center=(4, 4, 4), semi_axes=(1, 1, 1), intensity=0.5),
            ],
        )
        image = gen_phantom(spec)
        assert image[4, 4, 4] == 0.5
        assert image[4, 4, 7] == 0.2

    def test_vessel_profile(self):
        image = gen_phantom(straight_vessel())
        assert image[7, 8, 8] == pytest.approx(0.9)
        assert image[7, 9, 8] == pytest.approx(0.9 * 0.5 * (1 + math.cos(math.pi / 3)))
        assert image[7, 8, 10] == pytest.approx(0.9 * 0.5 * (1 + math.cos(2 * math.pi / 3)))
        assert image[7, 12, 8] == 0.0

    def test_vessel_out_of_bounds(self):
        spec = PhantomSpec(
            dims=(16, 17, 17), vessel=VesselSpec(points=[(1.0, 8.0, 8.0), (12.0, 8.0, 8.0)], radius=3.0)
        )
        with pytest.raises(ConfigurationError):
            gen_phantom(spec)

    def test_vessel_validation(self):
        with pytest.raises(ValueError):
            VesselSpec(points=[(1.0, 1.0, 1.0), (2.0, 2.0, 2.0)], radius=0.5)
        with pytest.raises(ValueError):
            VesselSpec(points=[(1.0, 1.0, 1.0)])

    def test_default_phantom_fits(self):
        image = gen_phantom(default_phantom_spec((64, 64, 32)))
        assert image.shape == (64, 64, 32)
        assert 0.5 < image.max() <= 1.0
        assert image.min() >= 0.0

    def test_vessel_probe_is_perpendicular(self):
        spec = default_phantom_spec((16, 32, 32))
        probe = vessel_probe(spec)
        pts = np.asarray(spec.vessel.points)
        tangent = pts[4] - pts[2]
        direction = np.asarray(probe.direction)
        assert np.linalg.norm(direction) == pytest.approx(1.0)
        assert direction @ tangent == pytest.approx(0.0, abs=1e-9)
        assert probe.center == tuple(pts[3])

    def test_spec_file(self, tmp_path):
        path = tmp_path / "phantom.cfg"
        path.write_text(
            "dims=16x17x17\n"
            "seed=4\n"
            "ellipsoid.0=8,8,8,5,5,5,0.3\n"
            "vessel.points=3,8,8;12,8,8\n"
            "vessel.radius=2\n"
        )
        spec = load_phantom_spec(path)
        assert spec.dims == (16, 17, 17)
        assert spec.seed == 4
        assert len(spec.ellipsoids) == 1
        assert spec.vessel.radius == 2.0
        assert spec.vessel.points[1] == (12.0, 8.0, 8.0)


class TestSensitivities:
    def test_single_coil_unit_magnitude(self):
        maps = gen_sensitivities(1, (4, 6, 5), seed=2)
        np.testing.assert_allclose(np.abs(maps.maps), 1.0, atol=1e-12)

    def test_rss_is_one(self):
        maps = gen_sensitivities(8, (8, 16, 12), seed=1)
        np.testing.assert_allclose(np.sqrt(np.sum(np.abs(maps.maps) ** 2, axis=0)), 1.0, atol=1e-9)

    def test_smooth(self):
        maps = gen_sensitivities(8, (64, 64, 64), seed=0).maps
        for axis in (1, 2, 3):
            assert np.abs(np.diff(maps, axis=axis)).max() < 0.1

    def test_deterministic(self):
        a = gen_sensitivities(4, (4, 8, 8), seed=9)
        b = gen_sensitivities(4, (4, 8, 8), seed=9)
        np.testing.assert_array_equal(a.maps, b.maps)


class TestKspace:
    def test_zero_image(self):
        kspace = simulate_kspace(np.zeros((4, 6, 5)), gen_sensitivities(2, (4, 6, 5)))
        assert not kspace.data.any()

    def test_constant_image_is_centred_delta(self):
        dims = (4, 6, 5)
        kspace = simulate_kspace(np.ones(dims), CoilMaps(maps=np.ones((1,) + dims)))
        expected = np.zeros((1,) + dims, dtype=np.complex128)
        expected[0, 2, 3, 2] = math.sqrt(4 * 6 * 5)
        np.testing.assert_allclose(kspace.data, expected, atol=1e-10)

    def test_parseval_and_rss(self, small_phantom):
        coil_images = small_phantom.maps.maps * small_phantom.image
        assert np.sum(np.abs(small_phantom.kspace.data) ** 2) == pytest.approx(
            np.sum(np.abs(coil_images) ** 2), rel=1e-10
        )
        np.testing.assert_allclose(rss_combine(ifft3(small_phantom.kspace)), small_phantom.image, atol=1e-9)


class TestNoise:
    def test_empirical_snr(self, rng):
        clean = ComplexVolume(domain=Domain.KSPACE, data=random_complex(rng, (4, 16, 16, 16)))
        noisy = add_noise(clean, 20.0, seed=1)
        noise = noisy.data - clean.data
        snr = 10 * np.log10(np.mean(np.abs(clean.data) ** 2) / np.mean(np.abs(noise) ** 2))
        assert snr == pytest.approx(20.0, abs=0.5)

    def test_infinite_snr_is_noiseless(self, random_kspace):
        np.testing.assert_array_equal(add_noise(random_kspace, math.inf).data, random_kspace.data)

    def test_invalid_snr(self, random_kspace):
        with pytest.raises(ConfigurationError):
            add_noise(random_kspace, math.nan)
        with pytest.raises(ConfigurationError):
            add_noise(random_kspace, -math.inf)

    def test_seeded(self, random_kspace):
        a = add_noise(random_kspace, 10.0, seed=3)
        b = add_noise(random_kspace, 10.0, seed=3)
        np.testing.assert_array_equal(a.data, b.data)
