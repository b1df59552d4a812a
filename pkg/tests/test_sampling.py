import numpy as np
import pytest

from ksrecon.core import ComplexVolume, Domain, ifft_x
from ksrecon.errors import ConfigurationError, DimensionMismatchError, DomainMismatchError, FileFormatError
from ksrecon.persistence.mask_store import load_mask, save_mask
from ksrecon.sampling import SamplingMask, acs_bounds, apply_mask, extract_acs, gen_poisson_mask


def acs_only_mask(ny: int, nz: int, acs: tuple[int, int]) -> SamplingMask:
    bits = np.zeros((ny, nz), dtype=bool)
    ys, zs = acs_bounds(ny, nz, acs)
    bits[ys, zs] = True
    return SamplingMask(bits=bits, acs=acs)


class TestPoissonMask:
    @pytest.mark.parametrize("rate", [2.0, 3.0, 4.0, 5.0])
    def test_rate_and_acs(self, rate):
        mask = gen_poisson_mask(128, 48, rate, acs=(40, 10), seed=7)
        assert mask.achieved_rate == pytest.approx(rate, rel=0.02)
        ys, zs = acs_bounds(128, 48, (40, 10))
        assert (ys.start, ys.stop, zs.start, zs.stop) == (44, 84, 19, 29)
        assert mask.bits[ys, zs].all()

    def test_hard_core_distance(self):
        mask = gen_poisson_mask(64, 48, 5.0, acs=(16, 8), seed=3)
        outside = mask.bits & ~mask.acs_bits()
        pts = np.argwhere(outside).astype(np.float64)
        d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
        np.fill_diagonal(d2, np.inf)
        assert mask.r_min > 1.0
        assert d2.min() >= mask.r_min**2 - 1e-9

    def test_deterministic_per_seed(self):
        a = gen_poisson_mask(64, 32, 3.0, acs=(16, 8), seed=11)
        b = gen_poisson_mask(64, 32, 3.0, acs=(16, 8), seed=11)
        c = gen_poisson_mask(64, 32, 3.0, acs=(16, 8), seed=12)
        np.testing.assert_array_equal(a.bits, b.bits)
        assert not np.array_equal(a.bits, c.bits)

    def test_rate_one_samples_everything(self):
        mask = gen_poisson_mask(16, 8, 1.0, acs=(4, 4))
        assert mask.bits.all()
        assert mask.achieved_rate == 1.0

    def test_acs_larger_than_budget(self):
        with pytest.raises(ConfigurationError):
            gen_poisson_mask(16, 8, 8.0, acs=(8, 8))

    def test_rate_below_one(self):
        with pytest.raises(ConfigurationError):
            gen_poisson_mask(16, 8, 0.5, acs=(4, 4))

    def test_file_round_trip(self, tmp_path):
        mask = gen_poisson_mask(32, 16, 2.0, acs=(8, 4), seed=5)
        path = save_mask(tmp_path / "mask.msk", mask)
        loaded = load_mask(path)
        np.testing.assert_array_equal(loaded.bits, mask.bits)
        assert loaded.acs == (8, 4)
        assert loaded.target_rate == 2.0
        assert b"achieved=" in path.read_bytes()

    def test_truncated_file(self, tmp_path):
        path = save_mask(tmp_path / "mask.msk", gen_poisson_mask(16, 8, 2.0, acs=(4, 4)))
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(FileFormatError):
            load_mask(path)


class TestMaskOperators:
    def test_full_mask_is_identity(self, random_kspace):
        full = SamplingMask(bits=np.ones((16, 12), dtype=bool), acs=(4, 4))
        np.testing.assert_array_equal(apply_mask(random_kspace, full).data, random_kspace.data)

    def test_zeroes_unacquired(self, random_kspace):
        mask = acs_only_mask(16, 12, (6, 4))
        out = apply_mask(random_kspace, mask).data
        assert np.all(out[..., ~mask.bits] == 0)
        np.testing.assert_array_equal(out[..., mask.bits], random_kspace.data[..., mask.bits])
        assert np.sum(np.abs(out) ** 2) <= np.sum(np.abs(random_kspace.data) ** 2)

    def test_dimension_and_domain_checks(self, random_kspace):
        with pytest.raises(DimensionMismatchError):
            apply_mask(random_kspace, acs_only_mask(16, 10, (4, 4)))
        with pytest.raises(DomainMismatchError):
            apply_mask(ifft_x(random_kspace), acs_only_mask(16, 12, (4, 4)))

    def test_extract_acs(self, random_kspace):
        hybrid = ifft_x(random_kspace)
        mask = acs_only_mask(16, 12, (6, 4))
        patches = extract_acs(hybrid, mask)
        assert len(patches) == 6
        np.testing.assert_array_equal(patches[2], hybrid.data[:, 2, 5:11, 4:8])

    def test_extract_whole_grid(self, random_kspace):
        hybrid = ifft_x(random_kspace)
        full = SamplingMask(bits=np.ones((16, 12), dtype=bool), acs=(16, 12))
        np.testing.assert_array_equal(extract_acs(hybrid, full)[0], hybrid.data[:, 0])

    def test_extract_without_acs(self, random_kspace):
        mask = SamplingMask(bits=np.ones((16, 12), dtype=bool), acs=(0, 0))
        with pytest.raises(ConfigurationError):
            extract_acs(ifft_x(random_kspace), mask)
        with pytest.raises(DomainMismatchError):
            extract_acs(random_kspace, acs_only_mask(16, 12, (4, 4)))
