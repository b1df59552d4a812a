import numpy as np
import pytest

from ksrecon.errors import DegenerateInputError, DegenerateStatisticsError, DimensionMismatchError, OutOfBoundsError
from ksrecon.metrics import (
    MetricsRow,
    VesselProfile,
    build_report,
    compare_methods,
    deriche_gradient,
    extract_profile,
    gaussian_blur_profile,
    nmse,
    paired_ttest,
    score_volume,
    summarize,
    vessel_sharpness,
)
from ksrecon.metrics.sharpness import deriche_coefficients
from ksrecon.phantom import default_phantom_spec, gen_phantom, vessel_probe
from ksrecon.phantom.generator import raised_cosine


def dense_deriche(x: np.ndarray, alpha: float, reach: int = 200) -> np.ndarray:
    _, _, gain = deriche_coefficients(alpha)
    r = np.exp(-alpha)
    padded = np.pad(x, reach, mode="edge")
    out = np.zeros_like(x)
    for n in range(x.size):
        p = n + reach
        for k in range(1, reach):
            out[n] += k * r**k * (padded[p + k] - padded[p - k])
    return gain * out


def vessel_samples(radius: float = 3.0, half_width: int = 6) -> np.ndarray:
    return raised_cosine(np.abs(np.arange(-half_width, half_width + 1, dtype=np.float64)), radius, 1.0)


class TestNmse:
    def test_reference_cases(self, rng):
        ref = rng.random((4, 5, 6)) + 0.1
        assert nmse(ref, ref) == 0.0
        assert nmse(np.zeros_like(ref), ref) == pytest.approx(1.0)
        assert nmse(2 * ref, ref) == pytest.approx(1.0)

    def test_scale_covariance(self, rng):
        ref = rng.random((3, 4, 5))
        recon = ref + 0.1 * rng.random((3, 4, 5))
        assert nmse(3 * recon, 3 * ref) == pytest.approx(nmse(recon, ref), rel=1e-12)

    def test_errors(self):
        with pytest.raises(DegenerateInputError):
            nmse(np.ones((2, 2, 2)), np.zeros((2, 2, 2)))
        with pytest.raises(DimensionMismatchError):
            nmse(np.ones((2, 2, 2)), np.ones((2, 2, 3)))


class TestDeriche:
    def test_constant_has_zero_gradient(self):
        np.testing.assert_allclose(deriche_gradient(np.full(20, 3.7)), 0.0, atol=1e-12)

    def test_unit_ramp_interior(self):
        grad = deriche_gradient(np.arange(200, dtype=np.float64), alpha=1.0)
        assert grad[100] == pytest.approx(1.0, rel=1e-9)

    def test_linear(self, rng):
        x, y = rng.standard_normal(30), rng.standard_normal(30)
        np.testing.assert_allclose(
            deriche_gradient(2.0 * x - 3.0 * y), 2.0 * deriche_gradient(x) - 3.0 * deriche_gradient(y), atol=1e-12
        )

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_matches_dense_convolution(self, alpha):
        step = np.r_[np.zeros(10), np.ones(10)]
        np.testing.assert_allclose(deriche_gradient(step, alpha), dense_deriche(step, alpha), atol=1e-8)

    def test_invalid_alpha(self):
        with pytest.raises(ValueError):
            deriche_gradient(np.zeros(10), alpha=0.0)


class TestSharpness:
    def test_flat_profile_is_zero(self):
        assert vessel_sharpness(VesselProfile(samples=np.full(13, 0.4), center_index=6)) == pytest.approx(0.0, abs=1e-12)

    def test_matches_direct_evaluation(self):
        samples = vessel_samples()
        grad = np.abs(dense_deriche(samples, 1.0))
        expected = 0.5 * (grad[:6].max() + grad[7:].max()) / samples[6]
        sharpness = vessel_sharpness(VesselProfile(samples=samples, center_index=6))
        assert sharpness == pytest.approx(expected, rel=1e-2)
        assert sharpness > 0

    def test_scale_invariant(self):
        samples = 0.2 + 0.8 * vessel_samples()
        base = vessel_sharpness(VesselProfile(samples=samples, center_index=6))
        for scale in (0.01, 3.0, 250.0):
            scaled = vessel_sharpness(VesselProfile(samples=scale * samples, center_index=6))
            assert scaled == pytest.approx(base, rel=1e-10)

    def test_blur_lowers_sharpness(self):
        profile = VesselProfile(samples=vessel_samples(), center_index=6)
        values = [vessel_sharpness(gaussian_blur_profile(profile, s)) for s in (0.0, 1.0, 2.0)]
        assert values[0] > values[1] > values[2]

    def test_dark_centre(self):
        with pytest.raises(DegenerateInputError):
            vessel_sharpness(VesselProfile(samples=np.zeros(13), center_index=6))

    def test_profile_validation(self):
        with pytest.raises(ValueError):
            VesselProfile(samples=np.ones(7), center_index=3)
        with pytest.raises(ValueError):
            VesselProfile(samples=np.ones(13), center_index=1)


class TestProfileExtraction:
    def test_axis_aligned_samples(self):
        volume = np.broadcast_to(np.arange(12, dtype=np.float64)[None, :, None], (4, 12, 5))
        profile = extract_profile(volume, (2.0, 5.0, 3.0), (0.0, 1.0, 0.0), half_width=4)
        np.testing.assert_allclose(profile.samples, np.arange(1, 10), atol=1e-12)
        reverse = extract_profile(volume, (2.0, 5.0, 3.0), (0.0, -2.0, 0.0), half_width=4)
        np.testing.assert_allclose(reverse.samples, np.arange(9, 0, -1), atol=1e-12)

    def test_out_of_bounds(self):
        with pytest.raises(OutOfBoundsError):
            extract_profile(np.ones((4, 12, 5)), (2.0, 5.0, 3.0), (0.0, 1.0, 0.0), half_width=6)

    def test_phantom_profile_peaks_at_vessel(self):
        spec = default_phantom_spec((16, 32, 32))
        probe = vessel_probe(spec)
        profile = extract_profile(gen_phantom(spec), probe.center, probe.direction)
        assert int(np.argmax(profile.samples)) == profile.center_index

    def test_score_volume(self):
        spec = default_phantom_spec((16, 32, 32))
        ref = gen_phantom(spec)
        error, sharpness = score_volume(ref, ref, spec)
        assert error == 0.0
        assert sharpness > 0
        assert score_volume(ref, ref, None) == (0.0, 0.0)


class TestStatistics:
    def test_hand_derived_example(self):
        b = [10.0, 20.0, 30.0, 40.0, 50.0]
        a = [x + d for x, d in zip(b, [1.0, 2.0, 3.0, 4.0, 5.0])]
        t, p = paired_ttest(a, b)
        assert t == pytest.approx(4.2426, abs=1e-3)
        assert p == pytest.approx(0.0132, abs=1e-3)
        t_swapped, p_swapped = paired_ttest(b, a)
        assert t_swapped == pytest.approx(-t)
        assert p_swapped == pytest.approx(p)

    def test_degenerate_inputs(self):
        with pytest.raises(DegenerateStatisticsError):
            paired_ttest([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        with pytest.raises(DegenerateStatisticsError):
            paired_ttest([1.0], [2.0])
        with pytest.raises(DimensionMismatchError):
            paired_ttest([1.0, 2.0], [1.0])


def rows_for(method: str, nmse_values: list[float], rate: float = 2.0) -> list[MetricsRow]:
    return [
        MetricsRow(method=method, rate=rate, seed=seed, nmse=v, sharpness_rca=0.3 + 0.01 * seed * v)
        for seed, v in enumerate(nmse_values)
    ]


class TestReport:
    def test_summarize(self):
        rows = rows_for("spirit", [0.1, 0.2, 0.3]) + rows_for("sraki", [0.05, 0.1, 0.12])
        aggregates = summarize(rows)
        assert [(a.method, a.n) for a in aggregates] == [("spirit", 3), ("sraki", 3)]
        assert aggregates[0].nmse_mean == pytest.approx(0.2)
        assert aggregates[0].nmse_std == pytest.approx(0.1)

    def test_compare_methods_pairs_by_seed(self):
        rows = rows_for("spirit", [0.1, 0.2, 0.35, 0.3]) + rows_for("sraki", [0.05, 0.1, 0.12, 0.2])
        ttests = compare_methods(rows, metrics=("nmse",))
        assert len(ttests) == 1
        assert ttests[0].pair == "nmse:spirit-vs-sraki@R2"
        assert ttests[0].n == 4
        assert ttests[0].t > 0

    def test_report_table(self):
        rows = rows_for("spirit", [0.1, 0.2, 0.35]) + rows_for("l1spirit", [0.05, 0.1, 0.12])
        text = build_report(rows).to_table()
        assert "spirit" in text
        assert "l1spirit" in text
        assert "nmse:l1spirit-vs-spirit@R2" in text
