import dataclasses
import math

import numpy as np
import pytest
import scipy.integrate
import scipy.stats

from synthvid.config import GeneratorConfig, Level
from synthvid.dataset_io import generate_dataset, on_the_fly_iterator
from synthvid.stats import (
    AnalysisOptions,
    Gaussian3,
    NonSymmetric,
    RankDeficientWarning,
    SampleTooSmall,
    ZeroSpectrum,
    ZeroVariance,
    analyze_dataset,
    builtin_frame_features,
    correlate_metrics,
    diversity_logdet,
    estimate_spectrum_alpha,
    fit_color_gaussian,
    frechet_distance,
    pearson_r,
    read_accuracy_csv,
    read_features,
    rgb_to_lab,
    symmetric_kl,
    write_features,
)

# --- color ---------------------------------------------------------------


def test_lab_black_anchor_exact():
    lab = rgb_to_lab((0, 0, 0))
    assert lab[0] == 0.0 and lab[1] == 0.0 and lab[2] == 0.0


def test_lab_white_anchor_exact():
    lab = rgb_to_lab((255, 255, 255))
    assert lab[0] == 100.0
    assert abs(lab[1]) < 0.01 and abs(lab[2]) < 0.01


def _lab_scalar_oracle(r, g, b):
    # independent scalar implementation (different code path/shape handling)
    def lin(v):
        v /= 255.0
        return ((v + 0.055) / 1.055) ** 2.4 if v > 0.04045 else v / 12.92
    rl, gl, bl = lin(float(r)), lin(float(g)), lin(float(b))
    x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl
    y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl
    z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl
    xn, yn, zn = 0.95047, 1.0, 1.08883

    def f(t):
        return t ** (1 / 3) if t > (6 / 29) ** 3 else t / (3 * (6 / 29) ** 2) + 4 / 29
    fx, fy, fz = f(x / xn), f(y / yn), f(z / zn)
    return 116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)


def test_lab_red_matches_colorimetry_oracle():
    lab = rgb_to_lab((255, 0, 0))
    oracle = _lab_scalar_oracle(255, 0, 0)
    assert lab == pytest.approx(oracle, abs=0.01)
    assert lab == pytest.approx((53.24, 80.09, 67.20), abs=0.05)


def test_lab_vectorization_matches_scalar():
    # the oracle uses the textbook 5-digit white point; the implementation
    # normalizes by the matrix's own white, hence the 1e-4 agreement bound
    rs = np.random.RandomState(0)
    px = rs.randint(0, 256, (50, 3))
    batch = rgb_to_lab(px)
    for i in range(50):
        assert batch[i] == pytest.approx(_lab_scalar_oracle(*px[i]), abs=1e-4)


# --- color gaussian ---------------------------------------------------------


def test_constant_color_gaussian():
    pixels = np.full((2000, 3), (30, 180, 90), dtype=np.uint8)
    g = fit_color_gaussian(pixels)
    assert g.mean == pytest.approx(rgb_to_lab((30, 180, 90)), abs=1e-9)
    assert np.allclose(g.cov, 1e-6 * np.eye(3), atol=1e-12)


def test_gaussian_recovery_monte_carlo():
    rs = np.random.RandomState(1)
    raw = rs.multivariate_normal([120, 60, 200], np.diag([400, 100, 250]), size=100_000)
    pixels = np.clip(np.round(raw), 0, 255).astype(np.uint8)
    got = fit_color_gaussian(pixels)
    # independent oracle: explicit moment formulas on the exact same pixels
    lab = rgb_to_lab(pixels)
    mean = lab.sum(axis=0) / len(lab)
    centered = lab - mean
    cov = centered.T @ centered / (len(lab) - 1)
    assert np.allclose(got.mean, mean, rtol=0.02, atol=1e-6)
    assert np.allclose(got.cov, cov + 1e-6 * np.eye(3), rtol=0.02, atol=1e-4)


def test_gaussian_order_invariance():
    top_bottom = np.zeros((64, 64, 3), np.uint8)
    top_bottom[32:] = 255
    left_right = np.zeros((64, 64, 3), np.uint8)
    left_right[:, 32:] = 255
    pooled = np.concatenate([top_bottom.reshape(-1, 3), left_right.reshape(-1, 3)])
    a = fit_color_gaussian(np.stack([top_bottom, left_right]))
    b = fit_color_gaussian(pooled)
    assert np.allclose(a.mean, b.mean, atol=1e-9)
    assert np.allclose(a.cov, b.cov, atol=1e-9)


def test_too_few_pixels():
    with pytest.raises(SampleTooSmall):
        fit_color_gaussian(np.zeros((10, 3), np.uint8))


def test_gaussian3_requires_symmetry():
    cov = np.eye(3)
    cov[0, 1] = 1e-6
    with pytest.raises(NonSymmetric):
        Gaussian3(mean=np.zeros(3), cov=cov)


# --- symmetric KL -----------------------------------------------------------


def _random_gaussian(rs):
    a = rs.standard_normal((3, 3))
    return Gaussian3(mean=rs.standard_normal(3) * 5, cov=a @ a.T + 0.5 * np.eye(3))


def test_kl_self_is_zero():
    rs = np.random.RandomState(2)
    for _ in range(10):
        g = _random_gaussian(rs)
        assert abs(symmetric_kl(g, g)) < 1e-12


def test_kl_symmetry():
    rs = np.random.RandomState(3)
    for _ in range(10):
        p, q = _random_gaussian(rs), _random_gaussian(rs)
        assert symmetric_kl(p, q) == pytest.approx(symmetric_kl(q, p), abs=1e-12)


def test_kl_nonnegative_and_discriminative():
    rs = np.random.RandomState(4)
    for _ in range(25):
        p, q = _random_gaussian(rs), _random_gaussian(rs)
        assert symmetric_kl(p, q) >= 0.0
    p = _random_gaussian(rs)
    q = Gaussian3(mean=p.mean + 0.1, cov=p.cov.copy())
    assert symmetric_kl(p, q) > 0.0


def _kl_1d_quadrature(mp, sp, mq, sq):
    def integrand(x):
        logp = scipy.stats.norm.logpdf(x, mp, sp)
        logq = scipy.stats.norm.logpdf(x, mq, sq)
        return math.exp(logp) * (logp - logq)
    lo = min(mp - 30 * sp, mq - 30 * sq)
    hi = max(mp + 30 * sp, mq + 30 * sq)
    val, _ = scipy.integrate.quad(integrand, lo, hi, limit=400)
    return val


def test_kl_matches_quadrature_on_diagonal_gaussians():
    p = Gaussian3(mean=[1.0, -2.0, 0.5], cov=np.diag([1.0, 4.0, 0.25]))
    q = Gaussian3(mean=[0.0, 1.0, 0.5], cov=np.diag([2.0, 1.0, 1.0]))
    # diagonal Gaussians factorize: total KL is the sum of 1-D KLs
    oracle = 0.0
    for i in range(3):
        oracle += _kl_1d_quadrature(p.mean[i], math.sqrt(p.cov[i, i]),
                                    q.mean[i], math.sqrt(q.cov[i, i]))
        oracle += _kl_1d_quadrature(q.mean[i], math.sqrt(q.cov[i, i]),
                                    p.mean[i], math.sqrt(p.cov[i, i]))
    oracle *= 0.5
    assert symmetric_kl(p, q) == pytest.approx(oracle, abs=1e-3)


# --- spectrum exponent --------------------------------------------------------


def synth_amplitude_law_frames(alpha, n=16, size=128, seed=0):
    """Spectral-synthesis oracle: shape white noise to an |f|^-alpha
    amplitude spectrum, invert, and quantize to frames."""
    rs = np.random.RandomState(seed)
    fy = np.fft.fftfreq(size)
    fx = np.fft.fftfreq(size)
    r = np.sqrt(fy[:, None] ** 2 + fx[None, :] ** 2)
    shaping = np.zeros_like(r)
    shaping[r > 0] = r[r > 0] ** (-alpha)
    frames = []
    for _ in range(n):
        spec = np.fft.fft2(rs.standard_normal((size, size))) * shaping
        img = np.fft.ifft2(spec).real
        img = (img - img.min()) / (np.ptp(img) + 1e-12) * 255
        frames.append(np.repeat(img[:, :, None], 3, axis=2).astype(np.uint8))
    return np.array(frames)


def test_white_noise_alpha_is_zero():
    rs = np.random.RandomState(5)
    frames = rs.randint(0, 256, (16, 128, 128, 3), dtype=np.uint8)
    assert abs(estimate_spectrum_alpha(frames)) < 0.05


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_alpha_recovered_from_synthesized_spectra(alpha):
    frames = synth_amplitude_law_frames(alpha, seed=int(alpha * 10))
    assert estimate_spectrum_alpha(frames) == pytest.approx(alpha, abs=0.1)


def test_alpha_brightness_invariant():
    frames = synth_amplitude_law_frames(1.0).astype(np.float64)
    a1 = estimate_spectrum_alpha(frames)
    a2 = estimate_spectrum_alpha(frames * 0.5)
    assert abs(a1 - a2) < 1e-6


def test_constant_frames_raise_zero_spectrum():
    frames = np.full((16, 64, 64, 3), 128, np.uint8)
    with pytest.raises(ZeroSpectrum):
        estimate_spectrum_alpha(frames)


def test_too_few_frames_rejected():
    with pytest.raises(SampleTooSmall):
        estimate_spectrum_alpha(np.zeros((4, 32, 32, 3), np.uint8))


# --- diversity -----------------------------------------------------------------


def test_identical_rows_floor():
    rows = np.tile(np.arange(8.0), (20, 1))
    with pytest.warns(RankDeficientWarning):
        logdet = diversity_logdet(rows)
    assert logdet == pytest.approx(8 * math.log(1e-6), abs=1e-9)


def test_standard_normal_logdet_near_zero():
    feats = np.random.default_rng(0).standard_normal((10_000, 8))
    assert abs(diversity_logdet(feats)) < 0.1


def test_duplication_invariance():
    feats = np.random.default_rng(1).standard_normal((500, 6))
    a = diversity_logdet(feats)
    b = diversity_logdet(np.concatenate([feats, feats]))
    assert a == pytest.approx(b, abs=1e-9)


def test_permutation_invariance():
    rng = np.random.default_rng(2)
    feats = rng.standard_normal((400, 5))
    a = diversity_logdet(feats)
    b = diversity_logdet(feats[rng.permutation(400)])
    assert a == pytest.approx(b, abs=1e-9)


def test_diversity_needs_more_rows_than_dims():
    with pytest.raises(SampleTooSmall):
        diversity_logdet(np.zeros((5, 8)))


def test_spread_increases_logdet():
    rng = np.random.default_rng(3)
    feats = rng.standard_normal((300, 4))
    base = diversity_logdet(feats)
    stretched = np.concatenate([feats, feats * 3.0])
    assert diversity_logdet(stretched) > base


# --- Frechet distance ------------------------------------------------------------


def test_frechet_identical_is_zero():
    rs = np.random.RandomState(6)
    a = rs.standard_normal((4, 4))
    cov = a @ a.T + np.eye(4)
    mean = rs.standard_normal(4)
    assert frechet_distance(mean, cov, mean, cov) == pytest.approx(0.0, abs=1e-8)


def test_frechet_one_dimensional_closed_form():
    # (mu1-mu2)^2 + s1^2 + s2^2 - 2 s1 s2 with mu 0 vs 1, s = 1 -> exactly 1
    assert frechet_distance([0.0], [[1.0]], [1.0], [[1.0]]) == pytest.approx(1.0, abs=1e-8)


def test_frechet_diagonal_closed_form():
    rs = np.random.RandomState(7)
    d = 5
    c1 = np.diag(rs.uniform(0.1, 4.0, d))
    c2 = np.diag(rs.uniform(0.1, 4.0, d))
    m1 = rs.standard_normal(d)
    m2 = rs.standard_normal(d)
    oracle = float(np.sum((m1 - m2) ** 2)
                   + np.sum(np.diag(c1) + np.diag(c2)
                            - 2 * np.sqrt(np.diag(c1) * np.diag(c2))))
    assert frechet_distance(m1, c1, m2, c2) == pytest.approx(oracle, abs=1e-9)


def test_frechet_symmetry():
    rs = np.random.RandomState(8)
    for _ in range(5):
        a = rs.standard_normal((3, 3))
        b = rs.standard_normal((3, 3))
        c1, c2 = a @ a.T + 0.1 * np.eye(3), b @ b.T + 0.1 * np.eye(3)
        m1, m2 = rs.standard_normal(3), rs.standard_normal(3)
        assert frechet_distance(m1, c1, m2, c2) == \
            pytest.approx(frechet_distance(m2, c2, m1, c1), abs=1e-8)


def test_frechet_rejects_asymmetric():
    c = np.eye(2)
    c[0, 1] = 0.5
    with pytest.raises(NonSymmetric):
        frechet_distance([0, 0], c, [0, 0], np.eye(2))


# --- pearson -------------------------------------------------------------------


def test_pearson_perfect_line():
    xs = np.arange(10.0)
    assert pearson_r(xs, 2 * xs + 1) == pytest.approx(1.0, abs=1e-12)
    assert pearson_r(xs, -xs) == pytest.approx(-1.0, abs=1e-12)


def test_pearson_hand_computed():
    # xs=[1..5], ys=[2,1,4,3,7]: sum(dx*dy)=12, ss_x=10, ss_y=21.2
    # r = 12 / sqrt(10 * 21.2) = 12 / sqrt(212)
    assert pearson_r([1, 2, 3, 4, 5], [2, 1, 4, 3, 7]) == \
        pytest.approx(12.0 / math.sqrt(212.0), abs=1e-12)


def test_pearson_zero_variance():
    with pytest.raises(ZeroVariance):
        pearson_r([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


def test_pearson_needs_three_points():
    with pytest.raises(SampleTooSmall):
        pearson_r([1.0, 2.0], [1.0, 2.0])


# --- builtin features / sfea ------------------------------------------------------


def test_builtin_feature_shape_and_range():
    rs = np.random.RandomState(9)
    frame = rs.randint(0, 256, (64, 64, 3), dtype=np.uint8)
    feats = builtin_frame_features(frame)
    assert feats.shape == (112,)
    assert feats.dtype == np.float32
    assert np.all(feats >= 0.0) and np.all(feats <= 1.0)
    # histogram part sums to 1 per channel
    assert feats[:16].sum() == pytest.approx(1.0, abs=1e-5)


def test_sfea_roundtrip(tmp_path):
    rs = np.random.RandomState(10)
    feats = rs.standard_normal((37, 11)).astype(np.float32)
    path = str(tmp_path / "x.sfea")
    write_features(path, feats)
    assert np.array_equal(read_features(path), feats)


def test_sfea_header_layout(tmp_path):
    path = str(tmp_path / "y.sfea")
    write_features(path, np.zeros((2, 3), np.float32))
    blob = open(path, "rb").read()
    assert blob[:4] == b"SFEA"
    assert int.from_bytes(blob[4:8], "little") == 2
    assert int.from_bytes(blob[8:12], "little") == 3
    assert len(blob) == 12 + 2 * 3 * 4


# --- analyze_dataset -----------------------------------------------------------


def small_options(**kw):
    # video_sample * frames_per_video must exceed the 112-d feature size
    base = dict(frame_sample=48, video_sample=16, frames_per_video=8,
                pixels_per_frame=64, seed=0, allow_small=True, scan_limit=6)
    base.update(kw)
    return AnalysisOptions(**base)


@pytest.fixture(scope="module")
def tiny_dataset(tmp_path_factory):
    cfg = dataclasses.replace(
        GeneratorConfig(), level=Level.MOVING_SHAPES, width=64, height=64,
        duration_range=(10, 14), object_count_range=(2, 5), global_seed=5)
    out = str(tmp_path_factory.mktemp("tinyds"))
    generate_dataset(cfg, out, count=6)
    return cfg, out


def test_analyze_smoke(tiny_dataset):
    _, path = tiny_dataset
    report = analyze_dataset(path, small_options())
    assert math.isfinite(report.spectrum_alpha)
    assert math.isfinite(report.diversity_logdet)
    assert report.n_frames_sampled == 48
    assert len(report.color_mean) == 3


def test_analyze_deterministic(tiny_dataset):
    _, path = tiny_dataset
    a = analyze_dataset(path, small_options())
    b = analyze_dataset(path, small_options())
    assert a.to_dict() == b.to_dict()


def test_analyze_self_reference_distances_vanish(tiny_dataset):
    _, path = tiny_dataset
    report = analyze_dataset(path, small_options(), reference=path)
    assert report.frechet_builtin == pytest.approx(0.0, abs=1e-3)
    assert report.kl_to_reference == pytest.approx(0.0, abs=1e-9)


def test_analyze_iterator_matches_directory(tiny_dataset):
    cfg, path = tiny_dataset
    from_dir = analyze_dataset(path, small_options())
    from_stream = analyze_dataset(on_the_fly_iterator(cfg), small_options())
    assert from_dir.spectrum_alpha == from_stream.spectrum_alpha
    assert from_dir.diversity_logdet == from_stream.diversity_logdet


def test_analyze_requires_sample_sizes(tiny_dataset):
    _, path = tiny_dataset
    with pytest.raises(SampleTooSmall):
        analyze_dataset(path, small_options(allow_small=False, video_sample=1000))


def test_analyze_external_features(tiny_dataset, tmp_path):
    _, path = tiny_dataset
    rs = np.random.RandomState(11)
    fa = rs.standard_normal((300, 6)).astype(np.float32)
    fb = (rs.standard_normal((300, 6)) + 1.0).astype(np.float32)
    pa, pb = str(tmp_path / "a.sfea"), str(tmp_path / "b.sfea")
    write_features(pa, fa)
    write_features(pb, fb)
    report = analyze_dataset(path, small_options(), features_path=pa, ref_features_path=pb)
    oracle = frechet_distance(fa.astype(np.float64).mean(0), np.cov(fa, rowvar=False),
                              fb.astype(np.float64).mean(0), np.cov(fb, rowvar=False))
    assert report.frechet_external == pytest.approx(oracle, rel=1e-9)


def test_correlation_pipeline(tiny_dataset, tmp_path):
    _, path = tiny_dataset
    reports = []
    for i, seed in enumerate((0, 1, 2, 3)):
        reports.append((f"ds{i}", analyze_dataset(path, small_options(seed=seed))))
    acc_csv = tmp_path / "acc.csv"
    acc_csv.write_text("dataset,accuracy\nds0,67.8\nds1,85.2\nds2,86.9\nds3,88.1\n")
    corr = correlate_metrics(reports, read_accuracy_csv(str(acc_csv)))
    assert set(corr) == {"spectrum_alpha", "diversity_logdet"}
    xs = [dict(r.metric_rows())["spectrum_alpha"] for _, r in reports]
    oracle = np.corrcoef(xs, [67.8, 85.2, 86.9, 88.1])[0, 1]
    assert corr["spectrum_alpha"] == pytest.approx(oracle, abs=1e-12)
