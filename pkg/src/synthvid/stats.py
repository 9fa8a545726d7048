"""Dataset statistics: spectrum slope, Lab color Gaussians, symmetric KL,
feature diversity, Frechet distance, and correlation against accuracy tables.

Feature extraction networks are out of scope: Frechet/diversity run either on
externally supplied feature files (.sfea) or on a documented builtin frame
descriptor (Lab histograms + a coarse luma grid). Builtin absolute values are
only comparable within one feature choice; orderings are the signal.
"""

from __future__ import annotations

import csv
import json
import os
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dataset_io import read_video
from .rng import RngStream, derive_video_seed


class StatsError(ValueError):
    pass


class DegenerateDistribution(StatsError):
    pass


class SingularCovariance(StatsError):
    pass


class ZeroSpectrum(StatsError):
    pass


class ZeroVariance(StatsError):
    pass


class NonSymmetric(StatsError):
    pass


class SampleTooSmall(StatsError):
    pass


class RankDeficientWarning(UserWarning):
    pass


# --- color space ------------------------------------------------------------

_SRGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
# White point taken as the matrix image of (1,1,1): the pure-white anchor
# then maps to L=100, a=b=0 exactly rather than within matrix rounding.
_WHITE = _SRGB_TO_XYZ @ np.ones(3)

_DELTA = 6.0 / 29.0


def rgb_to_lab(rgb) -> np.ndarray:
    """sRGB (0..255) -> CIELAB, vectorized over any leading shape.

    IEC 61966-2-1 gamma, D65 XYZ, standard CIE f() with the linear toe.
    """
    arr = np.asarray(rgb, dtype=np.float64) / 255.0
    lin = np.where(arr > 0.04045, ((arr + 0.055) / 1.055) ** 2.4, arr / 12.92)
    xyz = lin @ _SRGB_TO_XYZ.T
    ratio = xyz / _WHITE
    f = np.where(ratio > _DELTA ** 3, np.cbrt(ratio), ratio / (3 * _DELTA ** 2) + 4.0 / 29.0)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    out = np.empty_like(f)
    out[..., 0] = 116.0 * fy - 16.0
    out[..., 1] = 500.0 * (fx - fy)
    out[..., 2] = 200.0 * (fy - fz)
    return out


def luma(frame: np.ndarray) -> np.ndarray:
    """Rec.601 luma, float64 in the source value range."""
    f = np.asarray(frame, dtype=np.float64)
    return 0.299 * f[..., 0] + 0.587 * f[..., 1] + 0.114 * f[..., 2]


# --- Gaussian color model ----------------------------------------------------

COV_EPS = 1e-6


@dataclass
class Gaussian3:
    """Mean and covariance of a 3-D (Lab) color distribution."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(3)
        self.cov = np.asarray(self.cov, dtype=np.float64).reshape(3, 3)
        if np.max(np.abs(self.cov - self.cov.T)) > 1e-9:
            raise NonSymmetric("covariance is not symmetric within 1e-9")


def fit_color_gaussian(pixels) -> Gaussian3:
    """Sample mean/covariance of Lab pixels, ridge-regularized by COV_EPS * I.

    `pixels` is any (..., 3) uint8 RGB array; at least 1000 pixels required.
    """
    rgb = np.asarray(pixels).reshape(-1, 3)
    if rgb.shape[0] < 1000:
        raise SampleTooSmall(f"need >= 1000 pixels, got {rgb.shape[0]}")
    lab = rgb_to_lab(rgb)
    mean = lab.mean(axis=0)
    cov = np.cov(lab, rowvar=False) + COV_EPS * np.eye(3)
    eig = np.linalg.eigvalsh(cov)
    if eig[-1] / eig[0] > 1e12:
        raise DegenerateDistribution(f"condition number {eig[-1] / eig[0]:.3g} > 1e12")
    return Gaussian3(mean=mean, cov=cov)


def _chol(g: Gaussian3) -> np.ndarray:
    try:
        return np.linalg.cholesky(g.cov)
    except np.linalg.LinAlgError:
        raise SingularCovariance("covariance is not positive-definite") from None


def _kl_gaussian(p: Gaussian3, q: Gaussian3) -> float:
    lq = _chol(q)
    lp = _chol(p)
    # tr(Sq^-1 Sp) via triangular solve; logdets from Cholesky diagonals
    sol = np.linalg.solve(q.cov, p.cov)
    tr = float(np.trace(sol))
    d = q.mean - p.mean
    maha = float(d @ np.linalg.solve(q.cov, d))
    logdet_q = 2.0 * float(np.sum(np.log(np.diag(lq))))
    logdet_p = 2.0 * float(np.sum(np.log(np.diag(lp))))
    return 0.5 * (tr + maha - 3.0 + logdet_q - logdet_p)


def symmetric_kl(p: Gaussian3, q: Gaussian3) -> float:
    """(KL(p||q) + KL(q||p)) / 2 for 3-D Gaussians."""
    return 0.5 * (_kl_gaussian(p, q) + _kl_gaussian(q, p))


# --- spectrum slope ----------------------------------------------------------

SPECTRUM_F_HI = 0.45  # cycles/px; excludes anisotropic corner frequencies


def _radial_grid(h: int, w: int):
    fy = np.fft.fftfreq(h)
    fx = np.fft.fftfreq(w)
    r = np.sqrt(fy[:, None] ** 2 + fx[None, :] ** 2)
    width = 1.0 / min(h, w)
    edges = np.arange(0.0, r.max() + width, width)
    idx = np.clip(np.digitize(r.ravel(), edges) - 1, 0, len(edges) - 2)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return idx, centers, len(edges) - 1


class SpectrumAccumulator:
    """Pools radially averaged power across frames of one resolution."""

    def __init__(self, h: int, w: int):
        self.h, self.w = h, w
        self.window = np.hanning(h)[:, None] * np.hanning(w)[None, :]
        self.idx, self.centers, nbins = _radial_grid(h, w)
        self.power = np.zeros(nbins)
        self.counts = np.bincount(self.idx, minlength=nbins).astype(np.float64)
        self.n_frames = 0
        self.any_signal = False

    def add(self, frame: np.ndarray) -> None:
        g = luma(frame) if frame.ndim == 3 else np.asarray(frame, dtype=np.float64)
        if g.shape != (self.h, self.w):
            raise ValueError(f"frame shape {g.shape} != ({self.h}, {self.w})")
        if g.max() != g.min():
            self.any_signal = True
        spec = np.abs(np.fft.fft2(g * self.window)) ** 2
        self.power += np.bincount(self.idx, weights=spec.ravel(), minlength=len(self.power))
        self.n_frames += 1

    def alpha(self, f_lo: float | None = None, f_hi: float = SPECTRUM_F_HI) -> float:
        if not self.any_signal:
            raise ZeroSpectrum("all sampled frames are constant")
        if f_lo is None:
            f_lo = 4.0 / min(self.h, self.w)
        mean_power = self.power / np.maximum(self.counts * self.n_frames, 1.0)
        band = (self.centers >= f_lo) & (self.centers <= f_hi) & (mean_power > 0)
        if band.sum() < 2:
            raise ZeroSpectrum("no usable radial bins in the fit band")
        slope, _ = np.polyfit(np.log(self.centers[band]), np.log(mean_power[band]), 1)
        # power falls as |f|^(-2 alpha) when amplitude falls as |f|^(-alpha)
        return -0.5 * float(slope)


def estimate_spectrum_alpha(frames, f_lo: float | None = None,
                            f_hi: float = SPECTRUM_F_HI) -> float:
    """Amplitude-spectrum exponent: grayscale, Hann window, 2-D FFT, radial
    average pooled over frames, log-log line fit over mid frequencies."""
    frames = np.asarray(frames)
    if frames.shape[0] < 16:
        raise SampleTooSmall(f"need >= 16 frames, got {frames.shape[0]}")
    acc = SpectrumAccumulator(frames.shape[1], frames.shape[2])
    for frame in frames:
        acc.add(frame)
    return acc.alpha(f_lo=f_lo, f_hi=f_hi)


# --- feature-space metrics ---------------------------------------------------

def diversity_logdet(features: np.ndarray) -> float:
    """Log-determinant of the feature covariance (+ COV_EPS * I ridge).

    Log domain keeps the volume measure in a workable numeric range; the
    ordering matches the raw determinant exactly.
    """
    x = np.asarray(features, dtype=np.float64)
    n, d = x.shape
    if n <= d:
        raise SampleTooSmall(f"need more samples ({n}) than dimensions ({d})")
    if not np.all(np.isfinite(x)):
        raise ValueError("features contain non-finite entries")
    # population covariance: duplicating every sample then leaves the
    # spread measure exactly unchanged
    cov = np.cov(x, rowvar=False, bias=True)
    if np.linalg.matrix_rank(cov) < d:
        warnings.warn(f"feature covariance rank < {d}", RankDeficientWarning, stacklevel=2)
    cov = cov + COV_EPS * np.eye(d)
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0:
        raise SingularCovariance("regularized covariance has non-positive determinant")
    return float(logdet)


def _sqrt_psd(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def _check_symmetric(mat: np.ndarray, name: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=np.float64)
    scale = max(1.0, float(np.max(np.abs(mat))))
    if np.max(np.abs(mat - mat.T)) > 1e-8 * scale:
        raise NonSymmetric(f"{name} is not symmetric")
    return mat


def frechet_distance(m1, c1, m2, c2) -> float:
    """||m1-m2||^2 + tr(C1 + C2 - 2 (C1^1/2 C2 C1^1/2)^1/2).

    Matrix roots via symmetric eigendecomposition, negative eigenvalues
    clamped to zero; result floored at 0 against rounding.
    """
    m1 = np.asarray(m1, dtype=np.float64).ravel()
    m2 = np.asarray(m2, dtype=np.float64).ravel()
    c1 = _check_symmetric(c1, "C1")
    c2 = _check_symmetric(c2, "C2")
    s1 = _sqrt_psd(c1)
    inner = s1 @ c2 @ s1
    inner = 0.5 * (inner + inner.T)
    vals = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    tr_sqrt = float(np.sum(np.sqrt(vals)))
    dist = float(np.sum((m1 - m2) ** 2) + np.trace(c1) + np.trace(c2) - 2.0 * tr_sqrt)
    return max(dist, 0.0)


def pearson_r(xs, ys) -> float:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-D and the same length")
    if len(x) < 3:
        raise SampleTooSmall(f"need >= 3 points, got {len(x)}")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt(np.sum(dx * dx)))
    sy = float(np.sqrt(np.sum(dy * dy)))
    if sx == 0.0 or sy == 0.0:
        raise ZeroVariance("an input has zero variance")
    return float(np.dot(dx, dy) / (sx * sy))


# --- builtin frame descriptor --------------------------------------------------

LAB_HIST_BINS = 16
LUMA_GRID = 8
FEATURE_DIM = 3 * LAB_HIST_BINS + LUMA_GRID * LUMA_GRID  # 112

_LAB_RANGES = ((0.0, 100.0), (-110.0, 110.0), (-110.0, 110.0))


def _grid_sample(gray: np.ndarray, gh: int, gw: int) -> np.ndarray:
    # nearest-point downsample, not block mean: averaging would wash texture
    # detail to flat gray and hide exactly the diversity this feature tracks
    h, w = gray.shape
    rows = np.minimum(((np.arange(gh) + 0.5) * (h / gh)).astype(np.int64), h - 1)
    cols = np.minimum(((np.arange(gw) + 0.5) * (w / gw)).astype(np.int64), w - 1)
    return gray[np.ix_(rows, cols)]


def builtin_frame_features(frame: np.ndarray) -> np.ndarray:
    """112-d descriptor: 16-bin Lab histograms (3 channels, fractions) plus an
    8x8 nearest-downsampled luma grid scaled to [0, 1]."""
    lab = rgb_to_lab(frame).reshape(-1, 3)
    npix = lab.shape[0]
    parts = []
    for ch, (lo, hi) in enumerate(_LAB_RANGES):
        hist, _ = np.histogram(np.clip(lab[:, ch], lo, hi), bins=LAB_HIST_BINS, range=(lo, hi))
        parts.append(hist / npix)
    parts.append((_grid_sample(luma(frame), LUMA_GRID, LUMA_GRID) / 255.0).ravel())
    return np.concatenate(parts).astype(np.float32)


# --- feature files (.sfea) ----------------------------------------------------

SFEA_MAGIC = b"SFEA"


class BadFeatureFile(StatsError):
    pass


def write_features(path: str, features: np.ndarray) -> None:
    arr = np.ascontiguousarray(features, dtype="<f4")
    if arr.ndim != 2:
        raise ValueError("features must be 2-D (n, d)")
    with open(path, "wb") as fh:
        fh.write(SFEA_MAGIC + struct.pack("<II", arr.shape[0], arr.shape[1]))
        fh.write(arr.tobytes())


def read_features(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) < 12 or head[:4] != SFEA_MAGIC:
            raise BadFeatureFile(f"{path}: missing SFEA header")
        n, d = struct.unpack("<II", head[4:])
        payload = fh.read()
    if len(payload) != 4 * n * d:
        raise BadFeatureFile(f"{path}: payload is {len(payload)} bytes, expected {4 * n * d}")
    return np.frombuffer(payload, dtype="<f4").reshape(n, d).astype(np.float32)


# --- dataset analysis ----------------------------------------------------------

@dataclass
class AnalysisOptions:
    """Sampling protocol knobs. Defaults: 10k frames for frame-level
    statistics, 1000 videos x 16 frames each for diversity. allow_small
    permits desk-scale datasets."""

    frame_sample: int = 10000
    video_sample: int = 1000
    frames_per_video: int = 16
    pixels_per_frame: int = 1024
    seed: int = 0
    allow_small: bool = False
    scan_limit: int = 1000  # videos consumed from a bare iterator source


@dataclass
class StatsReport:
    dataset: str
    seed: int
    n_videos: int
    n_frames_sampled: int
    n_feature_rows: int
    spectrum_alpha: float
    color_mean: list
    color_cov: list
    diversity_logdet: float
    kl_to_reference: float | None = None
    frechet_builtin: float | None = None
    frechet_external: float | None = None

    def metric_rows(self) -> list[tuple[str, float]]:
        rows = [("spectrum_alpha", self.spectrum_alpha),
                ("diversity_logdet", self.diversity_logdet)]
        if self.kl_to_reference is not None:
            rows.append(("kl_to_reference", self.kl_to_reference))
        if self.frechet_builtin is not None:
            rows.append(("frechet_builtin", self.frechet_builtin))
        if self.frechet_external is not None:
            rows.append(("frechet_external", self.frechet_external))
        return rows

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "seed": self.seed,
            "n_videos": self.n_videos,
            "n_frames_sampled": self.n_frames_sampled,
            "n_feature_rows": self.n_feature_rows,
            "spectrum_alpha": self.spectrum_alpha,
            "color_mean": self.color_mean,
            "color_cov": self.color_cov,
            "diversity_logdet": self.diversity_logdet,
            "kl_to_reference": self.kl_to_reference,
            "frechet_builtin": self.frechet_builtin,
            "frechet_external": self.frechet_external,
        }

    def save_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    def save_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["metric", "value"])
            for name, value in self.metric_rows():
                writer.writerow([name, repr(value)])


class _DatasetSource:
    """Uniform access to a dataset directory, a VideoTensor list, or a bare
    iterator (consumed sequentially up to scan_limit)."""

    def __init__(self, source, scan_limit: int):
        self.name = "<videos>"
        self._list = None
        self._paths = None
        self._iter = None
        if isinstance(source, (str, os.PathLike)):
            root = os.fspath(source)
            self.name = root
            names = sorted(n for n in os.listdir(root) if n.endswith(".svid"))
            self._paths = [os.path.join(root, n) for n in names]
            self.count = len(self._paths)
        elif isinstance(source, (list, tuple)):
            self._list = list(source)
            self.count = len(self._list)
        else:
            self._iter = iter(source)
            self.count = scan_limit
            self.name = "<stream>"

    def videos(self, needed: set[int]):
        """Yield (index, VideoTensor) in ascending index order."""
        if self._iter is not None:
            for k in range(self.count):
                try:
                    video = next(self._iter)
                except StopIteration:
                    return
                if k in needed:
                    yield k, video
            return
        for k in sorted(needed):
            if self._list is not None:
                yield k, self._list[k]
            else:
                yield k, read_video(self._paths[k])


@dataclass
class _Moments:
    n: int = 0
    s1: np.ndarray = field(default_factory=lambda: np.zeros(3))
    s2: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))

    def add(self, lab: np.ndarray) -> None:
        self.n += lab.shape[0]
        self.s1 += lab.sum(axis=0)
        self.s2 += lab.T @ lab

    def gaussian(self) -> Gaussian3:
        if self.n < 1000:
            raise SampleTooSmall(f"need >= 1000 pixels, got {self.n}")
        mean = self.s1 / self.n
        cov = (self.s2 - self.n * np.outer(mean, mean)) / (self.n - 1)
        cov = 0.5 * (cov + cov.T) + COV_EPS * np.eye(3)
        return Gaussian3(mean=mean, cov=cov)


def _sample_summary(source, options: AnalysisOptions):
    """One pass over the sampled videos; returns the pooled accumulators."""
    src = _DatasetSource(source, options.scan_limit)
    if src.count == 0:
        raise SampleTooSmall(f"{src.name} has no videos")
    if not options.allow_small and src.count < options.video_sample:
        raise SampleTooSmall(
            f"{src.name} has {src.count} videos < video_sample={options.video_sample} "
            "(set allow_small to override)")

    rng = RngStream(options.seed)
    frame_votes = np.zeros(src.count, dtype=np.int64)
    for _ in range(options.frame_sample):
        frame_votes[rng.randint(src.count)] += 1
    video_votes = np.zeros(src.count, dtype=np.int64)
    for _ in range(options.video_sample):
        video_votes[rng.randint(src.count)] += 1
    needed = set(np.nonzero(frame_votes + video_votes)[0].tolist())

    spectrum: SpectrumAccumulator | None = None
    moments = _Moments()
    frame_features: list[np.ndarray] = []
    video_features: list[np.ndarray] = []
    frames_seen = 0

    for k, video in src.videos(needed):
        frames = video.frames
        t = frames.shape[0]
        vrng = RngStream(derive_video_seed(options.seed, k))
        for _ in range(int(frame_votes[k])):
            frame = frames[vrng.randint(t)]
            if spectrum is None:
                spectrum = SpectrumAccumulator(frame.shape[0], frame.shape[1])
            spectrum.add(frame)
            flat = frame.reshape(-1, 3)
            take = min(options.pixels_per_frame, flat.shape[0])
            pick = np.array([vrng.randint(flat.shape[0]) for _ in range(take)])
            moments.add(rgb_to_lab(flat[pick]))
            frame_features.append(builtin_frame_features(frame))
            frames_seen += 1
        for _ in range(int(video_votes[k])):
            if t >= options.frames_per_video:
                chosen = []
                remaining = list(range(t))
                for _ in range(options.frames_per_video):
                    chosen.append(remaining.pop(vrng.randint(len(remaining))))
            else:
                chosen = [vrng.randint(t) for _ in range(options.frames_per_video)]
            for fi in chosen:
                video_features.append(builtin_frame_features(frames[fi]))

    if frames_seen == 0:
        raise SampleTooSmall(f"{src.name}: no frames sampled")
    return src, spectrum, moments, frame_features, video_features, frames_seen


def analyze_dataset(source, options: AnalysisOptions | None = None,
                    reference=None,
                    features_path: str | None = None,
                    ref_features_path: str | None = None) -> StatsReport:
    """Seeded sub-sampled statistics for one dataset.

    `source` is a dataset directory, a list of VideoTensors, or an iterator.
    `reference` (same kinds) adds color-KL and builtin-Frechet distances to
    it; a pair of .sfea files adds a Frechet distance on external features.
    """
    options = options or AnalysisOptions()
    src, spectrum, moments, frame_feats, video_feats, n_frames = \
        _sample_summary(source, options)

    alpha = spectrum.alpha()
    color = moments.gaussian()
    feats = np.asarray(video_feats if video_feats else frame_feats)
    diversity = diversity_logdet(feats)

    kl_ref = frechet_builtin = frechet_ext = None
    if reference is not None:
        _, _, ref_moments, ref_frame_feats, _, _ = _sample_summary(reference, options)
        kl_ref = symmetric_kl(color, ref_moments.gaussian())
        a = np.asarray(frame_feats, dtype=np.float64)
        b = np.asarray(ref_frame_feats, dtype=np.float64)
        frechet_builtin = frechet_distance(
            a.mean(axis=0), np.cov(a, rowvar=False),
            b.mean(axis=0), np.cov(b, rowvar=False))
    if features_path is not None and ref_features_path is not None:
        fa = read_features(features_path).astype(np.float64)
        fb = read_features(ref_features_path).astype(np.float64)
        frechet_ext = frechet_distance(
            fa.mean(axis=0), np.cov(fa, rowvar=False),
            fb.mean(axis=0), np.cov(fb, rowvar=False))

    return StatsReport(
        dataset=src.name,
        seed=options.seed,
        n_videos=src.count,
        n_frames_sampled=n_frames,
        n_feature_rows=len(feats),
        spectrum_alpha=float(alpha),
        color_mean=color.mean.tolist(),
        color_cov=color.cov.tolist(),
        diversity_logdet=float(diversity),
        kl_to_reference=None if kl_ref is None else float(kl_ref),
        frechet_builtin=None if frechet_builtin is None else float(frechet_builtin),
        frechet_external=None if frechet_ext is None else float(frechet_ext),
    )


def read_accuracy_csv(path: str) -> dict[str, float]:
    """CSV with columns `dataset` and `accuracy` (header required)."""
    table: dict[str, float] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or \
                not {"dataset", "accuracy"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected columns dataset,accuracy")
        for row in reader:
            table[row["dataset"]] = float(row["accuracy"])
    return table


def correlate_metrics(reports: list[tuple[str, StatsReport]],
                      accuracies: dict[str, float]) -> dict[str, float]:
    """Pearson r of every shared metric against downstream accuracy."""
    names = [name for name, _ in reports if name in accuracies]
    if len(names) < 3:
        raise SampleTooSmall(f"need >= 3 datasets with accuracies, got {len(names)}")
    by_name = dict(reports)
    out: dict[str, float] = {}
    metric_names = [m for m, _ in by_name[names[0]].metric_rows()]
    for metric in metric_names:
        xs, ys = [], []
        for name in names:
            row = dict(by_name[name].metric_rows())
            if metric in row:
                xs.append(row[metric])
                ys.append(accuracies[name])
        if len(xs) >= 3:
            out[metric] = pearson_r(xs, ys)
    return out
