"""Rayleigh block-fading channel generation with quantized instantaneous SNRs.

Per-block instantaneous SNRs of a Rayleigh-faded link are exponentially
distributed with mean equal to the average linear SNR.  Every sampled SNR is
snapped onto a finite quantization grid so that downstream sequential
decision-making operates over a discrete state space.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x_lin: float) -> float:
    return 10.0 * np.log10(x_lin)


@dataclass(frozen=True)
class ChannelConfig:
    snr_h_db: float          # average legitimate-link SNR [dB]
    snr_g_db: float          # average warden-link SNR [dB]
    num_blocks: int = 10     # coherence blocks spanned by one codeword
    quant_levels: int = 1024
    seed: int = 0

    def __post_init__(self):
        if self.num_blocks < 1:
            raise ConfigurationError(f"num_blocks must be >= 1, got {self.num_blocks}")
        if self.quant_levels < 2:
            raise ConfigurationError(f"quant_levels must be >= 2, got {self.quant_levels}")
        if not (np.isfinite(self.snr_h_db) and np.isfinite(self.snr_g_db)):
            raise ConfigurationError("average SNRs must be finite")

    @property
    def mean_h(self) -> float:
        return db_to_linear(self.snr_h_db)

    @property
    def mean_g(self) -> float:
        return db_to_linear(self.snr_g_db)


@dataclass(frozen=True)
class SnrGrid:
    """Representative SNR levels for one channel, strictly increasing."""
    levels: np.ndarray

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=np.float64)
        object.__setattr__(self, "levels", lv)
        if lv.ndim != 1 or lv.size < 1:
            raise ConfigurationError("grid must be a nonempty vector")
        if np.any(lv <= 0) or np.any(np.diff(lv) <= 0):
            raise ConfigurationError("grid levels must be positive and strictly increasing")

    @property
    def mean(self) -> float:
        """Mean SNR under uniform bin weights (bins are equiprobable)."""
        return float(np.mean(self.levels))


@dataclass(frozen=True)
class BlockSnrs:
    """Per-block instantaneous SNRs, linear scale, on their quantization grids."""
    h: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.float64)
        g = np.asarray(self.g, dtype=np.float64)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)
        if h.shape != g.shape or h.ndim != 1:
            raise ConfigurationError("h and g must be vectors of equal length")
        if np.any(h <= 0) or np.any(g <= 0):
            raise ConfigurationError("SNRs must be positive")

    @property
    def num_blocks(self) -> int:
        return self.h.size


def build_grid(mean_snr_linear: float, levels: int) -> SnrGrid:
    """Quantile-midpoint grid for an exponential SNR distribution.

    The distribution is split into `levels` equiprobable bins; each level is
    the conditional mean of the exponential restricted to its bin.  Uniform
    bin weights therefore reproduce the distribution mean exactly.
    """
    if mean_snr_linear <= 0:
        raise ConfigurationError(f"mean SNR must be positive, got {mean_snr_linear}")
    if levels < 2:
        raise ConfigurationError(f"levels must be >= 2, got {levels}")
    k = int(levels)
    q = np.arange(k + 1) / k
    # unit-mean exponential: edges a_i = -ln(1 - i/k), last edge infinite
    a = -np.log1p(-q[:-1])
    # integral of x f(x) over [a_i, a_{i+1}) is (a_i+1)e^{-a_i} - (a_{i+1}+1)e^{-a_{i+1}}
    lower = (a + 1.0) * (1.0 - q[:-1])
    upper = np.empty(k)
    upper[:-1] = (a[1:] + 1.0) * (1.0 - q[1:-1])
    upper[-1] = 0.0
    unit_levels = k * (lower - upper)
    return SnrGrid(mean_snr_linear * unit_levels)


def snap_to_grid(x: np.ndarray, mean_snr_linear: float, grid: SnrGrid) -> np.ndarray:
    """Map raw exponential samples to their bin representatives."""
    k = grid.levels.size
    u = -np.expm1(-np.asarray(x) / mean_snr_linear)
    idx = np.minimum((u * k).astype(np.int64), k - 1)
    return grid.levels[idx]


def sample_blocks(cfg: ChannelConfig, seed=None) -> BlockSnrs:
    """Draw one codeword's worth of quantized block SNRs.

    The legitimate and warden links use independent substreams derived from
    the seed (default `cfg.seed`), so the draw is reproducible and the two
    links are statistically independent.  `seed` may be an int or a
    numpy SeedSequence.
    """
    if seed is None:
        seed = cfg.seed
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    ss_h, ss_g = ss.spawn(2)
    rng_h = np.random.default_rng(ss_h)
    rng_g = np.random.default_rng(ss_g)
    grid_h = build_grid(cfg.mean_h, cfg.quant_levels)
    grid_g = build_grid(cfg.mean_g, cfg.quant_levels)
    raw_h = cfg.mean_h * rng_h.standard_exponential(cfg.num_blocks)
    raw_g = cfg.mean_g * rng_g.standard_exponential(cfg.num_blocks)
    return BlockSnrs(snap_to_grid(raw_h, cfg.mean_h, grid_h),
                     snap_to_grid(raw_g, cfg.mean_g, grid_g))
