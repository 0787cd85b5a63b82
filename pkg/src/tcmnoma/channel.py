"""Per-subcarrier flat channels, noise calibration, and symbol interleaving.

The received sample is y = h * x + n with n complex Gaussian of variance
sigma2 per real dimension (total noise power 2*sigma2).  Rayleigh gains are
generated per subcarrier by a sum-of-sinusoids process with unit average
power; AWGN fixes h = 1.  Interleaving permutes the time-frequency grid in
fixed-size blocks, written row-wise and read column-wise.
"""

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch


@dataclass(frozen=True)
class ChannelRealization:
    gains: np.ndarray  # (units, K) complex
    sigma2: float  # noise variance per real dimension


def awgn_realization(units: int, n_subcarriers: int, sigma2: float) -> ChannelRealization:
    return ChannelRealization(np.ones((units, n_subcarriers), dtype=np.complex128), float(sigma2))


def make_rayleigh(
    n_subcarriers: int,
    units: int,
    doppler_hz: float = 50.0,
    sample_period_s: float = 1.0 / 1800.0,
    rng=None,
    sigma2: float = 0.0,
    n_sinusoids: int = 32,
) -> ChannelRealization:
    """Time-correlated unit-power fading, independent across subcarriers.

    Sum-of-sinusoids with randomized arrival angles and phases; the lag
    autocorrelation approximates the classic zeroth-order Bessel profile
    for the given maximum Doppler shift.
    """
    if rng is None:
        rng = np.random.default_rng()
    t = np.arange(units) * sample_period_s
    wd = 2.0 * np.pi * doppler_hz
    n = np.arange(1, n_sinusoids + 1)
    gains = np.empty((units, n_subcarriers), dtype=np.complex128)
    for k in range(n_subcarriers):
        theta = rng.uniform(-np.pi, np.pi)
        phi = rng.uniform(-np.pi, np.pi, size=n_sinusoids)
        psi = rng.uniform(-np.pi, np.pi, size=n_sinusoids)
        alpha = (2.0 * np.pi * n - np.pi + theta) / (4.0 * n_sinusoids)
        arg = wd * t[:, None]
        re = np.cos(arg * np.cos(alpha)[None, :] + phi[None, :]).sum(axis=1)
        im = np.cos(arg * np.sin(alpha)[None, :] + psi[None, :]).sum(axis=1)
        gains[:, k] = (re + 1j * im) / np.sqrt(n_sinusoids)
    return ChannelRealization(gains, float(sigma2))


def calibrate_noise(ebn0_db: float, spectral_eff_bits_per_tone: float, avg_symbol_energy: float) -> float:
    """Noise variance per real dimension for a target Eb/N0."""
    eb = avg_symbol_energy / spectral_eff_bits_per_tone
    n0 = eb / (10.0 ** (ebn0_db / 10.0))
    return n0 / 2.0


def apply_channel(tx_positions: np.ndarray, realization: ChannelRealization, rng) -> np.ndarray:
    """y = h * x + n over the whole (units, K) grid, deterministic under rng."""
    x = np.asarray(tx_positions, dtype=np.complex128)
    h = realization.gains
    if x.shape != h.shape:
        raise LengthMismatch(f"tx grid {x.shape} vs channel grid {h.shape}")
    y = h * x
    if realization.sigma2 > 0.0:
        scale = np.sqrt(realization.sigma2)
        noise = rng.normal(0.0, scale, size=x.shape) + 1j * rng.normal(0.0, scale, size=x.shape)
        y = y + noise
    return y


class Interleaver:
    """Fixed-block symbol permutation: write row-wise, read column-wise.

    A partial final block keeps only its filled cells, so interleave and
    deinterleave are exact inverses at every length.
    """

    def __init__(self, rows: int = 32, cols: int = 16):
        if rows < 1 or cols < 1:
            raise LengthMismatch("interleaver needs positive block dimensions")
        self.rows = rows
        self.cols = cols
        self.block = rows * cols

    def _perm(self, length: int) -> np.ndarray:
        out = np.empty(length, dtype=np.int64)
        full = self.block
        pos = 0
        while pos < length:
            size = min(full, length - pos)
            cells = np.arange(size)
            r, c = cells // self.cols, cells % self.cols
            out[pos : pos + size] = pos + np.lexsort((r, c))
            pos += size
        return out

    def interleave(self, seq: np.ndarray) -> np.ndarray:
        seq = np.asarray(seq)
        return seq[self._perm(len(seq))]

    def deinterleave(self, seq: np.ndarray) -> np.ndarray:
        seq = np.asarray(seq)
        perm = self._perm(len(seq))
        out = np.empty_like(seq)
        out[perm] = seq
        return out
