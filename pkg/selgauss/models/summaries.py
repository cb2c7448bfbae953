"""
Marginal shape summaries of simulated values: moments, mode count, histogram and QQ tables
"""
from typing import Dict

import numpy as np
import pandas as pd
from scipy import integrate, stats
from scipy.signal import find_peaks

MODE_GRID = 512
MODE_PROMINENCE = 0.05


def count_modes(values: np.ndarray, prominence: float = MODE_PROMINENCE) -> int:
    """Local maxima of a kernel density estimate, ignoring bumps below prominence x peak height"""
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.size < 3 or np.ptp(values) == 0:
        return 1
    kde = stats.gaussian_kde(values)
    grid = np.linspace(values.min(), values.max(), MODE_GRID)
    density = kde(grid)
    # pad so that maxima at the range ends are found too
    padded = np.concatenate([[0.0], density, [0.0]])
    peaks, _ = find_peaks(padded, prominence=prominence * density.max())
    return max(1, int(peaks.size))


def marginal_moments(values: np.ndarray) -> Dict[str, float]:
    values = np.asarray(values, dtype=float).reshape(-1)
    return {
        "mean": float(np.mean(values)),
        "sd": float(np.std(values, ddof=1)) if values.size > 1 else 0.0,
        "skewness": float(stats.skew(values)),
        "excess_kurtosis": float(stats.kurtosis(values)),
        "n_modes": count_modes(values),
        "n_values": int(values.size),
    }


def histogram_table(values: np.ndarray, n_bins: int) -> pd.DataFrame:
    density, edges = np.histogram(np.asarray(values, dtype=float).reshape(-1), bins=n_bins, density=True)
    return pd.DataFrame({"bin_left": edges[:-1], "bin_right": edges[1:], "density": density})


def qq_table(values: np.ndarray) -> pd.DataFrame:
    """Sorted values against quantiles of the moment-matched Gaussian"""
    values = np.sort(np.asarray(values, dtype=float).reshape(-1))
    m = values.size
    probs = (np.arange(m) + 0.5) / m
    sd = np.std(values, ddof=1) if m > 1 else 1.0
    return pd.DataFrame({
        "probability": probs,
        "gaussian_quantile": np.mean(values) + sd * stats.norm.ppf(probs),
        "sample_quantile": values,
    })


def moment_matched_curve(values: np.ndarray, density: np.ndarray) -> np.ndarray:
    """Gaussian density with the mean and variance of a tabulated density"""
    values = np.asarray(values, dtype=float)
    density = np.asarray(density, dtype=float)
    mass = integrate.trapezoid(density, values)
    mean = integrate.trapezoid(values * density, values) / mass
    var = integrate.trapezoid((values - mean) ** 2 * density, values) / mass
    return stats.norm.pdf(values, mean, np.sqrt(var))
