# Typing
from typing import Sequence, Tuple
# Numeric
import math
import numpy as np
from scipy import signal, special

# Params
_DIRECT_CONVOLUTION_LIMIT = 512


class NumericUtils():
    @staticmethod
    def convolve(a :np.ndarray,
                 b :np.ndarray,
                 method :str = "auto") -> np.ndarray:
        """
        Full linear convolution of two mass vectors.
        :param a: First vector
        :param b: Second vector
        :param method: "direct", "fft" or "auto" (direct while the shorter vector has at most 512 points)
        :return: np.ndarray of length len(a) + len(b) - 1
        """
        if method == "auto":
            method = "direct" if min(len(a), len(b)) <= _DIRECT_CONVOLUTION_LIMIT else "fft"
        if method == "direct":
            return np.convolve(a, b)
        if method != "fft":
            raise ValueError(f"Unknown convolution method {method}!")
        # Round-off of the transform leaves tiny negative masses
        return np.clip(signal.fftconvolve(a, b), 0.0, None)

    @staticmethod
    def integer_log_grid(lo :int,
                         hi :int,
                         num :int) -> np.ndarray:
        """Distinct integers, roughly log-spaced on [lo, hi]."""
        return np.unique(np.round(np.geomspace(lo, hi, num)).astype(np.int64))

    @staticmethod
    def power_tail_remainder(ks :np.ndarray,
                             terms :np.ndarray,
                             exponents :Sequence[float],
                             first :int) -> float:
        """
        Least-squares fit of terms ~ sum_j C_j k^{-exponents[j]}, summed over k >= first.
        :param ks: Indices of the fitted terms
        :type ks: np.ndarray
        :param terms: Terms at ks
        :type terms: np.ndarray
        :param exponents: Decay exponents, leading one first
        :type exponents: Sequence[float]
        :param first: First index of the remainder
        :type first: int
        :return: float, clipped at 0
        """
        lead = exponents[0]
        scale = float(ks[-1])
        # Columns in k / scale stay between 1 and 4 on the fitting windows
        design = np.column_stack([(ks / scale) ** (lead - p) for p in exponents])
        coef, _, _, _ = np.linalg.lstsq(design, terms * ks ** lead, rcond = None)
        # Return the fitted remainder
        remainder = sum(b * scale ** (p - lead) * NumericUtils.power_tail_sum(first, p)
                        for b, p in zip(coef, exponents))
        return max(float(remainder), 0.0)

    @staticmethod
    def power_tail_sum(first :int, exponent :float) -> float:
        """sum_{k >= first} k^{-exponent} through the Hurwitz zeta function."""
        return float(special.zeta(exponent, first))

    @staticmethod
    def mean_and_stderr(total :float,
                        total_sq :float,
                        count :int) -> Tuple[float, float]:
        """Sample mean and its standard error from running sums."""
        if count <= 0:
            return math.nan, math.nan
        mean = total / count
        if count == 1:
            return mean, 0.0
        var = max(total_sq / count - mean * mean, 0.0) * count / (count - 1)
        return mean, math.sqrt(var / count)

