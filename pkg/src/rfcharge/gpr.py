"""Gaussian process regression with an RBF kernel over short sliding windows
of (slot index, value) pairs: exact posterior mean/variance via a Cholesky
factorization, no hyperparameter optimization.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

_VARIANCE_FLOOR = 1e-12
_STD_FLOOR = 1e-12


@dataclass(frozen=True)
class GprHyperparams:
    """Fixed kernel and noise settings.

    lengthscale is in slot units. signal_variance None means "use the
    window's sample variance"; noise_variance None means noise_ratio times
    the signal variance. jitter_ratio scales the diagonal stabilizer.
    """

    lengthscale: float = 3.0
    signal_variance: float | None = None
    noise_variance: float | None = None
    noise_ratio: float = 1e-2
    jitter_ratio: float = 1e-8

    def validate(self) -> None:
        if not self.lengthscale > 0:
            raise ValueError("lengthscale must be > 0")
        if self.signal_variance is not None and not self.signal_variance > 0:
            raise ValueError("signal variance must be > 0 when given")
        if self.noise_variance is not None and self.noise_variance < 0:
            raise ValueError("noise variance must be >= 0 when given")
        if self.noise_ratio < 0 or self.jitter_ratio < 0:
            raise ValueError("noise and jitter ratios must be >= 0")


def rbf_kernel(qa: np.ndarray, qb: np.ndarray, lengthscale: float,
               signal_variance: float = 1.0) -> np.ndarray:
    """k(q, q') = s^2 exp(-(q - q')^2 / (2 l^2)) for all pairs."""
    qa = np.asarray(qa, dtype=float).reshape(-1, 1)
    qb = np.asarray(qb, dtype=float).reshape(1, -1)
    return signal_variance * np.exp(-0.5 * ((qa - qb) / lengthscale) ** 2)


class GprModel:
    """Posterior of a GP fitted to one window.

    The kernel matrix factors as s^2 * C with C unit-diagonal, so the
    Cholesky factor of C + ((noise + jitter)/s^2) I serves any target
    vector over the same inputs; `refit_targets` exploits that.
    """

    def __init__(self, q, q_center, p_mean, p_std, alpha, chol, hyper,
                 signal_variance, noise_variance, standardize):
        self._q = q                  # centered training inputs
        self._q_center = q_center
        self._p_mean = p_mean
        self._p_std = p_std
        self._alpha = alpha
        self._chol = chol
        self._standardize = standardize
        self.hyper = hyper
        self.signal_variance = signal_variance
        self.noise_variance = noise_variance

    @classmethod
    def fit(cls, window_q, window_p, hyper: GprHyperparams = GprHyperparams(),
            standardize: bool = True) -> "GprModel":
        """Fit one window. Inputs are centered (the kernel is stationary, so
        only differences matter); with standardize=True targets are scaled to
        zero mean / unit variance and predictions are mapped back.

        Raises np.linalg.LinAlgError if the stabilized kernel matrix is not
        positive definite.
        """
        hyper.validate()
        q = np.asarray(window_q, dtype=float).ravel()
        p = np.asarray(window_p, dtype=float).ravel()
        if q.size != p.size or q.size == 0:
            raise ValueError("window inputs and targets must be equal-length "
                             "and non-empty")
        q_center = float(q.mean())
        qc = q - q_center
        if standardize:
            p_mean = float(p.mean())
            p_std = float(p.std())
            if p_std < _STD_FLOOR:
                p_std = 1.0
        else:
            p_mean, p_std = 0.0, 1.0
        y = (p - p_mean) / p_std

        if hyper.signal_variance is not None:
            s2 = hyper.signal_variance
        else:
            s2 = max(float(np.var(y)), _VARIANCE_FLOOR)
        noise = (hyper.noise_variance if hyper.noise_variance is not None
                 else hyper.noise_ratio * s2)

        corr = rbf_kernel(qc, qc, hyper.lengthscale, 1.0)
        stabilized = corr + ((noise / s2) + hyper.jitter_ratio) * np.eye(q.size)
        chol = np.linalg.cholesky(stabilized)
        alpha = cho_solve((chol, True), y, check_finite=False)
        return cls(qc, q_center, p_mean, p_std, alpha, chol, hyper, s2, noise,
                   standardize)

    def refit_targets(self, window_p) -> "GprModel":
        """New targets over the same inputs, reusing the factorization.

        Valid because the posterior mean depends on s^2 only through the
        noise-to-signal ratio, which is held fixed here.
        """
        p = np.asarray(window_p, dtype=float).ravel()
        if p.size != self._q.size:
            raise ValueError("target length does not match the fitted window")
        if self._standardize:
            p_mean = float(p.mean())
            p_std = float(p.std())
            if p_std < _STD_FLOOR:
                p_std = 1.0
        else:
            p_mean, p_std = 0.0, 1.0
        y = (p - p_mean) / p_std
        alpha = cho_solve((self._chol, True), y, check_finite=False)
        return GprModel(self._q, self._q_center, p_mean, p_std, alpha,
                        self._chol, self.hyper, self.signal_variance,
                        self.noise_variance, self._standardize)

    def predict(self, q_star, return_std: bool = False):
        """Posterior mean (and optionally stddev) at the query slots."""
        q_star = np.asarray(q_star, dtype=float)
        scalar = q_star.ndim == 0
        qs = np.atleast_1d(q_star) - self._q_center
        corr = rbf_kernel(qs, self._q, self.hyper.lengthscale, 1.0)
        mean = self._p_mean + self._p_std * (corr @ self._alpha)
        if not return_std:
            return float(mean[0]) if scalar else mean
        v = solve_triangular(self._chol, corr.T, lower=True, check_finite=False)
        var = self.signal_variance * np.maximum(0.0, 1.0 - np.sum(v * v, axis=0))
        std = self._p_std * np.sqrt(var)
        if scalar:
            return float(mean[0]), float(std[0])
        return mean, std
