"""Seeded synthetic regression sets for benchmarks and demonstrations.

Real descriptor tables are strongly collinear, so the generators draw
features from a few latent factors plus isotropic noise.
"""

from __future__ import annotations

import numpy as np

from .dataset import Dataset

KINDS = ("nonlinear", "linear", "latent")


def _latent_features(rng, n, p, n_factors, feature_noise):
    Z = rng.standard_normal((n, n_factors))
    loadings = rng.standard_normal((n_factors, p))
    return Z, Z @ loadings + feature_noise * rng.standard_normal((n, p))


def _ids(n, prefix="s"):
    width = len(str(n))
    return tuple(f"{prefix}{i + 1:0{width}d}" for i in range(n))


def _noisy(rng, signal, noise):
    return signal + noise * signal.std() * rng.standard_normal(signal.shape[0])


def make_nonlinear(n, p, seed=0, noise=0.05, n_factors=3, feature_noise=0.5,
                   frequency=2.0, n_extra=0):
    """``y = sin(frequency * s) + noise`` with ``s`` a standardized random projection of X.

    ``noise`` is relative to the standard deviation of the noiseless
    response. With ``n_extra > 0`` a second, independent batch of samples
    from the same generator is returned as well.
    """
    rng = np.random.default_rng(seed)
    total = n + n_extra
    _, X = _latent_features(rng, total, p, n_factors, feature_noise)
    w = rng.standard_normal(p)
    s = X @ w
    s = (s - s[:n].mean()) / s[:n].std()
    y = _noisy(rng, np.sin(frequency * s), noise)
    return _split(X, y, n, n_extra)


def make_linear(n, p, seed=0, noise=0.0, n_factors=None, feature_noise=0.5, n_extra=0):
    """``y = X w + noise``; ``n_factors=None`` gives isotropic features."""
    rng = np.random.default_rng(seed)
    total = n + n_extra
    if n_factors is None:
        X = rng.standard_normal((total, p))
    else:
        _, X = _latent_features(rng, total, p, n_factors, feature_noise)
    y = X @ rng.standard_normal(p)
    if noise:
        y = _noisy(rng, y, noise)
    return _split(X, y, n, n_extra)


def make_latent(n, p, seed=0, n_components=2, noise=0.05, feature_noise=0.1, n_extra=0):
    """Response linear in ``n_components`` latent factors that also generate X.

    A linear PLS model with ``n_components`` components is the true model.
    """
    rng = np.random.default_rng(seed)
    total = n + n_extra
    Z, X = _latent_features(rng, total, p, n_components, feature_noise)
    y = _noisy(rng, Z @ rng.uniform(1.0, 2.0, n_components), noise)
    return _split(X, y, n, n_extra)


def _split(X, y, n, n_extra):
    names = tuple(f"x{j + 1}" for j in range(X.shape[1]))
    cal = Dataset(X[:n], y[:n], _ids(n), names)
    if not n_extra:
        return cal
    return cal, Dataset(X[n:], y[n:], _ids(n_extra, "p"), names)


def generate(kind, n, p, seed=0, **kw):
    if kind == "nonlinear":
        return make_nonlinear(n, p, seed, **kw)
    if kind == "linear":
        return make_linear(n, p, seed, **kw)
    if kind == "latent":
        return make_latent(n, p, seed, **kw)
    raise ValueError(f"unknown synthetic kind {kind!r}; choose from {KINDS}")
