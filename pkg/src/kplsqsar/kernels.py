"""Kernel functions, Gram matrices and feature-space centering."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

FAMILIES = ("linear", "gaussian", "exponential")


@dataclass(frozen=True)
class KernelSpec:
    family: str = "gaussian"
    eta: float | None = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown kernel family {self.family!r}; choose from {FAMILIES}")
        if self.family == "linear":
            object.__setattr__(self, "eta", None)
        else:
            if self.eta is None or not math.isfinite(self.eta) or self.eta <= 0:
                raise ConfigError(f"{self.family} kernel needs a positive finite eta, got {self.eta!r}")
            object.__setattr__(self, "eta", float(self.eta))

    @property
    def uses_distance(self):
        return self.family != "linear"


@dataclass(frozen=True)
class KernelMatrix:
    values: np.ndarray
    spec: KernelSpec

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DataError(f"kernel matrix must be square, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def size(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class KernelCentering:
    """Statistics of a training kernel needed to center cross-kernels."""

    column_means: np.ndarray
    grand_mean: float


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise DataError("kernel input contains non-finite values")


def _sq_norm(d):
    return np.einsum("...i,...i->...", d, d)


def _from_sq_distance(spec, d2):
    if spec.family == "gaussian":
        return np.exp(-d2 / (2.0 * spec.eta**2))
    return np.exp(-np.sqrt(d2) / (2.0 * spec.eta))


def kernel_eval(spec, x, xbar):
    """Evaluate the kernel on a single pair of feature vectors."""
    x = np.asarray(x, dtype=float).ravel()
    xbar = np.asarray(xbar, dtype=float).ravel()
    if x.shape != xbar.shape:
        raise DataError(f"vectors differ in length: {x.shape[0]} vs {xbar.shape[0]}")
    _check_finite(x, xbar)
    if spec.family == "linear":
        return float(np.einsum("i,i->", x, xbar))
    return float(_from_sq_distance(spec, _sq_norm(x - xbar)))


def pairwise_sq_distances(X):
    """Squared Euclidean distances between the rows of ``X``.

    Only the upper triangle is computed; the result is exactly symmetric.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    D = np.zeros((n, n))
    for i in range(n - 1):
        D[i, i + 1 :] = _sq_norm(X[i + 1 :] - X[i])
    return D + D.T


def cross_sq_distances(A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape[1] != B.shape[1]:
        raise DataError(f"feature counts differ: {A.shape[1]} vs {B.shape[1]}")
    out = np.empty((A.shape[0], B.shape[0]))
    for i in range(A.shape[0]):
        out[i] = _sq_norm(B - A[i])
    return out


def linear_gram(X):
    """``X @ X.T`` symmetrized from its upper triangle."""
    X = np.asarray(X, dtype=float)
    G = np.triu(X @ X.T)
    return G + np.triu(G, 1).T


def kernel_from_sq_distances(spec, D2):
    if not spec.uses_distance:
        raise ConfigError("linear kernel is not a function of distance")
    return _from_sq_distance(spec, D2)


def kernel_matrix(spec, X):
    """Square kernel matrix over the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 1:
        raise DataError("kernel matrix needs at least one sample")
    _check_finite(X)
    if spec.family == "linear":
        return KernelMatrix(linear_gram(X), spec)
    return KernelMatrix(_from_sq_distance(spec, pairwise_sq_distances(X)), spec)


def cross_kernel_matrix(spec, X_new, X_train):
    """Kernel values between new rows (m) and training rows (n), shape (m, n)."""
    X_new = np.atleast_2d(np.asarray(X_new, dtype=float))
    X_train = np.atleast_2d(np.asarray(X_train, dtype=float))
    if X_new.shape[1] != X_train.shape[1]:
        raise DataError(
            f"new samples have {X_new.shape[1]} features, training has {X_train.shape[1]}"
        )
    _check_finite(X_new, X_train)
    if spec.family == "linear":
        return X_new @ X_train.T
    return _from_sq_distance(spec, cross_sq_distances(X_new, X_train))


def center_gram(V):
    """``H V H`` for a stack of square matrices ``(..., n, n)``.

    Returns the centered stack plus column means and grand means.
    """
    col = V.mean(axis=-2)
    grand = col.mean(axis=-1)
    Vc = V - col[..., None, :] - col[..., :, None] + grand[..., None, None]
    return 0.5 * (Vc + np.swapaxes(Vc, -1, -2)), col, grand


def center_cross(V_new, column_means):
    """Center cross-kernel rows ``(..., m, n)`` against training column means."""
    shifted = V_new - column_means[..., None, :]
    return shifted - shifted.mean(axis=-1, keepdims=True)


def center_kernel(K):
    """Center a training kernel in feature space.

    Returns the centered matrix ``H K H`` with ``H = I - 11'/n`` and the
    statistics :func:`center_cross_kernel` needs.
    """
    is_km = isinstance(K, KernelMatrix)
    V = K.values if is_km else np.asarray(K, dtype=float)
    Vc, col, grand = center_gram(V)
    out = KernelMatrix(Vc, K.spec) if is_km else Vc
    return out, KernelCentering(col, float(grand))


def center_cross_kernel(K_new, centering):
    """Apply ``(K_new - 11'K/n)(I - 11'/n)`` using stored training statistics."""
    return center_cross(np.atleast_2d(np.asarray(K_new, dtype=float)), centering.column_means)
