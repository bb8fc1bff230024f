"""Kernel PLS: latent score extraction with deflation, coefficients, prediction.

Single-response KPLS reduces each eigenproblem ``(K y y') t = lambda t`` to
``t = K y / ||K y||`` because ``y y'`` has rank one. All extraction code
accepts stacks of problems (leading batch dimensions) so cross-validation
folds can be fitted together.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset, ScalingParams, scale_features, scale_fit
from .errors import ConfigError, DataError, DegeneracyError, EarlyStopWarning
from .kernels import (
    KernelCentering,
    KernelMatrix,
    KernelSpec,
    center_cross,
    center_gram,
    cross_kernel_matrix,
    kernel_matrix,
)

STOP_TOL = 1e-12
COND_LIMIT = 1e12
FORMAT_VERSION = 1


def deflate_kernel(K, t):
    """Explicit rank-one deflation ``(I - t t') K (I - t t')`` for unit ``t``."""
    Kt = K @ t
    return K - np.outer(t, Kt) - np.outer(Kt, t) + (t @ Kt) * np.outer(t, t)


def _bmv(A, x):
    return np.matmul(A, x[..., None])[..., 0]


def _project_out(v, T):
    # v - T (T' v): removes the span of the already-extracted scores
    return v - _bmv(T, np.einsum("...ij,...i->...j", T, v))


def extract_components(K, y, nu, tol=STOP_TOL):
    """Extract up to ``nu`` score/weight pairs from kernel ``K`` and response ``y``.

    Works on stacks: ``K`` is ``(..., n, n)`` and ``y`` is ``(..., n)``.

    Parameters
    ----------
    K : ndarray
        Kernel matrices, already centered if centering is wanted.
    y : ndarray
        Responses (centered to match ``K`` if applicable).
    nu : int
        Number of latent components requested.
    tol : float
        Extraction stops for a problem once ``||K_defl y_defl||`` falls below
        ``tol * ||K||_F * ||y||``.

    Returns
    -------
    T, U : ndarray, shape (..., n, nu)
        Unit-norm orthogonal scores and weights ``u = y y' t``. Columns past a
        problem's achieved count are zero.
    achieved : ndarray of int, shape (...)
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    batch, n = y.shape[:-1], y.shape[-1]
    if K.shape != batch + (n, n):
        raise DataError(f"kernel shape {K.shape} does not match response shape {y.shape}")
    T = np.zeros(batch + (n, nu))
    U = np.zeros(batch + (n, nu))
    achieved = np.zeros(batch, dtype=int)
    alive = np.ones(batch, dtype=bool)
    ref = tol * np.linalg.norm(K, axis=(-2, -1)) * np.linalg.norm(y, axis=-1)
    yk = y.copy()
    for k in range(nu):
        # K_k y_k == (I - TT') K (I - TT') y: the product of the rank-one
        # deflations collapses because the columns of T are orthonormal
        v = _project_out(_bmv(K, yk), T[..., :k])
        norm = np.linalg.norm(v, axis=-1)
        alive &= (norm > ref) & (norm > 0)
        if not alive.any():
            break
        t = v / np.where(alive, norm, 1.0)[..., None]
        t = _project_out(t, T[..., :k])
        t /= np.where(alive, np.linalg.norm(t, axis=-1), 1.0)[..., None]
        ty = np.einsum("...i,...i->...", t, y)
        t *= np.where(ty < 0, -1.0, 1.0)[..., None]
        t *= alive[..., None]
        tyk = np.einsum("...i,...i->...", yk, t)
        T[..., k] = t
        U[..., k] = yk * tyk[..., None]
        yk = yk - t * tyk[..., None]
        achieved += alive
    return T, U, achieved


def kpls_fit(K, y, nu, tol=STOP_TOL):
    """Fit the score matrices of a single KPLS model.

    Returns ``(T, U)`` with as many columns as components were extracted. If
    extraction degenerates after at least one component a
    :class:`EarlyStopWarning` is issued and the shorter matrices returned.
    """
    V = K.values if isinstance(K, KernelMatrix) else np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n = y.shape[0]
    if V.shape != (n, n):
        raise DataError(f"kernel is {V.shape}, response has length {n}")
    if not 1 <= nu <= n:
        raise ConfigError(f"nu must be between 1 and the sample count {n}, got {nu}")
    T, U, achieved = extract_components(V, y, nu, tol)
    got = int(achieved)
    if got == 0:
        raise DegeneracyError("deflated K y vanished at component 1", components=0)
    if got < nu:
        warnings.warn(
            f"KPLS stopped after {got} of {nu} components", EarlyStopWarning, stacklevel=2
        )
    return T[:, :got], U[:, :got]


def _latent_system(T, U, K):
    # Columns of U are rescaled to unit norm; beta is invariant to this
    # and the condition estimate is no longer inflated by shrinking y.
    scale = np.linalg.norm(U, axis=-2)
    scale = np.where(scale > 0, scale, 1.0)
    Un = U / scale[..., None, :]
    M = np.swapaxes(T, -1, -2) @ K @ Un
    return Un, M


def _check_conditioning(M, label):
    cond = np.linalg.cond(M, 1)
    bad = ~np.isfinite(cond) | (cond > COND_LIMIT)
    if np.any(bad):
        raise DegeneracyError(
            f"T'KU is singular or ill-conditioned ({label} components, condition {np.max(cond):.3g})",
            components=label,
        )


def compute_beta(U, T, K, y):
    """Dual coefficients ``beta = U (T' K U)^-1 T' y``.

    ``K`` must be the kernel the scores were extracted from, before deflation.
    """
    V = K.values if isinstance(K, KernelMatrix) else np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    Un, M = _latent_system(T, U, V)
    _check_conditioning(M, T.shape[1])
    return Un @ np.linalg.solve(M, T.T @ y)


def _cond1(M, Minv):
    return np.abs(M).sum(axis=-2).max(axis=-1) * np.abs(Minv).sum(axis=-2).max(axis=-1)


def _stack_inverse(M, usable):
    safe = np.where(usable[..., None, None], M, np.eye(M.shape[-1]))
    try:
        return np.linalg.inv(safe)
    except np.linalg.LinAlgError:
        out = np.empty_like(safe)
        flat, flat_out = safe.reshape((-1,) + safe.shape[-2:]), out.reshape((-1,) + safe.shape[-2:])
        for i, A in enumerate(flat):
            try:
                flat_out[i] = np.linalg.inv(A)
            except np.linalg.LinAlgError:
                flat_out[i] = np.inf
        return out


def prefix_predictions(T, U, K, y, K_new, nus, achieved=None):
    """Predictions for several component counts from one extraction.

    The first ``nu`` columns of a ``nu_max`` fit equal a ``nu`` fit, so each
    count only needs the leading block of ``T' K U``. Stacked inputs:
    ``T, U`` ``(..., n, nu_max)``, ``K`` ``(..., n, n)``, ``y`` ``(..., n)``,
    ``K_new`` ``(..., m, n)``. Problems whose ``achieved`` count is below a
    requested ``nu`` are skipped for that count.

    Returns a dict ``nu -> (predictions (..., m), ok (...))`` where ``ok``
    flags problems whose latent system was usable and well conditioned.
    The condition test uses the 1-norm condition number.
    """
    Un, M = _latent_system(T, U, K)
    a = K_new @ Un
    b = np.einsum("...ij,...i->...j", T, y)
    if achieved is None:
        achieved = np.full(M.shape[:-2], M.shape[-1])
    out = {}
    for nu in nus:
        Mk = M[..., :nu, :nu]
        usable = achieved >= nu
        Minv = _stack_inverse(Mk, usable)
        cond = _cond1(Mk, Minv)
        ok = usable & np.isfinite(cond) & (cond <= COND_LIMIT)
        coef = _bmv(np.where(ok[..., None, None], Minv, 0.0), b[..., :nu])
        out[nu] = (_bmv(a[..., :nu], coef), ok)
    return out


@dataclass(frozen=True)
class KplsModel:
    T: np.ndarray
    U: np.ndarray
    beta: np.ndarray
    nu: int
    spec: KernelSpec
    scaling: ScalingParams
    train_features: np.ndarray
    centering_enabled: bool = False
    response_mean: float = 0.0
    kernel_centering: KernelCentering | None = None
    requested_nu: int | None = None
    feature_names: tuple = ()

    @property
    def n_train(self):
        return self.train_features.shape[0]


def fit_kpls(data, spec, nu, centering=False, scaling="mad"):
    """Scale ``data``, build its kernel and fit a KPLS model with ``nu`` components."""
    if data.response is None:
        raise DataError("fitting needs a response column")
    n = data.n_samples
    if not isinstance(nu, (int, np.integer)) or not 1 <= nu <= n:
        raise ConfigError(f"nu must be an integer between 1 and the sample count {n}, got {nu}")
    params = scaling if isinstance(scaling, ScalingParams) else scale_fit(data, scaling)
    Xs = scale_features(data.features, params)
    K = kernel_matrix(spec, Xs).values
    y = np.array(data.response, dtype=float)
    kc, y_mean = None, 0.0
    if centering:
        K, col, grand = center_gram(K)
        kc = KernelCentering(col, float(grand))
        y_mean = float(y.mean())
        y = y - y_mean
    T, U = kpls_fit(K, y, int(nu))
    beta = compute_beta(U, T, K, y)
    return KplsModel(
        T=T,
        U=U,
        beta=beta,
        nu=T.shape[1],
        spec=spec,
        scaling=params,
        train_features=Xs,
        centering_enabled=bool(centering),
        response_mean=y_mean,
        kernel_centering=kc,
        requested_nu=int(nu),
        feature_names=tuple(data.feature_names),
    )


def pls_fit(data, nu, centering=False, scaling="mad"):
    """Linear PLS: KPLS with the dot-product kernel."""
    return fit_kpls(data, KernelSpec("linear"), nu, centering=centering, scaling=scaling)


def kpls_predict(model, new_features):
    """Predict responses for raw (unscaled) feature rows."""
    X = new_features.features if isinstance(new_features, Dataset) else new_features
    X = np.atleast_2d(np.asarray(X, dtype=float))
    p = model.train_features.shape[1]
    if X.shape[1] != p:
        raise DataError(f"prediction data has {X.shape[1]} features, model expects {p}")
    Kx = cross_kernel_matrix(model.spec, scale_features(X, model.scaling), model.train_features)
    if model.centering_enabled:
        Kx = center_cross(Kx, model.kernel_centering.column_means)
    return Kx @ model.beta + model.response_mean


def _arr(a):
    return np.asarray(a, dtype=float).tolist()


def model_to_dict(model):
    # float repr is shortest round-trip, so reals reload bit-exactly
    kc = model.kernel_centering
    return {
        "format": "kplsqsar-model",
        "version": FORMAT_VERSION,
        "kernel": {"family": model.spec.family, "eta": model.spec.eta},
        "nu": model.nu,
        "requested_nu": model.requested_nu,
        "centering_enabled": model.centering_enabled,
        "response_mean": model.response_mean,
        "scaling": {
            "mode": model.scaling.mode,
            "medians": _arr(model.scaling.medians),
            "deviations": _arr(model.scaling.deviations),
        },
        "kernel_centering": None
        if kc is None
        else {"column_means": _arr(kc.column_means), "grand_mean": kc.grand_mean},
        "feature_names": list(model.feature_names),
        "beta": _arr(model.beta),
        "T": _arr(model.T),
        "U": _arr(model.U),
        "train_features": _arr(model.train_features),
    }


def model_from_dict(d):
    if d.get("format") != "kplsqsar-model":
        raise DataError("not a kplsqsar model document")
    if d.get("version") != FORMAT_VERSION:
        raise DataError(f"unsupported model format version {d.get('version')!r}")
    try:
        kc = d["kernel_centering"]
        n = len(d["beta"])
        nu = int(d["nu"])

        def mat(key, cols):
            return np.array(d[key], dtype=float).reshape(n, cols)

        return KplsModel(
            T=mat("T", nu),
            U=mat("U", nu),
            beta=np.array(d["beta"], dtype=float),
            nu=nu,
            spec=KernelSpec(d["kernel"]["family"], d["kernel"]["eta"]),
            scaling=ScalingParams(
                d["scaling"]["medians"], d["scaling"]["deviations"], mode=d["scaling"]["mode"]
            ),
            train_features=mat("train_features", len(d["scaling"]["medians"])),
            centering_enabled=bool(d["centering_enabled"]),
            response_mean=float(d["response_mean"]),
            kernel_centering=None
            if kc is None
            else KernelCentering(np.array(kc["column_means"], dtype=float), float(kc["grand_mean"])),
            requested_nu=d.get("requested_nu"),
            feature_names=tuple(d.get("feature_names", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed model document: {exc}") from exc


def save_model(model, path):
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n", encoding="utf-8")


def load_model(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such model file: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid model document: {exc}") from exc
    return model_from_dict(doc)
