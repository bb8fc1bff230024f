"""Model scoring, leave-one-out cross-validation and hyperparameter search."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import scale_features, scale_fit
from .errors import ConfigError, DataError, DegeneracyError, SearchFailure
from .kernels import (
    KernelSpec,
    center_cross,
    center_gram,
    cross_sq_distances,
    kernel_from_sq_distances,
    linear_gram,
    pairwise_sq_distances,
)
from .kpls import extract_components, prefix_predictions
from .simplex import nelder_mead_1d

FOLD_SCALING_MODES = ("strict", "global")
SIMPLEX_STEP = 0.5


def r_squared(y, z):
    """``1 - ||y - z||^2 / ||y - mean(y)||^2``; negative for worse-than-mean fits."""
    y = np.asarray(y, dtype=float).ravel()
    z = np.asarray(z, dtype=float).ravel()
    if y.shape != z.shape:
        raise DataError(f"response and prediction lengths differ: {y.shape[0]} vs {z.shape[0]}")
    if y.shape[0] < 2:
        raise DataError("r_squared needs at least two samples")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise DegeneracyError("r_squared is undefined for a constant response")
    return 1.0 - float(np.sum((y - z) ** 2)) / ss_tot


@dataclass
class CvResult:
    predictions: np.ndarray
    r2: float | None
    nu: int
    eta: float | None
    fold_failures: list = field(default_factory=list)

    @property
    def feasible(self):
        return self.r2 is not None


@dataclass(frozen=True)
class SearchConfig:
    nu_min: int = 1
    nu_max: int = 20
    eta_init: float | None = None
    eta_bounds: tuple | None = None
    simplex_tolerance: float = 1e-3
    max_simplex_evals: int = 60

    def __post_init__(self):
        if not 1 <= self.nu_min <= self.nu_max:
            raise ConfigError(f"empty nu range {self.nu_min}..{self.nu_max}")
        if self.simplex_tolerance <= 0:
            raise ConfigError("simplex_tolerance must be positive")
        if self.max_simplex_evals < 1:
            raise ConfigError("max_simplex_evals must be at least 1")
        if self.eta_init is not None and self.eta_init <= 0:
            raise ConfigError("eta_init must be positive")
        if self.eta_bounds is not None:
            lo, hi = self.eta_bounds
            if not 0 < lo <= hi:
                raise ConfigError(f"invalid eta bounds {self.eta_bounds}")
            if self.eta_init is not None and not lo <= self.eta_init <= hi:
                raise ConfigError(f"eta_init {self.eta_init} outside bounds {self.eta_bounds}")

    @property
    def nu_range(self):
        return range(self.nu_min, self.nu_max + 1)


class FoldPlan:
    """Kernel-independent geometry of every leave-one-out fold.

    Distances (or Gram matrices for the linear kernel) depend on the fold's
    scaling but not on eta or nu, so they are computed once and shared by
    every evaluation of a search. Folds are stacked on the leading axis.
    """

    def __init__(self, data, family, centering=False, scaling="mad", fold_scaling="strict"):
        if data.response is None:
            raise DataError("cross-validation needs a response column")
        n = data.n_samples
        if n < 3:
            raise DataError(f"leave-one-out needs at least 3 samples, got {n}")
        if fold_scaling not in FOLD_SCALING_MODES:
            raise ConfigError(f"unknown fold scaling {fold_scaling!r}; choose from {FOLD_SCALING_MODES}")
        KernelSpec(family, 1.0)
        self.family = family
        self.centering = centering
        self.n = n
        self.response = np.array(data.response, dtype=float)
        keep = np.array([np.delete(np.arange(n), i) for i in range(n)])
        self.y = self.response[keep]
        X = data.features
        m = n - 1
        self.train = np.empty((n, m, m))
        self.cross = np.empty((n, 1, m))
        dist = family != "linear"
        if fold_scaling == "global":
            Xs = scale_features(X, scale_fit(X, scaling))
            full = pairwise_sq_distances(Xs) if dist else linear_gram(Xs)
            for i in range(n):
                self.train[i] = full[np.ix_(keep[i], keep[i])]
                self.cross[i, 0] = full[i, keep[i]]
        else:
            for i in range(n):
                params = scale_fit(X[keep[i]], scaling)
                Xt = scale_features(X[keep[i]], params)
                xi = scale_features(X[i : i + 1], params)
                if dist:
                    self.train[i] = pairwise_sq_distances(Xt)
                    self.cross[i] = cross_sq_distances(xi, Xt)
                else:
                    self.train[i] = linear_gram(Xt)
                    self.cross[i] = xi @ Xt.T

    @property
    def max_nu(self):
        return self.n - 1

    def evaluate(self, eta, nus):
        """LOO results at kernel width ``eta`` for every count in ``nus``."""
        nus = sorted(set(int(v) for v in nus))
        if nus[0] < 1 or nus[-1] > self.max_nu:
            raise ConfigError(f"nu must lie in 1..{self.max_nu} for {self.n} samples")
        spec = KernelSpec(self.family, eta)
        if spec.uses_distance:
            K = kernel_from_sq_distances(spec, self.train)
            Kx = kernel_from_sq_distances(spec, self.cross)
        else:
            K, Kx = self.train, self.cross
        y = self.y
        offset = np.zeros(self.n)
        if self.centering:
            K, col, _ = center_gram(K)
            Kx = center_cross(Kx, col)
            offset = y.mean(axis=1)
            y = y - offset[:, None]
        T, U, achieved = extract_components(K, y, nus[-1])
        # a fold that stops early keeps its shorter model, so every count
        # up to nu_max may be needed
        counts = range(1, nus[-1] + 1)
        preds = prefix_predictions(T, U, K, y, Kx, counts, achieved)
        results = {}
        for nu in nus:
            eff = np.minimum(achieved, nu)
            z = np.full(self.n, np.nan)
            failures = []
            for i in range(self.n):
                if eff[i] == 0:
                    failures.append((i, "deflated K y vanished at component 1"))
                    continue
                zi, ok = preds[int(eff[i])]
                if not ok[i]:
                    failures.append((i, f"ill-conditioned latent system at {eff[i]} components"))
                    continue
                z[i] = zi[i, 0] + offset[i]
            r2 = None if failures else r_squared(self.response, z)
            results[nu] = CvResult(z, r2, nu, spec.eta, failures)
        return results


def loo_cv(data, spec, nu, centering=False, scaling="mad", fold_scaling="strict"):
    """Leave-one-out predictions and their assembled r-squared.

    Each fold refits scaling on its training samples (``fold_scaling='strict'``)
    or reuses scaling fitted on all samples (``'global'``).
    """
    plan = FoldPlan(data, spec.family, centering, scaling, fold_scaling)
    return plan.evaluate(spec.eta, [nu])[nu]


def default_eta(data, family, scaling="mad"):
    """Kernel width placing the median pairwise distance at a moderate kernel value."""
    Xs = scale_features(data.features, scale_fit(data, scaling))
    d = np.sqrt(pairwise_sq_distances(Xs)[np.triu_indices(data.n_samples, 1)])
    med = float(np.median(d)) if d.size else 0.0
    if not med > 0:
        med = 1.0
    return med if family == "gaussian" else med / 2.0


def _resolve_eta(config, data, family, scaling):
    eta0 = config.eta_init if config.eta_init is not None else default_eta(data, family, scaling)
    lo, hi = config.eta_bounds if config.eta_bounds is not None else (eta0 * 1e-3, eta0 * 1e3)
    return eta0, (lo, hi)


def simplex_search_eta(objective, eta0, bounds, config):
    """Maximize ``objective(eta)`` (an r-squared or ``None``) over log eta.

    Returns ``(eta, r2, evaluations)``; raises :class:`SearchFailure` if no
    evaluated width was feasible.
    """

    def loss(log_eta):
        r2 = objective(math.exp(log_eta))
        return math.inf if r2 is None else -r2

    res = nelder_mead_1d(
        loss,
        math.log(eta0),
        SIMPLEX_STEP,
        config.simplex_tolerance,
        config.max_simplex_evals,
        width=lambda a, b: abs(math.exp(a) - math.exp(b)),
        bounds=(math.log(bounds[0]), math.log(bounds[1])),
    )
    if not math.isfinite(res.fx):
        raise SearchFailure(f"all {res.evaluations} kernel widths were infeasible")
    return math.exp(res.x), -res.fx, res.evaluations


class _CachedPlan:
    def __init__(self, plan, nus):
        self.plan = plan
        self.nus = list(nus)
        self.cache = {}

    def __call__(self, eta):
        key = None if eta is None else float(eta)
        if key not in self.cache:
            self.cache[key] = self.plan.evaluate(key, self.nus)
        return self.cache[key]


def optimize_eta(data, family, nu, config=None, centering=False, scaling="mad",
                 fold_scaling="strict"):
    """Best kernel width for a fixed component count by simplex search on LOO r-squared."""
    if family not in ("gaussian", "exponential"):
        raise ConfigError(f"eta search needs a gaussian or exponential kernel, got {family!r}")
    config = config or SearchConfig()
    plan = FoldPlan(data, family, centering, scaling, fold_scaling)
    evaluate = _CachedPlan(plan, [nu])
    eta0, bounds = _resolve_eta(config, data, family, scaling)
    try:
        return simplex_search_eta(lambda e: evaluate(e)[nu].r2, eta0, bounds, config)[:2]
    except SearchFailure as exc:
        raise SearchFailure(f"{family} kernel, nu={nu}: {exc}") from None


@dataclass
class SearchResult:
    nu: int
    eta: float | None
    cv: CvResult
    family: str
    grid: list
    settings: dict
    sample_ids: tuple
    response: np.ndarray

    @property
    def r2(self):
        return self.cv.r2


def search_hyperparameters(data, family, config=None, centering=False, scaling="mad",
                           fold_scaling="strict"):
    """Choose (nu, eta) maximizing LOO r-squared.

    Every nu in the configured range is tried; eta is simplex-searched per nu
    for the gaussian and exponential families. Ties go to the smaller nu,
    then the smaller eta.
    """
    config = config or SearchConfig()
    plan = FoldPlan(data, family, centering, scaling, fold_scaling)
    nus = [v for v in config.nu_range if v <= plan.max_nu]
    if not nus:
        raise ConfigError(
            f"nu range {config.nu_min}..{config.nu_max} exceeds the {plan.max_nu} training samples per fold"
        )
    evaluate = _CachedPlan(plan, nus)
    grid = []
    if family == "linear":
        for nu in nus:
            cv = evaluate(None)[nu]
            grid.append({"nu": nu, "eta": None, "r2": cv.r2, "evaluations": 1})
        eta0, bounds = None, None
    else:
        eta0, bounds = _resolve_eta(config, data, family, scaling)
        for nu in nus:
            try:
                eta, r2, n_eval = simplex_search_eta(
                    lambda e, nu=nu: evaluate(e)[nu].r2, eta0, bounds, config
                )
            except SearchFailure:
                grid.append({"nu": nu, "eta": None, "r2": None, "evaluations": config.max_simplex_evals})
                continue
            grid.append({"nu": nu, "eta": eta, "r2": r2, "evaluations": n_eval})

    feasible = [g for g in grid if g["r2"] is not None]
    if not feasible:
        raise SearchFailure(f"every configuration infeasible for the {family} kernel")
    best = min(feasible, key=lambda g: (-g["r2"], g["nu"], g["eta"] or 0.0))
    cv = evaluate(best["eta"])[best["nu"]]
    settings = {
        "centering": bool(centering),
        "scaling": scaling,
        "fold_scaling": fold_scaling,
        "nu_range": [config.nu_min, config.nu_max],
        "eta_init": eta0,
        "eta_bounds": None if bounds is None else list(bounds),
        "simplex_tolerance": config.simplex_tolerance,
        "max_simplex_evals": config.max_simplex_evals,
    }
    return SearchResult(best["nu"], best["eta"], cv, family, grid, settings,
                        tuple(data.sample_ids), np.array(data.response))


def _num(v):
    return None if v is None or (isinstance(v, float) and math.isnan(v)) else float(v)


def search_report(result):
    """Structured report of a search with stable key order."""
    cv = result.cv
    return {
        "format": "kplsqsar-cv-report",
        "version": 1,
        "kernel": result.family,
        "settings": result.settings,
        "best": {"nu": result.nu, "eta": _num(result.eta), "loo_r2": _num(cv.r2)},
        "grid": [{k: (_num(v) if k in ("eta", "r2") else v) for k, v in g.items()} for g in result.grid],
        "predictions": [
            {"id": sid, "response": float(y), "loo_prediction": _num(z)}
            for sid, y, z in zip(result.sample_ids, result.response, cv.predictions)
        ],
        "fold_failures": [{"index": int(i), "reason": r} for i, r in cv.fold_failures],
    }


def dump_report(report):
    return json.dumps(report, indent=2) + "\n"
