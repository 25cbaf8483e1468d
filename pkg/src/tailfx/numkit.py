"""Numerical primitives: pinball loss, quantile regression, the generalized
Pareto distribution, covariate-linked GPD maximum likelihood and least squares.

Everything here is a pure function of its inputs (plus an explicit seed where
random draws are involved).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize

from ._rng import SeedLike, as_generator
from .errors import (
    ConvergenceError,
    DomainError,
    InsufficientDataError,
    SingularDesignError,
)

#: Below this absolute shape value the exponential limit of the GPD likelihood is used.
SHAPE_EPS = 1e-6

#: Objective value returned for parameters outside the likelihood support.
SUPPORT_PENALTY = 1e10

#: Largest accepted gradient component of the mean negative log-likelihood at the optimum.
MLE_GRAD_TOL = 1e-4


def _check_level(level: float) -> float:
    level = float(level)
    if not 0.0 < level < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {level}")
    return level


def _as_design(design) -> np.ndarray:
    X = np.asarray(design, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise DomainError("design must be a 2-D array")
    return X


def _check_full_rank(X: np.ndarray) -> None:
    n, p = X.shape
    if n <= p:
        raise SingularDesignError(f"need more rows than columns, got {n}x{p}")
    s = np.linalg.svd(X, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= s[0] * max(n, p) * np.finfo(float).eps:
        raise SingularDesignError("design matrix is rank deficient")


# ---------------------------------------------------------------------------
# Pinball loss and quantile regression
# ---------------------------------------------------------------------------


def pinball_loss(residual, level: float):
    """Check loss ``r * (q - 1{r < 0})``; vectorised over ``residual``."""
    level = _check_level(level)
    r = np.asarray(residual, dtype=float)
    out = np.where(r >= 0, level * r, (level - 1.0) * r)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class QuantileFit:
    """Linear conditional-quantile model ``design @ coefficients``."""

    coefficients: np.ndarray
    level: float
    has_intercept: bool
    loss: float
    verified: bool = False

    def __post_init__(self):
        _check_level(self.level)

    def predict(self, design) -> np.ndarray:
        X = _as_design(design)
        if X.shape[1] != self.coefficients.size:
            raise DomainError(
                f"design has {X.shape[1]} columns, model expects {self.coefficients.size}"
            )
        return X @ self.coefficients


def _total_pinball(r: np.ndarray, level: float, w=1.0) -> float:
    return float(np.sum(w * np.where(r >= 0, level * r, (level - 1.0) * r)))


def _interpolating_basis(X: np.ndarray, order: np.ndarray) -> np.ndarray | None:
    """First ``p`` rows in ``order`` that form a nonsingular square system."""
    p = X.shape[1]
    head = order[:p]
    if np.linalg.matrix_rank(X[head]) == p:
        return head
    chosen: list[int] = []
    for i in order:
        trial = chosen + [int(i)]
        if np.linalg.matrix_rank(X[trial]) == len(trial):
            chosen = trial
            if len(chosen) == p:
                return np.asarray(chosen)
    return None


def _edge_slope(r, a, w, level, tiny):
    """Right derivative at t=0 of ``sum w * pinball(r - t a)``."""
    wa = w * a
    pos = r > tiny
    neg = r < -tiny
    zero = ~(pos | neg)
    slope = -level * wa[pos].sum() + (1.0 - level) * wa[neg].sum()
    az = wa[zero]
    slope += (1.0 - level) * az[az > 0].sum() - level * az[az < 0].sum()
    return slope


def _vertex_descent(X, y, w, r0, level, max_steps):
    """Exact descent along the edges of the weighted pinball-loss polyhedron.

    Starts at the vertex interpolating the ``p`` smallest entries of ``r0`` and
    repeatedly swaps one basis observation for the breakpoint that minimises the
    loss along the steepest descending edge. Returns ``(coef, loss, optimal)``
    or None when no interpolating basis exists.
    """
    n, p = X.shape
    h = _interpolating_basis(X, np.argsort(np.abs(r0), kind="stable"))
    if h is None:
        return None
    h = np.array(h)
    tiny = 1e-11 * (np.max(np.abs(y)) + 1.0)
    for _ in range(max_steps):
        Xh = X[h]
        coef = np.linalg.solve(Xh, y[h])
        r = y - X @ coef
        r[h] = 0.0
        in_basis = np.zeros(n, dtype=bool)
        in_basis[h] = True
        psi = np.where(r > tiny, level, np.where(r < -tiny, level - 1.0, 0.0))
        psi[in_basis] = 0.0
        psi *= w
        Xh_inv = np.linalg.inv(Xh)
        v = Xh_inv.T @ (-(X.T @ psi))
        # edge j with sign s moves basis residual j by -s*t; its slope is
        # (1 - level) + v_j for s=+1 and level - v_j for s=-1
        wh = w[h]
        gains = np.concatenate([(1.0 - level) * wh + v, level * wh - v])
        order = np.argsort(gains, kind="stable")
        moved = False
        for idx in order:
            if gains[idx] >= -1e-12:
                break
            j, sgn = (idx, 1.0) if idx < p else (idx - p, -1.0)
            d = sgn * Xh_inv[:, j]
            a = X @ d
            a[h] = 0.0
            a[h[j]] = sgn
            slope = _edge_slope(r, a, w, level, tiny)
            if slope >= -1e-12:
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(np.abs(a) > 0, r / a, -1.0)
            cand = np.flatnonzero((t > 0) & ~in_basis)
            if cand.size == 0:
                continue
            cand = cand[np.argsort(t[cand], kind="stable")]
            cum = slope + np.cumsum(w[cand] * np.abs(a[cand]))
            stop = int(np.searchsorted(cum, 0.0, side="left"))
            if stop >= cand.size:
                stop = cand.size - 1
            h = h.copy()
            h[j] = cand[stop]
            moved = True
            break
        if not moved:
            return coef, _total_pinball(r, level, w), True
    coef = np.linalg.solve(X[h], y[h])
    return coef, _total_pinball(y - X @ coef, level, w), False


def quantile_regression(
    design,
    response,
    level: float,
    *,
    max_iter: int = 10,
    n_stages: int = 3,
    max_vertex_steps: int | None = None,
) -> QuantileFit:
    """Minimise the summed pinball loss of ``response - design @ b``.

    Iteratively reweighted least squares on an epsilon-smoothed check loss
    (epsilon shrinks tenfold per stage) supplies a warm start. The ``p``
    observations closest to that fit then define an interpolating vertex, from
    which exact edge-descent steps continue until the basis multipliers certify
    a zero subgradient. The returned coefficients are therefore an exact
    minimiser up to floating point.

    Parameters
    ----------
    design : (n, p) array
        Regressors; include a column of ones for an intercept.
    response : (n,) array
    level : float
        Quantile level in (0, 1).
    max_iter : int
        Reweighting iterations per smoothing stage.
    n_stages : int
        Number of smoothing stages (the last uses ``spread * 10**-n_stages``).
    max_vertex_steps : int, optional
        Budget of basis exchanges; defaults to ``10 * n``.

    Raises
    ------
    SingularDesignError
        If ``design`` is rank deficient or has ``n <= p``.
    ConvergenceError
        If the vertex descent exhausts its budget without a certificate. The
        best iterate found is attached as ``last_iterate``.
    """
    level = _check_level(level)
    X = _as_design(design)
    y = np.asarray(response, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise DomainError("design and response lengths differ")
    _check_full_rank(X)
    n, p = X.shape
    has_intercept = bool(np.all(X[:, 0] == 1.0))

    spread = float(np.median(np.abs(y - np.median(y))))
    if spread == 0.0:
        spread = float(np.std(y)) or float(np.max(np.abs(y))) or 1.0

    b = np.linalg.lstsq(X, y, rcond=None)[0]
    shift = 2.0 * level - 1.0
    for stage in range(1, n_stages + 1):
        eps = spread * 10.0 ** (-stage)
        for _ in range(max_iter):
            r = y - X @ b
            m = np.maximum(np.abs(r), eps)
            Xw = X / m[:, None]
            try:
                b_new = np.linalg.solve(Xw.T @ X, Xw.T @ (y + shift * m))
            except np.linalg.LinAlgError:
                break
            step = np.max(np.abs(b_new - b))
            b = b_new
            if step <= 1e-10 * (1.0 + np.max(np.abs(b))):
                break

    # repeated observations (as in bootstrap resamples) make the polyhedron
    # degenerate; descend on distinct rows carrying multiplicity weights
    rows, counts = np.unique(np.column_stack([X, y]), axis=0, return_counts=True)
    Xu, yu = rows[:, :p], rows[:, p]
    budget = 10 * n if max_vertex_steps is None else max_vertex_steps
    result = _vertex_descent(Xu, yu, counts.astype(float), yu - Xu @ b, level, budget)
    if result is None or not result[2]:
        last = b if result is None else result[0]
        raise ConvergenceError(
            "quantile regression did not reach a certified optimum",
            last_iterate=last,
            diagnostics={"level": level, "n": n, "p": p, "vertex_steps": budget},
        )
    coef, loss, _ = result
    return QuantileFit(coef, level, has_intercept, loss, verified=True)


# ---------------------------------------------------------------------------
# Generalized Pareto distribution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GpdParams:
    """Location, scale and shape of a generalized Pareto distribution."""

    location: float
    scale: float
    shape: float

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError(f"GPD scale must be positive, got {self.scale}")

    @property
    def upper_endpoint(self) -> float:
        if self.shape < 0:
            return self.location - self.scale / self.shape
        return np.inf


def gpd_cdf(x, params: GpdParams):
    """Distribution function; 0 below the location, 1 above a finite endpoint."""
    z = (np.asarray(x, dtype=float) - params.location) / params.scale
    xi = params.shape
    zc = np.maximum(z, 0.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if xi == 0.0:
            out = -np.expm1(-zc)
        else:
            a = np.log1p(xi * zc)
            out = np.where(1.0 + xi * zc > 0, -np.expm1(-a / xi), 1.0)
    out = np.where(z <= 0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def gpd_quantile(p, params: GpdParams):
    """Inverse of :func:`gpd_cdf` on ``[0, 1)``."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or np.any(p >= 1) or np.any(np.isnan(p)):
        raise DomainError("GPD quantile probabilities must lie in [0, 1)")
    xi = params.shape
    tail = -np.log1p(-p)  # -log(1-p) >= 0
    if xi == 0.0:
        z = tail
    else:
        z = np.expm1(xi * tail) / xi
    out = params.location + params.scale * z
    return float(out) if out.ndim == 0 else out


def gpd_sample(params: GpdParams, n: int, seed: SeedLike = None) -> np.ndarray:
    """Inverse-CDF draws from the GPD using a seeded generator."""
    if n < 0:
        raise DomainError("sample size must be nonnegative")
    u = as_generator(seed).random(int(n))
    return np.asarray(gpd_quantile(u, params), dtype=float).reshape(-1)


# ---------------------------------------------------------------------------
# GPD maximum likelihood with a log-linear scale
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GpdFit:
    """Fitted tail model ``excess | x ~ GPD(0, exp(w . [1, x]), shape)``."""

    scale_link_coefficients: np.ndarray
    shape: float
    log_likelihood: float
    n_exceedances: int
    covariate_scale: bool
    diagnostics: dict = field(default_factory=dict, compare=False)

    def scale_at(self, covariates) -> np.ndarray:
        """Scale for each row of ``covariates`` (ignored when the scale is constant)."""
        w = self.scale_link_coefficients
        if not self.covariate_scale:
            c = np.atleast_2d(np.asarray(covariates, dtype=float))
            return np.full(c.shape[0], np.exp(w[0]))
        c = np.atleast_2d(np.asarray(covariates, dtype=float))
        if c.shape[1] != w.size - 1:
            raise DomainError(f"expected {w.size - 1} covariates, got {c.shape[1]}")
        return np.exp(w[0] + c @ w[1:])


def _gpd_mean_nll(theta: np.ndarray, Z: np.ndarray, y: np.ndarray) -> float:
    """Mean negative log-likelihood; penalised outside the support."""
    w, xi = theta[:-1], theta[-1]
    eta = Z @ w
    z = y * np.exp(-eta)
    if xi < -1.0:
        return SUPPORT_PENALTY + (-1.0 - xi)
    if xi == -1.0:
        # uniform excess law on (0, sigma(x))
        if z.max() > 1.0:
            return SUPPORT_PENALTY + float(np.sum(np.maximum(z - 1.0, 0.0))) + 1.0
        return float(np.mean(eta))
    if abs(xi) < SHAPE_EPS:
        return float(np.mean(eta + z))
    a = 1.0 + xi * z
    amin = a.min()
    if not amin > 0 or not np.isfinite(a).all():
        return SUPPORT_PENALTY + float(np.sum(np.maximum(-a, 0.0))) + 1.0
    return float(np.mean(eta + (1.0 + 1.0 / xi) * np.log(a)))


def _gpd_mean_nll_grad(theta: np.ndarray, Z: np.ndarray, y: np.ndarray) -> np.ndarray:
    w, xi = theta[:-1], theta[-1]
    eta = Z @ w
    z = y * np.exp(-eta)
    if abs(xi) < SHAPE_EPS:
        d_eta = 1.0 - z
        d_xi = z - 0.5 * z * z
    else:
        a = 1.0 + xi * z
        if not a.min() > 0:
            return np.zeros_like(theta)
        d_eta = 1.0 - (1.0 + xi) * z / a
        d_xi = -np.log(a) / xi**2 + (1.0 + 1.0 / xi) * z / a
    return np.concatenate([Z.T @ d_eta, [d_xi.sum()]]) / y.size


def _boundary_fit(Z: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Likelihood supremum on the ``shape = -1`` edge.

    There the excesses are uniform on ``(0, exp(Z w))`` and the mean negative
    log-likelihood is ``mean(Z w)``, minimised subject to ``Z w >= log y``.
    """
    log_y = np.log(y)
    if Z.shape[1] == 1:
        return np.array([log_y.max(), -1.0])
    lp = optimize.linprog(Z.mean(axis=0), A_ub=-Z, b_ub=-log_y, bounds=(None, None), method="highs")
    w = lp.x if lp.status == 0 else np.concatenate([[log_y.max()], np.zeros(Z.shape[1] - 1)])
    # restore exact feasibility lost to solver tolerance
    w[0] += max(0.0, float(np.max(log_y - Z @ w)))
    return np.concatenate([w, [-1.0]])


def _moment_start(y: np.ndarray) -> tuple[float, float]:
    m, v = float(np.mean(y)), float(np.var(y))
    xi0 = 0.5 * (1.0 - m * m / v) if v > 0 else 0.0
    xi0 = float(np.clip(xi0, -0.45, 0.45))
    sigma0 = max(m * (1.0 - xi0), 1e-12)
    return sigma0, xi0


def fit_gpd_mle(excesses, covariates=None, covariate_scale: bool = True) -> GpdFit:
    """Maximum-likelihood GPD fit of threshold excesses.

    The scale is ``exp(w0 + w . x)`` when ``covariate_scale`` is set and
    ``exp(w0)`` otherwise; the shape is shared by all observations and is
    restricted to ``shape >= -1``, beyond which the likelihood is unbounded.
    The search starts from method-of-moments values, runs Nelder-Mead on
    internally standardised covariates and finishes with a BFGS polish using
    the analytic gradient. When the likelihood keeps rising towards
    ``shape = -1`` (typical with tied maxima, as in bootstrap resamples) the
    uniform-law edge solution is returned and flagged in
    ``diagnostics["shape_at_boundary"]``.

    Raises
    ------
    InsufficientDataError
        Fewer than five excesses.
    DomainError
        A nonpositive or non-finite excess.
    ConvergenceError
        The optimum fails the gradient check (max abs gradient of the mean
        negative log-likelihood above ``MLE_GRAD_TOL``).
    """
    y = np.asarray(excesses, dtype=float).ravel()
    k = y.size
    if k < 5:
        raise InsufficientDataError(f"GPD fit needs at least 5 excesses, got {k}")
    if not np.all(np.isfinite(y)) or np.any(y <= 0):
        raise DomainError("excesses must be finite and strictly positive")

    if covariate_scale and covariates is not None:
        C = np.asarray(covariates, dtype=float)
        if C.ndim == 1:
            C = C[:, None]
        if C.shape[0] != k:
            raise DomainError("covariates and excesses lengths differ")
        center = C.mean(axis=0)
        spread = C.std(axis=0)
        spread[spread == 0] = 1.0
        Z = np.column_stack([np.ones(k), (C - center) / spread])
    else:
        covariate_scale = False
        C = None
        Z = np.ones((k, 1))

    sigma0, xi0 = _moment_start(y)
    theta0 = np.zeros(Z.shape[1] + 1)
    theta0[0] = np.log(sigma0)
    theta0[-1] = xi0

    dim = theta0.size
    nm = optimize.minimize(
        _gpd_mean_nll,
        theta0,
        args=(Z, y),
        method="Nelder-Mead",
        options={"xatol": 1e-7, "fatol": 1e-11, "maxiter": 600 * dim, "maxfev": 800 * dim},
    )
    theta = nm.x
    fval = nm.fun
    if fval < SUPPORT_PENALTY:
        polish = optimize.minimize(
            _gpd_mean_nll, theta, args=(Z, y), jac=_gpd_mean_nll_grad,
            method="BFGS", options={"gtol": 1e-9, "maxiter": 200},
        )
        if polish.fun <= fval and polish.fun < SUPPORT_PENALTY:
            theta, fval = polish.x, polish.fun
    grad = _gpd_mean_nll_grad(theta, Z, y)
    gmax = float(np.max(np.abs(grad)))
    if gmax > 1e-6:
        restart = optimize.minimize(
            _gpd_mean_nll, theta, args=(Z, y), method="Nelder-Mead",
            options={"xatol": 1e-9, "fatol": 1e-13, "maxiter": 600 * dim, "maxfev": 800 * dim},
        )
        if restart.fun <= fval:
            theta, fval = restart.x, restart.fun
            gmax = float(np.max(np.abs(_gpd_mean_nll_grad(theta, Z, y))))
    boundary = False
    if gmax > MLE_GRAD_TOL and theta[-1] < -0.5:
        edge = _boundary_fit(Z, y)
        edge_val = _gpd_mean_nll(edge, Z, y)
        if edge_val <= fval + 1e-9:
            theta, fval, gmax, boundary = edge, edge_val, 0.0, True
    if fval >= SUPPORT_PENALTY or gmax > MLE_GRAD_TOL:
        raise ConvergenceError(
            "GPD likelihood maximisation failed",
            last_iterate=theta,
            diagnostics={"objective": fval, "max_abs_gradient": gmax, "k": k},
        )

    w_std, xi = theta[:-1], float(theta[-1])
    if covariate_scale:
        slopes = w_std[1:] / spread
        w = np.concatenate([[w_std[0] - slopes @ center], slopes])
    else:
        w = np.array([w_std[0]])
    return GpdFit(
        scale_link_coefficients=w,
        shape=xi,
        log_likelihood=-fval * k,
        n_exceedances=k,
        covariate_scale=covariate_scale,
        diagnostics={"max_abs_gradient": gmax, "nelder_mead_iterations": int(nm.nit), "shape_at_boundary": boundary},
    )


def gpd_log_likelihood(fit: GpdFit, excesses, covariates=None) -> float:
    """Log-likelihood of ``excesses`` under a fitted model (summed)."""
    y = np.asarray(excesses, dtype=float).ravel()
    if fit.covariate_scale:
        C = np.atleast_2d(np.asarray(covariates, dtype=float))
        if C.shape[0] != y.size:
            C = C.T
        Z = np.column_stack([np.ones(y.size), C])
    else:
        Z = np.ones((y.size, 1))
    theta = np.concatenate([fit.scale_link_coefficients, [fit.shape]])
    return -_gpd_mean_nll(theta, Z, y) * y.size


# ---------------------------------------------------------------------------
# Ordinary least squares
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OlsFit:
    coefficients: np.ndarray
    residual_ss: float


def ols(design, response) -> OlsFit:
    """Least squares through a Householder QR factorisation."""
    X = _as_design(design)
    y = np.asarray(response, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise DomainError("design and response lengths differ")
    m, p = X.shape
    if m <= p:
        raise SingularDesignError(f"need more rows than columns, got {m}x{p}")
    Q, R = np.linalg.qr(X, mode="reduced")
    diag = np.abs(np.diag(R))
    if diag.max() == 0.0 or diag.min() <= diag.max() * max(m, p) * 1e3 * np.finfo(float).eps:
        raise SingularDesignError("design matrix is rank deficient")
    coef = linalg.solve_triangular(R, Q.T @ y)
    # one step of iterative refinement keeps the normal-equation residual tiny
    resid = y - X @ coef
    coef = coef + linalg.solve_triangular(R, Q.T @ resid)
    resid = y - X @ coef
    return OlsFit(coefficients=coef, residual_ss=float(resid @ resid))
