"""Regression and correlation machinery for the item-level analyses.

Everything here is ordinary least squares and its diagnostics: z-scores,
Pearson correlation matrices with significance stars, stepwise variance
inflation factor pruning, simultaneous-entry OLS with t statistics and
two-sided p-values, and the stacked two-level designs that test whether
predictor effects differ between structural levels (character vs
radical vs stroke).

The linear solve goes through a QR decomposition rather than the normal
equations; the explicit (X'X)^-1 X'y route exists only in the test
suite as an independent oracle.  Student-t tail probabilities are
computed here from the regularized incomplete beta function via a
continued fraction, so the package needs no stats dependency; the test
oracle integrates the t density numerically instead.

Level coding in stacked designs is a centered contrast: +0.5 for the
structurally higher level, -0.5 for the lower.  On a balanced stack the
intercept is then the grand mean of the two level means, and each
Level x predictor coefficient is the slope difference between levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LEVEL_RANK = {"stroke": 0, "radical": 1, "character": 2}


class ZeroVariance(ValueError):
    def __init__(self, column: str | None = None):
        super().__init__(
            "column has zero variance" if column is None else f"zero variance in {column!r}"
        )
        self.column = column


class RankDeficient(ValueError):
    pass


class InsufficientRows(ValueError):
    def __init__(self, n: int, p: int):
        super().__init__(f"need more rows than columns: n={n}, p={p}")


class MismatchedItems(ValueError):
    pass


@dataclass(frozen=True)
class DesignMatrix:
    names: tuple[str, ...]
    X: np.ndarray

    def __post_init__(self) -> None:
        if self.X.ndim != 2 or self.X.shape[1] != len(self.names):
            raise ValueError("design shape does not match column names")


@dataclass(frozen=True)
class FitResult:
    names: tuple[str, ...]
    beta: np.ndarray
    se: np.ndarray
    t: np.ndarray
    p: np.ndarray
    df: int
    r2: float
    rss: float


@dataclass(frozen=True)
class CorrelationMatrix:
    names: tuple[str, ...]
    r: np.ndarray
    p: np.ndarray
    n: int

    def star(self, i: int, j: int) -> str:
        return significance_stars(self.p[i, j]) if i != j else ""


def z_transform(values) -> np.ndarray:
    """Center to mean 0 and scale to sample sd 1 (n-1 denominator)."""
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        raise ZeroVariance()
    sd = float(arr.std(ddof=1))
    if not math.isfinite(sd) or sd == 0.0:
        raise ZeroVariance()
    return (arr - arr.mean()) / sd


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, by modified Lentz iteration."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 400):
        m2 = 2 * m
        coeff = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + coeff * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + coeff / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        coeff = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + coeff * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + coeff / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return h


def _betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # The continued fraction converges fast only on one side of the mean;
    # use the reflection I_x(a,b) = 1 - I_{1-x}(b,a) on the other.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def t_sf(t: float, df: float) -> float:
    """Two-sided p for a Student-t statistic: 2 P(T >= |t|)."""
    if df <= 0:
        raise ValueError(f"df must be > 0, got {df}")
    if t == 0.0:
        return 1.0
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return min(1.0, max(0.0, _betainc_reg(df / 2.0, 0.5, x)))


def significance_stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def pearson_matrix(table: dict[str, object]) -> CorrelationMatrix:
    """Pairwise Pearson r over named equal-length columns, with p-values.

    Significance comes from t = r sqrt((n-2)/(1-r^2)) on n-2 df; |r| = 1
    pins p at 0.
    """
    names = tuple(table)
    columns = [np.asarray(table[name], dtype=float) for name in names]
    if len(columns) < 2:
        raise ValueError("need at least 2 columns")
    n = columns[0].size
    if n < 3 or any(c.size != n for c in columns):
        raise ValueError("columns must share a length of at least 3")
    for name, column in zip(names, columns):
        if column.std(ddof=1) == 0.0:
            raise ZeroVariance(name)
    r = np.clip(np.corrcoef(np.column_stack(columns), rowvar=False), -1.0, 1.0)
    p = np.zeros_like(r)
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            rij = float(r[i, j])
            if abs(rij) >= 1.0:
                pij = 0.0
            else:
                stat = rij * math.sqrt((n - 2) / (1.0 - rij * rij))
                pij = t_sf(stat, n - 2)
            p[i, j] = p[j, i] = pij
    return CorrelationMatrix(names=names, r=r, p=p, n=n)


def ols_fit(design: DesignMatrix, y) -> FitResult:
    """Least squares via QR, with per-coefficient SE, t, and two-sided p."""
    X = np.asarray(design.X, dtype=float)
    response = np.asarray(y, dtype=float)
    n, p = X.shape
    if response.shape != (n,):
        raise ValueError("response length does not match design rows")
    if n <= p:
        raise InsufficientRows(n, p)
    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    if diag.min() <= diag.max() * 1e-12:
        raise RankDeficient("design columns are linearly dependent")
    beta = np.linalg.solve(r, q.T @ response)
    resid = response - X @ beta
    rss = float(resid @ resid)
    df = n - p
    sigma2 = rss / df
    r_inv = np.linalg.solve(r, np.eye(p))
    se = np.sqrt(np.maximum(sigma2 * np.sum(r_inv * r_inv, axis=1), 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0.0, beta / np.where(se > 0.0, se, 1.0), 0.0)
        t = np.where((se == 0.0) & (beta != 0.0), np.sign(beta) * np.inf, t)
    pvals = np.array([t_sf(float(tj), df) for tj in t])
    tss = float(((response - response.mean()) ** 2).sum())
    r2 = 1.0 - rss / tss if tss > 0.0 else 1.0
    return FitResult(
        names=design.names,
        beta=beta,
        se=se,
        t=t,
        p=pvals,
        df=df,
        r2=max(0.0, min(1.0, r2)),
        rss=rss,
    )


@dataclass(frozen=True)
class VifStep:
    vifs: dict[str, float]
    dropped: str | None


def _vif_one(X: np.ndarray, j: int) -> float:
    """VIF of column j against the remaining columns plus an intercept."""
    y = X[:, j]
    others = np.delete(X, j, axis=1)
    A = np.column_stack([np.ones(X.shape[0]), others])
    beta, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ beta
    rss = float(resid @ resid)
    tss = float(((y - y.mean()) ** 2).sum())
    if tss == 0.0:
        return math.inf
    r2 = 1.0 - rss / tss
    if r2 >= 1.0 - 1e-12:
        return math.inf
    return 1.0 / (1.0 - r2)


def vif_stepwise(
    design: DesignMatrix, threshold: float = 5.0
) -> tuple[tuple[str, ...], tuple[VifStep, ...]]:
    """Drop the worst-collinearity column until every VIF is at threshold or below.

    Perfectly predictable columns (auxiliary R^2 within 1e-12 of 1) count
    as infinite VIF and go before any finite one; among equal maxima the
    lexicographically later name is dropped, so reruns agree.
    """
    if threshold <= 1.0:
        raise ValueError(f"threshold must be > 1, got {threshold}")
    names = list(design.names)
    X = np.asarray(design.X, dtype=float)
    log: list[VifStep] = []
    while True:
        vifs = {name: _vif_one(X, j) for j, name in enumerate(names)}
        worst = max(vifs.values())
        if worst <= threshold or len(names) == 1:
            log.append(VifStep(vifs=vifs, dropped=None))
            break
        dropped = max(name for name, v in vifs.items() if v == worst)
        log.append(VifStep(vifs=vifs, dropped=dropped))
        j = names.index(dropped)
        names.pop(j)
        X = np.delete(X, j, axis=1)
    return tuple(names), tuple(log)


@dataclass(frozen=True)
class LevelItems:
    """One structural level's per-character values: response and covariates."""

    level: str
    response: dict[str, float | None]
    covariates: dict[str, dict[str, float | None]] = field(default_factory=dict)


def _as_float(value: float | None) -> float:
    return math.nan if value is None else float(value)


def _z_with_nan(vector: np.ndarray, name: str) -> np.ndarray:
    finite = vector[np.isfinite(vector)]
    if finite.size < 2:
        raise ZeroVariance(name)
    sd = float(finite.std(ddof=1))
    if sd == 0.0:
        raise ZeroVariance(name)
    return (vector - finite.mean()) / sd


def build_level_design(
    a: LevelItems,
    b: LevelItems,
    predictors: dict[str, dict[str, float]],
    covariate_names: tuple[str, ...] = (),
    standardize: bool = True,
) -> tuple[DesignMatrix, np.ndarray]:
    """Stack two levels into one long design with Level and interaction terms.

    Rows are (character, level) pairs, level a's half first, characters
    sorted within each half.  Columns: intercept, the centered Level
    contrast, the z-scored predictors (shared across levels), per-level
    covariates (z-scored within their own level), then Level x predictor
    and Level x covariate interactions.  Rows with any missing value are
    dropped listwise.
    """
    for items in (a, b):
        if items.level not in LEVEL_RANK:
            raise ValueError(f"unknown level {items.level!r}")
    if LEVEL_RANK[a.level] == LEVEL_RANK[b.level]:
        raise ValueError("levels must differ")
    if set(a.response) != set(b.response):
        raise MismatchedItems("level tables cover different character sets")
    chars = sorted(a.response)
    for name, column in predictors.items():
        missing = [c for c in chars if c not in column]
        if missing:
            raise MismatchedItems(f"predictor {name!r} missing characters {missing[:3]}")
    for items in (a, b):
        for name in covariate_names:
            if name not in items.covariates:
                raise MismatchedItems(f"level {items.level!r} lacks covariate {name!r}")

    n = len(chars)
    pred_names = tuple(predictors)
    pred_cols = {}
    for name in pred_names:
        col = np.array([_as_float(predictors[name][c]) for c in chars])
        pred_cols[name] = _z_with_nan(col, name) if standardize else col

    halves = []
    for items in (a, b):
        contrast = 0.5 if LEVEL_RANK[items.level] > LEVEL_RANK[
            b.level if items is a else a.level
        ] else -0.5
        y = np.array([_as_float(items.response.get(c)) for c in chars])
        covs = []
        for name in covariate_names:
            col = np.array([_as_float(items.covariates[name].get(c)) for c in chars])
            covs.append(_z_with_nan(col, name) if standardize else col)
        halves.append((contrast, y, covs))

    names = ["(Intercept)", "Level"]
    names += list(pred_names)
    names += list(covariate_names)
    names += [f"Level x {p}" for p in pred_names]
    names += [f"Level x {c}" for c in covariate_names]

    blocks = []
    ys = []
    for contrast, y, covs in halves:
        level_col = np.full(n, contrast)
        cols = [np.ones(n), level_col]
        cols += [pred_cols[p] for p in pred_names]
        cols += covs
        cols += [level_col * pred_cols[p] for p in pred_names]
        cols += [level_col * c for c in covs]
        blocks.append(np.column_stack(cols))
        ys.append(y)

    X = np.vstack(blocks)
    y = np.concatenate(ys)
    keep = np.isfinite(y) & np.all(np.isfinite(X), axis=1)
    return DesignMatrix(names=tuple(names), X=X[keep]), y[keep]


def serialize_fit(fit: FitResult) -> str:
    """Coefficient table: term, beta, t, p rows plus a trailing R^2 line."""
    lines = ["term\tbeta\tt\tp"]
    for name, beta, t, p in zip(fit.names, fit.beta, fit.t, fit.p):
        lines.append(f"{name}\t{beta:.6g}\t{t:.6g}\t{p:.6g}")
    lines.append(f"R2\t{fit.r2:.6g}")
    return "\n".join(lines) + "\n"
