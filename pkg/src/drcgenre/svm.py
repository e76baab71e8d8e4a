"""Kernel SVM trained in the dual, with one-vs-one multiclass voting.

The binary problem is the soft-margin dual

    maximize   sum(a) - 1/2 * sum_nm a_n a_m t_n t_m k(x_n, x_m)
    subject to 0 <= a_n <= C,  sum(a_n t_n) = 0

solved by SMO with maximal-violating-pair selection. The hard-margin problem is
the limit C -> inf.
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "ConvergenceWarning",
    "StandardizationStats",
    "BinarySvmModel",
    "TrainedOvoModel",
    "standardize",
    "rbf_kernel",
    "rbf_gram",
    "dual_objective",
    "solve_dual",
    "fit_binary",
    "decision_function",
    "predict_binary",
    "train_ovo",
    "predict_ovo",
    "ovo_scores",
    "auto_gamma",
    "save_model",
    "load_model",
]

MODEL_FORMAT = "drcgenre-ovo-svm"
MODEL_VERSION = 1
_STD_FLOOR = 1e-12
_TAU = 1e-12


class ConvergenceWarning(UserWarning):
    """SMO hit its iteration cap before satisfying the KKT tolerance."""


# -- scaling -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StandardizationStats:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.mean.size:
            raise ValueError(f"expected {self.mean.size} features, got {X.shape[-1]}")
        return (X - self.mean) / self.std


def standardize(vectors):
    """Zero-mean, unit-variance scaling per dimension (population variance).

    Dimensions with zero variance keep std = 1, so they map to 0.

    Returns
    -------
    Z : ndarray
        Standardized copy of `vectors`.
    stats : StandardizationStats
        Mean and std to reuse on held-out data.
    """
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least 2 vectors to standardize")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > _STD_FLOOR, std, 1.0)
    stats = StandardizationStats(mean, std)
    return stats.apply(X), stats


# -- kernel ------------------------------------------------------------------

def rbf_kernel(x, x2, gamma: float) -> float:
    x, x2 = np.asarray(x, dtype=np.float64), np.asarray(x2, dtype=np.float64)
    if x.shape != x2.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {x2.shape}")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    d = x - x2
    return float(np.exp(-gamma * np.dot(d, d)))


def rbf_gram(A, B, gamma: float) -> np.ndarray:
    """Kernel matrix exp(-gamma * ||a_i - b_j||^2) between the rows of A and B."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def auto_gamma(Z) -> float:
    """1 / (n_features * mean per-feature variance) of standardized data."""
    Z = np.asarray(Z, dtype=np.float64)
    var = Z.var(axis=0).mean()
    return 1.0 / (Z.shape[1] * var) if var > 0 else 1.0 / Z.shape[1]


# -- dual solver -------------------------------------------------------------

def dual_objective(alpha, gram, targets) -> float:
    a = np.asarray(alpha, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    at = a * t
    return float(a.sum() - 0.5 * at @ np.asarray(gram) @ at)


def _polish(alpha, Q, t, C):
    """Re-solve the free variables exactly with the bounded ones held fixed.

    SMO stops at a KKT tolerance; once the free set is right this linear solve
    lands on the exact optimum of that face. Rejected if it leaves the box or
    does not improve the objective.
    """
    free = (alpha > 0) & (alpha < C)
    if not np.any(free):
        return alpha
    F, B = np.flatnonzero(free), np.flatnonzero(~free)
    k = F.size
    lhs = np.zeros((k + 1, k + 1))
    lhs[:k, :k] = Q[np.ix_(F, F)]
    lhs[:k, k] = t[F]
    lhs[k, :k] = t[F]
    rhs = np.empty(k + 1)
    rhs[:k] = 1.0 - Q[np.ix_(F, B)] @ alpha[B]
    rhs[k] = -t[B] @ alpha[B]
    try:
        sol = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError:
        return alpha
    if not np.all(np.isfinite(sol)) or np.any(sol[:k] < 0) or np.any(sol[:k] > C):
        return alpha
    cand = alpha.copy()
    cand[F] = sol[:k]

    def f(a):
        return a.sum() - 0.5 * a @ Q @ a

    return cand if f(cand) >= f(alpha) else alpha


def solve_dual(gram, targets, C: float = 1.0, tol: float = 1e-3, max_iter: int = 1_000_000):
    """Maximize the SVM dual by sequential minimal optimization.

    Parameters
    ----------
    gram : (N, N) array
        Symmetric PSD kernel matrix.
    targets : (N,) array of +1/-1
    C : float
        Box bound on every multiplier.
    tol : float
        Stop when the maximal KKT violation ``max_up(-t*G) - min_low(-t*G)``
        drops below `tol`.
    max_iter : int
        Cap on pair updates. Reaching it emits a :class:`ConvergenceWarning`
        and returns the current iterate.

    Returns
    -------
    alpha : (N,) ndarray
    bias : float
        Mean of ``t_n - sum_m a_m t_m K_nm`` over multipliers strictly inside
        (0, C). If there are none, the mean over all support vectors, clipped
        to the interval of offsets that satisfies the KKT conditions.
    """
    K = np.asarray(gram, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64).reshape(-1)
    N = t.size
    if K.shape != (N, N):
        raise ValueError(f"gram must be {N}x{N}, got {K.shape}")
    if N < 2:
        raise ValueError("need at least 2 training points")
    if not np.all(np.isin(t, (-1.0, 1.0))):
        raise ValueError("targets must be +1 or -1")
    if not (np.any(t > 0) and np.any(t < 0)):
        raise ValueError("both classes must be present")
    if not np.allclose(K, K.T, rtol=0, atol=1e-10):
        raise ValueError("gram matrix is not symmetric")
    if C <= 0:
        raise ValueError("C must be positive")

    Q = K * np.outer(t, t)
    alpha = np.zeros(N)
    grad = -np.ones(N)  # gradient of 1/2 a'Qa - sum(a)
    pos = t > 0
    converged = False
    for _ in range(max_iter):
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        score = -t * grad
        i = np.flatnonzero(up)[np.argmax(score[up])]
        j = np.flatnonzero(low)[np.argmin(score[low])]
        gap = score[i] - score[j]
        if gap < tol:
            converged = True
            break
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        step = gap / max(eta, _TAU)
        # moving a_i by t_i*step and a_j by -t_j*step keeps sum(a*t) fixed
        step = min(step,
                   C - alpha[i] if pos[i] else alpha[i],
                   alpha[j] if pos[j] else C - alpha[j])
        alpha[i] += t[i] * step
        alpha[j] -= t[j] * step
        for k in (i, j):
            if alpha[k] < 0 or np.isclose(alpha[k], 0.0, rtol=0, atol=1e-14 * C):
                alpha[k] = 0.0
            elif alpha[k] > C or np.isclose(alpha[k], C, rtol=1e-14, atol=0):
                alpha[k] = C
        grad += t * step * (K[:, i] - K[:, j])
    if not converged:
        warnings.warn(f"SMO did not reach tol={tol} within {max_iter} updates", ConvergenceWarning,
                      stacklevel=2)

    alpha = _polish(alpha, Q, t, C)
    f = (alpha * t) @ K
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        return alpha, float(np.mean(t[free] - f[free]))
    sv = alpha > 0
    bias = float(np.mean(t[sv] - f[sv])) if np.any(sv) else 0.0
    # with every multiplier at a bound, b is only pinned to an interval
    r = t - f
    at_c = alpha >= C
    lower = (~sv & pos) | (at_c & ~pos)
    upper = (~sv & ~pos) | (at_c & pos)
    lo = r[lower].max() if lower.any() else -np.inf
    hi = r[upper].min() if upper.any() else np.inf
    if lo <= hi:
        bias = float(np.clip(bias, lo, hi))
    return alpha, bias


# -- binary model ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BinarySvmModel:
    """Support vectors with their signed multipliers ``a_n * t_n``."""

    support_vectors: np.ndarray
    dual_coeffs: np.ndarray
    bias: float
    gamma: float
    C: float = 1.0


def fit_binary(X, targets, gamma: float, C: float = 1.0, tol: float = 1e-3) -> BinarySvmModel:
    X = np.asarray(X, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    alpha, bias = solve_dual(rbf_gram(X, X, gamma), t, C=C, tol=tol)
    sv = alpha > 0
    return BinarySvmModel(X[sv].copy(), (alpha * t)[sv], bias, float(gamma), float(C))


def decision_function(model: BinarySvmModel, X) -> np.ndarray:
    """Scores ``sum_n a_n t_n k(x, x_n) + b`` for each row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if model.support_vectors.size == 0:
        return np.full(X.shape[0], model.bias)
    return rbf_gram(X, model.support_vectors, model.gamma) @ model.dual_coeffs + model.bias


def predict_binary(model: BinarySvmModel, x):
    """Return ``(score, label)`` for one point; a score of exactly 0 gives +1."""
    x = np.asarray(x, dtype=np.float64)
    if model.support_vectors.size and x.shape != model.support_vectors.shape[1:]:
        raise ValueError(f"expected {model.support_vectors.shape[1]} features, got shape {x.shape}")
    score = float(decision_function(model, x)[0])
    return score, (1 if score >= 0 else -1)


# -- one-vs-one --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TrainedOvoModel:
    """Pairwise models keyed by label-index pairs ``(i, j)`` with ``i < j``.

    In the model for ``(i, j)``, class ``class_labels[i]`` is the +1 side.
    """

    class_labels: tuple
    pairwise_models: dict
    stats: StandardizationStats
    gamma: float
    C: float

    @property
    def n_features(self) -> int:
        return self.stats.mean.size


def train_ovo(X, labels, gamma="auto", C: float = 1.0, tol: float = 1e-3) -> TrainedOvoModel:
    """Standardize on the training set, then fit one binary SVM per class pair.

    `gamma` may be a positive float or ``"auto"`` (see :func:`auto_gamma`).
    Labels are ordered with ``sorted``.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = list(labels)
    if X.ndim != 2 or X.shape[0] != len(labels):
        raise ValueError("X must be (n_samples, n_features) with one label per row")
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise ValueError("need at least 2 classes")
    Z, stats = standardize(X)
    g = auto_gamma(Z) if gamma == "auto" else float(gamma)
    if g <= 0:
        raise ValueError("gamma must be positive")
    y = np.array([classes.index(lab) for lab in labels])
    models = {}
    for i, j in itertools.combinations(range(len(classes)), 2):
        mask = (y == i) | (y == j)
        t = np.where(y[mask] == i, 1.0, -1.0)
        models[(i, j)] = fit_binary(Z[mask], t, g, C, tol)
    return TrainedOvoModel(classes, models, stats, g, float(C))


def ovo_scores(model: TrainedOvoModel, X):
    """Vote counts and summed |score| of won contests, each (n_points, n_classes)."""
    Z = np.atleast_2d(model.stats.apply(X))
    n, k = Z.shape[0], len(model.class_labels)
    votes = np.zeros((n, k), dtype=int)
    strength = np.zeros((n, k))
    rows = np.arange(n)
    for (i, j), m in model.pairwise_models.items():
        s = decision_function(m, Z)
        winner = np.where(s >= 0, i, j)
        votes[rows, winner] += 1
        strength[rows, winner] += np.abs(s)
    return votes, strength


def predict_ovo(model: TrainedOvoModel, X):
    """Majority vote over the pairwise models.

    Ties go to the class with the larger summed |score| over the contests it won,
    then to the earlier class label. A single point returns a single label; a
    2-D array returns a list.
    """
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if X.shape[-1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {X.shape[-1]}")
    votes, strength = ovo_scores(model, X)
    out = []
    for v, s in zip(votes, strength):
        tied = np.flatnonzero(v == v.max())
        out.append(model.class_labels[tied[np.argmax(s[tied])]])
    return out[0] if single else out


# -- persistence -------------------------------------------------------------

def save_model(model: TrainedOvoModel, path) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "class_labels": list(model.class_labels),
        "gamma": model.gamma,
        "C": model.C,
        "stats": {"mean": model.stats.mean.tolist(), "std": model.stats.std.tolist()},
        "pairs": [
            {
                "classes": [i, j],
                "bias": m.bias,
                "dual_coeffs": m.dual_coeffs.tolist(),
                "support_vectors": m.support_vectors.tolist(),
            }
            for (i, j), m in sorted(model.pairwise_models.items())
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def load_model(path) -> TrainedOvoModel:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {doc.get('version')}")
    n_feat = len(doc["stats"]["mean"])
    models = {}
    for p in doc["pairs"]:
        sv = np.asarray(p["support_vectors"], dtype=np.float64).reshape(-1, n_feat)
        models[tuple(p["classes"])] = BinarySvmModel(
            sv, np.asarray(p["dual_coeffs"], dtype=np.float64), float(p["bias"]), doc["gamma"], doc["C"]
        )
    stats = StandardizationStats(np.asarray(doc["stats"]["mean"]), np.asarray(doc["stats"]["std"]))
    return TrainedOvoModel(tuple(doc["class_labels"]), models, stats, doc["gamma"], doc["C"])
