"""scikit-learn compatible front end for the SCSG solver."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import unique_labels
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .objectives import MulticlassLogistic, Regularizer, build_problem, estimate_smoothness
from .scsg import SCSG


class SCSGClassifier(BaseEstimator, ClassifierMixin):
    """Multinomial logistic regression fitted with SCSG.

    The step size is c / L with L the trimmed mean of the per-row
    gradient-Lipschitz bounds 2*||a_i||^2.  The default ridge weight
    1/n matches the customary choice that keeps the optimum finite.

    Parameters
    ----------
    c : step-size scale; eta = c / L.
    pass_budget : effective passes of data to spend.
    alpha : epoch growth factor (> 1).
    trim : fraction of rows with the largest L_i to drop before fitting.
    reg_weight : ridge weight; None selects 1/n.
    """

    def __init__(
        self,
        c: float = 1.0,
        pass_budget: float = 50.0,
        alpha: float = 1.25,
        trim: float = 0.0,
        reg_weight: float | None = None,
        seed: int = 0,
    ):
        self.c = c
        self.pass_budget = pass_budget
        self.alpha = alpha
        self.trim = trim
        self.reg_weight = reg_weight
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_ = unique_labels(y)
        if len(self.classes_) < 2:
            raise ValueError("need at least two classes")
        codes = np.searchsorted(self.classes_, y) + 1
        data = MulticlassLogistic(np.ascontiguousarray(X), codes, len(self.classes_))
        data, est = estimate_smoothness(data, self.trim)
        weight = 1.0 / data.n if self.reg_weight is None else self.reg_weight
        problem = build_problem(data, Regularizer("l2_scaled", weight))
        solver = SCSG(
            alpha=self.alpha,
            eta=self.c / problem.smoothness,
            pass_budget=self.pass_budget,
            seed=self.seed,
        )
        trace = solver.run(problem)
        self.smoothness_ = problem.smoothness
        self.n_features_in_ = X.shape[1]
        self.coef_ = trace.final_x.reshape(len(self.classes_) - 1, X.shape[1])
        self.trace_ = trace
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}"
            )
        return np.column_stack([X @ self.coef_.T, np.zeros(X.shape[0])])

    def predict_proba(self, X):
        scores = self.decision_function(X)
        scores -= scores.max(axis=1, keepdims=True)
        expd = np.exp(scores)
        return expd / expd.sum(axis=1, keepdims=True)

    def predict(self, X):
        scores = self.decision_function(X)
        return self.classes_[np.argmax(scores, axis=1)]
