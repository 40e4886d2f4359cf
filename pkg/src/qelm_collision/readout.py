"""Linear readout layer: pseudoinverse least squares, prediction, NMSE."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

# Relative singular-value cutoff for the pseudoinverse; concatenated features
# make the design matrix nearly rank-deficient, so a raw inverse is never used.
PINV_RCOND = 1e-12


class LinearReadout(RegressorMixin, BaseEstimator):
    """Least-squares linear readout trained via Moore-Penrose pseudoinverse.

    epsilon = 0 gives the minimum-norm pseudoinverse solution; epsilon > 0
    switches to ridge regression with that penalty. A constant bias feature
    is appended by default (add_bias=False for the strict no-intercept form).
    """

    def __init__(self, epsilon: float = 0.0, add_bias: bool = True):
        self.epsilon = epsilon
        self.add_bias = add_bias

    def _design(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.add_bias:
            X = np.hstack([X, np.ones((X.shape[0], 1))])
        return X

    def fit(self, X, y):
        """X: (n_samples, n_features); y: (n_samples,) or (n_samples, n_targets)."""
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        a = self._design(X)
        y = np.asarray(y, dtype=float)
        if y.shape[0] != a.shape[0]:
            raise ValueError(f"{y.shape[0]} targets for {a.shape[0]} samples")
        if self.epsilon == 0:
            w = np.linalg.pinv(a, rcond=PINV_RCOND) @ y
        else:
            gram = a.T @ a + self.epsilon * np.eye(a.shape[1])
            w = np.linalg.solve(gram, a.T @ y)
        self.weights_ = w.T  # (n_targets, n_features_effective), targets along rows
        self.n_features_in_ = a.shape[1] - (1 if self.add_bias else 0)
        return self

    def predict(self, X):
        if not hasattr(self, "weights_"):
            raise ValueError("readout is not fitted")
        a = self._design(X)
        if a.shape[1] != self.weights_.T.shape[0]:
            raise ValueError(f"feature length {a.shape[1]} does not match trained model")
        return a @ self.weights_.T


def nmse(predicted, actual) -> float:
    """Sum of squared errors over the variance sum of the targets.

    A constant predictor at the target mean scores exactly 1.
    """
    predicted = np.asarray(predicted, dtype=float).ravel()
    actual = np.asarray(actual, dtype=float).ravel()
    if predicted.shape != actual.shape:
        raise ValueError("predicted and actual lengths differ")
    if len(actual) < 2:
        raise ValueError("need at least two samples")
    denom = np.sum((actual - np.mean(actual)) ** 2)
    if denom == 0:
        raise ValueError("target values are constant; NMSE undefined")
    return float(np.sum((predicted - actual) ** 2) / denom)


def train_eval_step(features_train, targets_train, features_test, targets_test,
                    epsilon: float = 0.0, add_bias: bool = True) -> float:
    """Fit on the train split, return NMSE on the test split."""
    model = LinearReadout(epsilon=epsilon, add_bias=add_bias)
    model.fit(features_train, targets_train)
    return nmse(model.predict(features_test), targets_test)
