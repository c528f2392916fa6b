"""Naive Bayes for mixed data.

Categorical features use Laplace-smoothed frequency tables, numeric
features per-class Gaussians; the posterior is prior times the product of
per-feature likelihoods, evaluated in log space and renormalized.
"""

from __future__ import annotations

import numpy as np

from .base import Classifier
from .tree import binary_columns

LOG_2PI = float(np.log(2.0 * np.pi))


def gaussian_pdf(x, mean, var):
    return np.exp(-0.5 * (x - mean) ** 2 / var) / np.sqrt(2.0 * np.pi * var)


class NaiveBayes(Classifier):
    kind = "nb"

    def __init__(self, categorical_features="auto", alpha: float = 1.0, var_floor: float = 1e-9):
        if alpha < 0 or var_floor <= 0:
            raise ValueError("alpha must be >= 0 and var_floor > 0")
        self.categorical_features = categorical_features
        self.alpha = alpha
        self.var_floor = var_floor

    def params(self) -> dict:
        cat = self.categorical_features
        return {
            "categorical_features": cat if isinstance(cat, str) else [int(i) for i in cat],
            "alpha": self.alpha,
            "var_floor": self.var_floor,
        }

    def _resolve_categorical(self, X) -> np.ndarray:
        p = X.shape[1]
        if isinstance(self.categorical_features, str):
            if self.categorical_features != "auto":
                raise ValueError("categorical_features must be 'auto' or a list of indices")
            return np.flatnonzero(binary_columns(X)) if len(X) else np.arange(0)
        idx = np.asarray(sorted(set(int(i) for i in self.categorical_features)), dtype=np.int64)
        if len(idx) and (idx.min() < 0 or idx.max() >= p):
            raise ValueError("categorical feature index out of range")
        return idx

    def _fit(self, X, y, w):
        k = len(self.classes_)
        # weights rescaled to mean 1 so smoothing is invariant to weight scale
        w = w * (len(w) / w.sum())
        class_w = np.bincount(y, weights=w, minlength=k)
        self.class_prior_ = class_w / class_w.sum()
        self.cat_idx_ = self._resolve_categorical(X)
        cat_set = set(self.cat_idx_.tolist())
        self.num_idx_ = np.array([j for j in range(X.shape[1]) if j not in cat_set], dtype=np.int64)

        self.cat_values_: list[np.ndarray] = []
        self.cat_log_lik_: list[np.ndarray] = []  # per feature: k x (V + 1), last column = unseen
        for j in self.cat_idx_:
            values, inv = np.unique(X[:, j], return_inverse=True)
            v = len(values)
            counts = np.zeros((k, v))
            np.add.at(counts, (y, inv), w)
            denom = class_w[:, None] + self.alpha * v
            table = np.empty((k, v + 1))
            with np.errstate(divide="ignore"):
                table[:, :v] = np.log(counts + self.alpha) - np.log(denom)
                table[:, v] = np.log(self.alpha) - np.log(denom[:, 0])
            self.cat_values_.append(values)
            self.cat_log_lik_.append(table)

        Xn = X[:, self.num_idx_]
        self.theta_ = np.zeros((k, len(self.num_idx_)))
        self.var_ = np.zeros((k, len(self.num_idx_)))
        for c in range(k):
            m = y == c
            wc = w[m]
            if wc.sum() <= 0:
                continue
            mean = np.average(Xn[m], axis=0, weights=wc) if len(self.num_idx_) else np.zeros(0)
            var = np.average((Xn[m] - mean) ** 2, axis=0, weights=wc) if len(self.num_idx_) else np.zeros(0)
            self.theta_[c] = mean
            self.var_[c] = var
        self.var_ = np.maximum(self.var_, self.var_floor)

    def joint_log_likelihood(self, X) -> np.ndarray:
        X = self._check_X(X)
        return self._jll(X)

    def _jll(self, X):
        with np.errstate(divide="ignore"):
            jll = np.tile(np.log(self.class_prior_), (X.shape[0], 1))
        for j, values, table in zip(self.cat_idx_, self.cat_values_, self.cat_log_lik_):
            col = X[:, j]
            pos = np.searchsorted(values, col)
            pos_c = np.minimum(pos, len(values) - 1)
            seen = values[pos_c] == col
            which = np.where(seen, pos_c, len(values))
            jll += table[:, which].T
        if len(self.num_idx_):
            Xn = X[:, self.num_idx_]
            for c in range(len(self.classes_)):
                var = self.var_[c]
                jll[:, c] += -0.5 * np.sum(LOG_2PI + np.log(var) + (Xn - self.theta_[c]) ** 2 / var, axis=1)
        return jll

    def _proba(self, X):
        jll = self._jll(X)
        top = jll.max(axis=1, keepdims=True)
        e = np.exp(jll - top)
        return e / e.sum(axis=1, keepdims=True)

    def to_dict(self) -> dict:
        return {
            **self._header(),
            "params": self.params(),
            "class_prior": self.class_prior_.tolist(),
            "cat_idx": self.cat_idx_.tolist(),
            "num_idx": self.num_idx_.tolist(),
            "cat_values": [v.tolist() for v in self.cat_values_],
            "cat_log_lik": [t.tolist() for t in self.cat_log_lik_],
            "theta": self.theta_.tolist(),
            "var": self.var_.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NaiveBayes":
        model = cls(**d["params"])
        model._load_header(d)
        model.class_prior_ = np.asarray(d["class_prior"], dtype=np.float64)
        model.cat_idx_ = np.asarray(d["cat_idx"], dtype=np.int64)
        model.num_idx_ = np.asarray(d["num_idx"], dtype=np.int64)
        model.cat_values_ = [np.asarray(v, dtype=np.float64) for v in d["cat_values"]]
        model.cat_log_lik_ = [np.asarray(t, dtype=np.float64) for t in d["cat_log_lik"]]
        k = len(model.classes_)
        model.theta_ = np.asarray(d["theta"], dtype=np.float64).reshape(k, -1)
        model.var_ = np.asarray(d["var"], dtype=np.float64).reshape(k, -1)
        return model


NaiveBayesModel = NaiveBayes


def fit_naive_bayes(features, labels, categorical_features="auto", alpha: float = 1.0,
                    var_floor: float = 1e-9, weights=None) -> NaiveBayes:
    return NaiveBayes(categorical_features, alpha, var_floor).fit(features, labels, weights)
