"""scikit-learn compatible front end.

:class:`PCEFeatures` maps input points to orthonormal basis evaluations and
:class:`SparsePCERegressor` recovers sparse expansion coefficients by
(optionally preconditioned) l1 minimization.

>>> import numpy as np
>>> from sparsepce import SparsePCERegressor
>>> rng = np.random.default_rng(0)
>>> X = rng.uniform(-1, 1, (40, 3))
>>> y = 1.0 + X[:, 0] * X[:, 1]
>>> model = SparsePCERegressor(order=3, epsilon=0.0).fit(X, y)
>>> bool(np.allclose(model.predict(X), y, atol=1e-6))
True
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .basis import BasisSet, as_family
from .l1solve import BpdnConfig, cross_validate_epsilon, default_epsilon_grid, normalized_bpdn
from .measure import mutual_coherence
from .precond import DEFAULT_LAMBDA_GRID, DesignConfig, PreconditionerDesign, cross_validate_lambda


class PCEFeatures(TransformerMixin, BaseEstimator):
    """Total-degree orthonormal polynomial features.

    Parameters
    ----------
    family : {"legendre", "hermite"}
    order : int
        Total polynomial order ``k``.
    """

    def __init__(self, family="legendre", order=2):
        self.family = family
        self.order = order

    def fit(self, X, y=None):
        X = check_array(X)
        self.basis_ = BasisSet.total_degree(as_family(self.family), X.shape[1], self.order)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "basis_")
        X = check_array(X)
        return self.basis_.evaluate(X)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "basis_")
        return np.array(["psi_" + "_".join(map(str, a)) for a in self.basis_.indices], dtype=object)


class SparsePCERegressor(RegressorMixin, BaseEstimator):
    """Sparse polynomial chaos surrogate fitted by basis pursuit denoising.

    Parameters
    ----------
    family : {"legendre", "hermite"}
    order : int
        Total polynomial order.
    epsilon : float or "cv"
        Residual tolerance of the l1 problem; ``"cv"`` selects it by
        hold-out validation over ``epsilon_grid`` (default: 0 and
        ``10**p * ||y||`` for ``p = -4..-1``).
    precondition : bool
        Design a dense preconditioner, choosing its penalty weight over
        ``lambda_grid`` by hold-out validation.
    lambda_grid : sequence of float
    epsilon_grid : sequence of float, optional
    bpdn_config : BpdnConfig, optional
    design_config : DesignConfig, optional
    random_state : int, optional
        Seeds the validation splits and the preconditioner initialization.

    Attributes
    ----------
    coef_ : ndarray of shape (K,)
    basis_ : BasisSet
    epsilon_ : float
    lambda_ : float
        Selected penalty weight (``inf`` means identity / no preconditioning).
    design_ : PreconditionerDesign
    mutual_coherence_ : float
        Coherence of the matrix handed to the l1 solver.
    """

    def __init__(
        self,
        family="legendre",
        order=2,
        epsilon="cv",
        precondition=False,
        lambda_grid=DEFAULT_LAMBDA_GRID,
        epsilon_grid=None,
        bpdn_config=None,
        design_config=None,
        random_state=None,
    ):
        self.family = family
        self.order = order
        self.epsilon = epsilon
        self.precondition = precondition
        self.lambda_grid = lambda_grid
        self.epsilon_grid = epsilon_grid
        self.bpdn_config = bpdn_config
        self.design_config = design_config
        self.random_state = random_state

    def _eps_grid(self, y):
        if self.epsilon != "cv":
            return [float(self.epsilon)]
        return list(self.epsilon_grid) if self.epsilon_grid is not None else default_epsilon_grid(y)

    def fit(self, X, y, sample_weight=None):
        """Fit coefficients from points ``X`` and responses ``y``.

        ``sample_weight`` multiplies the rows of the system (e.g. the
        ``1/B(xi)`` weights of coherence-optimal samples).
        """
        X, y = check_X_y(X, y, y_numeric=True)
        if self.epsilon != "cv" and float(self.epsilon) < 0:
            raise ValueError("epsilon must be non-negative or 'cv'")
        cfg = self.bpdn_config or BpdnConfig()
        self.features_ = PCEFeatures(self.family, self.order).fit(X)
        self.basis_ = self.features_.basis_
        self.n_features_in_ = X.shape[1]
        Psi = self.basis_.evaluate(X)
        w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        A = w[:, None] * Psi
        b = w * y
        seed = self.random_state

        if self.precondition:
            sel = cross_validate_lambda(
                A,
                b,
                self.lambda_grid,
                split_seed=seed,
                design_config=self.design_config,
                bpdn_config=cfg,
                epsilon_grid=None if self.epsilon == "cv" and self.epsilon_grid is None else self._eps_grid(b),
                design_seed=seed,
            )
            self.design_ = sel.design
            self.lambda_ = sel.best_lambda
            self.lambda_selection_ = sel
        else:
            self.design_ = PreconditionerDesign.identity(len(y))
            self.lambda_ = math.inf

        P = self.design_.P
        A_p, b_p = P @ A, P @ b
        grid = self._eps_grid(b_p)
        self.epsilon_ = cross_validate_epsilon(A_p, b_p, grid=grid, config=cfg, seed=seed) if len(grid) > 1 else grid[0]
        res = normalized_bpdn(A_p, b_p, self.epsilon_, cfg)
        self.coef_ = res.coefficients
        self.result_ = res
        self.mutual_coherence_ = mutual_coherence(A_p) if A_p.shape[1] > 1 else 0.0
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return self.basis_.evaluate(X) @ self.coef_
