"""Estimator-style wrappers around the three correlation routes.

Each correlator is a scikit-learn ``BaseEstimator``: constructor arguments are
the physical and numerical settings, ``fit`` solves for the steady state (or
simulates trajectories), ``predict(tau)`` returns the correlation at the
requested delays. ``get_params``/``set_params``/``clone`` make parameter scans
a matter of cloning one configured estimator.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ConfigError
from .liouville import conditioned_photon_evolution, g2_regression, steady_state_for
from .params import SystemParams
from .trajectory import TrajectoryConfig, detection_rate, g2_from_records, run_trajectories
from .validation import default_tau_grid


def _tau_input(X):
    tau = check_array(X, ensure_2d=False, dtype=float, input_name="tau")
    tau = tau.ravel()
    if np.any(tau < 0):
        raise ConfigError("delays must be non-negative", "tau")
    return tau


class _Correlator(BaseEstimator):
    """Shared parameter handling; subclasses implement ``_series``."""

    _source = None

    def __init__(self, g=1.0, g2=None, kappa=1.0, drive=0.0, gamma_ph=0.0,
                 dephasing="none", emission="independent", tau_max=10.0, tau_points=501):
        self.g = g
        self.g2 = g2
        self.kappa = kappa
        self.drive = drive
        self.gamma_ph = gamma_ph
        self.dephasing = dephasing
        self.emission = emission
        self.tau_max = tau_max
        self.tau_points = tau_points

    def system_params(self):
        couplings = (self.g,) if self.g2 is None else (self.g, self.g2)
        return SystemParams(couplings=couplings, kappa=self.kappa, drive=self.drive,
                            gamma_ph=self.gamma_ph, dephasing_mode=self.dephasing,
                            emission_mode=self.emission)

    def _grid(self, X):
        if X is None:
            return default_tau_grid(self.tau_max, self.tau_points)
        tau = np.unique(_tau_input(X))
        return tau if tau[0] == 0 else np.concatenate([[0.0], tau])

    def fit(self, X=None, y=None):
        """Compute the correlation on ``X`` (delays) or on the default grid."""
        params = self.system_params()
        self.series_ = self._series(params, self._grid(X))
        self.n_ss_ = self.series_.n_ss
        return self

    def correlation(self):
        check_is_fitted(self, "series_")
        return self.series_

    def predict(self, X):
        check_is_fitted(self, "series_")
        tau = _tau_input(X)
        grid = self.series_.tau_grid
        idx = np.searchsorted(grid, tau).clip(max=grid.size - 1)
        if np.allclose(grid[idx], tau, rtol=0, atol=1e-12):
            return self.series_.values[idx]
        # Off-grid delays: solve again on a grid that contains them.
        grid = self._grid(tau)
        return self._series(self.system_params(), grid).values[np.searchsorted(grid, tau)]


class RegressionCorrelator(_Correlator):
    """g2(tau) from the master equation and the quantum regression formula."""

    def _series(self, params, tau):
        if getattr(self, "basis_", None) is None or self.basis_.n_atoms != params.n_atoms:
            self.basis_, _ = steady_state_for(params)
        return g2_regression(params, tau, basis=self.basis_)

    def fit(self, X=None, y=None):
        self.basis_ = None
        return super().fit(X, y)


class ConditionedCorrelator(_Correlator):
    """Photon number after one detection, normalised by the no-jump steady state."""

    def _series(self, params, tau):
        return conditioned_photon_evolution(params, tau)


class TrajectoryCorrelator(_Correlator):
    """g2(tau) histogrammed from simulated photodetection records.

    ``predict`` returns the value of the bin containing each delay.
    """

    def __init__(self, g=1.0, g2=None, kappa=1.0, drive=0.0, gamma_ph=0.0,
                 dephasing="none", emission="independent", tau_max=10.0, tau_points=501,
                 bin_width=0.1, n_trajectories=1, total_time=1e4, seed=0, n_jobs=1,
                 burn_in=None, estimator="all_pairs"):
        super().__init__(g=g, g2=g2, kappa=kappa, drive=drive, gamma_ph=gamma_ph,
                         dephasing=dephasing, emission=emission, tau_max=tau_max,
                         tau_points=tau_points)
        self.bin_width = bin_width
        self.n_trajectories = n_trajectories
        self.total_time = total_time
        self.seed = seed
        self.n_jobs = n_jobs
        self.burn_in = burn_in
        self.estimator = estimator

    def trajectory_config(self):
        return TrajectoryConfig(total_time=self.total_time, n_trajectories=self.n_trajectories,
                                seed=self.seed, burn_in=self.burn_in, n_jobs=self.n_jobs)

    def fit(self, X=None, y=None, records=None):
        """Simulate (or reuse ``records``) and histogram the detection pairs.

        ``X`` is ignored: the delay grid is set by ``tau_max`` and ``bin_width``.
        """
        params = self.system_params()
        if records is None:
            records = run_trajectories(params, self.trajectory_config())
        self.records_ = list(records)
        self.rate_, self.rate_error_ = detection_rate(self.records_)
        series = g2_from_records(self.records_, self.tau_max, self.bin_width, self.estimator)
        self.n_ss_ = self.rate_ / (2.0 * params.kappa)
        self.series_ = type(series)(
            tau_grid=series.tau_grid, values=series.values, errors=series.errors,
            pair_count=series.pair_count, bin_width=series.bin_width, n_ss=self.n_ss_,
            source="trajectory", meta=series.meta,
        )
        return self

    def predict(self, X):
        check_is_fitted(self, "series_")
        tau = _tau_input(X)
        idx = np.floor(tau / self.series_.bin_width + 1e-9).astype(int)
        if np.any(idx >= len(self.series_)):
            raise ConfigError("delay beyond the histogram range", "tau")
        return self.series_.values[idx]


CORRELATORS = {
    "regression": RegressionCorrelator,
    "conditioned": ConditionedCorrelator,
    "trajectory": TrajectoryCorrelator,
}


def correlator_for(params, method="regression", **settings):
    """Build an unfitted correlator matching ``params``."""
    if method not in CORRELATORS:
        raise ConfigError(f"unknown method {method!r}", "method")
    g2 = params.couplings[1] if params.n_atoms == 2 else None
    return CORRELATORS[method](g=params.g, g2=g2, kappa=params.kappa, drive=params.drive,
                               gamma_ph=params.gamma_ph, dephasing=params.dephasing_mode,
                               emission=params.emission_mode, **settings)
