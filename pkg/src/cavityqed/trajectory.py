"""Quantum-trajectory photon counting.

The master equation is unravelled into no-jump evolution under ``H_eff`` and
rate-driven collapses (cavity emission ``a`` at rate 2 kappa, atomic emission
``s-_j`` at rate gamma, or the symmetrised Dicke operator at rate 2 gamma).
Transit dephasing adds a clocked collapse that swaps the atom for a fresh
ground-state one at Gaussian-distributed intervals.

Each step has fixed length ``dt = 1 / (20 r)`` with ``r`` the fastest rate.
Every trajectory draws from its own generator, seeded from
``(seed, trajectory_id)``, so records do not depend on how the work is split
across threads.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .exceptions import ConfigError, InsufficientDataError, TruncationCapError
from .hamiltonian import build_effective_hamiltonian
from .hilbert import BasisSpec, annihilation, sigma
from .liouville import MAX_DENSE_DIM, _rk4_matrix, solve_steady_state
from .series import CorrelationSeries

log = logging.getLogger(__name__)

# Transit intervals: Gaussian with mean 1/gamma_ph and this FWHM (in units of 1/gamma_ph).
TRANSIT_FWHM = 1.0
FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))
MIN_DETECTIONS = 1000
# Trajectory g2 errors are never below ~1e-2; truncation error is kept well under.
TRAJECTORY_TRUNCATION_TOL = 1e-3


@dataclass(frozen=True)
class CollapseChannel:
    operator: np.ndarray
    kind: str
    rate: float
    schedule: str = "rate"


@dataclass(frozen=True)
class TrajectoryConfig:
    total_time: float
    n_trajectories: int = 1
    seed: int = 0
    record: tuple = ("cavity",)
    burn_in: float = None
    n_jobs: int = 1
    block_steps: int = 1 << 15

    def __post_init__(self):
        if not self.total_time > 0:
            raise ConfigError("total_time must be positive", "total_time")
        if self.n_trajectories < 1:
            raise ConfigError("need at least one trajectory", "trajectories")
        if self.burn_in is not None and self.burn_in < 0:
            raise ConfigError("burn_in must be non-negative", "burn_in")
        object.__setattr__(self, "record", tuple(self.record))

    @staticmethod
    def time_step(params):
        """``1 / (20 r)`` with ``r`` the fastest rate among kappa, gamma, E, g_j, gamma_ph."""
        return 1.0 / (20.0 * params.fastest_rate)

    def burn_in_for(self, params):
        if self.burn_in is not None:
            return self.burn_in
        return 10.0 / min(params.kappa, params.gamma)


@dataclass(frozen=True)
class DetectionRecord:
    times: np.ndarray
    total_time: float
    trajectory_id: int = 0
    counts: dict = field(default_factory=dict)
    # Simulation step; 0 for records without a one-step dead time.
    dt: float = 0.0

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.size and (np.any(np.diff(times) <= 0) or times[0] < 0
                           or times[-1] > self.total_time * (1 + 1e-12)):
            raise ValueError("detection times must increase strictly within [0, total_time]")
        object.__setattr__(self, "times", times)

    def __len__(self):
        return self.times.size

    @property
    def rate(self):
        return self.times.size / self.total_time


def write_record(record, path):
    """One detection time per line after ``# trajectory_id`` / ``# total_time`` headers."""
    with open(path, "w") as fh:
        fh.write(f"# trajectory_id = {record.trajectory_id}\n")
        fh.write(f"# total_time = {float(record.total_time)!r}\n")
        fh.write(f"# dt = {float(record.dt)!r}\n")
        for t in record.times:
            fh.write(f"{float(t)!r}\n")
    return path


def read_record(path):
    meta = {}
    times = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
            else:
                times.append(float(line))
    return DetectionRecord(np.array(times), float(meta["total_time"]),
                           int(meta.get("trajectory_id", 0)), dt=float(meta.get("dt", 0.0)))


def emission_channels(params, basis):
    """Rate-driven collapse channels for the chosen emission model."""
    if params.n_atoms != basis.n_atoms:
        raise ConfigError("basis and parameters disagree on the number of atoms", "couplings")
    channels = [CollapseChannel(annihilation(basis), "cavity", 2.0 * params.kappa)]
    if params.emission_mode == "dicke":
        if basis.n_atoms != 2:
            raise ConfigError("dicke emission requires two atoms", "emission")
        c = (sigma(0, "minus", basis) + sigma(1, "minus", basis)) / np.sqrt(2.0)
        channels.append(CollapseChannel(c, "dicke", 2.0 * params.gamma))
    else:
        for j in range(basis.n_atoms):
            channels.append(CollapseChannel(sigma(j, "minus", basis), f"atomic_{j}", params.gamma))
    return channels


@dataclass(frozen=True)
class Unraveling:
    """Everything a trajectory needs, precomputed for one parameter set."""

    params: object
    basis: BasisSpec
    dt: float
    H_eff: np.ndarray
    propagator: np.ndarray
    channels: tuple
    jump_ops: np.ndarray
    weights: np.ndarray
    diag_weights: np.ndarray
    is_diag: np.ndarray
    transit_partner: np.ndarray
    excited: np.ndarray

    @property
    def kinds(self):
        names = [c.kind for c in self.channels]
        return names + ["transit"]


def truncation_for(params, tol=TRAJECTORY_TRUNCATION_TOL):
    """Smallest Fock truncation whose steady state predicts converged counting.

    Starting from n_max = 2, n_max grows until going one level higher
    changes neither ``<n>`` (relative) nor g2(0) (absolute) of the matching
    master-equation steady state by more than ``tol``. This tests the two
    quantities the detection record is built from, and stays smaller than
    the master-equation rule: the per-step cost grows with the square of
    the dimension.
    """
    me_params = params.replace(dephasing_mode="none", emission_mode="independent", gamma_ph=0.0)

    def moments(n_max):
        basis = BasisSpec(n_max, params.n_atoms)
        if basis.dim > MAX_DENSE_DIM:
            raise TruncationCapError(
                f"no converged trajectory truncation below n_max = {n_max}: "
                f"drive E = {params.drive} is too strong"
            )
        p = np.real(np.diag(solve_steady_state(me_params, basis)))
        n = basis.fock_numbers.astype(float)
        mean = float(np.sum(n * p))
        pairs = float(np.sum(n * (n - 1) * p))
        return basis, mean, pairs / mean**2 if mean > 0 else 1.0

    basis, mean, g0 = moments(2)
    while True:
        nxt, mean2, g02 = moments(basis.n_max + 1)
        if abs(mean2 - mean) <= tol * max(mean2, 1e-300) and abs(g02 - g0) <= tol:
            return basis
        basis, mean, g0 = nxt, mean2, g02


def build_unraveling(params, basis=None, dt=None):
    if params.dephasing_mode == "collisional":
        raise ConfigError("collisional dephasing is simulated with the master equation",
                          "dephasing")
    basis = basis or truncation_for(params)
    dt = dt or TrajectoryConfig.time_step(params)
    H_eff = build_effective_hamiltonian(params, basis)
    channels = tuple(emission_channels(params, basis))
    K = len(channels)
    D = basis.dim
    jump_ops = np.empty((K, D, D), dtype=complex)
    weights = np.empty((K, D, D), dtype=complex)
    diag_weights = np.zeros((K, D))
    is_diag = np.zeros(K, dtype=np.bool_)
    for k, ch in enumerate(channels):
        jump_ops[k] = ch.operator
        w = ch.rate * dt * (ch.operator.conj().T @ ch.operator)
        weights[k] = w
        if np.allclose(w, np.diag(np.diag(w))):
            is_diag[k] = True
            diag_weights[k] = np.diag(w).real
    excited = basis.excited_mask(0)
    partner = np.arange(D)
    # Ground index i = (n, g) takes its amplitude from (n, e) = i + 1 (single atom only).
    if basis.n_atoms == 1:
        partner[~excited] = np.flatnonzero(~excited) + 1
    return Unraveling(
        params=params,
        basis=basis,
        dt=dt,
        H_eff=H_eff,
        propagator=_rk4_matrix(-1j * H_eff, dt),
        channels=channels,
        jump_ops=jump_ops,
        weights=weights,
        diag_weights=diag_weights,
        is_diag=is_diag,
        transit_partner=partner.astype(np.int64),
        excited=excited,
    )


_NO_TRANSIT = (np.empty(0, dtype=np.int64), np.empty(0))


def _advance(model, psi, uniforms, step0, transit=_NO_TRANSIT, tpos=0):
    n_cap = uniforms.shape[0] + transit[0].size
    event_steps = np.empty(n_cap, dtype=np.int64)
    event_kinds = np.empty(n_cap, dtype=np.int64)
    event_fracs = np.empty(n_cap)
    n_events, tpos, n_underflow = _kernel.advance(
        psi, model.propagator, model.jump_ops, model.weights, model.diag_weights,
        model.is_diag, uniforms, step0, transit[0], transit[1], tpos,
        model.transit_partner, model.excited, event_steps, event_kinds, event_fracs,
    )
    if n_underflow:
        log.warning("state norm fell below 1e-12 %d time(s) without a collapse; "
                    "dt may be too large", n_underflow)
    return event_steps[:n_events], event_kinds[:n_events], event_fracs[:n_events], tpos


def step(psi, model, rng=None, uniforms=None):
    """One time step of the unravelled evolution.

    Returns ``(new_psi, events)`` with ``events`` the list of channel kinds
    that collapsed the state (at most one). ``uniforms`` (one per channel
    plus a tie-breaker) may be given to force the outcome; otherwise they
    are drawn from ``rng``.
    """
    psi = np.array(psi, dtype=complex)
    nrm = np.vdot(psi, psi).real
    if not 0 < nrm <= 1 + 1e-12:
        raise ValueError(f"state norm squared must lie in (0, 1], got {nrm}")
    K = len(model.channels)
    if uniforms is None:
        rng = rng if rng is not None else np.random.default_rng()
        uniforms = rng.random(K + 1)
    u = np.asarray(uniforms, dtype=float).reshape(1, K + 1)
    _, kinds, _, _ = _advance(model, psi, u, 0)
    return psi, [model.kinds[k] for k in kinds]


def transit_collapse(psi, basis, rng=None, u=None):
    """Replace the atom by a fresh ground-state one, keeping one field branch.

    With probability ``P_e`` (weight of the excited-atom components) the
    field distribution that accompanied the excited atom is kept, otherwise
    the ground-atom one; the result is normalised.
    """
    if basis.n_atoms != 1:
        raise ConfigError("transit collapse is defined for a single atom", "dephasing")
    psi = np.asarray(psi, dtype=complex)
    excited = basis.excited_mask(0)
    w = np.abs(psi) ** 2
    p_exc = w[excited].sum() / w.sum()
    if u is None:
        rng = rng if rng is not None else np.random.default_rng()
        u = rng.random()
    out = np.zeros_like(psi)
    ground = np.flatnonzero(~excited)
    if u < p_exc:
        out[ground] = psi[ground + 1]
    else:
        out[ground] = psi[ground]
    return out / np.linalg.norm(out)


def draw_transit_times(gamma_ph, total_time, rng, dt=0.0):
    """Cumulative collapse times with Gaussian intervals (mean and FWHM 1/gamma_ph).

    Intervals not exceeding ``dt`` are redrawn.
    """
    if not gamma_ph > 0:
        raise ConfigError("transit dephasing needs gamma_ph > 0", "gamma_ph")
    mean = 1.0 / gamma_ph
    sd = TRANSIT_FWHM * mean * FWHM_TO_SIGMA
    times = []
    t = 0.0
    batch = max(16, int(total_time / mean * 1.1) + 16)
    while True:
        draws = rng.normal(mean, sd, size=batch)
        for d in draws:
            if d <= dt:
                continue
            t += d
            if t > total_time:
                return np.array(times)
            times.append(t)


def trajectory_rngs(seed, trajectory_id):
    """Independent ``(step, transit)`` generators for one trajectory."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trajectory_id),))
    steps_ss, transit_ss = ss.spawn(2)
    return np.random.default_rng(steps_ss), np.random.default_rng(transit_ss)


def run_single(model, cfg, trajectory_id, psi0=None):
    """Simulate one trajectory; returns its :class:`DetectionRecord`."""
    params = model.params
    dt = model.dt
    rng, rng_transit = trajectory_rngs(cfg.seed, trajectory_id)
    n_burn = int(math.ceil(cfg.burn_in_for(params) / dt - 1e-9))
    n_rec = int(round(cfg.total_time / dt))
    n_total = n_burn + n_rec

    if params.dephasing_mode == "transit":
        t_transit = draw_transit_times(params.gamma_ph, n_total * dt, rng_transit, dt)
        steps = np.maximum(np.ceil(t_transit / dt - 1e-9).astype(np.int64) - 1, 0)
        transit = (steps, rng_transit.random(steps.size))
    else:
        transit = _NO_TRANSIT

    psi = np.zeros(model.basis.dim, dtype=complex) if psi0 is None else np.array(psi0, complex)
    if psi0 is None:
        psi[0] = 1.0
    K = len(model.channels)
    record_kinds = [k for k, name in enumerate(model.kinds)
                    if name in cfg.record or (name.startswith("atomic") and "atomic" in cfg.record)]
    detections = []
    counts = dict.fromkeys(model.kinds, 0)
    tpos = 0
    done = 0
    while done < n_total:
        n = min(cfg.block_steps, n_total - done)
        u = rng.random((n, K + 1))
        ev_steps, ev_kinds, ev_fracs, tpos = _advance(model, psi, u, done, transit, tpos)
        for k in range(len(model.kinds)):
            counts[model.kinds[k]] += int(np.sum(ev_kinds[ev_steps >= n_burn] == k))
        keep = (ev_steps >= n_burn) & np.isin(ev_kinds, record_kinds)
        if np.any(keep):
            # Sub-step jump times keep delays off the dt lattice, which would
            # otherwise alias against histogram bin edges.
            detections.append((ev_steps[keep] - n_burn + ev_fracs[keep]) * dt)
        done += n
    times = np.concatenate(detections) if detections else np.empty(0)
    return DetectionRecord(times, n_rec * dt, trajectory_id, counts, dt)


def run_trajectories(params, cfg, basis=None, model=None):
    """Run ``cfg.n_trajectories`` independent trajectories.

    Each starts in vacuum with ground-state atoms and is burnt in before
    recording. Output order and content are independent of ``cfg.n_jobs``.
    """
    if params.dephasing_mode == "transit" and params.n_atoms != 1:
        raise ConfigError("transit dephasing needs a single atom", "dephasing")
    model = model or build_unraveling(params, basis)
    ids = range(cfg.n_trajectories)
    if cfg.n_jobs == 1:
        return [run_single(model, cfg, i) for i in ids]
    with ThreadPoolExecutor(max_workers=cfg.n_jobs) as pool:
        return list(pool.map(lambda i: run_single(model, cfg, i), ids))


def ensemble_average(model, psi0, t_grid, operators, n_trajectories, seed=0):
    """Trajectory-ensemble mean and standard error of ``<O>(t)`` for each operator.

    Starts every trajectory in ``psi0`` (no burn-in); ``t_grid`` must be a
    multiple of ``model.dt``. Returns arrays of shape ``(len(operators), len(t_grid))``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    step_idx = np.rint(t_grid / model.dt).astype(np.int64)
    if np.any(np.abs(step_idx * model.dt - t_grid) > 1e-9 * max(1.0, t_grid.max())):
        raise ValueError("t_grid must lie on multiples of dt")
    K = len(model.channels)
    samples = np.empty((n_trajectories, len(operators), t_grid.size))
    for traj in range(n_trajectories):
        rng, _ = trajectory_rngs(seed, traj)
        psi = np.array(psi0, dtype=complex)
        psi /= np.linalg.norm(psi)
        done = 0
        for ti, target in enumerate(step_idx):
            n = int(target - done)
            if n > 0:
                _advance(model, psi, rng.random((n, K + 1)), done)
                done = target
            nrm = np.vdot(psi, psi).real
            for oi, op in enumerate(operators):
                samples[traj, oi, ti] = np.vdot(psi, op @ psi).real / nrm
    mean = samples.mean(axis=0)
    sem = samples.std(axis=0, ddof=1) / np.sqrt(n_trajectories)
    return mean, sem


def _pair_histogram(times, tau_max, edges, successive):
    counts = np.zeros(edges.size - 1, dtype=np.int64)
    lag = 1
    while lag < times.size:
        d = times[lag:] - times[:-lag]
        d = d[d < tau_max]
        if d.size == 0:
            break
        counts += np.histogram(d, bins=edges)[0]
        if successive:
            break
        lag += 1
    return counts


def dead_time_factor(edges, dt):
    """Bin-averaged pair density of an uncorrelated stream with one jump per step.

    Jumps land uniformly inside their step and never two in one step, so
    the relative density of delays is ``min(tau / dt, 1)``.
    """
    if dt <= 0:
        return np.ones(edges.size - 1)

    def integral(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < dt, 0.5 * x**2 / dt, x - 0.5 * dt)

    return (integral(edges[1:]) - integral(edges[:-1])) / np.diff(edges)


def g2_from_records(records, tau_max, bin_width, estimator="all_pairs"):
    """Histogram estimate of g2(tau) from detection records.

    ``all_pairs`` correlates every ordered pair of detections closer than
    ``tau_max``; ``successive`` uses only neighbouring detections (the
    waiting-time histogram, equal to g2 only at low flux). Each bin is
    normalised by the pair count an uncorrelated stream of the same mean
    rate would give, ``rate**2 * bin_width * sum_r (T_r - tau_c)``, with
    ``tau_c`` the bin centre. Errors are Poisson, ``value / sqrt(count)``.
    """
    if estimator not in ("all_pairs", "successive"):
        raise ConfigError(f"unknown estimator {estimator!r}", "estimator")
    if not 0 < bin_width < tau_max:
        raise ConfigError("need 0 < bin_width < tau_max", "bin_width")
    records = list(records)
    steps = {float(r.dt) for r in records}
    if len(steps) > 1:
        raise ConfigError("records come from different time steps", "records")
    n_det = sum(len(r) for r in records)
    if n_det < MIN_DETECTIONS:
        raise InsufficientDataError(
            f"only {n_det} detections; at least {MIN_DETECTIONS} are needed for a g2 estimate"
        )
    n_bins = int(math.floor(tau_max / bin_width + 1e-9))
    edges = np.arange(n_bins + 1) * bin_width
    counts = np.zeros(n_bins, dtype=np.int64)
    for r in records:
        counts += _pair_histogram(r.times, edges[-1], edges, estimator == "successive")
    total_time = sum(r.total_time for r in records)
    rate = n_det / total_time
    centers = edges[:-1] + 0.5 * bin_width
    exposure = np.array([sum(max(r.total_time - c, 0.0) for r in records) for c in centers])
    expected = rate**2 * bin_width * exposure * dead_time_factor(edges, steps.pop())
    values = counts / expected
    errors = np.where(counts > 0, values / np.sqrt(np.maximum(counts, 1)), 1.0 / expected)
    return CorrelationSeries(
        tau_grid=edges[:-1],
        values=values,
        errors=errors,
        pair_count=counts,
        bin_width=bin_width,
        n_ss=float("nan"),
        source="trajectory",
        meta={"detections": n_det, "rate": rate, "estimator": estimator,
              "records": len(records)},
    )


def detection_rate(records):
    """Pooled detection rate and its Poisson standard error."""
    n = sum(len(r) for r in records)
    T = sum(r.total_time for r in records)
    return n / T, math.sqrt(max(n, 1)) / T
