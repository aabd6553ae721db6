"""Monte Carlo wave-function trajectories of the monitored emission.

In the single-excitation sector a trajectory holds at most one quantum
jump; after the photon is detected the state is the absorbing ground
state.  The no-jump survival probability is the squared norm of the
unnormalised state,

    N^2(t) = |c(t)|^2 + |b(t)|^2 + c0_ground^2,

with c, b the deterministic closed-form amplitudes, so the jump time is
sampled exactly by inverse transform: draw u uniform in (0, 1], fire at
the unique t* with N^2(t*) = u, no jump if N^2(T) > u.  This removes
the time-step bias of per-step Bernoulli sampling.

Per-trajectory generators are Philox streams keyed by (master_seed,
trajectory index), so records are reproducible regardless of execution
order or worker count.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from . import __version__
from .dynamics import (DEFAULT_DT, FluxSeries, ModelParams,
                       amplitudes_analytic, flux_at, time_grid)

JUMP_TOL = 1e-10   # time tolerance of the jump-time bisection
DEFAULT_BIN_WIDTH = 0.1


class InvalidBinning(ValueError):
    """bin_width must be positive and no larger than the horizon."""


class GridMismatch(ValueError):
    """Estimate and analytic flux are on incommensurate grids."""


class PartialBinWarning(UserWarning):
    """The horizon is not an integer number of bins; tail dropped."""


def trajectory_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Deterministic per-trajectory seed, independent of scheduling."""
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))


def _trajectory_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def survival_at(params: ModelParams, t):
    """Squared norm N^2(t) of the unnormalised no-jump state."""
    c, b = amplitudes_analytic(params, t)
    return np.abs(c) ** 2 + np.abs(b) ** 2 + params.c0_ground ** 2


@dataclass(frozen=True)
class TrajectoryOutcome:
    """One monitored run: the photon arrival time, if any."""

    jump_time: float | None
    seed: object


@dataclass(frozen=True)
class JumpRecord:
    """Emission-time record of an ensemble of trajectories.

    jump_times holds NaN where a trajectory produced no photon within
    the horizon.
    """

    jump_times: np.ndarray
    params: ModelParams
    master_seed: int
    n_traj: int

    @property
    def outcomes(self):
        return [TrajectoryOutcome(
                    jump_time=None if np.isnan(jt) else float(jt),
                    seed=(self.master_seed, i))
                for i, jt in enumerate(self.jump_times)]

    @property
    def n_jumps(self) -> int:
        return int(np.sum(~np.isnan(self.jump_times)))

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("trajectory_index,jump_time\n")
            for i, jt in enumerate(self.jump_times):
                jtxt = "" if np.isnan(jt) else f"{jt:.17g}"
                fh.write(f"{i},{jtxt}\n")

    def manifest(self, bin_width=None) -> dict:
        p = self.params
        return {
            "params": {"gamma": p.gamma, "v": p.v, "delta": p.delta,
                       "c0_init": [complex(p.c0_init).real,
                                   complex(p.c0_init).imag],
                       "t_max": p.t_max},
            "master_seed": self.master_seed,
            "n_traj": self.n_traj,
            "bin_width": bin_width,
            "engine_version": __version__,
        }

    def write_manifest(self, path, bin_width=None):
        with open(path, "w") as fh:
            json.dump(self.manifest(bin_width), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _invert_survival(params, times, n2, us):
    """Jump times for uniform draws us, NaN where no jump occurs.

    Bracket on the precomputed monotone survival grid, then bisection
    against the analytic N^2 to JUMP_TOL.  Ties at grid points break
    toward earlier time (the >= comparison keeps the left branch).
    """
    jump_times = np.full(us.shape, np.nan)
    if params.v == 0 or abs(complex(params.c0_init)) == 0:
        return jump_times          # zero flux: no trajectory ever jumps
    n2_end = n2[-1]
    if n2_end >= 1.0:
        return jump_times
    firing = us >= n2_end
    if not np.any(firing):
        return jump_times
    u = us[firing]

    idx = np.searchsorted(-n2, -u, side="right")
    idx = np.clip(idx, 1, times.size - 1)
    lo = times[idx - 1]
    hi = times[idx]
    dt = float(times[1] - times[0])
    n_iter = max(1, int(np.ceil(np.log2(dt / JUMP_TOL))))
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        ge = survival_at(params, mid) >= u
        lo = np.where(ge, mid, lo)
        hi = np.where(ge, hi, mid)
    jump_times[firing] = 0.5 * (lo + hi)
    return jump_times


def simulate_trajectory(params: ModelParams, seed) -> TrajectoryOutcome:
    """Sample one trajectory; seed is an int or a SeedSequence."""
    rng = _trajectory_rng(seed)
    u = 1.0 - rng.random()                 # uniform in (0, 1]
    times = time_grid(params.t_max, DEFAULT_DT)
    n2 = np.minimum.accumulate(survival_at(params, times))
    jt = _invert_survival(params, times, n2, np.array([u]))[0]
    return TrajectoryOutcome(jump_time=None if np.isnan(jt) else float(jt),
                             seed=seed)


def sample_jump_times(params: ModelParams, n_traj: int, master_seed: int,
                      dt: float = DEFAULT_DT) -> JumpRecord:
    """Emission-time record for n_traj independent trajectories."""
    if n_traj < 1:
        raise ValueError(f"n_traj must be >= 1, got {n_traj}")
    times = time_grid(params.t_max, dt)
    n2 = np.minimum.accumulate(survival_at(params, times))
    us = np.empty(n_traj)
    for i in range(n_traj):
        us[i] = _trajectory_rng(trajectory_seed(master_seed, i)).random()
    us = 1.0 - us
    jump_times = _invert_survival(params, times, n2, us)
    return JumpRecord(jump_times=jump_times, params=params,
                      master_seed=int(master_seed), n_traj=int(n_traj))


def estimate_flux(params: ModelParams, n_traj: int,
                  bin_width: float = DEFAULT_BIN_WIDTH,
                  master_seed: int = 0, dt: float = DEFAULT_DT,
                  record: JumpRecord | None = None) -> FluxSeries:
    """Time-binned flux estimate from emission counts.

    values[k] = count_k / (n_traj * bin_width) over bins covering
    [0, T]; a trailing partial bin is dropped with a warning.  Pass a
    precomputed record to bin an existing ensemble.
    """
    if bin_width <= 0 or bin_width > params.t_max:
        raise InvalidBinning(
            f"bin_width must be in (0, t_max], got {bin_width}")
    if record is None:
        record = sample_jump_times(params, n_traj, master_seed, dt)
    else:
        n_traj = record.n_traj

    n_bins = int(np.floor(params.t_max / bin_width + 1e-9))
    covered = n_bins * bin_width
    if params.t_max - covered > 1e-9 * params.t_max:
        warnings.warn(
            f"horizon {params.t_max} is not a multiple of bin_width "
            f"{bin_width}; dropping the partial bin beyond {covered:g}",
            PartialBinWarning, stacklevel=2)

    jt = record.jump_times[~np.isnan(record.jump_times)]
    counts, _ = np.histogram(jt, bins=n_bins, range=(0.0, covered))
    centers = (np.arange(n_bins) + 0.5) * bin_width
    values = counts / (n_traj * bin_width)
    return FluxSeries(times=centers, values=values, kind="mcwf-estimate",
                      counts=counts, n_traj=n_traj, bin_width=bin_width)


def analytic_flux_at_bins(params: ModelParams,
                          estimate: FluxSeries) -> FluxSeries:
    """Analytic flux evaluated at the estimate's bin centers."""
    return FluxSeries(times=estimate.times.copy(),
                      values=flux_at(params, estimate.times),
                      kind="analytic")


@dataclass(frozen=True)
class ResidualStats:
    """Estimate-vs-analytic residual summary.

    z-scores use the Poisson error model sigma_k = sqrt(max(count_k, 1))
    / (n_traj * bin_width); they are None when the estimate carries no
    counts.
    """

    rms: float
    max_abs_z: float | None
    frac_within: dict | None

    def summary(self) -> str:
        if self.max_abs_z is None:
            return f"rms={self.rms:.4g}"
        frac = ", ".join(f"|z|<={k}: {v:.3f}"
                         for k, v in sorted(self.frac_within.items()))
        return f"rms={self.rms:.4g}, max|z|={self.max_abs_z:.3g}, {frac}"


def flux_residual_stats(estimate: FluxSeries,
                        analytic: FluxSeries) -> ResidualStats:
    """Residual summary of a flux estimate against the analytic flux."""
    if (estimate.times.size != analytic.times.size
            or not np.allclose(estimate.times, analytic.times,
                               rtol=0.0, atol=1e-9)):
        raise GridMismatch("estimate and analytic grids differ")
    resid = estimate.values - analytic.values
    rms = float(np.sqrt(np.mean(resid ** 2)))
    if estimate.counts is None or not estimate.n_traj or not estimate.bin_width:
        return ResidualStats(rms=rms, max_abs_z=None, frac_within=None)
    sigma = np.sqrt(np.maximum(estimate.counts, 1)) / (
        estimate.n_traj * estimate.bin_width)
    z = resid / sigma
    frac = {k: float(np.mean(np.abs(z) <= k)) for k in (1, 2, 3)}
    return ResidualStats(rms=rms, max_abs_z=float(np.max(np.abs(z))),
                         frac_within=frac)
