"""Vacuum-energy observable, error analysis and renormalization.

The per-site energy density flips the sign of the electric (time-plane)
plaquettes relative to the action:

    rho(x) = beta/2 * [ sum_{i<j} w_ij theta_ij(x)^2
                        - sum_i w_it theta_it(x)^2 ]

with the same anisotropy/dielectric weights w as the action.  The sign
flip cancels the divergent constant the naive quadratic estimator picks
up from the roughness of the sampled paths: on the isotropic free
lattice electric and magnetic plaquettes are statistically identical, so
the expectation of rho is exactly zero and no explicit constant needs
subtracting there.

Interaction energies follow from four scenes on the same lattice:
(full - free) - (A alone - free) - (B alone - free), i.e. per site
``full - selfA - selfB + free``.  Scenes run as independent chains whose
variances add; with the shared-seed correlated mode the four chains see
identical noise and the combination is formed measurement by
measurement, which cancels the bulk fluctuations.

Errors come from jackknife over bins of consecutive measurements; the
bin size must sit past the autocorrelation plateau, which
:func:`binning_scan` exposes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import (ELECTRIC_PLANES, MAGNETIC_PLANES, LatticeError,
                      LinkField, SimulationParams, _electric_eps_factor,
                      theta_array)


class StatisticsError(ValueError):
    """Not enough data for the requested estimate."""


def energy_density_observable(field: LinkField, params: SimulationParams,
                              eps: np.ndarray | None = None) -> np.ndarray:
    """Per-site energy density of one configuration (units 1/a per site)."""
    eps_t = _electric_eps_factor(eps, field.shape)
    rho = np.zeros(field.shape.dims)
    for mu, nu in MAGNETIC_PLANES:
        rho += params.plane_weight(mu, nu) * theta_array(field.values, mu, nu) ** 2
    for mu, nu in ELECTRIC_PLANES:
        th2 = theta_array(field.values, mu, nu) ** 2
        w = params.plane_weight(mu, nu)
        if eps_t is not None:
            rho -= w * eps_t * th2
        else:
            rho -= w * th2
    return 0.5 * params.beta * rho


@dataclass(frozen=True)
class EnergyEstimate:
    """Lattice-summed energy with a jackknife standard error."""

    mean: float
    std_error: float
    bin_count: int
    measurements: int


def jackknife_mean(samples: np.ndarray, bin_size: int) -> tuple[float, float, int]:
    """Mean and jackknife error of a series binned by ``bin_size``.

    Trailing samples that do not fill a bin are dropped.  Returns
    (mean, std_error, number of bins).
    """
    samples = np.asarray(samples, dtype=np.float64)
    n_bins = len(samples) // bin_size
    if n_bins < 2:
        raise StatisticsError(
            f"need >= 2 bins, got {n_bins} from {len(samples)} samples at bin size {bin_size}"
        )
    used = samples[:n_bins * bin_size]
    bins = used.reshape(n_bins, bin_size).mean(axis=1)
    total = bins.mean()
    leave_one_out = (bins.sum() - bins) / (n_bins - 1)
    var = (n_bins - 1) / n_bins * np.sum((leave_one_out - total) ** 2)
    return float(total), float(np.sqrt(var)), n_bins


def binning_scan(samples: np.ndarray, bin_sizes=None) -> list[tuple[int, float]]:
    """Jackknife error as a function of bin size (autocorrelation probe)."""
    samples = np.asarray(samples, dtype=np.float64)
    if bin_sizes is None:
        bin_sizes, b = [], 1
        while len(samples) // b >= 2:
            bin_sizes.append(b)
            b *= 2
    out = []
    for b in bin_sizes:
        if len(samples) // b < 2:
            break
        _, err, _ = jackknife_mean(samples, b)
        out.append((b, err))
    return out


def default_bin_size(n_measurements: int, target_bins: int = 25) -> int:
    return max(1, n_measurements // target_bins)


class EnergyAccumulator:
    """Streaming accumulator: per-site mean field plus a scalar series.

    ``add`` consumes one per-site density field per measurement.  The
    summed density series feeds the jackknife; the per-site sum yields
    the mean density map.
    """

    def __init__(self):
        self._site_sum: np.ndarray | None = None
        self.totals: list[float] = []

    def add(self, density: np.ndarray) -> None:
        if self._site_sum is None:
            self._site_sum = np.zeros_like(density)
        elif density.shape != self._site_sum.shape:
            raise LatticeError("density field shape changed mid-stream")
        self._site_sum += density
        self.totals.append(float(density.sum()))

    @property
    def count(self) -> int:
        return len(self.totals)

    def mean_field(self) -> np.ndarray:
        if self._site_sum is None or not self.totals:
            raise StatisticsError("no measurements accumulated")
        return self._site_sum / len(self.totals)

    def estimate(self, bin_size: int | None = None) -> EnergyEstimate:
        if len(self.totals) < 2:
            raise StatisticsError("need at least 2 measurements")
        if bin_size is None:
            bin_size = default_bin_size(len(self.totals))
        mean, err, bins = jackknife_mean(np.asarray(self.totals), bin_size)
        return EnergyEstimate(mean, err, bins, len(self.totals))


def accumulate_statistics(stream, bin_size: int | None = None
                          ) -> tuple[np.ndarray, EnergyEstimate]:
    """Consume an iterable of density fields; return (mean field, estimate)."""
    acc = EnergyAccumulator()
    for density in stream:
        acc.add(density)
    return acc.mean_field(), acc.estimate(bin_size)


@dataclass
class SceneResult:
    """Measured scene: mean density map, summed estimate and raw series."""

    mean_field: np.ndarray
    estimate: EnergyEstimate
    totals: np.ndarray
    shape_dims: tuple[int, int, int, int]
    params: SimulationParams


def renormalize_density_fields(full: np.ndarray, self_a: np.ndarray,
                               self_b: np.ndarray, free: np.ndarray) -> np.ndarray:
    """Per-site interaction density: full - selfA - selfB + free, exactly."""
    for other in (self_a, self_b, free):
        if other.shape != full.shape:
            raise LatticeError("renormalization fields have mismatched shapes")
    return full - self_a - self_b + free


def renormalize_interaction_energy(
        full: SceneResult, self_a: SceneResult, self_b: SceneResult,
        free: SceneResult, bin_size: int | None = None, correlated: bool = False,
) -> tuple[np.ndarray, EnergyEstimate]:
    """Interaction energy density and its lattice-summed estimate.

    Independent chains (default) combine errors in quadrature.  In
    correlated mode the four scenes were driven by one noise stream, so
    the signed combination is binned measurement-by-measurement instead.
    """
    results = (full, self_a, self_b, free)
    dims = full.shape_dims
    params = full.params
    for r in results:
        if r.shape_dims != dims or r.params != params:
            raise LatticeError("renormalization scenes differ in lattice or couplings")
    density = renormalize_density_fields(
        full.mean_field, self_a.mean_field, self_b.mean_field, free.mean_field)
    if correlated:
        n = min(len(r.totals) for r in results)
        series = (np.asarray(full.totals[:n]) - np.asarray(self_a.totals[:n])
                  - np.asarray(self_b.totals[:n]) + np.asarray(free.totals[:n]))
        if bin_size is None:
            bin_size = default_bin_size(n)
        mean, err, bins = jackknife_mean(series, bin_size)
        est = EnergyEstimate(mean, err, bins, n)
    else:
        mean = (full.estimate.mean - self_a.estimate.mean
                - self_b.estimate.mean + free.estimate.mean)
        err = float(np.sqrt(full.estimate.std_error ** 2
                            + self_a.estimate.std_error ** 2
                            + self_b.estimate.std_error ** 2
                            + free.estimate.std_error ** 2))
        est = EnergyEstimate(mean, err,
                             min(r.estimate.bin_count for r in results),
                             min(r.estimate.measurements for r in results))
    return density, est


def lateral_curve_and_force(shifts, energies, errors, period: int):
    """Lateral energy table with centered-difference forces.

    ``shifts`` must cover 0..period-1 for the wrap to make sense; the
    force at shift s is -(E(s+1) - E(s-1))/2 in lattice units per x step.
    Returns rows of (shift, energy, error, force, force_error).
    """
    shifts = [int(s) for s in shifts]
    if sorted(shifts) != list(range(period)):
        raise StatisticsError("lateral curve needs every shift in one period")
    e = {s: float(v) for s, v in zip(shifts, energies)}
    de = {s: float(v) for s, v in zip(shifts, errors)}
    rows = []
    for s in range(period):
        up, dn = (s + 1) % period, (s - 1) % period
        force = -(e[up] - e[dn]) / 2.0
        ferr = float(np.hypot(de[up], de[dn]) / 2.0)
        rows.append((s, e[s], de[s], force, ferr))
    return rows


def xz_density_map(density: np.ndarray) -> np.ndarray:
    """(z, x) cross-section of a density field, averaged over y and t."""
    return density.mean(axis=(1, 3)).T
