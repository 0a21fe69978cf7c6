"""Analytic and exact-Gaussian reference models.

Everything here is independent of the Monte-Carlo path: closed-form
plate formulas, a zeta-regularized mode sum for the periodic box, and
exact second moments of the Gaussian link action obtained by linear
algebra.  The action is quadratic, so plaquette moments follow from the
(pseudo-)inverse of its quadratic form; gauge directions are exact zero
modes and plaquettes are orthogonal to them, which keeps the moments
well defined without gauge fixing.

Three exactness routes are provided:

* :func:`small_lattice_gaussian_oracle` -- position space, any mask,
  limited to a few hundred links; validates the sampler directly.
* :func:`free_lattice_moments` -- momentum space, free lattice of any
  size; one 4x4 block per Fourier mode.
* :func:`plates_exact_interaction` -- mixed representation for plate
  scenes: Fourier in (x, y, t), position in z; exact at production size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import PlatePairSpec
from .lattice import (ELECTRIC_PLANES, MAGNETIC_PLANES, NDIR, PLANES, T, Z,
                      LatticeError, LatticeShape, SimulationParams)


class ReferenceError(ValueError):
    """Invalid arguments to a reference model."""


@dataclass(frozen=True)
class AnalyticResult:
    """Reference value plus how it was obtained.

    ``convergence`` is the difference between the last two refinement
    levels for quadrature/extrapolation results, 0 for closed forms.
    """

    value: float
    provenance: str
    convergence: float = 0.0
    refinement: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# closed-form plate results


def plates_analytic_energy(area: float, separation: float) -> float:
    """Magnitude of the ideal-conductor parallel-plate energy.

    pi^2 * area / (720 * separation^3), in units where the inputs share
    one length unit and the energy is inverse length.
    """
    if area <= 0 or separation <= 0:
        raise ReferenceError("area and separation must be positive")
    return np.pi ** 2 * area / (720.0 * separation ** 3)


def plates_lattice_coefficient(n_transverse: int, alpha: float) -> float:
    """Dimensionless coefficient of 1/R^3 for the plate scene on the lattice.

    Plates of area (n*a)^2 separated by R steps of size alpha*a carry
    energy pi^2 n^2 / (720 alpha^3)  * 1/R^3 in units of 1/a.
    """
    if n_transverse < 1 or alpha <= 0:
        raise ReferenceError("need n >= 1 and alpha > 0")
    return np.pi ** 2 * n_transverse ** 2 / (720.0 * alpha ** 3)


# ---------------------------------------------------------------------------
# mode sum for one periodic direction


def _regularized_cube_sum(eps_values: tuple[float, ...]) -> tuple[float, float]:
    """Finite part of sum n^3 via heat-kernel subtraction.

    S(eps) = sum_{n>=1} n^3 exp(-eps n) diverges as 6/eps^4; the
    remainder tends to the regularized value with even-power corrections,
    removed by Richardson extrapolation over halved eps.
    """
    raw = []
    for eps in eps_values:
        n_max = int(max(400.0, 120.0 / eps))
        n = np.arange(1, n_max + 1, dtype=np.float64)
        s = float(np.sum(n ** 3 * np.exp(-eps * n)))
        raw.append(s - 6.0 / eps ** 4)
    level = np.asarray(raw)
    eps_arr = np.asarray(eps_values, dtype=np.float64)
    power = 2
    last_values = [level[-1]]
    while len(level) > 1:
        ratio = (eps_arr[:-1] / eps_arr[1:]) ** power
        level = (ratio * level[1:] - level[:-1]) / (ratio - 1.0)
        eps_arr = eps_arr[1:]
        power += 2
        last_values.append(level[-1])
    convergence = abs(last_values[-1] - last_values[-2]) if len(last_values) > 1 else np.inf
    return float(last_values[-1]), float(convergence)


def periodic_modesum_constant(field_kind: str = "em",
                              eps_values: tuple[float, ...] = (0.2, 0.1, 0.05, 0.025),
                              ) -> AnalyticResult:
    """Energy-density constant C = <T00> * R^4 for one periodic direction.

    Summing (1/2) * omega over transverse momenta and the discrete modes
    of a periodic direction of circumference R gives, after removing the
    R-independent divergence, C / R^4 with

        C = -(4 pi^2 / 3) * [regularized sum of n^3]   per polarization.

    The cube sum is evaluated numerically here, not transcribed; the
    electromagnetic field carries two polarizations, the scalar variant
    one.
    """
    if field_kind not in ("em", "scalar"):
        raise ReferenceError(f"unknown field kind {field_kind!r}")
    cube_sum, convergence = _regularized_cube_sum(eps_values)
    per_polarization = -(4.0 * np.pi ** 2 / 3.0) * cube_sum
    polarizations = 2 if field_kind == "em" else 1
    return AnalyticResult(
        value=polarizations * per_polarization,
        provenance="mode-sum",
        convergence=polarizations * 4.0 * np.pi ** 2 / 3.0 * convergence,
        refinement={"eps_values": eps_values, "polarizations": polarizations},
    )


# ---------------------------------------------------------------------------
# momentum-space free-lattice moments


def _plane_weights(params: SimulationParams) -> dict[tuple[int, int], float]:
    return {plane: params.plane_weight(*plane) for plane in PLANES}


def free_lattice_moments(shape: LatticeShape, params: SimulationParams,
                         chunk: int = 65536):
    """Exact per-plane <theta^2> and mean energy density of the free lattice.

    Returns (moments, mean_density) where ``moments`` maps each plane
    (mu, nu) to its site-independent second moment.  Works at any size:
    the quadratic form is block diagonal in momentum space with one 4x4
    Hermitian block per mode.
    """
    dims = shape.dims
    weights = _plane_weights(params)
    ks = [2.0 * np.pi * np.arange(n) / n for n in dims]
    grids = np.meshgrid(*ks, indexing="ij")
    d = np.stack([np.exp(1j * g) - 1.0 for g in grids], axis=-1).reshape(-1, NDIR)
    volume = shape.volume
    sums = {plane: 0.0 for plane in PLANES}
    for start in range(0, volume, chunk):
        d_block = d[start:start + chunk]
        n_block = d_block.shape[0]
        a = np.zeros((n_block, NDIR, NDIR), dtype=np.complex128)
        m_vectors = {}
        for (mu, nu) in PLANES:
            m = np.zeros((n_block, NDIR), dtype=np.complex128)
            m[:, nu] = d_block[:, mu]
            m[:, mu] = -d_block[:, nu]
            m_vectors[(mu, nu)] = m
            a += weights[(mu, nu)] * np.einsum("bi,bj->bij", m.conj(), m)
        vals, vecs = np.linalg.eigh(a)
        tol = np.maximum(vals[:, -1], 1e-300)[:, None] * 1e-12
        inv = np.where(vals > tol, 1.0 / np.where(vals > tol, vals, 1.0), 0.0)
        for plane, m in m_vectors.items():
            proj = np.einsum("bi,bij->bj", m.conj(), vecs)
            sums[plane] += float(np.sum(np.abs(proj) ** 2 * inv))
    moments = {plane: sums[plane] / (volume * params.beta) for plane in PLANES}
    density = 0.5 * params.beta * (
        sum(weights[p] * moments[p] for p in MAGNETIC_PLANES)
        - sum(weights[p] * moments[p] for p in ELECTRIC_PLANES))
    return moments, float(density)


# ---------------------------------------------------------------------------
# position-space oracle for arbitrary small scenes


class GaussianLatticeOracle:
    """Exact Gaussian moments of a (small) masked lattice.

    Builds the action as (1/2) u^T M u over unmasked links and exposes
    plaquette covariances through a pseudo-inverse of M.  Dimension is
    capped because the cost is cubic in the number of links.
    """

    def __init__(self, shape: LatticeShape, params: SimulationParams,
                 frozen: np.ndarray | None = None, eps: np.ndarray | None = None,
                 max_links: int = 2000, route: str = "pinv"):
        self.shape = shape
        self.params = params
        dims = shape.dims
        if frozen is None:
            frozen = np.zeros((NDIR,) + dims, dtype=bool)
        n_links = shape.link_count
        kept = ~frozen.reshape(-1)
        self.n_unmasked = int(np.count_nonzero(kept))
        if self.n_unmasked > max_links:
            raise ReferenceError(
                f"{self.n_unmasked} unmasked links exceed the oracle cap {max_links}")
        index_of = -np.ones(n_links, dtype=np.int64)
        index_of[kept] = np.arange(self.n_unmasked)

        def link_index(mu, site):
            flat = np.ravel_multi_index(site, dims)
            return index_of[mu * shape.volume + flat]

        weights = _plane_weights(params)
        rows = []
        meta = []
        w_list = []
        sign_list = []
        for mu, nu in PLANES:
            w_base = weights[(mu, nu)]
            electric = (mu, nu) in ELECTRIC_PLANES
            for flat in range(shape.volume):
                site = np.unravel_index(flat, dims)
                b = np.zeros(self.n_unmasked)
                fwd_mu = list(site)
                fwd_mu[mu] = (fwd_mu[mu] + 1) % dims[mu]
                fwd_nu = list(site)
                fwd_nu[nu] = (fwd_nu[nu] + 1) % dims[nu]
                for sign, direction, at in (
                        (+1.0, nu, tuple(fwd_mu)), (-1.0, nu, site),
                        (-1.0, mu, tuple(fwd_nu)), (+1.0, mu, site)):
                    idx = link_index(direction, at)
                    if idx >= 0:
                        b[idx] += sign
                w = w_base
                if electric and eps is not None:
                    w = w_base * float(eps[site[0], site[1], site[2]])
                rows.append(b)
                meta.append(((mu, nu), site))
                w_list.append(w)
                sign_list.append(-1.0 if electric else +1.0)
        self.b_matrix = np.asarray(rows)              # (n_plaq, n_links)
        self.plaquettes = meta
        self.plaq_weights = np.asarray(w_list)
        self.obs_signs = np.asarray(sign_list)
        m = params.beta * (self.b_matrix.T * self.plaq_weights) @ self.b_matrix
        if route == "pinv":
            self.covariance = np.linalg.pinv(m, hermitian=True)
            self.rank = int(np.linalg.matrix_rank(m, hermitian=True))
        elif route == "eigh":
            vals, vecs = np.linalg.eigh(m)
            tol = max(vals[-1], 0.0) * 1e-12
            inv = np.where(vals > tol, 1.0 / np.where(vals > tol, vals, 1.0), 0.0)
            self.covariance = (vecs * inv) @ vecs.T
            self.rank = int(np.count_nonzero(vals > tol))
        else:
            raise ReferenceError(f"unknown linear-algebra route {route!r}")
        self.theta_cov = self.b_matrix @ self.covariance @ self.b_matrix.T

    def plaquette_index(self, mu: int, nu: int, site) -> int:
        site = tuple(int(c) % n for c, n in zip(site, self.shape.dims))
        return self.plaquettes.index(((mu, nu), site))

    def theta_second_moment(self, mu: int, nu: int, site) -> float:
        i = self.plaquette_index(mu, nu, site)
        return float(self.theta_cov[i, i])

    def all_theta_second_moments(self) -> np.ndarray:
        return np.diag(self.theta_cov).copy()

    def mean_action(self) -> float:
        """<S> equals half the rank of the quadratic form (equipartition)."""
        diag = np.diag(self.theta_cov)
        return 0.5 * self.params.beta * float(np.sum(self.plaq_weights * diag))

    def mean_energy_density(self) -> np.ndarray:
        """Exact <rho(x)> per site."""
        diag = np.diag(self.theta_cov)
        out = np.zeros(self.shape.dims)
        for (plane, site), w, s, th2 in zip(self.plaquettes, self.plaq_weights,
                                            self.obs_signs, diag):
            out[site] += 0.5 * self.params.beta * s * w * th2
        return out

    def variance_of_total_energy(self) -> float:
        """Exact Var of the summed single-configuration energy observable.

        For Gaussian theta the observable sum is a quadratic form Q in the
        links; Var = 2 Tr[(cov Q)^2].
        """
        q = 0.5 * self.params.beta * (
            self.b_matrix.T * (self.obs_signs * self.plaq_weights)) @ self.b_matrix
        cq = self.covariance @ q
        return float(2.0 * np.trace(cq @ cq))


def small_lattice_gaussian_oracle(shape: LatticeShape, params: SimulationParams,
                                  frozen: np.ndarray | None = None,
                                  eps: np.ndarray | None = None,
                                  route: str = "pinv") -> GaussianLatticeOracle:
    """Exact plaquette second moments for lattices up to a few hundred links."""
    return GaussianLatticeOracle(shape, params, frozen, eps, route=route)


# ---------------------------------------------------------------------------
# exact plate scenes: Fourier transverse, explicit z


def _plates_block_density(shape: LatticeShape, params: SimulationParams,
                          plate_zs: tuple[int, ...], chunk: int = 2048) -> np.ndarray:
    """Exact mean energy density profile over z for plate sublattices.

    Plates freeze x, y, t links on their z plane.  The quadratic form
    factorizes over transverse momentum (kx, ky, kt) into blocks of the
    4 * nz link amplitudes along z.
    """
    nx, ny, nz, nt = shape.dims
    weights = _plane_weights(params)
    trans_dims = (nx, ny, nt)
    trans_axes = (0, 1, 3)  # lattice directions x, y, t
    v_perp = nx * ny * nt
    n_var = NDIR * nz

    frozen_var = np.zeros(n_var, dtype=bool)
    for z in plate_zs:
        for mu in (0, 1, 3):
            frozen_var[mu * nz + (z % nz)] = True
    kept = np.where(~frozen_var)[0]
    keep_index = -np.ones(n_var, dtype=np.int64)
    keep_index[kept] = np.arange(len(kept))

    ks = [2.0 * np.pi * np.arange(n) / n for n in trans_dims]
    grids = np.meshgrid(*ks, indexing="ij")
    d_trans = np.stack([np.exp(1j * g) - 1.0 for g in grids], axis=-1).reshape(-1, 3)

    # sparse stencil of every (plane, z) plaquette amplitude
    # entries: (plane, z, var_index, coefficient as function of d)
    def plane_entries(mu, nu, z, d):
        # d: (batch, 3) transverse phase factors in order (x, y, t)
        trans_of = {0: 0, 1: 1, 3: 2}
        entries = []
        if mu != Z and nu != Z:
            entries.append((nu * nz + z, d[:, trans_of[mu]]))
            entries.append((mu * nz + z, -d[:, trans_of[nu]]))
        elif nu == Z:
            # theta_{mu z} = d_mu * U_z(z) - (U_mu(z+1) - U_mu(z))
            entries.append((Z * nz + z, d[:, trans_of[mu]]))
            ones = np.ones(d.shape[0], dtype=np.complex128)
            entries.append((mu * nz + (z + 1) % nz, -ones))
            entries.append((mu * nz + z, ones))
        else:
            raise AssertionError("planes are ordered mu < nu")
        return entries

    rho = np.zeros(nz)
    n_modes = d_trans.shape[0]
    for start in range(0, n_modes, chunk):
        d = d_trans[start:start + chunk]
        nb = d.shape[0]
        a = np.zeros((nb, len(kept), len(kept)), dtype=np.complex128)
        plane_ms = []
        for (mu, nu) in PLANES:
            w = weights[(mu, nu)]
            for z in range(nz):
                m = np.zeros((nb, len(kept)), dtype=np.complex128)
                for var, coeff in plane_entries(mu, nu, z, d):
                    ki = keep_index[var]
                    if ki >= 0:
                        m[:, ki] += coeff
                plane_ms.append(((mu, nu), z, m))
                a += w * np.einsum("bi,bj->bij", m.conj(), m)
        vals, vecs = np.linalg.eigh(a)
        tol = np.maximum(vals[:, -1], 1e-300)[:, None] * 1e-11
        inv = np.where(vals > tol, 1.0 / np.where(vals > tol, vals, 1.0), 0.0)
        for (mu, nu), z, m in plane_ms:
            proj = np.einsum("bi,bij->bj", m.conj(), vecs)
            th2 = float(np.sum(np.abs(proj) ** 2 * inv))
            sign = -1.0 if (mu, nu) in ELECTRIC_PLANES else +1.0
            rho[z] += 0.5 * sign * weights[(mu, nu)] * th2 / v_perp
    # the 1/beta from the covariance cancels the beta/2 prefactor's beta
    return rho


def plates_exact_density_profile(shape: LatticeShape, params: SimulationParams,
                                 plate_zs: tuple[int, ...]) -> np.ndarray:
    """Exact <rho>(z) per site for any set of plate sublattices."""
    return _plates_block_density(shape, params, tuple(plate_zs))


def plates_exact_interaction(shape: LatticeShape, params: SimulationParams,
                             pair: PlatePairSpec) -> float:
    """Exact renormalized interaction energy of a plate-pair scene.

    Evaluates the same four-scene subtraction the sampler uses --
    full - selfA - selfB + free -- with each scene solved exactly.
    """
    pair.validate(shape)
    v_perp = shape.nx * shape.ny * shape.nt
    zs_full = (pair.z_low,) if pair.z_high >= shape.nz \
        else (pair.z_low, pair.z_high)
    rho_full = _plates_block_density(shape, params, zs_full)
    rho_a = _plates_block_density(shape, params, (pair.z_low,))
    rho_b = _plates_block_density(shape, params, (pair.z_high % shape.nz,))
    rho_free = _plates_block_density(shape, params, ())
    per_z = rho_full - rho_a - rho_b + rho_free
    return float(v_perp * per_z.sum())
