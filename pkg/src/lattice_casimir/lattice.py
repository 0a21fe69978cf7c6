"""4D hypercubic lattice, link fields, plaquettes, and the gauge action.

Directions are indexed 0..3 for (x, y, z, t).  All four directions are
periodic; conductor surfaces are realized by freezing links to zero, not
by open boundaries.  The z direction (index 2) may carry a shorter
lattice step than the other three, controlled by the anisotropy ratio in
:class:`SimulationParams`; plaquette weights are ``alpha`` for planes not
containing z and ``1/alpha`` for planes containing z.

Link values are real and unbounded.  A link field is stored as a single
float64 array of shape ``(4, nx, ny, nz, nt)``: direction-major, row-major
over sites, periodic index wrap everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

X, Y, Z, T = 0, 1, 2, 3
NDIR = 4

#: The six distinct plaquette planes (mu < nu).
PLANES: tuple[tuple[int, int], ...] = (
    (X, Y), (X, Z), (X, T), (Y, Z), (Y, T), (Z, T),
)

#: Planes containing the Euclidean time axis ("electric" plaquettes).
ELECTRIC_PLANES: tuple[tuple[int, int], ...] = ((X, T), (Y, T), (Z, T))

#: Purely spatial planes ("magnetic" plaquettes).
MAGNETIC_PLANES: tuple[tuple[int, int], ...] = ((X, Y), (X, Z), (Y, Z))


class LatticeError(ValueError):
    """Invalid lattice geometry or mismatched field shapes."""


@dataclass(frozen=True)
class LatticeShape:
    """Extent of the lattice in each direction (sites)."""

    nx: int
    ny: int
    nz: int
    nt: int

    def __post_init__(self):
        for n in self.dims:
            if n < 2:
                raise LatticeError(f"lattice extents must be >= 2, got {self.dims}")

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return (self.nx, self.ny, self.nz, self.nt)

    @property
    def volume(self) -> int:
        return self.nx * self.ny * self.nz * self.nt

    @property
    def link_count(self) -> int:
        return NDIR * self.volume

    def extent(self, direction: int) -> int:
        return self.dims[direction]


@dataclass(frozen=True)
class SimulationParams:
    """Coupling and anisotropy of the quadratic link action.

    beta is the inverse squared charge; alpha is the ratio of the z step
    to the step of the other three directions.  alpha == 1 gives the
    isotropic action.
    """

    beta: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise LatticeError(f"beta must be positive, got {self.beta}")
        if not self.alpha > 0:
            raise LatticeError(f"alpha must be positive, got {self.alpha}")

    def plane_weight(self, mu: int, nu: int) -> float:
        """Anisotropy weight of plaquette plane (mu, nu)."""
        if mu == nu:
            raise LatticeError("plaquette plane needs two distinct directions")
        return 1.0 / self.alpha if Z in (mu, nu) else self.alpha


@dataclass
class LinkField:
    """One real value per (direction, site); the sampled gauge field."""

    shape: LatticeShape
    values: np.ndarray = field(repr=False, default=None)  # (4, nx, ny, nz, nt)

    def __post_init__(self):
        expected = (NDIR,) + self.shape.dims
        if self.values is None:
            self.values = np.zeros(expected)
        else:
            self.values = np.asarray(self.values, dtype=np.float64)
            if self.values.shape != expected:
                raise LatticeError(
                    f"link array has shape {self.values.shape}, expected {expected}"
                )

    @classmethod
    def zeros(cls, shape: LatticeShape) -> "LinkField":
        return cls(shape)

    @classmethod
    def random(cls, shape: LatticeShape, rng: np.random.Generator,
               scale: float = 1.0) -> "LinkField":
        return cls(shape, scale * rng.standard_normal((NDIR,) + shape.dims))

    def copy(self) -> "LinkField":
        return LinkField(self.shape, self.values.copy())


def site_axis(direction: int) -> int:
    """Array axis of a site direction inside the (4, nx, ny, nz, nt) layout."""
    return direction + 1


def theta_array(values: np.ndarray, mu: int, nu: int) -> np.ndarray:
    """Plaquette field strength of plane (mu, nu) at every base site.

    theta(x) = [U_nu(x+mu) - U_nu(x)] - [U_mu(x+nu) - U_mu(x)], with
    periodic wrap of the shifted neighbors.
    """
    if mu == nu:
        raise LatticeError("plaquette plane needs two distinct directions")
    u_mu, u_nu = values[mu], values[nu]
    d_mu_of_nu = np.roll(u_nu, -1, axis=mu) - u_nu
    d_nu_of_mu = np.roll(u_mu, -1, axis=nu) - u_mu
    return d_mu_of_nu - d_nu_of_mu


def theta_plaquette(field: LinkField, site: tuple[int, int, int, int],
                    mu: int, nu: int) -> float:
    """Single plaquette value at one site (periodic neighbor wrap)."""
    if mu == nu:
        raise LatticeError("plaquette plane needs two distinct directions")
    dims = field.shape.dims
    ix = tuple(c % n for c, n in zip(site, dims))
    fwd_mu = tuple((c + (1 if d == mu else 0)) % dims[d] for d, c in enumerate(ix))
    fwd_nu = tuple((c + (1 if d == nu else 0)) % dims[d] for d, c in enumerate(ix))
    v = field.values
    return float(
        (v[(nu,) + fwd_mu] - v[(nu,) + ix]) - (v[(mu,) + fwd_nu] - v[(mu,) + ix])
    )


def _electric_eps_factor(eps_sites: np.ndarray | None, shape: LatticeShape) -> np.ndarray | None:
    """Per-site permittivity broadcast over the time axis, or None."""
    if eps_sites is None:
        return None
    eps_sites = np.asarray(eps_sites, dtype=np.float64)
    if eps_sites.shape != (shape.nx, shape.ny, shape.nz):
        raise LatticeError(
            f"dielectric map has shape {eps_sites.shape}, expected "
            f"{(shape.nx, shape.ny, shape.nz)}"
        )
    return eps_sites[:, :, :, None]


def total_action(field: LinkField, params: SimulationParams,
                 eps: np.ndarray | None = None) -> float:
    """Quadratic action: beta/2 * sum over sites and planes of w * theta^2.

    w is the anisotropy weight of the plane; electric plaquettes based at
    sites inside a dielectric body are additionally weighted by the
    per-site permittivity (eps given per spatial site, uniform in t).
    """
    eps_t = _electric_eps_factor(eps, field.shape)
    total = 0.0
    for mu, nu in PLANES:
        th2 = theta_array(field.values, mu, nu) ** 2
        w = params.plane_weight(mu, nu)
        if eps_t is not None and (mu, nu) in ELECTRIC_PLANES:
            total += w * float(np.sum(eps_t * th2))
        else:
            total += w * float(np.sum(th2))
    return 0.5 * params.beta * total


def apply_gauge_transform(field: LinkField, g: np.ndarray) -> LinkField:
    """Shift every link by the lattice gradient of the site function g.

    U'_mu(x) = U_mu(x) + g(x+mu) - g(x).  Plaquettes, the action and the
    energy observable are exactly invariant under this map.
    """
    g = np.asarray(g, dtype=np.float64)
    if g.shape != field.shape.dims:
        raise LatticeError(f"gauge scalar has shape {g.shape}, expected {field.shape.dims}")
    out = field.values.copy()
    for mu in range(NDIR):
        out[mu] += np.roll(g, -1, axis=mu) - g
    return LinkField(field.shape, out)


def pure_gauge_field(shape: LatticeShape, g: np.ndarray) -> LinkField:
    """Field built entirely from a gauge scalar; all plaquettes vanish."""
    return apply_gauge_transform(LinkField.zeros(shape), g)
