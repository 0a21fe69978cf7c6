"""Monte-Carlo Casimir energies from noncompact lattice gauge fields.

The package samples real-valued link fields with heat-bath updates,
imposes ideal-conductor boundaries by freezing links, weights electric
plaquettes for static dielectrics, and extracts interaction energies by
the four-scene subtraction (full - selfA - selfB + free).  Analytic and
exact-Gaussian reference models live alongside for validation.
"""

from .geometry import (BoundaryMask, DielectricSlab, GeometryError,
                       GratingSpec, Plate, PlatePairSpec, SceneSpec,
                       build_dielectric_map, build_grating_mask,
                       build_grating_pair_mask, build_plate_mask,
                       build_plate_pair_mask, renormalization_scenes,
                       scene_dielectric, scene_mask)
from .lattice import (ELECTRIC_PLANES, MAGNETIC_PLANES, NDIR, PLANES,
                      LatticeError, LatticeShape, LinkField, SimulationParams,
                      apply_gauge_transform, pure_gauge_field, theta_array,
                      theta_plaquette, total_action)
from .observables import (EnergyAccumulator, EnergyEstimate, SceneResult,
                          StatisticsError, accumulate_statistics, binning_scan,
                          energy_density_observable, jackknife_mean,
                          lateral_curve_and_force,
                          renormalize_density_fields,
                          renormalize_interaction_energy, xz_density_map)
from .proximity import (GeodesicGrid, build_geodesic_grid, opfa_gratings,
                        pfa_gratings)
from .reference import (AnalyticResult, ReferenceError, free_lattice_moments,
                        periodic_modesum_constant, plates_analytic_energy,
                        plates_exact_density_profile, plates_exact_interaction,
                        plates_lattice_coefficient,
                        small_lattice_gaussian_oracle)
from .sampler import (ChainState, SamplerConfig, SamplerError, SceneContext,
                      heatbath_link_update, link_conditional, load_checkpoint,
                      new_chain, run_chain, save_checkpoint, sweep)

__version__ = "0.1.0"
