"""Image finding, counting and certification for thin gravitational lenses."""
from .errors import (ClusteringError, ContourError, DegenerateConfiguration, DomainError,
                     InjectivityError, IntegrabilityError, LensError, NoRingError,
                     ScenarioError, UnsupportedRegionError)
from .lens_models import (ChangRefsdalLens, ConfocalPowerProfile, ConfocalProfileLens,
                          EllipseGeometry, IsothermalEllipseLens, IsothermalProfile,
                          MultipoleLens, PointMassLens, PowerProfile, RadialLens,
                          UniformEllipseLens, UniformProfile, deflection, jacobian,
                          jacobian_det, lens_map)
from .images import Image, ImageSet
from .analytic_reduction import Polynomial, polynomialize, roots, solve_rational
from .harmonic_solver import SearchRegion, solve_all, solve_region
from .certification import certify, critical_curves, survey, winding_number
from .rings import find_ring_uniform_ellipse, point_mass_ring, verify_ring
from .quadrature_domains import ConformalMap, nodes_and_weights, reduce_to_point_lens
from .kernels import BACKEND

__version__ = "0.1.0"
