"""Parallel transport of chart-local vector bundle data.

A numpy/scipy library for computing parallel transport of connection
1-forms along paths (by a Runge-Kutta reference integrator and an
independent ordered-exponential product formula), reconstructing the
connection back from black-box transport, gluing chart-local data over
atlases with transition cocycles, extracting holonomy, and evaluating
decorated 1-dimensional bordism words (arcs, births, deaths, strand
permutations) as linear maps.
"""

from .connections import (Chart, ConnectionForm, GaugeField,
                          constant_connection, constant_gauge,
                          exponential_gauge, gauge_transform,
                          levi_civita_sphere_connection, magnetic_connection,
                          one_parameter_gauge, polynomial_connection,
                          sampled_connection, zero_connection)
from .matrices import (matrix_exponential, matrix_inverse, operator_distance,
                       smallest_singular_value)
from .paths import (Path, Reparametrization, affine_path, circle_arc_path,
                    constant_path, line_path, power_reparametrization,
                    reparametrize, sitting_reparametrization, spline_path)
from .transport import (TransportResult, cocycle_residual, convergence_slope,
                        method_agreement, transport_ode, transport_product)
from .reconstruct import (TransportOracle, additivity_residual,
                          homogeneity_residual, reconstruct_at,
                          reconstruct_connection, roundtrip_error)
from .bundles import (Atlas, CutAssignment, GlobalBundle, GlobalPath,
                      GluedTransport, TransitionCocycle, chart_global_path,
                      check_cech_cocycle, circle_atlas, circle_loop,
                      colatitude_loop, constant_circle_cocycle,
                      flat_circle_bundle, global_transport,
                      levi_civita_sphere_bundle, line_atlas,
                      loop_holonomy_angle, overlap_compatibility_residual,
                      single_chart_bundle, sphere_atlas,
                      sphere_tangent_cocycle, subordinate_cut)
from .bordisms import (Arc, BordismWord, Coev, Ev, FiberSpace, Id,
                       ObjectConfig, Perm, SignedPoint, circle_word,
                       dual_transport, evaluate_bordism, evaluate_object,
                       snake_residual, snake_word, tensor_words)
from . import errors

__version__ = "0.1.0"
