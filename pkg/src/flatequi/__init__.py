"""Flat surfaces, the AGY norm, unstable-leaf deformations and equidistribution experiments."""
from .errors import FlatequiError
from .surface import (BUNDLED, PolygonSpec, TriangulatedSurface, apply_matrix, area, deform,
                      delaunay_retriangulate, flow, from_polygon_spec, geodesic_matrix,
                      horocycle_matrix, l_shape, lattice_torus, normalize_area, square_torus,
                      torus_two_marked)
from .homology import (Cocycle, HomologyBasis, build_basis, pairing, period_vector,
                       tautological_frame)
from .saddle import (ConnectionCache, SaddleConnection, connection_classes, enumerate_connections,
                     holonomies, systole)
from .norms import (agy_norm, c1_norm_estimate, flow_distortion_check, injectivity_proxy,
                    make_context, max_norm)
from .foliation import PeriodBox, leaf_point, nondivergence_search, period_box, push
from .measures import (RichMeasure, make_measure, partition_weights, phi_integral, phi_sup,
                       richness_check, snap_delta)
from .equidistribution import (Estimate, RateFit, TestFunction, correlation_decay, extra_average,
                               make_test_function, rate_fit, reference_integral, tau,
                               theorem_window, translate_average)

__version__ = "0.1.0"
