"""Exact cube sections, lattice slab counts, cell classification and
lattice-basis well-positioning."""

from .basis import (check_basic_inequality, boundary_fcell_estimate, dual_basis,
                    lll_reduce, minimal_box, slice_chebyshev, strip_ellipsoid,
                    well_position)
from .cells import (Ball, HPolytope, SlabBox, body_from_dict, check_boundary_monotonicity,
                    check_volume_gap, classify_cell, count_cells, count_fcells,
                    hyperplane_cells_in_body, v_of_body)
from .geometry import (Direction, Slab, central_params, halfspace_box_volume, slice_volume,
                       strip_volume, vd_max, vd_of_direction)
from .lattice import (best_direction_search, cells_intersected, convergence_table,
                      exact_nd_small, level_counts, normalize_primitive, strip_count_max)

__version__ = "0.1.0"
