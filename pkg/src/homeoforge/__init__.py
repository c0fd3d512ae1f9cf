"""homeoforge: constructive topological generation of 1-d homeomorphism groups.

Subpackages by capability:

* ``map_core``          interval homeomorphisms, C0/C1 metrics, fixed points
* ``word_engine``       free-group words, enumeration, evaluation at map tuples
* ``root_extraction``   iterative N-th roots of fixed-point-free C1 maps
* ``interval_density``  Thompson dyadic engine and generic dense pairs
* ``circle_generation`` two topological generators of the circle group
* ``diff1_generators``  finite truncation of the seven-generator C1 scheme
* ``pingpong``          ping-pong tuples and discreteness certificates
* ``cli``               unified command-line front end and report emission
"""

from .map_core import (
    Homeo1D,
    MetricReport,
    pl_map,
    cubic_map,
    identity,
    compose,
    invert,
    power,
    c0_dist,
    c1_dist,
    fixed_points,
    make_monotone_interpolant,
)
from .word_engine import FreeWord, reduce_runs, evaluate, enumerate_reduced

__version__ = "0.1.0"
