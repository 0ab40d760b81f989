from .chart import DIRICHLET, SLIP, BoundaryChart, CircleArc, EllipseArc, ProjectionError, Segment
from .core import Mesh, MeshError, build_mesh, check_topology
from .curve import attach_chart, curve_boundary
from .generate import DOMAINS, DomainSpec, generate_domain
from .msh import MshParseError, UnsupportedElementError, read_msh, write_msh

__all__ = [
    "DIRICHLET",
    "SLIP",
    "BoundaryChart",
    "CircleArc",
    "EllipseArc",
    "ProjectionError",
    "Segment",
    "Mesh",
    "MeshError",
    "build_mesh",
    "check_topology",
    "attach_chart",
    "curve_boundary",
    "DOMAINS",
    "DomainSpec",
    "generate_domain",
    "MshParseError",
    "UnsupportedElementError",
    "read_msh",
    "write_msh",
]
