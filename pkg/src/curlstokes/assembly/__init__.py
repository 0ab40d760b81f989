from .dofmap import DofMap, lagrange_dofmap, nedelec_dofmap
from .forms import (
    assemble_b,
    assemble_curl_curl,
    assemble_lagrange_mass,
    assemble_lagrange_stiffness,
    assemble_mass,
    assemble_nitsche,
    assemble_robin,
    cell_quadrature,
    facet_quadrature,
    load_vector,
    pressure_integrals,
)
from .interpolate import discrete_gradient, interpolate_lagrange, interpolate_velocity
from .system import BCSpec, DirichletBC, SlipBC, SystemBlocks, assemble_rhs, assemble_system

__all__ = [
    "DofMap",
    "lagrange_dofmap",
    "nedelec_dofmap",
    "assemble_b",
    "assemble_curl_curl",
    "assemble_lagrange_mass",
    "assemble_lagrange_stiffness",
    "assemble_mass",
    "assemble_nitsche",
    "assemble_robin",
    "cell_quadrature",
    "facet_quadrature",
    "load_vector",
    "pressure_integrals",
    "discrete_gradient",
    "interpolate_lagrange",
    "interpolate_velocity",
    "BCSpec",
    "DirichletBC",
    "SlipBC",
    "SystemBlocks",
    "assemble_rhs",
    "assemble_system",
]
