"""Spectral simulator and verification harness for the non-cutoff Kac equation
and its radial 3D Boltzmann reduction."""
from .spectral import (CrossSectionParams, ExpMollifierParams, FourierGrid, PolyMollifierParams,
                       SpectralState, WeightedNormSpec, conserved_quantities, g_delta, m_delta,
                       weighted_norm)
from .collision import (AngularQuadrature, VelocityGrid, build_quadrature, collision_rhs,
                        velocity_space_collision, velocity_space_transform)
from .integrator import IntegratorConfig, RhsContext, Trajectory, evolve, step
from .config import ConfigError, RunConfig, parse_config

__version__ = "0.1.0"
