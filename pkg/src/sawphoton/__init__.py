"""Simulator and design calculator for a surface-acoustic-wave driven single-photon source."""

from .physics import (CONSTANTS, ELEMENTARY_CHARGE, VACUUM_PERMITTIVITY, DomainError, InjectionSpec,
                      InvalidParameter, JunctionParams, NumberStateDistribution, PhysicalConstants,
                      RecombinationModel, SawParams, emitted_count_pmf, field_state_diagonal,
                      max_injection_frequency, min_iregion_length, quantized_current, screening_charge,
                      screening_hole_density, screening_potential)
from .rng import RngSpec

__version__ = "0.1.0"
