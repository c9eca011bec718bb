"""Simulator and numerical checks for metastable winding phases of the
periodic XY rotor chain: Langevin dynamics on the torus, equilibrium
samplers built on the conditioned-random-walk picture, and deterministic
oracles for the winding law and exit-time scales."""

__version__ = "0.1.0"

from .dynamics import (
    ExitRecord,
    IntegratorConfig,
    Trajectory,
    em_step,
    first_exit,
    make_rng,
    simulate,
)
from .equilibrium import (
    ConditionalGibbsSampler,
    GibbsSampler,
    McmcConfig,
    VonMisesLaw,
    sample_bridge_increments,
    sample_mu,
    sample_mu_conditional,
    sample_mu_exact,
    sample_von_mises,
)
from .model import (
    ILL_DEFINED,
    ModelParams,
    bond_increments,
    good_interval_count,
    grad_hamiltonian,
    hamiltonian,
    phase_minimizer,
    winding_number,
    wrap,
)
from .theory import (
    MomentSet,
    TimescalePrediction,
    WindingDistribution,
    bessel_i,
    clt_check_scale,
    moments,
    timescale,
    winding_distribution,
)

__all__ = [
    "ConditionalGibbsSampler",
    "ExitRecord",
    "GibbsSampler",
    "ILL_DEFINED",
    "IntegratorConfig",
    "McmcConfig",
    "ModelParams",
    "MomentSet",
    "TimescalePrediction",
    "Trajectory",
    "VonMisesLaw",
    "WindingDistribution",
    "bessel_i",
    "bond_increments",
    "clt_check_scale",
    "em_step",
    "first_exit",
    "good_interval_count",
    "grad_hamiltonian",
    "hamiltonian",
    "make_rng",
    "moments",
    "phase_minimizer",
    "sample_bridge_increments",
    "sample_mu",
    "sample_mu_conditional",
    "sample_mu_exact",
    "sample_von_mises",
    "simulate",
    "timescale",
    "winding_distribution",
    "winding_number",
    "wrap",
]
