"""Heat content and heat loss of unions of balls in R^m."""
from .asymptotics import (LatticeFamily, Regime, RegimeId, c_constant, classify_regime, d_constant,
                          fit_power_law, lattice_heat_content, lattice_heat_loss, regime4_envelope,
                          single_ball_remainder, summability_criterion)
from .estimators import (Estimate, cross_term, heat_content_ball, heat_content_mc, heat_loss_ball, heat_loss_mc)
from .functionals import g_mu, g_nu, mu, nu
from .geometry import BallUnion, SeparationGap, lens_volume, sample_uniform, separation_delta
from .kernel import LiYauConstants, heat_kernel, liyau_constant
from .report import VerificationReport
from .theorems import (Budget, lemma2_gap, verify_basic_facts, verify_decoupling, verify_theorem1,
                       verify_theorem2, verify_theorem3i)

__all__ = [
    "BallUnion", "Budget", "Estimate", "LatticeFamily", "LiYauConstants", "Regime", "RegimeId",
    "SeparationGap", "VerificationReport", "c_constant", "classify_regime", "cross_term", "d_constant",
    "fit_power_law", "g_mu", "g_nu", "heat_content_ball", "heat_content_mc", "heat_kernel", "heat_loss_ball",
    "heat_loss_mc", "lattice_heat_content", "lattice_heat_loss", "lemma2_gap", "lens_volume", "liyau_constant",
    "mu", "nu", "regime4_envelope", "sample_uniform", "separation_delta", "single_ball_remainder",
    "summability_criterion", "verify_basic_facts", "verify_decoupling", "verify_theorem1", "verify_theorem2",
    "verify_theorem3i",
]
