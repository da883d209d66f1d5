# Target and constraining functionals and the penalized energy
from .target import TargetFunctional, ExtraTerm, inverse_temperature_term, eval_F
from .penalty import (
    PenaltyKind,
    PenaltySpec,
    GValue,
    Partials,
    eval_G,
    penalty_partials,
    eval_G_BEN,
    eval_G_BEN_aug,
    eval_G_BEN_dn,
    eval_G_DG,
    eval_G_DG_rate,
    eval_G_DG_generic,
)
from .energy import EnergyGradient, PenalizedEnergy, grad_E
