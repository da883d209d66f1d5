# Convex potentials, dissipation rates and pointwise convex-analysis operations
from .potentials import (
    Potential,
    Quadratic,
    PowerP,
    Quartic,
    AbsValue,
    CustomPotential,
    SmoothPerturbation,
    monotone_root,
)
from .rates import RatePotential, PowerRate
from .ops import (
    fenchel_gap,
    prox,
    minimal_section,
    minimal_section_rows,
    chain_rule_defect,
    signed_chain_rule_defect,
)
from .parse import parse_potential, parse_rate
