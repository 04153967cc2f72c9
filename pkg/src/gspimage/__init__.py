"""Exact finite models of torsion-point Galois images in GSp over Z/l^n."""

from .modring import (
    MatrixMod,
    NotInvertible,
    ResidueElem,
    ResidueRing,
    is_prime,
    mat_invert,
    smith_normal_form,
    valuation,
)
from .symplectic import (
    NotAlternating,
    NotSimilitude,
    OrderTooLarge,
    PairingValue,
    SymplecticSpace,
    m1,
    m1_exhaustive,
    multiplier,
    standard_form,
    tensor_form,
    weil_pairing,
)
from .torsion import (
    TorsionSubgroup,
    contains,
    full_subgroup,
    slice_subgroup,
    subgroup_from_generators,
    trivial_subgroup,
)
from .galois_model import (
    CapExceeded,
    ChainNotIncreasing,
    DegreeReport,
    FullGL2Group,
    MatrixGroup,
    build_degree_report,
    close,
    cyclo_degree,
    cyclo_intersection_degree,
    degree_KH,
    filtered_subgroup,
    gl2_group,
    mu_s_ratio,
    mu_w_witness,
    scenario_cm,
    scenario_selfproduct,
    stabilizer,
)
from .mumford import (
    ExpectationFailed,
    MumfordReport,
    TensorTriple,
    block_dependence,
    image_order,
    lagrangian_H,
    pointwise_stabilizer_in_image,
    rho,
    verify_mu_s_failure,
)

__version__ = "0.1.0"
