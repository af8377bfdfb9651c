"""Single-quadrant fast digital-line Radon transform.

Forward transform, exact O(N^2 log N) inverse by backward substitution,
back-projection, and the linear-constraint validator deciding whether
sinogram data is the transform of some square image.
"""

from .grid import (
    ClipError,
    SectionView,
    SquareImage,
    StripImage,
    dot,
    embed,
    lincomb,
    make_delta,
    max_abs_diff,
    rewindow,
    section,
    sup_norm,
    values_equal,
)
from .lines import (
    DigitalLine,
    digital_line_closed,
    digital_line_recursive,
    dual_line_closed,
    dual_line_recursive,
    line_indicator,
)
from .transform import (
    backproject,
    forward,
    forward_bruteforce,
    forward_partial,
    full_adrt,
    merge_pair,
    merge_stage,
    split_pair,
)
from .inverse import (
    DeltaTree,
    DeltaTriple,
    OutOfRangeError,
    delta_inverse_profile,
    delta_tree,
    divergence_probe,
    inverse,
    leaf_closed_form,
    pair_differences,
    split_delta,
    unmerge_pair,
    unsplit_delta,
)
from .range import (
    BasisFamilies,
    ConstraintId,
    RangeReport,
    SupportRegion,
    basis_families,
    check_support,
    constraint_breakdown,
    constraint_count,
    mass_residuals,
    mu_image,
    perturb,
    phi_image,
    psi_image,
    support_region,
    validate,
)
from .cli import FormatError, parse_image, serialize

__version__ = "0.1.0"

__all__ = [
    "ClipError",
    "SectionView",
    "SquareImage",
    "StripImage",
    "dot",
    "embed",
    "lincomb",
    "make_delta",
    "max_abs_diff",
    "rewindow",
    "section",
    "sup_norm",
    "values_equal",
    "DigitalLine",
    "digital_line_closed",
    "digital_line_recursive",
    "dual_line_closed",
    "dual_line_recursive",
    "line_indicator",
    "backproject",
    "forward",
    "forward_bruteforce",
    "forward_partial",
    "full_adrt",
    "merge_pair",
    "merge_stage",
    "split_pair",
    "DeltaTree",
    "DeltaTriple",
    "OutOfRangeError",
    "delta_inverse_profile",
    "delta_tree",
    "divergence_probe",
    "inverse",
    "leaf_closed_form",
    "pair_differences",
    "split_delta",
    "unmerge_pair",
    "unsplit_delta",
    "BasisFamilies",
    "ConstraintId",
    "RangeReport",
    "SupportRegion",
    "basis_families",
    "check_support",
    "constraint_breakdown",
    "constraint_count",
    "mass_residuals",
    "mu_image",
    "perturb",
    "phi_image",
    "psi_image",
    "support_region",
    "validate",
    "FormatError",
    "parse_image",
    "serialize",
]
