"""Discrepancy of the greater-than matrix: bounds, certificates and exact small-n values."""

__version__ = "0.1.0"

from .matrices import (  # noqa: E402
    HilbertMatrix,
    Orientation,
    SignMatrix,
    gt_hankel,
    gt_toeplitz,
    hilbert,
    hilbert_l1_by_diagonals,
    l1_norm,
    spectral_norm_symmetric,
)
from .distributions import (  # noqa: E402
    EntryDistribution,
    EtaSpec,
    eta_pmf,
    eta_sample,
    eta_witness_value,
    mu_star,
    random_distribution,
    uniform_distribution,
)
from .discrepancy import (  # noqa: E402
    BooleanWitnessPair,
    WitnessPair,
    character_witness_scan,
    disc_alternating,
    disc_exact_boolean,
    eval_bilinear,
    hankel_to_toeplitz,
    round_witness,
    spectral_upper_bound,
)
from .certificates import (  # noqa: E402
    CircleMeasure,
    FourierTarget,
    Side,
    certified_lower_bound,
    measure_fourier,
    measure_norm,
    synthesize_measure,
    verify_certificate,
)
from .optimal_lp import CutSet, lp_solve, optimal_distribution, sandwich_table  # noqa: E402
