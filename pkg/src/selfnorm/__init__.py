"""Self-normalized confidence sets for Z-estimators.

The statistic is the largest absolute self-normalized column sum of the
estimating-function matrix; sets are inverted tests ``{theta : T(theta) <= K}``
with ``K`` from Bonferroni, Šidák or a Gaussian bootstrap.
"""

from .quantiles import (
    QuantileValue,
    bonferroni_quantile,
    bootstrap_maxima,
    bootstrap_quantile,
    max_quantile,
    sidak_quantile,
)
from .confset import (
    CalibratedSet,
    SplitIndices,
    calibrate,
    calibrate_lin,
    calibrate_reclin,
    calibrate_wald,
    member_lin,
    member_reclin,
    member_wald,
    sandwich_variance,
    split_sample,
    wald_from_rectangle,
)
from .errors import SelfNormError
from .estimating import (
    GAUSSIAN,
    LOGISTIC,
    POISSON,
    GlmFamily,
    RegressionSample,
    get_family,
    glm_fit,
    glm_psi,
    linreg_psi,
    quantile_fit,
    quantile_psi,
)
from .geometry import (
    GeometrySummary,
    Rect,
    diameter_estimate,
    directed_hausdorff_rect,
    hausdorff_member_rect,
    hausdorff_rect_rect,
)
from .numlin import SpdFactor, cholesky_jittered, least_squares, normal_quantile, solve_spd
from .simharness import (
    CoverageReport,
    DgpSpec,
    dgp_generate,
    oracle_moments,
    run_concentration,
    run_coverage,
    run_hausdorff_similarity,
    run_width_scaling,
)
from .statistic import (
    SelfNormStat,
    plugin_correlation,
    rotated_plugin_correlation,
    rotated_stat,
    self_normalized_stat,
)

__version__ = "0.1.0"
