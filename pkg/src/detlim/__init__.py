"""Detectability limits for GAN-generated images.

Divergences between finite distributions, closed-form detection error bounds
in terms of a GAN's oracle error, Monte Carlo checks of those bounds, and
SIR spreading of undetected fakes on networks.
"""

__version__ = "0.1.0"

from .distributions import (
    ImageModel,
    MetricAlphabet,
    Patch,
    Pmf,
    Sample,
    bernoulli,
    make_pmf,
    make_space,
    sample_iid,
    sample_image,
)
from .divergence import (
    DivergenceReport,
    chernoff_information,
    chi_squared_weighted,
    divergence_report,
    euclidean_chernoff_approx,
    js,
    kl,
    tv,
    wasserstein_1d,
)
from .bounds import (
    BoundReport,
    GanSpec,
    check_inequalities,
    log_bound,
    patch_bound,
    table1_bayes,
    table1_np,
    table2_bayes,
    table2_np,
)
from .hyptest import TestConfig, bayes_test, exact_error_small_n, exponent_fit, np_test
from .epidemic import (
    EpidemicParams,
    Graph,
    containment_requirement,
    effective_rate,
    f_of_opt,
    gen_ba,
    gen_er,
    mean_field_threshold,
    outbreak_sweep,
    simulate_sir,
    spectral_threshold,
)
