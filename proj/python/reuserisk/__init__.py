"""Risk analysis of dependent inferential errors under dataset reuse."""

from reuserisk._core import (  # noqa: F401
    DiscretePmf,
    ErrorCountDistribution,
    TestSpec,
    SampleVector,
    StudyPlan,
    PortfolioConfig,
    GridCandidate,
    SharedControlDesign,
    SurvivalReuseDesign,
    log_binomial,
    hypergeom_pmf,
    hypergeom_tail,
    normal_cdf,
    normal_quantile,
    poisson_pmf,
    poisson_cdf,
    bernoulli_sum_pmf,
    two_event_distribution,
    stop_loss_premium,
    stop_loss_curve,
    stop_loss_compare,
    pcer,
    fwer,
    fdr_global_null,
    expected_linear_utility,
    expected_quadratic_utility,
    shared_control_correlation,
    type2_error,
    power,
    required_sample_size,
    portfolio_expected_type2,
    pairwise_overlap_tail,
    max_studies,
    capacity_table,
    guaranteed_overlap_two,
    min_k_for_overlap_fraction,
    pigeonhole_capacity,
    unit_reuse,
    subsample,
    allocate,
    overlap_matrix,
    empirical_max_overlap,
    run_shared_control,
    run_survival_reuse,
    logrank_statistic,
    qaly_utility,
    expected_portfolio_utility,
    grid_search,
)

__all__ = [name for name in dir() if not name.startswith("_")]
