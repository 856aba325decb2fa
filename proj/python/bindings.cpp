#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <variant>

#include "reuserisk/capacity.hpp"
#include "reuserisk/cli.hpp"
#include "reuserisk/error_calculus.hpp"
#include "reuserisk/portfolio.hpp"
#include "reuserisk/power.hpp"
#include "reuserisk/simulation.hpp"
#include "reuserisk/subsampling.hpp"

namespace py = pybind11;
using namespace reuserisk;

namespace {

TestKind kind_from_string(const std::string& kind) {
  if (kind == "z") return TestKind::z_known_variance;
  if (kind == "t") return TestKind::t_pooled;
  throw std::domain_error("test kind must be 'z' or 't'");
}

TailMethod method_from_string(const std::string& method) {
  if (method == "exact") return TailMethod::exact_tail;
  if (method == "hoeffding") return TailMethod::hoeffding;
  throw std::domain_error("tail method must be 'exact' or 'hoeffding'");
}

AllocationStrategy strategy_from_string(const std::string& strategy) {
  if (strategy == "independent") return AllocationStrategy::independent_uniform;
  if (strategy == "disjoint") return AllocationStrategy::disjoint_partition;
  throw std::domain_error("strategy must be 'independent' or 'disjoint'");
}

UtilityFunction utility_from_string(const std::string& utility) {
  if (utility == "linear") return UtilityFunction::linear();
  if (utility == "quadratic") return UtilityFunction::quadratic();
  if (utility == "qaly") return UtilityFunction::qaly();
  throw std::domain_error("utility must be 'linear', 'quadratic' or 'qaly'");
}

ErrorCountDistribution dist_from_probs(const std::vector<double>& probs) {
  return ErrorCountDistribution(DiscretePmf(0, probs));
}

py::dict report_to_dict(const SimulationReport& report) {
  py::dict out;
  out["error_pmf"] = report.empirical_error_pmf.pmf().probabilities();
  out["error_count_n"] = report.error_count_n;
  out["per_test_rejection_freq"] = report.per_test_rejection_freq;
  out["stat_correlation"] = report.pairwise_stat_correlation;
  out["stop_loss"] = report.stop_loss.premiums;
  if (report.contingency) {
    const auto& c = *report.contingency;
    out["contingency"] = std::vector<std::vector<std::int64_t>>{
        {c[0][0], c[0][1]}, {c[1][0], c[1][1]}};
  } else {
    out["contingency"] = py::none();
  }
  out["replications"] = report.rep_count;
  out["seed"] = report.master_seed;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dependent-error risk analysis for reused datasets";

  py::class_<DiscretePmf>(m, "DiscretePmf")
      .def(py::init<std::int64_t, std::vector<double>>(), py::arg("support_min"),
           py::arg("probabilities"))
      .def_property_readonly("support_min", &DiscretePmf::support_min)
      .def_property_readonly("probabilities", &DiscretePmf::probabilities)
      .def("prob", &DiscretePmf::prob)
      .def("cdf", &DiscretePmf::cdf)
      .def("mean", &DiscretePmf::mean);

  py::class_<ErrorCountDistribution>(m, "ErrorCountDistribution")
      .def(py::init([](const std::vector<double>& probs) {
             return dist_from_probs(probs);
           }),
           py::arg("probabilities"))
      .def_property_readonly("probabilities",
                             [](const ErrorCountDistribution& d) {
                               return d.pmf().probabilities();
                             })
      .def_property_readonly("study_count",
                             &ErrorCountDistribution::study_count)
      .def("mean", &ErrorCountDistribution::mean);

  m.def("log_binomial", &log_binomial, py::arg("n"), py::arg("k"));
  m.def("hypergeom_pmf", &hypergeom_pmf, py::arg("N"), py::arg("K"),
        py::arg("n"), py::arg("x"));
  m.def("hypergeom_tail", &hypergeom_tail, py::arg("N"), py::arg("K"),
        py::arg("n"), py::arg("ell"));
  m.def("normal_cdf", &normal_cdf);
  m.def("normal_quantile", &normal_quantile);
  m.def("poisson_pmf", &poisson_pmf, py::arg("lam"), py::arg("x"));
  m.def("poisson_cdf", &poisson_cdf, py::arg("lam"), py::arg("x"));
  m.def(
      "bernoulli_sum_pmf",
      [](const std::vector<double>& rates) {
        return bernoulli_sum_pmf(rates).probabilities();
      },
      py::arg("rates"));

  m.def(
      "two_event_distribution",
      [](double p1, double p2, double p2_given_1) {
        return two_event_distribution(DependentEventPair(p1, p2, p2_given_1))
            .pmf()
            .probabilities();
      },
      py::arg("p1"), py::arg("p2"), py::arg("p2_given_1"));
  m.def(
      "stop_loss_premium",
      [](const std::vector<double>& probs, std::int64_t L) {
        return stop_loss_premium(dist_from_probs(probs), L);
      },
      py::arg("probabilities"), py::arg("L"));
  m.def(
      "stop_loss_curve",
      [](const std::vector<double>& probs) {
        return stop_loss_curve(dist_from_probs(probs)).premiums;
      },
      py::arg("probabilities"));
  m.def(
      "stop_loss_compare",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        switch (stop_loss_compare(StopLossCurve{a}, StopLossCurve{b})) {
          case StopLossOrder::a_smaller: return "a_smaller";
          case StopLossOrder::b_smaller: return "b_smaller";
          case StopLossOrder::equal: return "equal";
          case StopLossOrder::incomparable: break;
        }
        return "incomparable";
      },
      py::arg("premiums_a"), py::arg("premiums_b"));
  m.def("pcer", [](const std::vector<double>& probs) {
    return pcer(dist_from_probs(probs));
  });
  m.def("fwer", [](const std::vector<double>& probs) {
    return fwer(dist_from_probs(probs));
  });
  m.def("fdr_global_null", [](const std::vector<double>& probs) {
    return fdr_global_null(dist_from_probs(probs));
  });
  m.def("expected_linear_utility", [](const std::vector<double>& probs) {
    return expected_utility(dist_from_probs(probs), UtilityFunction::linear());
  });
  m.def("expected_quadratic_utility", [](const std::vector<double>& probs) {
    return expected_utility(dist_from_probs(probs),
                            UtilityFunction::quadratic());
  });
  m.def("shared_control_correlation", &shared_control_correlation,
        py::arg("n"), py::arg("k"));

  py::class_<TestSpec>(m, "TestSpec")
      .def(py::init([](const std::string& kind, double alpha, bool two_sided,
                       double delta, double sigma) {
             return TestSpec{kind_from_string(kind), alpha, two_sided, delta,
                             sigma};
           }),
           py::arg("kind") = "z", py::arg("alpha") = 0.05,
           py::arg("two_sided") = true, py::arg("delta") = 0.0,
           py::arg("sigma") = 1.0)
      .def_readwrite("alpha", &TestSpec::alpha)
      .def_readwrite("two_sided", &TestSpec::two_sided)
      .def_readwrite("delta", &TestSpec::delta)
      .def_readwrite("sigma", &TestSpec::sigma);

  py::class_<SampleVector>(m, "SampleVector")
      .def(py::init<std::int64_t, std::int64_t>(), py::arg("n1"), py::arg("n2"))
      .def_readwrite("n1", &SampleVector::n1)
      .def_readwrite("n2", &SampleVector::n2);

  m.def("type2_error", &type2_error, py::arg("spec"), py::arg("n"));
  m.def("power", &power, py::arg("spec"), py::arg("n"));
  m.def("required_sample_size", &required_sample_size, py::arg("spec"),
        py::arg("target_power"), py::arg("allocation_ratio") = 1.0);
  m.def(
      "portfolio_expected_type2",
      [](const std::vector<TestSpec>& specs,
         const std::vector<SampleVector>& ns) {
        return portfolio_expected_type2(specs, ns);
      },
      py::arg("specs"), py::arg("samples"));

  m.def(
      "pairwise_overlap_tail",
      [](std::int64_t n, std::int64_t k, std::int64_t ell,
         const std::string& method) {
        return pairwise_overlap_tail(CapacityQuery{n, k, ell, 0.05},
                                     method_from_string(method));
      },
      py::arg("n"), py::arg("k"), py::arg("ell"),
      py::arg("method") = "exact");
  m.def(
      "max_studies",
      [](std::int64_t n, std::int64_t k, std::int64_t ell, double p_tol,
         const std::string& method) {
        const CapacityResult res = max_studies(CapacityQuery{n, k, ell, p_tol},
                                               method_from_string(method));
        py::dict out;
        out["c_bound"] = res.c_bound;
        out["log_c_bound"] = res.log_c_bound;
        out["overflow"] = res.overflow;
        out["pairwise_tail"] = res.pairwise_tail;
        out["r1"] = res.r1;
        out["r2"] = res.r2;
        return out;
      },
      py::arg("n"), py::arg("k"), py::arg("ell"), py::arg("p_tol") = 0.05,
      py::arg("method") = "hoeffding");
  m.def(
      "capacity_table",
      [](std::int64_t n, std::int64_t k,
         const std::vector<std::int64_t>& ell_values, double p_tol,
         const std::string& method) {
        py::list rows;
        for (const auto& row :
             capacity_table(CapacityQuery{n, k, 0, p_tol}, ell_values,
                            method_from_string(method))) {
          py::dict d;
          d["ell"] = row.ell;
          d["ratio"] = row.ratio;
          d["ok"] = row.ok;
          d["error"] = row.error;
          d["c_bound"] = row.result.c_bound;
          d["log_c_bound"] = row.result.log_c_bound;
          d["overflow"] = row.result.overflow;
          rows.append(std::move(d));
        }
        return rows;
      },
      py::arg("n"), py::arg("k"), py::arg("ell_values"),
      py::arg("p_tol") = 0.05, py::arg("method") = "hoeffding");
  m.def("guaranteed_overlap_two", &guaranteed_overlap_two, py::arg("N"),
        py::arg("k"));
  m.def("min_k_for_overlap_fraction", &min_k_for_overlap_fraction,
        py::arg("N"), py::arg("lam"));
  m.def(
      "pigeonhole_capacity",
      [](std::int64_t N, std::int64_t k) {
        const PigeonholeCapacity cap = pigeonhole_capacity(N, k);
        py::dict out;
        out["overflow"] = cap.overflow;
        out["count"] = cap.count;
        out["log_subsets"] = cap.log_subsets;
        return out;
      },
      py::arg("N"), py::arg("k"));
  m.def(
      "unit_reuse",
      [](const std::vector<double>& rates) {
        const UnitReuseReport report = unit_reuse(rates);
        py::dict out;
        out["exact_pmf"] = report.exact_pmf.probabilities();
        out["poisson_lambda"] = report.poisson_lambda;
        out["lecam_bound"] = report.lecam_bound
                                 ? py::cast(*report.lecam_bound)
                                 : py::none().cast<py::object>();
        out["pr_ge2_exact"] = report.pr_ge2_exact;
        out["pr_ge2_poisson"] = report.pr_ge2_poisson;
        out["sup_cdf_distance"] = report.sup_cdf_distance;
        return out;
      },
      py::arg("rates"));

  m.def("subsample",
        [](std::int64_t n, std::int64_t k, std::uint64_t seed) {
          return subsample(n, k, seed);
        },
        py::arg("n"), py::arg("k"), py::arg("seed"));
  m.def(
      "allocate",
      [](std::int64_t n, const std::vector<std::int64_t>& k_list,
         const std::string& strategy, std::uint64_t master_seed) {
        return allocate(n, k_list, strategy_from_string(strategy), master_seed)
            .draws;
      },
      py::arg("n"), py::arg("k_list"), py::arg("strategy") = "independent",
      py::arg("master_seed") = 0);
  m.def(
      "overlap_matrix",
      [](std::int64_t n, const std::vector<std::vector<std::int64_t>>& draws) {
        Allocation alloc;
        alloc.dataset_size = n;
        alloc.draws = draws;
        return overlap_matrix(alloc);
      },
      py::arg("n"), py::arg("draws"));
  m.def("empirical_max_overlap", &empirical_max_overlap, py::arg("n"),
        py::arg("k"), py::arg("C"), py::arg("ell"), py::arg("trials"),
        py::arg("master_seed") = 0);

  py::class_<SharedControlDesign>(m, "SharedControlDesign")
      .def(py::init([](std::int64_t m_, std::int64_t n_arm,
                       std::int64_t n_control, const std::string& control_mode,
                       std::int64_t subsample_k, double alpha, double effect,
                       std::int64_t replications, std::uint64_t master_seed) {
             SharedControlDesign d;
             d.m = m_;
             d.n_arm = n_arm;
             d.n_control = n_control;
             if (control_mode == "reuse") {
               d.control_mode = ControlMode::reuse_full;
             } else if (control_mode == "disjoint") {
               d.control_mode = ControlMode::disjoint_split;
             } else if (control_mode == "subsample") {
               d.control_mode = ControlMode::independent_subsample;
             } else {
               throw std::domain_error(
                   "control_mode must be 'reuse', 'disjoint' or 'subsample'");
             }
             d.subsample_k = subsample_k;
             d.alpha = alpha;
             d.effect = effect;
             d.replications = replications;
             d.master_seed = master_seed;
             return d;
           }),
           py::arg("m") = 7, py::arg("n_arm") = 100, py::arg("n_control") = 100,
           py::arg("control_mode") = "reuse", py::arg("subsample_k") = 0,
           py::arg("alpha") = 0.05, py::arg("effect") = 0.0,
           py::arg("replications") = 10000, py::arg("master_seed") = 0);

  py::class_<SurvivalReuseDesign>(m, "SurvivalReuseDesign")
      .def(py::init([](std::int64_t n_per_group, double shape, double scale,
                       const std::vector<double>& truncation_times,
                       const std::string& mode, double alpha,
                       std::int64_t replications, std::uint64_t master_seed) {
             SurvivalReuseDesign d;
             d.n_per_group = n_per_group;
             d.weibull_shape = shape;
             d.weibull_scale = scale;
             d.truncation_times = truncation_times;
             if (mode == "reuse") {
               d.mode = SurvivalMode::reuse_same_cohort;
             } else if (mode == "gatekeep") {
               d.mode = SurvivalMode::gatekeep_split;
             } else {
               throw std::domain_error("mode must be 'reuse' or 'gatekeep'");
             }
             d.alpha = alpha;
             d.replications = replications;
             d.master_seed = master_seed;
             return d;
           }),
           py::arg("n_per_group") = 100, py::arg("shape") = 2.0,
           py::arg("scale") = 0.5,
           py::arg("truncation_times") = std::vector<double>{1.0, 5.0},
           py::arg("mode") = "reuse", py::arg("alpha") = 0.05,
           py::arg("replications") = 10000, py::arg("master_seed") = 0);

  m.def("run_shared_control", [](const SharedControlDesign& design) {
    return report_to_dict(run_shared_control(design));
  });
  m.def("run_survival_reuse", [](const SurvivalReuseDesign& design) {
    return report_to_dict(run_survival_reuse(design));
  });
  m.def(
      "logrank_statistic",
      [](const std::vector<std::pair<double, bool>>& group_a,
         const std::vector<std::pair<double, bool>>& group_b,
         double truncation) {
        std::vector<Subject> a, b;
        for (const auto& [t, e] : group_a) a.push_back({t, e});
        for (const auto& [t, e] : group_b) b.push_back({t, e});
        const LogRankResult res = logrank_statistic(a, b, truncation);
        return py::make_tuple(res.z, res.valid);
      },
      py::arg("group_a"), py::arg("group_b"), py::arg("truncation"));

  m.def(
      "qaly_utility",
      [](double theta, const std::string& decision) {
        if (decision == "reject") return qaly_utility(theta, Decision::reject);
        if (decision == "fail_to_reject") {
          return qaly_utility(theta, Decision::fail_to_reject);
        }
        throw std::domain_error("decision must be 'reject' or 'fail_to_reject'");
      },
      py::arg("theta"), py::arg("decision"));

  py::class_<StudyPlan>(m, "StudyPlan")
      .def(py::init([](const TestSpec& test, std::optional<SampleVector> sample,
                       std::optional<double> fraction,
                       std::optional<std::int64_t> treatment_arm,
                       const std::vector<std::pair<double, double>>& prior,
                       const std::string& null_kind) {
             StudyPlan plan;
             plan.test = test;
             if (sample) {
               plan.sample = *sample;
             } else if (fraction && treatment_arm) {
               plan.sample = FractionSample{*fraction, *treatment_arm};
             } else {
               throw std::domain_error(
                   "give sample= or fraction= with treatment_arm=");
             }
             if (!prior.empty()) plan.prior = EffectPrior{prior};
             if (null_kind == "point") {
               plan.null_kind = NullKind::point_zero_two_sided;
             } else if (null_kind == "nonpositive") {
               plan.null_kind = NullKind::nonpositive_one_sided;
             } else {
               throw std::domain_error(
                   "null_kind must be 'point' or 'nonpositive'");
             }
             return plan;
           }),
           py::arg("test"), py::arg("sample") = std::nullopt,
           py::arg("fraction") = std::nullopt,
           py::arg("treatment_arm") = std::nullopt,
           py::arg("prior") = std::vector<std::pair<double, double>>{},
           py::arg("null_kind") = "point");

  py::class_<PortfolioConfig>(m, "PortfolioConfig")
      .def(py::init([](const std::vector<StudyPlan>& plans,
                       std::int64_t dataset_size, const std::string& utility,
                       const std::string& mode, std::int64_t mc_replications,
                       std::uint64_t mc_seed, const std::string& mc_allocation) {
             PortfolioConfig cfg;
             cfg.plans = plans;
             cfg.dataset_size = dataset_size;
             cfg.utility = utility_from_string(utility);
             if (mode == "analytic") {
               cfg.mode = DependenceMode::analytic_independent;
             } else if (mode == "monte-carlo") {
               cfg.mode = DependenceMode::monte_carlo;
             } else {
               throw std::domain_error("mode must be 'analytic' or 'monte-carlo'");
             }
             cfg.mc.replications = mc_replications;
             cfg.mc.seed = mc_seed;
             cfg.mc.allocation = strategy_from_string(mc_allocation);
             return cfg;
           }),
           py::arg("plans"), py::arg("dataset_size"),
           py::arg("utility") = "linear", py::arg("mode") = "analytic",
           py::arg("mc_replications") = 10000, py::arg("mc_seed") = 0,
           py::arg("mc_allocation") = "independent");

  py::class_<GridCandidate>(m, "GridCandidate")
      .def(py::init<double, double>(), py::arg("alpha"), py::arg("fraction"))
      .def_readwrite("alpha", &GridCandidate::alpha)
      .def_readwrite("fraction", &GridCandidate::fraction);

  m.def("expected_portfolio_utility", &expected_portfolio_utility,
        py::arg("config"));
  m.def(
      "grid_search",
      [](const PortfolioConfig& cfg,
         const std::vector<std::vector<GridCandidate>>& grid) {
        const GridSearchResult result = grid_search(cfg, grid);
        py::dict out;
        out["best_index"] = result.best_index;
        out["best_utility"] = result.best_utility;
        py::list surface;
        for (const auto& point : result.surface) {
          py::dict d;
          d["index"] = point.index;
          d["feasible"] = point.feasible;
          d["utility"] = point.utility;
          surface.append(std::move(d));
        }
        out["surface"] = surface;
        return out;
      },
      py::arg("config"), py::arg("grid"));
}
