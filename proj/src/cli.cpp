#include "reuserisk/cli.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"

#include "reuserisk/format.hpp"

namespace reuserisk::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& value, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("portfolio spec: bad number for '" + key +
                             "': " + value);
  }
}

std::int64_t to_int(const std::string& value, const std::string& key) {
  try {
    std::size_t pos = 0;
    const std::int64_t v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("portfolio spec: bad integer for '" + key +
                             "': " + value);
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string render_capacity_bound(const CapacityResult& res) {
  if (!res.overflow) return std::to_string(res.c_bound);
  // log10 split into exponent and a 4-significant-digit mantissa
  const double log10_c = res.log_c_bound / 2.302585092994045684;
  const auto exponent = static_cast<std::int64_t>(std::floor(log10_c));
  const double mantissa = std::pow(10.0, log10_c - static_cast<double>(exponent));
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.3fe+%lld", mantissa,
                static_cast<long long>(exponent));
  return buf;
}

}  // namespace

RunConfig parse_and_validate(const std::vector<std::string>& args) {
  RunConfig cfg;
  CLI::App app{"Dependent-error risk analysis for reused datasets"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Flat key-value config; sections per command");
  app.allow_config_extras(CLI::config_extras_mode::error);

  std::string format_str = "csv";
  app.add_option("--format", format_str, "Output format")
      ->check(CLI::IsMember({"csv", "obj"}));
  std::string out_path;
  auto* out_opt = app.add_option("--out", out_path, "Write the report here");
  std::uint64_t seed_val = 0;
  auto* seed_opt = app.add_option("--seed", seed_val, "Master seed");

  const std::map<std::string, TailMethod> method_map{
      {"exact", TailMethod::exact_tail}, {"hoeffding", TailMethod::hoeffding}};
  const std::map<std::string, TestKind> kind_map{
      {"z", TestKind::z_known_variance}, {"t", TestKind::t_pooled}};
  const std::map<std::string, AllocationStrategy> strategy_map{
      {"independent", AllocationStrategy::independent_uniform},
      {"disjoint", AllocationStrategy::disjoint_partition}};
  const std::map<std::string, CapacityMode> capacity_mode_map{
      {"max-studies", CapacityMode::max_studies},
      {"tail", CapacityMode::tail},
      {"guaranteed-two", CapacityMode::guaranteed_two},
      {"min-k", CapacityMode::min_k},
      {"pigeonhole", CapacityMode::pigeonhole}};
  const std::map<std::string, ControlMode> control_mode_map{
      {"reuse", ControlMode::reuse_full},
      {"disjoint", ControlMode::disjoint_split},
      {"subsample", ControlMode::independent_subsample}};
  const std::map<std::string, SurvivalMode> survival_mode_map{
      {"reuse", SurvivalMode::reuse_same_cohort},
      {"gatekeep", SurvivalMode::gatekeep_split}};

  // error-dist / stoploss
  ErrorDistParams ed;
  std::optional<double> ed_alpha, ed_p1, ed_p2;
  bool sl_compare = false;
  auto add_event_options = [&](CLI::App* sub) {
    sub->add_option("--p1", ed_p1, "pr(E1)");
    sub->add_option("--p2", ed_p2, "pr(E2)");
    sub->add_option("--alpha", ed_alpha, "Shorthand for p1 = p2 = alpha");
    sub->add_option("--p2g1", ed.p2_given_1, "pr(E2|E1) values")
        ->delimiter(',');
  };
  auto* sub_error = app.add_subcommand("error-dist",
                                       "Two-event error-count distribution");
  add_event_options(sub_error);
  auto* sub_stoploss =
      app.add_subcommand("stoploss", "Stop-loss premium curves");
  add_event_options(sub_stoploss);
  sub_stoploss->add_flag("--compare", sl_compare,
                         "Emit pairwise stop-loss order verdicts");

  // capacity
  CapacityParams cap;
  auto* sub_capacity =
      app.add_subcommand("capacity", "Dataset capacity under subsampling");
  sub_capacity->add_option("--mode", cap.mode)
      ->transform(CLI::CheckedTransformer(capacity_mode_map));
  sub_capacity->add_option("--n", cap.n, "Dataset size")->required();
  sub_capacity->add_option("--k", cap.k, "Per-study sample size");
  sub_capacity->add_option("--ell", cap.ell_values, "Intersection thresholds")
      ->delimiter(',');
  sub_capacity->add_option("--p-tol", cap.p_tol, "Tolerated probability");
  sub_capacity->add_option("--method", cap.method)
      ->transform(CLI::CheckedTransformer(method_map));
  sub_capacity->add_option("--lambda", cap.lambda, "Overlap fraction (min-k)");

  // power
  PowerParams pw;
  auto* sub_power = app.add_subcommand("power", "Type-II error and sample size");
  sub_power->add_option("--kind", pw.kind)
      ->transform(CLI::CheckedTransformer(kind_map))
      ->required();
  sub_power->add_option("--alpha", pw.alpha);
  sub_power->add_option("--delta", pw.delta, "Effect size")->required();
  sub_power->add_option("--sigma", pw.sigma);
  sub_power->add_flag("--one-sided", pw.one_sided);
  sub_power->add_option("--n1", pw.n1, "Control arm sizes")->delimiter(',');
  sub_power->add_option("--n2", pw.n2, "Treatment arm sizes")->delimiter(',');
  sub_power->add_option("--target-power", pw.target_power);
  sub_power->add_option("--ratio", pw.ratio, "n2/n1 allocation ratio");

  // subsample
  SubsampleParams ss;
  std::optional<std::int64_t> ss_k;
  auto* sub_subsample = app.add_subcommand("subsample", "Seeded subsampling");
  sub_subsample->add_option("--n", ss.n, "Dataset size")->required();
  sub_subsample->add_option("--k", ss_k, "Single draw size");
  sub_subsample->add_option("--k-list", ss.k_list, "Draw sizes")->delimiter(',');
  sub_subsample->add_option("--strategy", ss.strategy)
      ->transform(CLI::CheckedTransformer(strategy_map));
  sub_subsample->add_flag("--audit", ss.audit, "Emit the overlap matrix");
  sub_subsample->add_flag("--empirical", ss.empirical,
                          "Estimate pr(max pairwise overlap >= ell)");
  sub_subsample->add_option("--c", ss.c, "Number of independent draws");
  sub_subsample->add_option("--ell", ss.ell, "Intersection threshold");
  sub_subsample->add_option("--trials", ss.trials);

  // simulate
  SimulateParams sim;
  auto* sub_simulate = app.add_subcommand("simulate", "Monte Carlo case studies");
  sub_simulate->add_option("--design", sim.design)
      ->check(CLI::IsMember({"shared-control", "survival"}))
      ->required();
  std::int64_t sim_reps = 10000;
  double sim_alpha = 0.05;
  sub_simulate->add_option("--reps", sim_reps, "Replications");
  sub_simulate->add_option("--alpha", sim_alpha);
  sub_simulate->add_option("--m", sim.shared.m, "Treatment count");
  sub_simulate->add_option("--n-arm", sim.shared.n_arm);
  sub_simulate->add_option("--n-control", sim.shared.n_control);
  sub_simulate->add_option("--control-mode", sim.shared.control_mode)
      ->transform(CLI::CheckedTransformer(control_mode_map));
  sub_simulate->add_option("--control-k", sim.shared.subsample_k);
  sub_simulate->add_option("--effect", sim.shared.effect);
  sub_simulate->add_option("--n-per-group", sim.survival.n_per_group);
  sub_simulate->add_option("--shape", sim.survival.weibull_shape);
  sub_simulate->add_option("--scale", sim.survival.weibull_scale);
  sub_simulate->add_option("--truncations", sim.survival.truncation_times)
      ->delimiter(',');
  sub_simulate->add_option("--mode", sim.survival.mode)
      ->transform(CLI::CheckedTransformer(survival_mode_map));

  // optimize
  OptimizeParams opt;
  auto* sub_optimize =
      app.add_subcommand("optimize", "Portfolio expected utility / grid search");
  sub_optimize->add_option("--portfolio", opt.portfolio_file,
                           "Portfolio specification file")
      ->required();

  // reuse
  ReuseParams ru;
  std::optional<double> ru_rate;
  std::int64_t ru_count = 0;
  auto* sub_reuse =
      app.add_subcommand("reuse", "Per-unit reuse distribution and Poisson bound");
  sub_reuse->add_option("--rates", ru.rates, "Per-study inclusion rates")
      ->delimiter(',');
  sub_reuse->add_option("--rate", ru_rate, "Common rate (with --count)");
  sub_reuse->add_option("--count", ru_count, "Number of studies for --rate");

  for (CLI::App* sub :
       {sub_error, sub_stoploss, sub_capacity, sub_power, sub_subsample,
        sub_simulate, sub_optimize, sub_reuse}) {
    sub->fallthrough();
    sub->configurable(true);
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  cfg.format = format_str == "obj" ? OutputFormat::obj : OutputFormat::csv;
  if (seed_opt->count() > 0) cfg.seed = seed_val;
  if (out_opt->count() > 0) cfg.output_path = out_path;

  auto resolve_pair = [&](const char* command) {
    if (ed_alpha) {
      ed.p1 = *ed_alpha;
      ed.p2 = *ed_alpha;
    }
    if (ed_p1) ed.p1 = *ed_p1;
    if (ed_p2) ed.p2 = *ed_p2;
    if (!ed_alpha && (!ed_p1 || !ed_p2)) {
      throw UsageError(std::string(command) +
                       ": give --alpha or both --p1 and --p2");
    }
    if (ed.p2_given_1.empty()) {
      throw UsageError(std::string(command) +
                       ": at least one --p2g1 value is required");
    }
  };

  if (sub_error->parsed()) {
    cfg.command = Command::error_dist;
    resolve_pair("error-dist");
    cfg.params = ed;
  } else if (sub_stoploss->parsed()) {
    cfg.command = Command::stoploss;
    resolve_pair("stoploss");
    StopLossParams sl;
    sl.p1 = ed.p1;
    sl.p2 = ed.p2;
    sl.p2_given_1 = ed.p2_given_1;
    sl.compare = sl_compare;
    cfg.params = sl;
  } else if (sub_capacity->parsed()) {
    cfg.command = Command::capacity;
    const bool needs_k = cap.mode != CapacityMode::min_k;
    if (needs_k && cap.k <= 0) {
      throw UsageError("capacity: --k is required for this mode");
    }
    if ((cap.mode == CapacityMode::max_studies ||
         cap.mode == CapacityMode::tail) &&
        cap.ell_values.empty()) {
      throw UsageError("capacity: at least one --ell value is required");
    }
    cfg.params = cap;
  } else if (sub_power->parsed()) {
    cfg.command = Command::power;
    if (pw.target_power) {
      if (!pw.n1.empty() || !pw.n2.empty()) {
        throw UsageError("power: --target-power excludes --n1/--n2");
      }
    } else {
      if (pw.n1.empty() || pw.n1.size() != pw.n2.size()) {
        throw UsageError("power: --n1 and --n2 must be given with equal lengths");
      }
    }
    cfg.params = pw;
  } else if (sub_subsample->parsed()) {
    cfg.command = Command::subsample;
    if (ss.empirical) {
      if (!ss_k || ss.c <= 0 || ss.trials <= 0) {
        throw UsageError("subsample: --empirical needs --k, --c and --trials");
      }
      ss.k_list = {*ss_k};
    } else {
      if (ss_k && !ss.k_list.empty()) {
        throw UsageError("subsample: give --k or --k-list, not both");
      }
      if (ss_k) ss.k_list = {*ss_k};
      if (ss.k_list.empty()) {
        throw UsageError("subsample: --k or --k-list is required");
      }
    }
    cfg.params = ss;
  } else if (sub_simulate->parsed()) {
    cfg.command = Command::simulate;
    sim.shared.replications = sim_reps;
    sim.shared.alpha = sim_alpha;
    sim.survival.replications = sim_reps;
    sim.survival.alpha = sim_alpha;
    cfg.params = sim;
  } else if (sub_optimize->parsed()) {
    cfg.command = Command::optimize;
    cfg.params = opt;
  } else if (sub_reuse->parsed()) {
    cfg.command = Command::reuse;
    if (ru_rate) {
      if (!ru.rates.empty()) {
        throw UsageError("reuse: give --rates or --rate/--count, not both");
      }
      if (ru_count < 1) {
        throw UsageError("reuse: --rate needs --count >= 1");
      }
      ru.rates.assign(static_cast<std::size_t>(ru_count), *ru_rate);
    }
    if (ru.rates.empty()) {
      throw UsageError("reuse: no rates given");
    }
    cfg.params = ru;
  } else {
    throw UsageError("no command given");
  }
  return cfg;
}

void write_report_csv(std::ostream& out, const Report& report) {
  for (const auto& [key, value] : report.meta) {
    out << key << ": " << value << '\n';
  }
  bool first = report.meta.empty();
  for (const auto& table : report.tables) {
    if (!first) out << '\n';
    first = false;
    out << '[' << table.name << "]\n";
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      if (i > 0) out << ',';
      out << table.columns[i];
    }
    out << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i > 0) out << ',';
        out << row[i];
      }
      out << '\n';
    }
  }
}

void write_report_obj(std::ostream& out, const Report& report) {
  nlohmann::ordered_json j;
  j["meta"] = nlohmann::ordered_json::object();
  for (const auto& [key, value] : report.meta) j["meta"][key] = value;
  j["tables"] = nlohmann::ordered_json::array();
  for (const auto& table : report.tables) {
    nlohmann::ordered_json t;
    t["name"] = table.name;
    t["columns"] = table.columns;
    t["rows"] = table.rows;
    j["tables"].push_back(std::move(t));
  }
  out << j.dump(2) << '\n';
}

Report parse_report_csv(std::istream& in) {
  Report report;
  std::string line;
  ReportTable* current = nullptr;
  bool header_pending = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      current = nullptr;
      header_pending = false;
      continue;
    }
    if (line.front() == '[' && line.back() == ']') {
      report.tables.push_back({line.substr(1, line.size() - 2), {}, {}});
      current = &report.tables.back();
      header_pending = true;
      continue;
    }
    if (current != nullptr) {
      if (header_pending) {
        current->columns = split(line, ',');
        header_pending = false;
      } else {
        current->rows.push_back(split(line, ','));
      }
      continue;
    }
    const auto sep = line.find(": ");
    if (sep == std::string::npos) {
      throw std::runtime_error("report parse: bad meta line '" + line + "'");
    }
    report.meta.emplace_back(line.substr(0, sep), line.substr(sep + 2));
  }
  return report;
}

namespace {

const char* order_name(StopLossOrder order) {
  switch (order) {
    case StopLossOrder::a_smaller: return "a_smaller";
    case StopLossOrder::b_smaller: return "b_smaller";
    case StopLossOrder::equal: return "equal";
    case StopLossOrder::incomparable: return "incomparable";
  }
  return "?";
}

Report report_error_dist(const ErrorDistParams& p) {
  Report r;
  r.meta.emplace_back("command", "error-dist");
  ReportTable table{"error_dist",
                    {"p1", "p2", "p2_given_1", "pr0", "pr1", "pr2", "mean",
                     "pcer", "fwer", "fdr_global_null", "eu_linear",
                     "eu_quadratic"},
                    {}};
  for (double p2g1 : p.p2_given_1) {
    const auto dist =
        two_event_distribution(DependentEventPair(p.p1, p.p2, p2g1));
    const auto& probs = dist.pmf().probabilities();
    table.rows.push_back(
        {format_double(p.p1), format_double(p.p2), format_double(p2g1),
         format_double(probs[0]), format_double(probs[1]),
         format_double(probs[2]), format_double(dist.mean()),
         format_double(pcer(dist)), format_double(fwer(dist)),
         format_double(fdr_global_null(dist)),
         format_double(expected_utility(dist, UtilityFunction::linear())),
         format_double(expected_utility(dist, UtilityFunction::quadratic()))});
  }
  r.tables.push_back(std::move(table));
  return r;
}

Report report_stoploss(const StopLossParams& p) {
  Report r;
  r.meta.emplace_back("command", "stoploss");
  ReportTable table{"stop_loss", {"p2_given_1", "L", "premium"}, {}};
  std::vector<StopLossCurve> curves;
  for (double p2g1 : p.p2_given_1) {
    const auto dist =
        two_event_distribution(DependentEventPair(p.p1, p.p2, p2g1));
    curves.push_back(stop_loss_curve(dist));
    const auto& curve = curves.back();
    for (std::size_t L = 0; L < curve.premiums.size(); ++L) {
      table.rows.push_back({format_double(p2g1), std::to_string(L),
                            format_double(curve.premiums[L])});
    }
  }
  r.tables.push_back(std::move(table));
  if (p.compare && curves.size() > 1) {
    ReportTable cmp{"comparisons", {"a_p2_given_1", "b_p2_given_1", "order"}, {}};
    for (std::size_t i = 0; i < curves.size(); ++i) {
      for (std::size_t j = i + 1; j < curves.size(); ++j) {
        cmp.rows.push_back({format_double(p.p2_given_1[i]),
                            format_double(p.p2_given_1[j]),
                            order_name(stop_loss_compare(curves[i], curves[j]))});
      }
    }
    r.tables.push_back(std::move(cmp));
  }
  return r;
}

Report report_capacity(const CapacityParams& p) {
  Report r;
  r.meta.emplace_back("command", "capacity");
  switch (p.mode) {
    case CapacityMode::max_studies:
    case CapacityMode::tail: {
      r.meta.emplace_back("n", std::to_string(p.n));
      r.meta.emplace_back("k", std::to_string(p.k));
      r.meta.emplace_back("p_tol", format_double(p.p_tol));
      r.meta.emplace_back(
          "method", p.method == TailMethod::hoeffding ? "hoeffding" : "exact");
      CapacityQuery base{p.n, p.k, 0, p.p_tol};
      const auto rows = capacity_table(base, p.ell_values, p.method);
      ReportTable errors{"row_errors", {"ell", "message"}, {}};
      if (p.mode == CapacityMode::max_studies) {
        ReportTable table{"capacity", {"ratio", "ell", "c_bound"}, {}};
        for (const auto& row : rows) {
          if (row.ok) {
            table.rows.push_back({format_double(row.ratio),
                                  std::to_string(row.ell),
                                  render_capacity_bound(row.result)});
          } else {
            errors.rows.push_back({std::to_string(row.ell), row.error});
          }
        }
        r.tables.push_back(std::move(table));
      } else {
        ReportTable table{"tail", {"ratio", "ell", "tail"}, {}};
        for (const auto& row : rows) {
          if (row.ok) {
            table.rows.push_back({format_double(row.ratio),
                                  std::to_string(row.ell),
                                  format_double(row.result.pairwise_tail)});
          } else {
            errors.rows.push_back({std::to_string(row.ell), row.error});
          }
        }
        r.tables.push_back(std::move(table));
      }
      if (!errors.rows.empty()) r.tables.push_back(std::move(errors));
      break;
    }
    case CapacityMode::guaranteed_two: {
      const std::int64_t bound = guaranteed_overlap_two(p.n, p.k);
      r.tables.push_back({"guaranteed_overlap",
                          {"N", "k", "lower_bound"},
                          {{std::to_string(p.n), std::to_string(p.k),
                            std::to_string(bound)}}});
      break;
    }
    case CapacityMode::min_k: {
      const std::int64_t k = min_k_for_overlap_fraction(p.n, p.lambda);
      r.tables.push_back({"min_k",
                          {"N", "lambda", "k"},
                          {{std::to_string(p.n), format_double(p.lambda),
                            std::to_string(k)}}});
      break;
    }
    case CapacityMode::pigeonhole: {
      const PigeonholeCapacity cap = pigeonhole_capacity(p.n, p.k);
      std::string count;
      if (cap.overflow) {
        const double log10_c = cap.log_subsets / 2.302585092994045684;
        const auto exponent = static_cast<std::int64_t>(std::floor(log10_c));
        const double mantissa =
            std::pow(10.0, log10_c - static_cast<double>(exponent));
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%.3fe+%lld", mantissa,
                      static_cast<long long>(exponent));
        count = buf;
      } else {
        count = std::to_string(cap.count);
      }
      r.tables.push_back(
          {"pigeonhole",
           {"N", "k", "capacity", "log_subsets", "overflow"},
           {{std::to_string(p.n), std::to_string(p.k), count,
             format_double(cap.log_subsets), cap.overflow ? "1" : "0"}}});
      break;
    }
  }
  return r;
}

Report report_power(const PowerParams& p) {
  Report r;
  r.meta.emplace_back("command", "power");
  TestSpec spec{p.kind, p.alpha, !p.one_sided, p.delta, p.sigma};
  if (p.target_power) {
    const SampleVector n = required_sample_size(spec, *p.target_power, p.ratio);
    r.tables.push_back({"required_sample_size",
                        {"n1", "n2", "achieved_power", "target_power"},
                        {{std::to_string(n.n1), std::to_string(n.n2),
                          format_double(power(spec, n)),
                          format_double(*p.target_power)}}});
    return r;
  }
  ReportTable table{"power", {"n1", "n2", "type2_error", "power"}, {}};
  std::vector<TestSpec> specs;
  std::vector<SampleVector> ns;
  for (std::size_t i = 0; i < p.n1.size(); ++i) {
    const SampleVector n{p.n1[i], p.n2[i]};
    const double beta = type2_error(spec, n);
    table.rows.push_back({std::to_string(n.n1), std::to_string(n.n2),
                          format_double(beta), format_double(1.0 - beta)});
    specs.push_back(spec);
    ns.push_back(n);
  }
  if (ns.size() > 1) {
    r.meta.emplace_back("portfolio_expected_type2",
                        format_double(portfolio_expected_type2(specs, ns)));
  }
  r.tables.push_back(std::move(table));
  return r;
}

Report report_subsample(const SubsampleParams& p, std::uint64_t seed) {
  Report r;
  r.meta.emplace_back("command", "subsample");
  r.meta.emplace_back("n", std::to_string(p.n));
  r.meta.emplace_back("seed", std::to_string(seed));
  if (p.empirical) {
    const double freq =
        empirical_max_overlap(p.n, p.k_list[0], p.c, p.ell, p.trials, seed);
    r.tables.push_back(
        {"empirical_max_overlap",
         {"n", "k", "c", "ell", "trials", "frequency"},
         {{std::to_string(p.n), std::to_string(p.k_list[0]),
           std::to_string(p.c), std::to_string(p.ell),
           std::to_string(p.trials), format_double(freq)}}});
    return r;
  }
  r.meta.emplace_back("strategy",
                      p.strategy == AllocationStrategy::disjoint_partition
                          ? "disjoint"
                          : "independent");
  const Allocation alloc = allocate(p.n, p.k_list, p.strategy, seed);
  ReportTable table{"allocation", {"draw_id", "k", "indices"}, {}};
  for (std::size_t i = 0; i < alloc.draws.size(); ++i) {
    std::vector<std::string> row{std::to_string(i),
                                 std::to_string(alloc.draws[i].size())};
    for (std::int64_t idx : alloc.draws[i]) row.push_back(std::to_string(idx));
    table.rows.push_back(std::move(row));
  }
  r.tables.push_back(std::move(table));
  if (p.audit) {
    const auto matrix = overlap_matrix(alloc);
    ReportTable audit{"overlap_matrix", {}, {}};
    for (std::size_t i = 0; i < matrix.size(); ++i) {
      audit.columns.push_back("draw_" + std::to_string(i));
    }
    for (const auto& row : matrix) {
      std::vector<std::string> cells;
      cells.reserve(row.size());
      for (std::int64_t v : row) cells.push_back(std::to_string(v));
      audit.rows.push_back(std::move(cells));
    }
    r.tables.push_back(std::move(audit));
  }
  return r;
}

void append_simulation_tables(Report& r, const SimulationReport& report) {
  r.meta.emplace_back("replications", std::to_string(report.rep_count));
  r.meta.emplace_back("seed", std::to_string(report.master_seed));
  r.meta.emplace_back("tests",
                      std::to_string(report.per_test_rejection_freq.size()));
  ReportTable pmf_table{"error_pmf", {"count", "n", "frequency"}, {}};
  const auto& pmf = report.empirical_error_pmf.pmf();
  for (std::size_t i = 0; i < report.error_count_n.size(); ++i) {
    pmf_table.rows.push_back({std::to_string(i),
                              std::to_string(report.error_count_n[i]),
                              format_double(pmf.probabilities()[i])});
  }
  r.tables.push_back(std::move(pmf_table));
  ReportTable rej{"per_test_rejection", {"test", "frequency"}, {}};
  for (std::size_t i = 0; i < report.per_test_rejection_freq.size(); ++i) {
    rej.rows.push_back(
        {std::to_string(i), format_double(report.per_test_rejection_freq[i])});
  }
  r.tables.push_back(std::move(rej));
  ReportTable corr{"stat_correlation", {}, {}};
  for (std::size_t i = 0; i < report.pairwise_stat_correlation.size(); ++i) {
    corr.columns.push_back("t" + std::to_string(i));
  }
  for (const auto& row : report.pairwise_stat_correlation) {
    std::vector<std::string> cells;
    cells.reserve(row.size());
    for (double v : row) cells.push_back(format_double(v));
    corr.rows.push_back(std::move(cells));
  }
  r.tables.push_back(std::move(corr));
  ReportTable sl{"stop_loss", {"L", "premium"}, {}};
  for (std::size_t L = 0; L < report.stop_loss.premiums.size(); ++L) {
    sl.rows.push_back(
        {std::to_string(L), format_double(report.stop_loss.premiums[L])});
  }
  r.tables.push_back(std::move(sl));
  if (report.contingency) {
    const auto& c = *report.contingency;
    r.tables.push_back({"contingency",
                        {"cell", "not_r_first", "r_first"},
                        {{"not_r_last", std::to_string(c[0][0]),
                          std::to_string(c[0][1])},
                         {"r_last", std::to_string(c[1][0]),
                          std::to_string(c[1][1])}}});
  }
}

Report report_simulate(const SimulateParams& p,
                       std::optional<std::uint64_t> seed) {
  Report r;
  r.meta.emplace_back("command", "simulate");
  r.meta.emplace_back("design", p.design);
  if (p.design == "shared-control") {
    SharedControlDesign design = p.shared;
    if (seed) design.master_seed = *seed;
    r.meta.emplace_back("m", std::to_string(design.m));
    r.meta.emplace_back("n_arm", std::to_string(design.n_arm));
    r.meta.emplace_back("n_control", std::to_string(design.n_control));
    const char* mode = design.control_mode == ControlMode::reuse_full
                           ? "reuse"
                           : design.control_mode == ControlMode::disjoint_split
                                 ? "disjoint"
                                 : "subsample";
    r.meta.emplace_back("control_mode", mode);
    r.meta.emplace_back("alpha", format_double(design.alpha));
    r.meta.emplace_back("effect", format_double(design.effect));
    append_simulation_tables(r, run_shared_control(design));
  } else {
    SurvivalReuseDesign design = p.survival;
    if (seed) design.master_seed = *seed;
    r.meta.emplace_back("n_per_group", std::to_string(design.n_per_group));
    r.meta.emplace_back("shape", format_double(design.weibull_shape));
    r.meta.emplace_back("scale", format_double(design.weibull_scale));
    r.meta.emplace_back("mode", design.mode == SurvivalMode::reuse_same_cohort
                                    ? "reuse"
                                    : "gatekeep");
    r.meta.emplace_back("alpha", format_double(design.alpha));
    std::string times;
    for (std::size_t i = 0; i < design.truncation_times.size(); ++i) {
      if (i > 0) times.push_back(';');
      times += format_double(design.truncation_times[i]);
    }
    r.meta.emplace_back("truncations", times);
    append_simulation_tables(r, run_survival_reuse(design));
  }
  return r;
}

Report report_optimize(const OptimizeParams& p,
                       std::optional<std::uint64_t> seed) {
  Report r;
  r.meta.emplace_back("command", "optimize");
  PortfolioSpecFile spec = load_portfolio_spec(p.portfolio_file);
  if (seed) spec.config.mc.seed = *seed;
  if (!spec.has_grid) {
    const PortfolioEvaluation eval = evaluate_portfolio(spec.config);
    r.meta.emplace_back("expected_utility", format_double(eval.utility));
    if (spec.config.mode == DependenceMode::monte_carlo) {
      r.meta.emplace_back("std_error", format_double(eval.std_error));
    }
    return r;
  }
  const GridSearchResult result = grid_search(spec.config, spec.grid);
  r.meta.emplace_back("best_utility", format_double(result.best_utility));
  {
    std::string idx;
    for (std::size_t i = 0; i < result.best_index.size(); ++i) {
      if (i > 0) idx.push_back(';');
      idx += std::to_string(result.best_index[i]);
    }
    r.meta.emplace_back("best_index", idx);
  }
  ReportTable best{"best", {"plan", "alpha", "fraction", "n1", "n2"}, {}};
  for (std::size_t i = 0; i < result.best_config.plans.size(); ++i) {
    const auto& plan = result.best_config.plans[i];
    const SampleVector n =
        resolved_sample(plan, result.best_config.dataset_size);
    const auto& frac = std::get<FractionSample>(plan.sample);
    best.rows.push_back({std::to_string(i), format_double(plan.test.alpha),
                         format_double(frac.fraction), std::to_string(n.n1),
                         std::to_string(n.n2)});
  }
  r.tables.push_back(std::move(best));
  ReportTable surface{"surface", {}, {}};
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    surface.columns.push_back("plan" + std::to_string(i) + "_alpha");
    surface.columns.push_back("plan" + std::to_string(i) + "_fraction");
  }
  surface.columns.push_back("utility");
  surface.columns.push_back("feasible");
  for (const auto& point : result.surface) {
    std::vector<std::string> row;
    for (const auto& cand : point.candidates) {
      row.push_back(format_double(cand.alpha));
      row.push_back(format_double(cand.fraction));
    }
    row.push_back(point.feasible ? format_double(point.utility) : "");
    row.push_back(point.feasible ? "1" : "0");
    surface.rows.push_back(std::move(row));
  }
  r.tables.push_back(std::move(surface));
  return r;
}

Report report_reuse(const ReuseParams& p) {
  Report r;
  r.meta.emplace_back("command", "reuse");
  const UnitReuseReport report = unit_reuse(p.rates);
  r.meta.emplace_back("studies", std::to_string(p.rates.size()));
  r.meta.emplace_back("lambda", format_double(report.poisson_lambda));
  r.meta.emplace_back("pr_ge2_exact", format_double(report.pr_ge2_exact));
  r.meta.emplace_back("pr_ge2_poisson", format_double(report.pr_ge2_poisson));
  r.meta.emplace_back("lecam_bound", report.lecam_bound
                                         ? format_double(*report.lecam_bound)
                                         : "n/a");
  r.meta.emplace_back("sup_cdf_distance",
                      format_double(report.sup_cdf_distance));
  ReportTable table{"reuse_pmf", {"count", "probability"}, {}};
  const auto& probs = report.exact_pmf.probabilities();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    table.rows.push_back({std::to_string(i), format_double(probs[i])});
  }
  r.tables.push_back(std::move(table));
  return r;
}

}  // namespace

Report build_report(const RunConfig& cfg) {
  switch (cfg.command) {
    case Command::error_dist:
      return report_error_dist(std::get<ErrorDistParams>(cfg.params));
    case Command::stoploss:
      return report_stoploss(std::get<StopLossParams>(cfg.params));
    case Command::capacity:
      return report_capacity(std::get<CapacityParams>(cfg.params));
    case Command::power:
      return report_power(std::get<PowerParams>(cfg.params));
    case Command::subsample:
      return report_subsample(std::get<SubsampleParams>(cfg.params),
                              cfg.seed.value_or(1));
    case Command::simulate:
      return report_simulate(std::get<SimulateParams>(cfg.params), cfg.seed);
    case Command::optimize:
      return report_optimize(std::get<OptimizeParams>(cfg.params), cfg.seed);
    case Command::reuse:
      return report_reuse(std::get<ReuseParams>(cfg.params));
  }
  throw std::logic_error("build_report: unknown command");
}

int execute(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const Report report = build_report(cfg);
    std::ofstream file;
    std::ostream* sink = &out;
    if (cfg.output_path) {
      file.open(*cfg.output_path, std::ios::binary);
      if (!file) {
        throw std::runtime_error("cannot open output path " + *cfg.output_path);
      }
      sink = &file;
    }
    if (cfg.format == OutputFormat::csv) {
      write_report_csv(*sink, report);
    } else {
      write_report_obj(*sink, report);
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  try {
    const RunConfig cfg = parse_and_validate(args);
    return execute(cfg, out, err);
  } catch (const HelpRequested& e) {
    out << e.what();
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }
}

PortfolioSpecFile parse_portfolio_spec(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto comment = line.find('#');
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("portfolio spec: expected key=value, got '" +
                               line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!kv.emplace(key, value).second) {
      throw std::runtime_error("portfolio spec: duplicate key '" + key + "'");
    }
  }
  std::set<std::string> used;
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    used.insert(key);
    return it->second;
  };
  auto require = [&](const std::string& key) {
    const auto v = take(key);
    if (!v) throw std::runtime_error("portfolio spec: missing key '" + key + "'");
    return *v;
  };

  PortfolioSpecFile spec;
  spec.config.dataset_size = to_int(require("dataset_size"), "dataset_size");
  const std::string utility = take("utility").value_or("linear");
  if (utility == "linear") {
    spec.config.utility = UtilityFunction::linear();
  } else if (utility == "quadratic") {
    spec.config.utility = UtilityFunction::quadratic();
  } else if (utility == "qaly") {
    spec.config.utility = UtilityFunction::qaly();
  } else if (utility.rfind("tabulated:", 0) == 0) {
    std::vector<double> values;
    for (const auto& item : split(utility.substr(10), ',')) {
      values.push_back(to_double(trim(item), "utility"));
    }
    spec.config.utility = UtilityFunction::tabulated(std::move(values));
  } else {
    throw std::runtime_error("portfolio spec: unknown utility '" + utility +
                             "'");
  }
  const std::string dependence = take("dependence").value_or("analytic");
  if (dependence == "analytic") {
    spec.config.mode = DependenceMode::analytic_independent;
  } else if (dependence == "monte-carlo") {
    spec.config.mode = DependenceMode::monte_carlo;
  } else {
    throw std::runtime_error("portfolio spec: unknown dependence '" +
                             dependence + "'");
  }
  if (const auto v = take("mc_reps")) {
    spec.config.mc.replications = to_int(*v, "mc_reps");
  }
  if (const auto v = take("mc_seed")) {
    spec.config.mc.seed = static_cast<std::uint64_t>(to_int(*v, "mc_seed"));
  }
  if (const auto v = take("mc_allocation")) {
    if (*v == "independent") {
      spec.config.mc.allocation = AllocationStrategy::independent_uniform;
    } else if (*v == "disjoint") {
      spec.config.mc.allocation = AllocationStrategy::disjoint_partition;
    } else {
      throw std::runtime_error("portfolio spec: unknown mc_allocation '" + *v +
                               "'");
    }
  }
  const std::int64_t plan_count = to_int(require("plans"), "plans");
  if (plan_count < 0) {
    throw std::runtime_error("portfolio spec: plans must be >= 0");
  }
  for (std::int64_t i = 0; i < plan_count; ++i) {
    const std::string prefix = "plan." + std::to_string(i) + ".";
    StudyPlan plan;
    const std::string kind = take(prefix + "kind").value_or("z");
    if (kind == "z") {
      plan.test.kind = TestKind::z_known_variance;
    } else if (kind == "t") {
      plan.test.kind = TestKind::t_pooled;
    } else {
      throw std::runtime_error("portfolio spec: unknown kind '" + kind + "'");
    }
    if (const auto v = take(prefix + "alpha")) {
      plan.test.alpha = to_double(*v, prefix + "alpha");
    }
    if (const auto v = take(prefix + "sigma")) {
      plan.test.sigma = to_double(*v, prefix + "sigma");
    }
    const std::string null_kind = take(prefix + "null").value_or("point");
    if (null_kind == "point") {
      plan.null_kind = NullKind::point_zero_two_sided;
      plan.test.two_sided = true;
    } else if (null_kind == "nonpositive") {
      plan.null_kind = NullKind::nonpositive_one_sided;
      plan.test.two_sided = false;
    } else {
      throw std::runtime_error("portfolio spec: unknown null '" + null_kind +
                               "'");
    }
    const auto n1 = take(prefix + "n1");
    const auto n2 = take(prefix + "n2");
    const auto fraction = take(prefix + "fraction");
    const auto treatment = take(prefix + "treatment_arm");
    if (n1 && n2 && !fraction) {
      plan.sample = SampleVector{to_int(*n1, prefix + "n1"),
                                 to_int(*n2, prefix + "n2")};
    } else if (fraction && treatment && !n1 && !n2) {
      plan.sample =
          FractionSample{to_double(*fraction, prefix + "fraction"),
                         to_int(*treatment, prefix + "treatment_arm")};
    } else {
      throw std::runtime_error(
          "portfolio spec: plan " + std::to_string(i) +
          " needs either n1+n2 or fraction+treatment_arm");
    }
    if (const auto v = take(prefix + "prior")) {
      EffectPrior prior;
      for (const auto& item : split(*v, ',')) {
        const auto parts = split(trim(item), ':');
        if (parts.size() != 2) {
          throw std::runtime_error(
              "portfolio spec: prior entries must be theta:prob");
        }
        prior.points.emplace_back(to_double(trim(parts[0]), "prior"),
                                  to_double(trim(parts[1]), "prior"));
      }
      plan.prior = std::move(prior);
    }
    std::vector<GridCandidate> candidates;
    if (const auto v = take(prefix + "grid")) {
      for (const auto& item : split(*v, ',')) {
        const auto parts = split(trim(item), ':');
        if (parts.size() != 2) {
          throw std::runtime_error(
              "portfolio spec: grid entries must be alpha:fraction");
        }
        candidates.push_back({to_double(trim(parts[0]), "grid"),
                              to_double(trim(parts[1]), "grid")});
      }
      spec.has_grid = true;
    }
    spec.grid.push_back(std::move(candidates));
    spec.config.plans.push_back(std::move(plan));
  }
  if (spec.has_grid) {
    // Plans without an explicit grid contribute their own settings as the
    // singleton candidate.
    for (std::size_t i = 0; i < spec.grid.size(); ++i) {
      if (spec.grid[i].empty()) {
        const auto& plan = spec.config.plans[i];
        double fraction = 1.0;
        if (const auto* frac = std::get_if<FractionSample>(&plan.sample)) {
          fraction = frac->fraction;
        } else {
          const auto& fixed = std::get<SampleVector>(plan.sample);
          fraction = static_cast<double>(fixed.n1) /
                     static_cast<double>(spec.config.dataset_size);
        }
        spec.grid[i].push_back({plan.test.alpha, fraction});
      }
    }
  }
  for (const auto& [key, value] : kv) {
    if (!used.count(key)) {
      throw std::runtime_error("portfolio spec: unknown key '" + key + "'");
    }
  }
  return spec;
}

PortfolioSpecFile load_portfolio_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open portfolio spec '" + path + "'");
  }
  return parse_portfolio_spec(in);
}

}  // namespace reuserisk::cli
