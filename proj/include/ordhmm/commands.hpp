#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <ostream>
#include <string>
#include <variant>

#include "ordhmm/config.hpp"
#include "ordhmm/error.hpp"
#include "ordhmm/exact_bayes.hpp"
#include "ordhmm/gibbs.hpp"
#include "ordhmm/io.hpp"
#include "ordhmm/model.hpp"
#include "ordhmm/ordered.hpp"
#include "ordhmm/relabel.hpp"

namespace ordhmm::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kModelError = 3,
  kBudgetError = 4,
};

struct RunConfig {
  std::string subcommand;
  std::string model_path;
  std::string prior_path;
  std::string data_path;
  std::string out_dir;
  std::size_t horizon = 100;
  std::uint64_t seed = 0;
  std::size_t iterations = 1000;
  std::size_t burnin = 0;
  std::size_t thin = 1;
  std::size_t budget = kDefaultBudget;
  std::string sampler = "standard";
  bool relabel_trace = false;
  // Threshold used when the reports state whether a check holds.
  double tolerance = kTolerances.exactness;
};

namespace detail {

inline void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string("missing required option ") + flag);
}

inline std::filesystem::path output_dir(const RunConfig& c) {
  require(c.out_dir, "--out");
  std::error_code ec;
  std::filesystem::create_directories(c.out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + c.out_dir);
  return c.out_dir;
}

inline bool categorical_of(const io::ModelSpec& m) {
  return std::visit([](const auto& p) { return is_categorical(p.emission); }, m);
}

}  // namespace detail

inline int cmd_simulate(const RunConfig& c, std::ostream& out) {
  detail::require(c.model_path, "--model");
  const auto model = io::model_from_json(io::read_json_file(c.model_path));
  const auto dir = detail::output_dir(c);
  io::json summary;
  if (const auto* s = std::get_if<StandardHmmParams>(&model)) {
    const auto sample = simulate_standard(*s, c.horizon, c.seed);
    io::write_text_file((dir / "states.csv").string(), io::states_csv(sample.states));
    io::write_text_file((dir / "observations.csv").string(), io::observations_csv(sample.observations));
    std::vector<double> freq(static_cast<std::size_t>(s->states()), 0.0);
    for (int v : sample.states) freq[static_cast<std::size_t>(v)] += 1.0 / static_cast<double>(sample.states.size());
    summary = {{"model", "standard"}, {"T", c.horizon}, {"seed", c.seed}, {"state_frequencies", freq}};
  } else {
    const auto& o = std::get<OrderedHmmParams>(model);
    const auto sample = simulate_ordered(o, c.horizon, c.seed);
    io::write_text_file((dir / "states.csv").string(), io::states_csv(sample.path));
    io::write_text_file((dir / "observations.csv").string(), io::observations_csv(sample.observations));
    std::vector<double> freq(static_cast<std::size_t>(o.states()), 0.0);
    for (int v : sample.path.z) freq[static_cast<std::size_t>(v)] += 1.0 / static_cast<double>(sample.path.size());
    summary = {{"model", "ordered"},
               {"T", c.horizon},
               {"seed", c.seed},
               {"label_frequencies", freq},
               {"m_T", sample.path.m.back() + 1}};
  }
  out << summary.dump(2) << '\n';
  return kOk;
}

inline int cmd_loglik(const RunConfig& c, std::ostream& out) {
  detail::require(c.model_path, "--model");
  detail::require(c.data_path, "--data");
  const auto model = io::model_from_json(io::read_json_file(c.model_path));
  const Observations y = io::read_observations_file(c.data_path, detail::categorical_of(model));
  io::json report;
  const int k = std::visit([](const auto& p) { return p.states(); }, model);
  io::json table = io::json::array();
  double lo = 0.0, hi = 0.0;
  auto add_row = [&](const Permutation& tau, double l) {
    table.push_back({{"relabeling", io::to_json(tau)}, {"loglik", l}});
    if (table.size() == 1) lo = hi = l;
    lo = std::min(lo, l);
    hi = std::max(hi, l);
  };
  if (const auto* s = std::get_if<StandardHmmParams>(&model)) {
    report["model"] = "standard";
    report["loglik_standard"] = loglik_standard(*s, y);
    report["loglik_ordered"] = loglik_ordered(as_ordered(*s), y);
    if (k <= kMaxPermutationStates)
      for (const auto& tau : all_permutations(k)) add_row(tau, loglik_standard(relabel_params(*s, tau), y));
  } else {
    const auto& o = std::get<OrderedHmmParams>(model);
    report["model"] = "ordered";
    report["loglik_ordered"] = loglik_ordered(o, y);
    if (k <= kMaxPermutationStates)
      for (const auto& tau : all_permutations(k)) add_row(tau, loglik_ordered(relabel_params(o, tau), y));
  }
  report["T"] = series_length(y) - 1;
  if (!table.empty()) {
    report["per_permutation"] = table;
    report["spread"] = hi - lo;
    report["relabeling_invariant"] = hi - lo <= c.tolerance;
  }
  if (!c.out_dir.empty()) io::write_text_file((detail::output_dir(c) / "loglik.json").string(), report.dump(2) + "\n");
  out << report.dump(2) << '\n';
  return kOk;
}

inline int cmd_audit(const RunConfig& c, std::ostream& out) {
  detail::require(c.prior_path, "--prior");
  detail::require(c.data_path, "--data");
  if (c.budget == 0) throw ConfigError("--budget must be positive");
  const DiscretePrior prior = io::prior_from_json(io::read_json_file(c.prior_path));
  const PriorValidation v = validate_prior(prior);
  if (!v.passed()) {
    std::string msg = "prior fails validation";
    for (const auto& issue : v.issues) msg += "\n  " + issue;
    if (!v.condition2) throw ConditionViolated(msg);
    throw ValidationError(msg);
  }
  const Observations y =
      io::read_observations_file(c.data_path, is_categorical(prior.atoms.front().params.emission));
  const EquivalenceReport report = equivalence_audit(prior, y, c.budget);
  const io::json j = io::to_json(report);
  if (!c.out_dir.empty()) {
    const auto dir = detail::output_dir(c);
    io::write_text_file((dir / "report.json").string(), j.dump(2) + "\n");
    io::write_text_file((dir / "per_atom.csv").string(), io::per_atom_csv(report));
  }
  out << j.dump(2) << '\n';
  return kOk;
}

inline int cmd_gibbs(const RunConfig& c, std::ostream& out) {
  detail::require(c.prior_path, "--prior");
  detail::require(c.data_path, "--data");
  if (c.sampler != "standard" && c.sampler != "ordered")
    throw ConfigError("--sampler must be 'standard' or 'ordered'");
  if (c.relabel_trace && c.sampler != "standard") throw ConfigError("--relabel-trace applies to the standard sampler");
  const ConjugatePrior prior = io::conjugate_prior_from_json(io::read_json_file(c.prior_path));
  const Observations y =
      io::read_observations_file(c.data_path, std::holds_alternative<DirichletEmissionPrior>(prior.emission));
  GibbsConfig g;
  g.iterations = c.iterations;
  g.burnin = c.burnin;
  g.thin = c.thin;
  g.seed = c.seed;
  const GibbsTrace trace = c.sampler == "standard" ? gibbs_standard(prior, y, g) : gibbs_ordered(prior, y, g);
  const auto dir = detail::output_dir(c);
  io::write_text_file((dir / "trace.csv").string(), io::trace_csv(trace));
  io::json summary = io::summary_json(trace);
  io::write_text_file((dir / "summary.json").string(), summary.dump(2) + "\n");
  io::json printed = {{"summary", summary}};
  if (c.relabel_trace) {
    const GibbsTrace relabeled = relabel_trace(trace, c.seed);
    io::write_text_file((dir / "trace_ordered.csv").string(), io::trace_csv(relabeled));
    io::json rs = io::summary_json(relabeled);
    io::write_text_file((dir / "summary_ordered.json").string(), rs.dump(2) + "\n");
    printed["summary_ordered"] = rs;
  }
  out << printed.dump(2) << '\n';
  return kOk;
}

inline int cmd_order_prob(const RunConfig& c, std::ostream& out) {
  detail::require(c.model_path, "--model");
  const io::json j = io::read_json_file(c.model_path);
  const auto model = io::model_from_json(j);
  const auto* s = std::get_if<StandardHmmParams>(&model);
  if (!s) throw ValidationError("order-prob needs a standard model (with an 'initial' entry)");
  if (s->states() > 6) throw ValidationError("order-prob enumerates K! orders and is limited to K <= 6");
  const auto dist = order_distribution(*s);
  io::json rows = io::json::array();
  CompensatedSum total;
  for (const auto& d : dist) {
    rows.push_back({{"order", io::to_json(d.order)}, {"probability", d.probability}});
    total += d.probability;
  }
  const io::json report = {{"K", s->states()},
                           {"orders", rows},
                           {"sum", total.value()},
                           {"sums_to_one", std::abs(total.value() - 1.0) <= c.tolerance}};
  if (!c.out_dir.empty())
    io::write_text_file((detail::output_dir(c) / "order_prob.json").string(), report.dump(2) + "\n");
  out << report.dump(2) << '\n';
  return kOk;
}

// Dispatches a subcommand and maps library errors onto the exit-code contract.
inline int run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  try {
    if (c.subcommand == "simulate") return cmd_simulate(c, out);
    if (c.subcommand == "loglik") return cmd_loglik(c, out);
    if (c.subcommand == "audit") return cmd_audit(c, out);
    if (c.subcommand == "gibbs") return cmd_gibbs(c, out);
    if (c.subcommand == "order-prob") return cmd_order_prob(c, out);
    throw ConfigError("unknown subcommand '" + c.subcommand + "'");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const BudgetExceeded& e) {
    err << "budget exceeded: " << e.what() << '\n';
    return kBudgetError;
  } catch (const Error& e) {
    err << "model error: " << e.what() << '\n';
    return kModelError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace ordhmm::cli
