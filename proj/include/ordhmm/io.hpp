#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ordhmm/error.hpp"
#include "ordhmm/exact_bayes.hpp"
#include "ordhmm/gibbs.hpp"
#include "ordhmm/model.hpp"
#include "ordhmm/ordered.hpp"

namespace ordhmm::io {

using json = nlohmann::json;

// Shortest text that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
T get_field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline json to_json(const Emission& e) {
  if (const auto* c = std::get_if<CategoricalEmission>(&e)) return {{"type", "categorical"}, {"probs", c->probs}};
  const auto& g = std::get<GaussianEmission>(e);
  return {{"type", "gaussian"}, {"means", g.means}, {"variance", g.variance}};
}

inline Emission emission_from_json(const json& j) {
  const auto type = detail::get_field<std::string>(j, "type");
  if (type == "categorical") return CategoricalEmission{detail::get_field<std::vector<std::vector<double>>>(j, "probs")};
  if (type == "gaussian")
    return GaussianEmission{detail::get_field<std::vector<double>>(j, "means"), detail::get_field<double>(j, "variance")};
  throw ValidationError("unknown emission type '" + type + "'");
}

inline json to_json(const TransitionMatrix& q) {
  json rows = json::array();
  for (int k = 0; k < q.states(); ++k) rows.push_back(row_of(q.matrix(), k));
  return rows;
}

inline json to_json(const InitialMode& m) {
  if (const auto* f = std::get_if<FixedInitial>(&m)) return {{"mode", "fixed"}, {"probs", f->probs}};
  return {{"mode", "stationary"}};
}

inline InitialMode initial_from_json(const json& j) {
  const auto mode = detail::get_field<std::string>(j, "mode");
  if (mode == "stationary") return StationaryInitial{};
  if (mode == "fixed") return FixedInitial{detail::get_field<std::vector<double>>(j, "probs")};
  throw ValidationError("unknown initial mode '" + mode + "'");
}

inline json to_json(const StandardHmmParams& p) {
  return {{"K", p.states()}, {"Q", to_json(p.q)}, {"emission", to_json(p.emission)}, {"initial", to_json(p.initial)}};
}

inline json to_json(const OrderedHmmParams& p) {
  return {{"K", p.states()}, {"Q", to_json(p.q)}, {"emission", to_json(p.emission)}};
}

namespace detail {

inline TransitionMatrix transition_from_json(const json& j) {
  const int k = get_field<int>(j, "K");
  auto rows = get_field<std::vector<std::vector<double>>>(j, "Q");
  if (static_cast<int>(rows.size()) != k) throw DimensionMismatch("'Q' must have K rows");
  return TransitionMatrix::from_rows(rows);
}

}  // namespace detail

inline StandardHmmParams standard_from_json(const json& j) {
  if (j.contains("model") && j.at("model") != "standard") throw ValidationError("not a standard model");
  StandardHmmParams p{detail::transition_from_json(j), emission_from_json(detail::get_field<json>(j, "emission")),
                      StationaryInitial{}};
  if (j.contains("initial")) p.initial = initial_from_json(j.at("initial"));
  validate(p);
  return p;
}

inline OrderedHmmParams ordered_from_json(const json& j) {
  if (j.contains("model") && j.at("model") != "ordered") throw ValidationError("not an ordered model");
  if (j.contains("initial")) throw ValidationError("ordered models have a deterministic start; remove 'initial'");
  OrderedHmmParams p{detail::transition_from_json(j), emission_from_json(detail::get_field<json>(j, "emission"))};
  validate(p);
  return p;
}

using ModelSpec = std::variant<StandardHmmParams, OrderedHmmParams>;

// Explicit "model" key wins; otherwise the presence of "initial" marks a
// standard model.
inline ModelSpec model_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("model file must hold a JSON object");
  if (j.contains("model")) {
    const auto kind = detail::get_field<std::string>(j, "model");
    if (kind == "standard") return standard_from_json(j);
    if (kind == "ordered") return ordered_from_json(j);
    throw ValidationError("unknown model kind '" + kind + "'");
  }
  if (j.contains("initial")) return standard_from_json(j);
  return ordered_from_json(j);
}

inline json to_json(const Permutation& p) { return p.one_based(); }

inline Permutation permutation_from_json(const json& j) {
  try {
    return Permutation::from_one_based(j.get<std::vector<int>>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("permutation: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Priors
// ---------------------------------------------------------------------------

inline json to_json(const DiscretePrior& p) {
  json out = json::array();
  for (const auto& a : p.atoms) out.push_back({{"params", to_json(a.params)}, {"weight", a.weight}});
  return out;
}

inline json to_json(const OrderedPrior& p) {
  json out = json::array();
  for (const auto& a : p.atoms) out.push_back({{"params", to_json(a.params)}, {"weight", a.weight}});
  return out;
}

inline DiscretePrior prior_from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("prior file must hold a JSON list of {params, weight}");
  DiscretePrior p;
  for (const auto& item : j)
    p.atoms.push_back({standard_from_json(detail::get_field<json>(item, "params")), detail::get_field<double>(item, "weight")});
  if (p.atoms.empty()) throw ValidationError("prior has no atoms");
  return p;
}

inline json to_json(const ConjugatePrior& p) {
  json rows = json::array();
  for (Eigen::Index k = 0; k < p.dirichlet_rows.rows(); ++k) rows.push_back(row_of(p.dirichlet_rows, k));
  json e;
  if (const auto* d = std::get_if<DirichletEmissionPrior>(&p.emission))
    e = {{"type", "categorical"}, {"dirichlet", d->concentration}};
  else {
    const auto& n = std::get<NormalEmissionPrior>(p.emission);
    e = {{"type", "gaussian"}, {"mean", n.mean}, {"variance", n.variance}, {"obs_variance", n.obs_variance}};
  }
  return {{"K", p.states()}, {"dirichlet_rows", rows}, {"emission", e}, {"initial", to_json(p.initial)}};
}

// Missing "initial" means a uniform fixed initial law (fully conjugate).
inline ConjugatePrior conjugate_prior_from_json(const json& j) {
  ConjugatePrior p;
  const int k = detail::get_field<int>(j, "K");
  const auto rows = detail::get_field<std::vector<std::vector<double>>>(j, "dirichlet_rows");
  if (static_cast<int>(rows.size()) != k) throw DimensionMismatch("'dirichlet_rows' must have K rows");
  p.dirichlet_rows.resize(k, k);
  for (int a = 0; a < k; ++a) {
    if (static_cast<int>(rows[a].size()) != k) throw DimensionMismatch("'dirichlet_rows' must be K x K");
    for (int b = 0; b < k; ++b) p.dirichlet_rows(a, b) = rows[a][b];
  }
  const json e = detail::get_field<json>(j, "emission");
  const auto type = detail::get_field<std::string>(e, "type");
  if (type == "categorical")
    p.emission = DirichletEmissionPrior{detail::get_field<std::vector<std::vector<double>>>(e, "dirichlet")};
  else if (type == "gaussian")
    p.emission = NormalEmissionPrior{detail::get_field<double>(e, "mean"), detail::get_field<double>(e, "variance"),
                                     detail::get_field<double>(e, "obs_variance")};
  else
    throw ValidationError("unknown emission prior type '" + type + "'");
  if (j.contains("initial"))
    p.initial = initial_from_json(j.at("initial"));
  else
    p = make_uniform_fixed_prior(std::move(p));
  validate(p);
  return p;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace detail

// Observations CSV with header `t,y`; categorical symbols are 1-based in the file.
inline Observations read_observations(std::istream& in, bool categorical) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("observation file is empty");
  const auto header = detail::split(line);
  if (header.size() != 2 || header[0] != "t" || header[1] != "y")
    throw ValidationError("observation file must start with header 't,y'");
  Symbols sym;
  Reals real;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split(line);
    if (f.size() != 2) throw ValidationError("observation row " + std::to_string(row) + ": expected two fields");
    std::size_t t = 0;
    if (!detail::parse_number(f[0], t) || t != row)
      throw ValidationError("observation row " + std::to_string(row) + ": t must count up from 0");
    if (categorical) {
      int v = 0;
      if (!detail::parse_number(f[1], v))
        throw DimensionMismatch("observation row " + std::to_string(row) + ": categorical data must be integer symbols");
      if (v < 1) throw DimensionMismatch("categorical symbols are 1-based");
      sym.push_back(v - 1);
    } else {
      double v = 0.0;
      if (!detail::parse_number(f[1], v))
        throw DimensionMismatch("observation row " + std::to_string(row) + ": expected a real number");
      real.push_back(v);
    }
    ++row;
  }
  if (row == 0) throw ValidationError("observation file has no rows");
  if (categorical) return sym;
  return real;
}

inline Observations read_observations_file(const std::string& path, bool categorical) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  return read_observations(in, categorical);
}

inline std::string observations_csv(const Observations& y) {
  std::ostringstream out;
  out << "t,y\n";
  if (const auto* s = std::get_if<Symbols>(&y)) {
    for (std::size_t t = 0; t < s->size(); ++t) out << t << ',' << (*s)[t] + 1 << '\n';
  } else {
    const auto& r = std::get<Reals>(y);
    for (std::size_t t = 0; t < r.size(); ++t) out << t << ',' << format_double(r[t]) << '\n';
  }
  return out.str();
}

inline std::string states_csv(const StatePath& s) {
  std::ostringstream out;
  out << "t,s\n";
  for (std::size_t t = 0; t < s.size(); ++t) out << t << ',' << s[t] + 1 << '\n';
  return out.str();
}

inline std::string states_csv(const OrderedPath& p) {
  std::ostringstream out;
  out << "t,z,m\n";
  for (std::size_t t = 0; t < p.size(); ++t) out << t << ',' << p.z[t] + 1 << ',' << p.m[t] + 1 << '\n';
  return out.str();
}

// One row per retained draw (the first row is the initialization).
inline std::string trace_csv(const GibbsTrace& trace) {
  std::ostringstream out;
  const auto cols = parameter_columns(trace);
  out << "iter";
  for (const auto& c : cols) out << ',' << c.first;
  out << ",log_complete";
  const std::size_t len = trace.draws.empty() ? 0 : trace.draws.front().path.size();
  const bool ordered = trace.coordinates == Coordinates::Ordered;
  for (std::size_t t = 0; t < len; ++t) out << (ordered ? ",z_" : ",s_") << t;
  if (ordered)
    for (std::size_t t = 0; t < len; ++t) out << ",m_" << t;
  out << '\n';
  for (std::size_t i = 0; i < trace.draws.size(); ++i) {
    const auto& d = trace.draws[i];
    out << d.iteration;
    for (const auto& c : cols) out << ',' << format_double(c.second[i]);
    out << ',' << format_double(d.log_complete);
    for (int v : d.path) out << ',' << v + 1;
    if (ordered)
      for (int v : d.m) out << ',' << v + 1;
    out << '\n';
  }
  return out.str();
}

inline json to_json(const ChainSummary& s) {
  return {{"n", s.n}, {"mean", s.mean}, {"sd", s.sd}, {"mcse", s.mcse}, {"ess", s.ess}};
}

inline json summary_json(const GibbsTrace& trace) {
  const TraceSummary s = summarize(trace);
  json cols = json::object();
  for (const auto& [name, c] : s.columns) cols[name] = to_json(c);
  return {{"coordinates", trace.coordinates == Coordinates::Standard ? "standard" : "ordered"},
          {"seed", trace.seed},
          {"iterations", trace.iterations},
          {"burnin", trace.burnin},
          {"thin", trace.thin},
          {"retained_draws", trace.draws.size() - 1},
          {"mh_proposals", trace.mh_proposals},
          {"mh_accepts", trace.mh_accepts},
          {"columns", cols},
          {"log_complete", to_json(s.log_complete)}};
}

// ---------------------------------------------------------------------------
// Audit report
// ---------------------------------------------------------------------------

inline json to_json(const EquivalenceReport& r) {
  json atoms = json::array();
  for (std::size_t j = 0; j < r.per_atom.size(); ++j) {
    const auto& a = r.per_atom[j];
    atoms.push_back({{"atom", j + 1},
                     {"params", to_json(a.params)},
                     {"prior_weight", a.prior_weight},
                     {"pushforward_weight", a.pushforward_weight},
                     {"loglik_standard", a.loglik_standard},
                     {"loglik_ordered", a.loglik_ordered},
                     {"ordered_relabel_spread", a.ordered_relabel_spread},
                     {"posterior_standard_pushed", a.posterior_standard_pushed},
                     {"posterior_ordered_plain", a.posterior_ordered_plain},
                     {"posterior_ordered_pushforward", a.posterior_ordered_pushforward},
                     {"y0_mixture", a.y0_mixture},
                     {"y0_component", a.y0_component}});
  }
  return {
      {"K", r.states},
      {"T", r.horizon},
      {"evidence_standard", r.evidence_standard},
      {"evidence_ordered_plain", r.evidence_ordered_plain},
      {"evidence_ordered_pushforward", r.evidence_ordered_pushforward},
      {"pushforward_mass", r.pushforward_mass},
      {"pushforward_prior", to_json(r.pushforward_prior)},
      {"tv_prior", r.tv_prior},
      {"tv_posterior_plain", r.tv_posterior_plain},
      {"tv_posterior_pushforward", r.tv_posterior_pushforward},
      {"conditional_law", {{"max_error", r.conditional_law.max_error}, {"cells", r.conditional_law.cells}}},
      {"y0_pushforward_max_error", r.y0_pushforward_max_error},
      {"witnesses",
       {{"likelihood_gap",
         {{"atom", r.likelihood_witness.atom + 1},
          {"loglik_standard", r.likelihood_witness.loglik_standard},
          {"loglik_ordered", r.likelihood_witness.loglik_ordered},
          {"gap", r.likelihood_witness.gap}}},
        {"ordered_relabeling",
         {{"atom", r.relabel_witness.atom + 1},
          {"relabeling", to_json(r.relabel_witness.relabeling)},
          {"loglik_identity", r.relabel_witness.loglik_identity},
          {"loglik_relabeled", r.relabel_witness.loglik_relabeled},
          {"spread", r.relabel_witness.spread}}},
        {"y0_law",
         {{"atom", r.y0_witness.atom + 1},
          {"mixture", r.y0_witness.mixture},
          {"component", r.y0_witness.component},
          {"gap", r.y0_witness.gap}}}}},
      {"interpretation",
       {{"tv_prior", "distance between the prior on parameter values and the law of the relabeled parameter"},
        {"tv_posterior_plain", "relabeled standard posterior vs ordered posterior using the prior unchanged"},
        {"tv_posterior_pushforward", "relabeled standard posterior vs ordered posterior using the pushforward prior"}}},
      {"per_atom", atoms}};
}

inline std::string per_atom_csv(const EquivalenceReport& r) {
  std::ostringstream out;
  out << "atom,prior_weight,pushforward_weight,loglik_standard,loglik_ordered,ordered_relabel_spread,"
         "posterior_standard_pushed,posterior_ordered_plain,posterior_ordered_pushforward,y0_mixture,y0_component\n";
  for (std::size_t j = 0; j < r.per_atom.size(); ++j) {
    const auto& a = r.per_atom[j];
    out << j + 1;
    for (double v : {a.prior_weight, a.pushforward_weight, a.loglik_standard, a.loglik_ordered, a.ordered_relabel_spread,
                     a.posterior_standard_pushed, a.posterior_ordered_plain, a.posterior_ordered_pushforward,
                     a.y0_mixture, a.y0_component})
      out << ',' << format_double(v);
    out << '\n';
  }
  return out.str();
}

}  // namespace ordhmm::io
