#include "derivstab/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unistd.h>

#include "derivstab/errors.hpp"

namespace derivstab {

const std::vector<CheckInfo>& list_checks() {
  static const std::vector<CheckInfo> checks{
      {"master_inequality", "sampled defect of f and g against the control function"},
      {"stability_bound", "||f(a) - mu(a)|| against the control-series bound"},
      {"generalized_derivation", "mu(cd) = c mu(d) + delta(c) d on basis pairs"},
      {"leibniz", "delta(cd) = c delta(d) + delta(c) d on basis pairs"},
      {"star_preservation", "mu(a*) = mu(a)* on the basis, with the unitary hypothesis"},
      {"superstability", "dyadic homogeneity under a constant control and the growth ladder"},
  };
  return checks;
}

namespace {

std::size_t element_count(const Json& j, const std::string& ctx, std::size_t lo, std::size_t hi) {
  const std::uint64_t v = json_unsigned(j, ctx);
  if (v < lo || v > hi)
    throw InvariantViolation(ctx + " must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<std::size_t>(v);
}

AlgebraSource parse_algebra(const Json& j, const std::filesystem::path& base_dir) {
  const std::string ctx = "algebra";
  const std::string kind = json_string(json_field(j, "kind", ctx), ctx + ".kind");
  AlgebraSource out;
  if (kind == "matrix") {
    require_known_keys(j, {"kind", "n"}, ctx);
    out.kind = AlgebraSource::Kind::Matrix;
    out.n = element_count(json_field(j, "n", ctx), ctx + ".n", 1, kMaxMatrixOrder);
  } else if (kind == "structure_constants") {
    require_known_keys(j, {"kind", "file"}, ctx);
    out.kind = AlgebraSource::Kind::StructureConstants;
    out.file = base_dir / json_string(json_field(j, "file", ctx), ctx + ".file");
  } else {
    throw ConfigError(ctx + ".kind must be 'matrix' or 'structure_constants'");
  }
  return out;
}

ExactMapConfig parse_exact_map(const Json& j) {
  const std::string ctx = "exact_map";
  const std::string kind = json_string(json_field(j, "kind", ctx), ctx + ".kind");
  ExactMapConfig out;
  if (kind == "inner") {
    require_known_keys(j, {"kind", "x", "y"}, ctx);
    out.kind = ExactMapConfig::Kind::Inner;
    out.x = vector_from_json(json_field(j, "x", ctx));
    out.y = vector_from_json(json_field(j, "y", ctx));
  } else if (kind == "right_multiplier") {
    require_known_keys(j, {"kind", "z"}, ctx);
    out.kind = ExactMapConfig::Kind::RightMultiplier;
    out.z = vector_from_json(json_field(j, "z", ctx));
  } else if (kind == "zero") {
    require_known_keys(j, {"kind"}, ctx);
  } else {
    throw ConfigError(ctx + ".kind must be inner, right_multiplier or zero");
  }
  return out;
}

LambdaSet parse_lambda_set(const Json& j) {
  const std::string ctx = "lambda_set";
  const std::string kind = json_string(json_field(j, "kind", ctx), ctx + ".kind");
  if (kind == "full_t") {
    require_known_keys(j, {"kind", "k"}, ctx);
    return LambdaSet::full_t(static_cast<int>(element_count(json_field(j, "k", ctx), ctx + ".k", 1, 1024)));
  }
  if (kind == "one_and_i") {
    require_known_keys(j, {"kind"}, ctx);
    return LambdaSet::one_and_i();
  }
  throw ConfigError(ctx + ".kind must be 'full_t' or 'one_and_i'");
}

std::array<bool, 4> parse_slots(const Json& j, const std::string& ctx) {
  const std::string s = json_string(j, ctx);
  std::array<bool, 4> slots{};
  for (char ch : s) {
    const auto pos = std::string_view("abcd").find(ch);
    if (pos == std::string_view::npos || slots[pos])
      throw ConfigError(ctx + " must be distinct letters from 'abcd'");
    slots[pos] = true;
  }
  return slots;
}

std::vector<double> parse_ladder(const Json& j, const std::string& ctx) {
  if (!j.is_array() || j.empty()) throw ConfigError(ctx + " must be a non-empty array");
  std::vector<double> out;
  for (const auto& r : j) {
    const double v = json_number(r, ctx);
    if (!(v > 0.0) || !std::isfinite(v)) throw InvariantViolation(ctx + " entries must be positive");
    out.push_back(v);
  }
  return out;
}

}  // namespace

Scenario parse_scenario(const Json& doc, const std::filesystem::path& base_dir) {
  const std::string ctx = "scenario";
  require_known_keys(doc,
                     {"version", "name", "algebra", "bimodule", "exact_map", "f_perturbation",
                      "g_perturbation", "control", "N", "lambda_set", "checks", "seed", "output",
                      "samples", "superstability", "star"},
                     ctx);
  if (json_unsigned(json_field(doc, "version", ctx), ctx + ".version") != kScenarioVersion)
    throw ConfigError("unsupported scenario version; expected 1");

  Scenario s;
  s.source = doc;
  s.name = json_string(json_field(doc, "name", ctx), ctx + ".name");
  s.algebra = parse_algebra(json_field(doc, "algebra", ctx), base_dir);
  if (const auto it = doc.find("bimodule"); it != doc.end() && json_string(*it, ctx + ".bimodule") != "self")
    throw ConfigError(ctx + ".bimodule must be 'self'");
  s.exact_map = parse_exact_map(json_field(doc, "exact_map", ctx));
  if (const auto it = doc.find("f_perturbation"); it != doc.end()) s.f_perturbation = perturbation_from_json(*it);
  if (const auto it = doc.find("g_perturbation"); it != doc.end()) s.g_perturbation = perturbation_from_json(*it);
  s.control = control_from_json(json_field(doc, "control", ctx));
  if (const auto it = doc.find("N"); it != doc.end())
    s.depth = static_cast<int>(element_count(*it, ctx + ".N", 1, kMaxLog2Scale));
  if (const auto it = doc.find("lambda_set"); it != doc.end()) s.lambda_set = parse_lambda_set(*it);

  const Json& checks = json_field(doc, "checks", ctx);
  if (!checks.is_array() || checks.empty()) throw ConfigError(ctx + ".checks must be a non-empty array");
  for (const auto& c : checks) {
    const std::string name = json_string(c, ctx + ".checks");
    const auto& known = list_checks();
    if (std::none_of(known.begin(), known.end(), [&](const CheckInfo& k) { return name == k.name; }))
      throw ConfigError("unknown check '" + name + "'");
    if (std::find(s.checks.begin(), s.checks.end(), name) != s.checks.end())
      throw ConfigError("check '" + name + "' is listed twice");
    s.checks.push_back(name);
  }

  s.seed = json_unsigned(json_field(doc, "seed", ctx), ctx + ".seed");
  if (const auto it = doc.find("output"); it != doc.end()) s.output = json_string(*it, ctx + ".output");

  if (const auto it = doc.find("samples"); it != doc.end()) {
    const std::string sctx = "samples";
    require_known_keys(*it, {"count", "ladder", "master_slots"}, sctx);
    if (const auto c = it->find("count"); c != it->end())
      s.samples.count = element_count(*c, sctx + ".count", 1, 1'000'000);
    if (const auto l = it->find("ladder"); l != it->end()) {
      if (!l->is_boolean()) throw ConfigError(sctx + ".ladder must be true or false");
      s.samples.norm_ladder = l->get<bool>();
    }
    if (const auto m = it->find("master_slots"); m != it->end())
      s.samples.slots = parse_slots(*m, sctx + ".master_slots");
  }
  if (const auto it = doc.find("superstability"); it != doc.end()) {
    const std::string sctx = "superstability";
    require_known_keys(*it, {"m_max", "n_max", "count", "growth_samples", "ladder"}, sctx);
    auto& cfg = s.superstability;
    if (const auto v = it->find("m_max"); v != it->end())
      cfg.m_max = static_cast<int>(element_count(*v, sctx + ".m_max", 0, kMaxLog2Scale));
    if (const auto v = it->find("n_max"); v != it->end())
      cfg.n_max = static_cast<int>(element_count(*v, sctx + ".n_max", 0, 1000));
    if (const auto v = it->find("count"); v != it->end())
      cfg.samples.count = element_count(*v, sctx + ".count", 1, 1'000'000);
    if (const auto v = it->find("growth_samples"); v != it->end())
      cfg.growth_samples = element_count(*v, sctx + ".growth_samples", 1, 1'000'000);
    if (const auto v = it->find("ladder"); v != it->end()) cfg.ladder = parse_ladder(*v, sctx + ".ladder");
  }
  if (const auto it = doc.find("star"); it != doc.end()) {
    const std::string sctx = "star";
    require_known_keys(*it, {"unitaries", "max_log2_scale"}, sctx);
    if (const auto v = it->find("unitaries"); v != it->end())
      s.star.unitaries = element_count(*v, sctx + ".unitaries", 1, 100'000);
    if (const auto v = it->find("max_log2_scale"); v != it->end())
      s.star.max_log2_scale = static_cast<int>(element_count(*v, sctx + ".max_log2_scale", 0, kMaxLog2Scale));
  }
  override_seed(s, s.seed);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_scenario(doc, path.parent_path());
}

void override_seed(Scenario& scenario, std::uint64_t seed) {
  scenario.seed = seed;
  scenario.samples.seed = seed;
  scenario.superstability.samples.seed = seed;
  scenario.star.seed = seed;
  scenario.source["seed"] = seed;
}

BuiltScenario build_scenario(const Scenario& s) {
  std::shared_ptr<const Algebra> algebra =
      s.algebra.kind == AlgebraSource::Kind::Matrix
          ? make_matrix_algebra(s.algebra.n)
          : Algebra::create(load_algebra_descriptor(s.algebra.file));
  auto bimodule = make_self_bimodule(algebra);

  GeneralizedDerivationPair exact = zero_pair(bimodule);
  switch (s.exact_map.kind) {
    case ExactMapConfig::Kind::Inner:
      exact = inner_generalized(bimodule->element(s.exact_map.x), bimodule->element(s.exact_map.y));
      break;
    case ExactMapConfig::Kind::RightMultiplier:
      exact = right_multiplier(bimodule, algebra->element(s.exact_map.z));
      break;
    case ExactMapConfig::Kind::Zero:
      break;
  }
  exact.validate();
  s.f_perturbation.validate(algebra->dim());
  s.g_perturbation.validate(algebra->dim());

  const bool needs_star =
      std::find(s.checks.begin(), s.checks.end(), "star_preservation") != s.checks.end();
  if (needs_star && !algebra->has_involution())
    throw InvariantViolation("star_preservation needs an algebra with involution");
  const bool needs_constant =
      std::find(s.checks.begin(), s.checks.end(), "superstability") != s.checks.end();
  if (needs_constant && !s.control.is_constant())
    throw InvariantViolation("superstability needs a constant control");

  const int depth = s.depth.value_or(default_depth(s.control));
  return {algebra, bimodule, ApproximateMapPair{std::move(exact), s.f_perturbation, s.g_perturbation},
          s.control, depth};
}

RunResult run_scenario(const Scenario& s) {
  const auto start = std::chrono::steady_clock::now();
  const BuiltScenario b = build_scenario(s);
  const AssembledMap mu = assemble_mu(b.pair, b.control, b.depth);
  const LinearMap delta = extract_delta_algebraic(mu.map);

  // delta through the limit of g, compared column by column with mu(a) - a mu(1).
  const std::size_t d = b.algebra->dim();
  const double gap_one = mu.gap_at(b.algebra->unit());
  CMatrix delta_limit(b.bimodule->dim(), d);
  double agreement = 0.0;
  double agreement_bound = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const Element ej = b.algebra->basis(j);
    const ExtrapolationTrace t = extract_delta_limit(b.pair, b.control, ej, b.depth);
    delta_limit.set_column(j, t.limit.coords());
    agreement = std::max(agreement, norm(t.limit - delta(ej)));
    agreement_bound =
        std::max(agreement_bound, mu.column_gaps[j] + norm(ej) * gap_one + t.certified_gap);
  }
  agreement_bound += kIdentityTolerance;

  const CertificateThresholds thresholds = certificate_thresholds(mu);
  Json checks = Json::array();
  bool passed = true;
  for (const auto& name : s.checks) {
    ResidualReport r;
    if (name == "master_inequality") {
      r = residual_master_inequality(b.pair, b.control, s.samples, s.lambda_set);
    } else if (name == "stability_bound") {
      r = certify_stability_bound(b.pair, b.control, mu, s.samples);
    } else if (name == "generalized_derivation") {
      r = check_generalized_derivation(mu.map, delta, thresholds.generalized_derivation);
    } else if (name == "leibniz") {
      r = check_leibniz(delta, thresholds.leibniz);
    } else if (name == "star_preservation") {
      r = check_star_preservation(b.pair, b.control, mu.map, s.star, b.depth);
    } else {
      r = superstability_probe(b.pair, b.control, s.superstability);
    }
    passed = passed && r.passed;
    checks.push_back(to_json(r));
  }

  Json report;
  report["schema"] = kReportSchema;
  report["version"] = DERIVSTAB_VERSION;
  report["scenario"] = s.source;
  report["depth"] = b.depth;
  report["mu"] = to_json(mu.map.matrix());
  report["delta"] = to_json(delta.matrix());
  report["delta_limit"] = to_json(delta_limit);
  Json certificates;
  certificates["column_gaps"] = mu.column_gaps;
  certificates["j_commutation_residual"] = mu.j_commutation_residual;
  certificates["delta_route_difference"] = agreement;
  certificates["delta_route_bound"] = agreement_bound;
  certificates["delta_routes_agree"] = agreement <= agreement_bound;
  report["certificates"] = std::move(certificates);
  report["checks"] = std::move(checks);
  report["passed"] = passed;

  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return {std::move(report), passed, elapsed.count()};
}

namespace {

std::string format_number(double v) {
  std::ostringstream out;
  out << std::setprecision(3) << std::scientific << v;
  return out.str();
}

}  // namespace

std::string render_report(const Json& report) {
  const std::string ctx = "report";
  if (json_unsigned(json_field(report, "schema", ctx), ctx + ".schema") != kReportSchema)
    throw ConfigError("unsupported report schema; expected 1");
  std::ostringstream out;
  const Json& scenario = json_field(report, "scenario", ctx);
  out << "scenario " << json_string(json_field(scenario, "name", ctx), ctx + ".scenario.name")
      << "  (depth N = " << json_unsigned(json_field(report, "depth", ctx), ctx + ".depth") << ")\n\n";
  out << std::left << std::setw(24) << "check" << std::setw(8) << "status" << std::setw(12) << "residual"
      << std::setw(12) << "threshold" << "samples\n";
  for (const auto& c : json_field(report, "checks", ctx)) {
    const double residual = c.at("max_residual").is_number() ? c.at("max_residual").get<double>() : 0.0;
    out << std::setw(24) << c.at("check").get<std::string>() << std::setw(8)
        << (c.at("passed").get<bool>() ? "PASS" : "FAIL") << std::setw(12) << format_number(residual)
        << std::setw(12) << format_number(c.at("threshold").get<double>()) << c.at("samples").get<std::size_t>()
        << '\n';
  }
  for (const auto& c : report.at("checks")) {
    if (c.at("check") != "stability_bound") continue;
    const Json& m = c.at("metrics");
    out << "\nmax deviation ||f(a) - mu(a)|| " << format_number(m.at("max_deviation").get<double>())
        << " against bound " << format_number(m.at("bound_at_max_deviation").get<double>())
        << "; worst deviation / bound " << format_number(m.at("max_deviation_to_bound").get<double>()) << '\n';
  }
  const Json& cert = json_field(report, "certificates", ctx);
  out << "\nJ-commutation residual " << format_number(cert.at("j_commutation_residual").get<double>())
      << ", delta routes differ by " << format_number(cert.at("delta_route_difference").get<double>())
      << " (bound " << format_number(cert.at("delta_route_bound").get<double>()) << ")\n";
  out << "\noverall " << (json_field(report, "passed", ctx).get<bool>() ? "PASS" : "FAIL") << '\n';
  return out.str();
}

void write_atomically(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    out.close();
    if (!out) {
      std::filesystem::remove(tmp);
      throw Error("failed writing " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace derivstab
