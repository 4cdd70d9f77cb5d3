#include "derivstab/serialization.hpp"

#include <cstdint>
#include <fstream>
#include <string>

#include "derivstab/errors.hpp"

namespace derivstab {

namespace {

const char* scale_mode_name(ScaleMode mode) {
  return mode == ScaleMode::ScaleInvariantDirection ? "invariant" : "sensitive";
}

}  // namespace

double json_number(const Json& j, const std::string& context) {
  if (!j.is_number()) throw ConfigError(context + ": expected a number");
  return j.get<double>();
}

const Json& json_field(const Json& j, const char* key, const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(context + ": missing key '" + key + "'");
  return *it;
}

std::string json_string(const Json& j, const std::string& context) {
  if (!j.is_string()) throw ConfigError(context + ": expected a string");
  return j.get<std::string>();
}

std::uint64_t json_unsigned(const Json& j, const std::string& context) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
    throw ConfigError(context + ": expected a non-negative integer");
  return j.get<std::uint64_t>();
}

void require_known_keys(const Json& j, std::initializer_list<const char*> allowed,
                        const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ConfigError(context + ": unknown key '" + key + "'");
  }
}

Json to_json(Scalar z) { return Json::array({z.real(), z.imag()}); }

Json to_json(std::span<const Scalar> v) {
  Json out = Json::array();
  for (const auto& z : v) out.push_back(to_json(z));
  return out;
}

Json to_json(const CMatrix& m) {
  Json out = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(to_json(m(r, c)));
    out.push_back(std::move(row));
  }
  return out;
}

Scalar scalar_from_json(const Json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) throw ConfigError("complex number must be [re, im]");
  return {json_number(j[0], "re"), json_number(j[1], "im")};
}

CVector vector_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("expected an array of [re, im] coordinates");
  CVector out;
  out.reserve(j.size());
  for (const auto& z : j) out.push_back(scalar_from_json(z));
  return out;
}

CMatrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw ConfigError("expected a matrix");
  CMatrix m(j.size(), j[0].size());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const CVector row = vector_from_json(j[r]);
    if (row.size() != m.cols()) throw ConfigError("matrix rows have different lengths");
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = row[c];
  }
  return m;
}

// ---------------------------------------------------------------- algebra

Json to_json(const AlgebraDescriptor& desc) {
  const std::size_t d = desc.dim;
  Json structure = Json::array();
  for (std::size_t i = 0; i < d; ++i) {
    Json plane = Json::array();
    for (std::size_t j = 0; j < d; ++j)
      plane.push_back(to_json(std::span<const Scalar>(desc.structure).subspan((i * d + j) * d, d)));
    structure.push_back(std::move(plane));
  }
  Json out;
  out["dim"] = d;
  out["structure"] = std::move(structure);
  out["unit"] = to_json(desc.unit);
  out["norm_kind"] = desc.norm_kind == NormKind::Spectral ? "spectral" : "weighted_l1";
  if (desc.norm_kind == NormKind::WeightedL1) out["weights"] = desc.weights;
  out["involution"] =
      desc.involution == Involution::ConjugateTranspose ? Json("conjugate_transpose") : Json(nullptr);
  return out;
}

AlgebraDescriptor algebra_descriptor_from_json(const Json& j) {
  const std::string ctx = "algebra descriptor";
  require_known_keys(j, {"dim", "structure", "unit", "norm_kind", "weights", "involution"}, ctx);
  AlgebraDescriptor desc;
  desc.dim = json_unsigned(json_field(j, "dim", ctx), ctx + ".dim");
  const std::size_t d = desc.dim;
  if (d == 0 || d > kMaxAlgebraDim) throw InvariantViolation("algebra dimension out of range");

  const Json& s = json_field(j, "structure", ctx);
  if (!s.is_array() || s.size() != d) throw ConfigError(ctx + ".structure must be a dim x dim x dim array");
  desc.structure.reserve(d * d * d);
  for (const auto& plane : s) {
    if (!plane.is_array() || plane.size() != d)
      throw ConfigError(ctx + ".structure must be a dim x dim x dim array");
    for (const auto& row : plane) {
      CVector v = vector_from_json(row);
      if (v.size() != d) throw ConfigError(ctx + ".structure must be a dim x dim x dim array");
      desc.structure.insert(desc.structure.end(), v.begin(), v.end());
    }
  }
  desc.unit = vector_from_json(json_field(j, "unit", ctx));

  const std::string kind = json_string(json_field(j, "norm_kind", ctx), ctx + ".norm_kind");
  if (kind == "spectral") {
    desc.norm_kind = NormKind::Spectral;
  } else if (kind == "weighted_l1") {
    desc.norm_kind = NormKind::WeightedL1;
    const Json& w = json_field(j, "weights", ctx);
    if (!w.is_array()) throw ConfigError(ctx + ".weights must be an array");
    for (const auto& x : w) desc.weights.push_back(json_number(x, ctx + ".weights"));
  } else {
    throw ConfigError(ctx + ".norm_kind must be 'spectral' or 'weighted_l1'");
  }

  const auto inv = j.find("involution");
  if (inv != j.end() && !inv->is_null()) {
    if (json_string(*inv, ctx + ".involution") != "conjugate_transpose")
      throw ConfigError(ctx + ".involution must be 'conjugate_transpose' or null");
    desc.involution = Involution::ConjugateTranspose;
  }
  return desc;
}

AlgebraDescriptor load_algebra_descriptor(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open algebra descriptor " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return algebra_descriptor_from_json(j);
}

// ---------------------------------------------------------------- perturbations

Json to_json(const PerturbationSpec& spec) {
  Json out;
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ZeroNoise>) {
          out["kind"] = "zero";
        } else if constexpr (std::is_same_v<K, BoundedNoise>) {
          out["kind"] = "bounded";
          out["epsilon"] = k.epsilon;
        } else if constexpr (std::is_same_v<K, PowerNoise>) {
          out["kind"] = "power";
          out["beta"] = k.beta;
          out["p"] = k.p;
        } else {
          out["kind"] = "slot_targeted";
          out["slot"] = k.slot;
          out["inner"] = to_json(*k.inner);
        }
      },
      spec.kind);
  if (!std::holds_alternative<ZeroNoise>(spec.kind) && !std::holds_alternative<SlotTargeted>(spec.kind)) {
    out["seed"] = spec.seed;
    out["scale_mode"] = scale_mode_name(spec.scale_mode);
  }
  return out;
}

PerturbationSpec perturbation_from_json(const Json& j) {
  const std::string ctx = "perturbation";
  const std::string kind = json_string(json_field(j, "kind", ctx), ctx + ".kind");
  PerturbationSpec spec;
  auto common = [&] {
    if (const auto it = j.find("seed"); it != j.end()) spec.seed = json_unsigned(*it, ctx + ".seed");
    if (const auto it = j.find("scale_mode"); it != j.end()) {
      const std::string mode = json_string(*it, ctx + ".scale_mode");
      if (mode == "invariant") {
        spec.scale_mode = ScaleMode::ScaleInvariantDirection;
      } else if (mode == "sensitive") {
        spec.scale_mode = ScaleMode::ScaleSensitiveDirection;
      } else {
        throw ConfigError(ctx + ".scale_mode must be 'invariant' or 'sensitive'");
      }
    }
  };
  if (kind == "zero") {
    require_known_keys(j, {"kind"}, ctx);
  } else if (kind == "bounded") {
    require_known_keys(j, {"kind", "epsilon", "seed", "scale_mode"}, ctx);
    spec.kind = BoundedNoise{json_number(json_field(j, "epsilon", ctx), ctx + ".epsilon")};
    common();
  } else if (kind == "power") {
    require_known_keys(j, {"kind", "beta", "p", "seed", "scale_mode"}, ctx);
    spec.kind = PowerNoise{json_number(json_field(j, "beta", ctx), ctx + ".beta"),
                           json_number(json_field(j, "p", ctx), ctx + ".p")};
    common();
  } else if (kind == "slot_targeted") {
    require_known_keys(j, {"kind", "slot", "inner"}, ctx);
    spec.kind = SlotTargeted{json_unsigned(json_field(j, "slot", ctx), ctx + ".slot"),
                             std::make_shared<const PerturbationSpec>(
                                 perturbation_from_json(json_field(j, "inner", ctx)))};
  } else {
    throw ConfigError(ctx + ".kind must be zero, bounded, power or slot_targeted");
  }
  return spec;
}

// ---------------------------------------------------------------- control

Json to_json(const ControlFunction& cf) {
  Json out;
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ConstantControl>) {
          out["kind"] = "constant";
          out["epsilon"] = k.epsilon;
        } else if constexpr (std::is_same_v<K, PowerControl>) {
          out["kind"] = "power";
          out["beta"] = k.beta;
          out["p"] = k.p;
        } else {
          out["kind"] = "separable";
          Json slots = Json::array();
          for (const auto& s : k.slots) slots.push_back(Json{{"beta", s.beta}, {"p", s.p}});
          out["slots"] = std::move(slots);
        }
      },
      cf.kind());
  return out;
}

ControlFunction control_from_json(const Json& j) {
  const std::string ctx = "control";
  const std::string kind = json_string(json_field(j, "kind", ctx), ctx + ".kind");
  if (kind == "constant") {
    require_known_keys(j, {"kind", "epsilon"}, ctx);
    return ControlFunction::constant(json_number(json_field(j, "epsilon", ctx), ctx + ".epsilon"));
  }
  if (kind == "power") {
    require_known_keys(j, {"kind", "beta", "p"}, ctx);
    return ControlFunction::power(json_number(json_field(j, "beta", ctx), ctx + ".beta"),
                                  json_number(json_field(j, "p", ctx), ctx + ".p"));
  }
  if (kind == "separable") {
    require_known_keys(j, {"kind", "slots"}, ctx);
    const Json& s = json_field(j, "slots", ctx);
    if (!s.is_array() || s.size() != 4) throw ConfigError(ctx + ".slots must list four {beta, p}");
    std::array<PowerTerm, 4> slots{};
    for (std::size_t i = 0; i < 4; ++i) {
      require_known_keys(s[i], {"beta", "p"}, ctx + ".slots");
      slots[i] = {json_number(json_field(s[i], "beta", ctx), ctx + ".beta"), json_number(json_field(s[i], "p", ctx), ctx + ".p")};
    }
    return ControlFunction::separable(slots);
  }
  throw ConfigError(ctx + ".kind must be constant, power or separable");
}

}  // namespace derivstab
