#pragma once

// JSON encodings. Complex numbers are [re, im] pairs; doubles are written in
// shortest round-trip decimal form, so every encoding here round-trips
// bit-exactly.

#include <filesystem>

#include "derivstab/algebra.hpp"
#include "derivstab/control.hpp"
#include "derivstab/maps.hpp"
#include "json.hpp"

namespace derivstab {

using Json = nlohmann::ordered_json;

Json to_json(Scalar z);
Json to_json(std::span<const Scalar> v);
Json to_json(const CMatrix& m);

Scalar scalar_from_json(const Json& j);
CVector vector_from_json(const Json& j);
CMatrix matrix_from_json(const Json& j);

/// {dim, structure, unit, norm_kind, weights?, involution}
Json to_json(const AlgebraDescriptor& desc);
AlgebraDescriptor algebra_descriptor_from_json(const Json& j);
AlgebraDescriptor load_algebra_descriptor(const std::filesystem::path& path);

/// {kind, epsilon | beta + p | slot + inner, seed, scale_mode}
Json to_json(const PerturbationSpec& spec);
PerturbationSpec perturbation_from_json(const Json& j);

/// {kind: "constant" | "power" | "separable", epsilon | beta + p | slots}
Json to_json(const ControlFunction& cf);
ControlFunction control_from_json(const Json& j);

/// Typed accessors that throw ConfigError naming `context` on a mismatch.
const Json& json_field(const Json& j, const char* key, const std::string& context);
double json_number(const Json& j, const std::string& context);
std::string json_string(const Json& j, const std::string& context);
std::uint64_t json_unsigned(const Json& j, const std::string& context);

/// Rejects keys of `j` outside `allowed` with ConfigError naming `context`.
void require_known_keys(const Json& j, std::initializer_list<const char*> allowed,
                        const std::string& context);

}  // namespace derivstab
