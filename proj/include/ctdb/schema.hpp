#pragma once

// Validation of JSON documents against a JSON Schema subset: type, enum,
// const, required, properties, additionalProperties, minProperties, items,
// minItems, maxItems, minimum, maximum, exclusiveMinimum, exclusiveMaximum,
// minLength, maxLength, pattern and local "#/$defs/..." references.
// Unsupported keywords are rejected so a schema cannot silently pass.

#include <string>
#include <vector>

#include "json.hpp"

namespace ctdb {

/// Error messages of the form "<json pointer>: <reason>"; empty when valid.
std::vector<std::string> validate_json(const nlohmann::json& instance, const nlohmann::json& schema);

/// The per-sample metadata schema shipped with the library.
const nlohmann::json& metadata_schema();

}  // namespace ctdb
