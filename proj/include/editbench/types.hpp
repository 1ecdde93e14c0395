#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace editbench {

struct EntityRef {
    std::string id;
    std::string label;

    bool operator==(const EntityRef&) const = default;
};

struct PropertyRef {
    std::string id;
    std::string label;
    std::string description;

    bool operator==(const PropertyRef&) const = default;
};

enum class LiteralKind { Quantity, Time, Coordinate, String, Other };

std::string_view to_string(LiteralKind kind);
std::optional<LiteralKind> literal_kind_from_string(std::string_view name);

struct Literal {
    std::string raw;
    LiteralKind kind = LiteralKind::String;

    bool operator==(const Literal&) const = default;
};

using ObjectValue = std::variant<EntityRef, Literal>;

/// True for ids of the form one uppercase letter followed by one or more digits ("Q42", "P17").
bool is_entity_id(std::string_view id);

inline bool is_entity(const ObjectValue& v) { return std::holds_alternative<EntityRef>(v); }

/// Identity of an object value: the entity id, or "<kind>:<raw>" for literals.
std::string object_key(const ObjectValue& v);

/// Human-readable text of an object: entity label or literal raw text.
const std::string& object_text(const ObjectValue& v);

struct Triplet {
    EntityRef subject;
    PropertyRef relation;
    ObjectValue object;

    bool operator==(const Triplet&) const = default;

    /// Flagged when the subject label or an entity object's label is missing.
    bool unresolved() const;
};

/// Stable provenance id: "subject|relation|object_key".
std::string triplet_id(const Triplet& t);

/// (subject.id, relation.id) grouping key, joined with '|'.
std::string triplet_key(const Triplet& t);

}  // namespace editbench
