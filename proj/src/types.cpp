#include "editbench/types.hpp"

#include <array>

namespace editbench {

namespace {
constexpr std::array<std::pair<LiteralKind, std::string_view>, 5> kLiteralNames{{
    {LiteralKind::Quantity, "quantity"},
    {LiteralKind::Time, "time"},
    {LiteralKind::Coordinate, "coordinate"},
    {LiteralKind::String, "string"},
    {LiteralKind::Other, "other"},
}};
}  // namespace

std::string_view to_string(LiteralKind kind) {
    for (const auto& [k, name] : kLiteralNames)
        if (k == kind) return name;
    return "other";
}

std::optional<LiteralKind> literal_kind_from_string(std::string_view name) {
    for (const auto& [k, n] : kLiteralNames)
        if (n == name) return k;
    return std::nullopt;
}

bool is_entity_id(std::string_view id) {
    if (id.size() < 2 || id[0] < 'A' || id[0] > 'Z') return false;
    for (std::size_t i = 1; i < id.size(); ++i)
        if (id[i] < '0' || id[i] > '9') return false;
    return true;
}

std::string object_key(const ObjectValue& v) {
    if (const auto* e = std::get_if<EntityRef>(&v)) return e->id;
    const auto& lit = std::get<Literal>(v);
    std::string key{to_string(lit.kind)};
    key += ':';
    key += lit.raw;
    return key;
}

const std::string& object_text(const ObjectValue& v) {
    if (const auto* e = std::get_if<EntityRef>(&v)) return e->label;
    return std::get<Literal>(v).raw;
}

bool Triplet::unresolved() const {
    if (subject.label.empty()) return true;
    if (const auto* e = std::get_if<EntityRef>(&object)) return e->label.empty();
    return false;
}

std::string triplet_id(const Triplet& t) {
    return t.subject.id + '|' + t.relation.id + '|' + object_key(t.object);
}

std::string triplet_key(const Triplet& t) { return t.subject.id + '|' + t.relation.id; }

}  // namespace editbench
