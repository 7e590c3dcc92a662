#pragma once

#include "cylneat/elementarity.hpp"
#include "cylneat/interpretation.hpp"
#include "cylneat/neat.hpp"
#include "cylneat/witness.hpp"

#include <json.hpp>

#include <string>

namespace cylneat {

using Json = nlohmann::json;  // std::map objects: keys come out sorted

inline constexpr int kFormatVersion = 1;

Json to_json(const Region& r);
Json to_json(const SetCA& a);
// Atomic description: atom count, c_i and diagonals as atom sets, plus a digest of the tables.
Json to_json(const AbstractCA& a);
Json to_json(const ColorFamily& cf);
ColorFamily family_from_json(const Json& j);
Json to_json(const AxiomReport& r);
Json to_json(const Verdict& v);
Json to_json(const ConditionCertificate& c);
Json to_json(const BuildStats& s);
Json to_json(const CheckResult& c);
Json to_json(const InterpretationCertificate& c);
// Strategy trees are written in full when they hold at most `max_entries` answers.
Json to_json(const GameCertificate& c, std::size_t max_entries = 200'000);
Json to_json(const SubAlgebra& s);
Json to_json(const ElementarityReport& r);
Json to_json(const DilationResult& r);

// Two-space indentation, sorted keys, trailing newline.
std::string canonical(const Json& j);

} // namespace cylneat
