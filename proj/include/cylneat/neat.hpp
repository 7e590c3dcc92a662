#pragma once

#include "cylneat/setca.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cylneat {

// A candidate representation: one n-dimensional region per atom of b, in b.atoms() order.
struct DilationHint {
    std::vector<Region> atom_images;
};

DilationHint hint_from(const SetCA& a);

struct DilationWitness {
    unsigned n = 0, k = 0;
    std::size_t base_size = 0;
    std::optional<SetCA> D;
    bool degenerate = false;  // one-element b: the empty-unit algebra over a one-point base
    std::vector<Region> atom_images;
    // b element -> element (atom mask) of neat_reduct(D, n)
    std::vector<std::uint64_t> map;
    std::string source;  // "search" or "hint"
};

struct BaseSearchStats {
    std::size_t base_size = 0;
    std::size_t nodes = 0;
    std::size_t candidates = 0;         // complete labellings reaching the neat-reduct test
    std::size_t rejected = 0;           // of those, Nr_n D larger than b
    bool exhausted = false;             // false: the node budget ran out first
};

enum class DilationOutcome { witness, refutation, inconclusive };
std::string to_string(DilationOutcome o);

struct DilationResult {
    DilationOutcome outcome = DilationOutcome::inconclusive;
    std::optional<DilationWitness> witness;
    std::string digest;
    unsigned n = 0, k = 0;
    std::size_t max_base = 0;
    std::vector<BaseSearchStats> per_base;
};

struct DilationOptions {
    std::size_t node_budget = 2'000'000;  // per base size
    std::vector<DilationHint> hints;
};

DilationResult dilation_search(const AbstractCA& b, unsigned n, unsigned k, std::size_t max_base,
                               const DilationOptions& opt = {});
bool verify_dilation_witness(const AbstractCA& b, const DilationWitness& w, std::string* why = nullptr);

} // namespace cylneat
