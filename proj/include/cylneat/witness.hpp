#pragma once

#include "cylneat/region.hpp"
#include "cylneat/setca.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cylneat {

struct BlockedBase {
    unsigned n = 0;
    BasePtr base;
    std::vector<unsigned> block_of;
    std::vector<unsigned> layer_of;

    static BlockedBase uniform(unsigned n, std::size_t m);

    std::size_t size() const { return block_of.size(); }
    std::vector<std::uint32_t> block(unsigned i) const;
    unsigned depth() const;
};

struct ColorFamily {
    BlockedBase blocks;
    std::vector<Region> colors;

    std::size_t rcount() const { return colors.size(); }
};

struct SaturationParams {
    unsigned k = 1;
    unsigned depth = 1;
    std::size_t m0 = 2;
};

enum class Polarity { small, cosmall };

// A demanded color set; `allowed` is the set of colors that satisfy it (bit r = color r).
struct Demand {
    Polarity polarity = Polarity::small;
    std::uint32_t colorset = 0;
    std::uint32_t allowed = 0;
};

// small: every nonempty Y; cosmall: every nonempty X with R minus X nonempty.
std::vector<Demand> demand_options(unsigned rcount, Polarity p);
std::string demand_string(const Demand& d);

bool d_predicate(std::span<const std::uint32_t> s, const BlockedBase& bb);
std::vector<std::vector<unsigned>> s_indices(unsigned n, unsigned k);
Region eta_pos(const std::vector<unsigned>& x, const ColorFamily& cf);
Region eta_neg(const std::vector<unsigned>& x, const ColorFamily& cf);

struct Verdict {
    bool pass = true;
    bool checked = true;
    std::size_t items = 0;
    std::size_t failures = 0;
    std::vector<std::string> witnesses;
};

struct ConditionCertificate {
    Verdict transversal;   // (i)
    Verdict permutation;   // (ii)
    Verdict saturation;    // (iii) under the layer discipline
    Verdict disjoint;      // (iv)
    Verdict full_saturation; // j = 1 over all points, witnesses anywhere (informational)
    bool pass() const { return transversal.pass && permutation.pass && saturation.pass && disjoint.pass; }
};

ConditionCertificate check_conditions(const ColorFamily& cf, const SaturationParams& sp, bool full = true);

struct BuildOptions {
    std::uint64_t seed = 0;
    std::size_t node_budget = 50'000'000;
    // Saturation closure (n = 2 only): pad blocks and recolor unpinned tuples until j = 1
    // saturation holds over the whole base.
    bool closure = true;
    std::size_t closure_max_block = 64;
    std::size_t closure_iterations = 2'000'000;
};

struct BuildStats {
    std::size_t demands = 0;
    std::size_t met_in_layer = 0;
    std::size_t fresh_points = 0;
    std::size_t closure_points = 0;
    std::size_t closure_moves = 0;
    std::size_t closure_attempts = 0;
    std::string closure_status = "not run";
    std::vector<std::size_t> points_per_layer;
};

struct BuildResult {
    ColorFamily family;
    BuildStats stats;
};

BuildResult build_colored_structure(unsigned n, const SaturationParams& sp, unsigned rcount,
                                    const BuildOptions& opt = {});

Region p_region(const std::vector<unsigned>& u, unsigned r, const ColorFamily& cf);
Region one_u(const std::vector<unsigned>& u, const BlockedBase& bb);
std::vector<std::vector<unsigned>> permutations(unsigned n);
std::vector<std::vector<unsigned>> all_maps(unsigned n);

SetCA build_A(const ColorFamily& cf, std::size_t carrier_cap = kDefaultCarrierCap);
// The dilation is kept at atom level; the cap bounds its atom count.
SetCA build_dilation(const ColorFamily& cf, unsigned k, std::size_t atom_cap = 4096);

} // namespace cylneat
