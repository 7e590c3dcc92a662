#pragma once

// Brute-force reference implementations used only by tests.

#include "cylneat/region.hpp"
#include "cylneat/setca.hpp"

#include <set>
#include <vector>

namespace oracle {

struct BitsLess {
    bool operator()(const cylneat::Bits& a, const cylneat::Bits& b) const { return a < b; }
};

// Element-wise worklist closure under meet, complement and every c_i.
inline std::set<cylneat::Bits, BitsLess> closure(const cylneat::BasePtr& base, unsigned dim,
                                                 const std::vector<cylneat::Region>& gens) {
    using namespace cylneat;
    std::vector<Region> items;
    std::set<Bits, BitsLess> seen;
    auto push = [&](const Region& r) {
        if (seen.insert(r.bits()).second) items.push_back(r);
    };
    push(Region(base, dim));
    push(full_space(base, dim));
    for (unsigned i = 0; i < dim; ++i)
        for (unsigned j = 0; j < dim; ++j) push(diagonal(base, dim, i, j));
    for (const auto& g : gens) push(g);
    for (std::size_t done = 0; done < items.size(); ++done) {
        const Region x = items[done];
        push(~x);
        for (unsigned i = 0; i < dim; ++i) push(cylindrify(x, i));
        for (std::size_t k = 0; k <= done; ++k) push(x & items[k]);
    }
    return seen;
}

inline std::set<cylneat::Bits, BitsLess> carrier_of(const cylneat::SetCA& a) {
    std::set<cylneat::Bits, BitsLess> out;
    const std::size_t u = a.carrier_size(1u << 20);
    for (std::uint64_t m = 0; m < u; ++m) out.insert(a.region(a.from_mask(m)).bits());
    return out;
}

} // namespace oracle
