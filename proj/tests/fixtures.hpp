#pragma once

#include "cylneat/elementarity.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace fixture {

using namespace cylneat;

// Powerset Boolean algebra on k atoms; element index == subset mask.
inline AbstractCA powerset_ba(unsigned k) {
    AbstractCA a;
    a.size = std::size_t{1} << k;
    a.meet_table.resize(a.size * a.size);
    a.compl_table.resize(a.size);
    for (std::uint32_t x = 0; x < a.size; ++x) {
        a.compl_table[x] = static_cast<std::uint32_t>((a.size - 1) & ~x);
        for (std::uint32_t y = 0; y < a.size; ++y) a.meet_table[x * a.size + y] = x & y;
    }
    a.zero = 0;
    a.one = static_cast<std::uint32_t>(a.size - 1);
    return a;
}

// BA with constants 0, 1 and the extra named constants, relabelled by perm (old -> new).
inline RelStructure ba_structure(unsigned k, const std::vector<std::uint32_t>& extra,
                                 const std::vector<std::uint32_t>& perm = {}) {
    const auto a = powerset_ba(k);
    std::vector<std::pair<std::string, std::uint32_t>> cs{{"0", a.zero}, {"1", a.one}};
    for (std::size_t i = 0; i < extra.size(); ++i) cs.emplace_back("c" + std::to_string(i), extra[i]);
    RelStructure s = encode_ba(a, cs);
    if (perm.empty()) return s;
    RelStructure t = s;
    for (std::uint32_t x = 0; x < s.size; ++x) {
        t.functions[1].table[perm[x]] = perm[s.functions[1].table[x]];
        for (std::uint32_t y = 0; y < s.size; ++y)
            t.functions[0].table[perm[x] * s.size + perm[y]] = perm[s.functions[0].table[x * s.size + y]];
    }
    for (auto& c : t.constants) c.value = perm[c.value];
    return t;
}

// Arbitrary structure in the signature meet/compl/0/1/c0..: tables need not satisfy any axiom.
inline RelStructure random_structure(std::mt19937_64& rng, std::size_t size, unsigned extra) {
    RelStructure s;
    s.size = size;
    std::uniform_int_distribution<std::uint32_t> d(0, static_cast<std::uint32_t>(size - 1));
    RelStructure::Function meet{"meet", 2, std::vector<std::uint32_t>(size * size)};
    RelStructure::Function compl_{"compl", 1, std::vector<std::uint32_t>(size)};
    for (auto& v : meet.table) v = d(rng);
    for (auto& v : compl_.table) v = d(rng);
    s.functions = {meet, compl_};
    s.constants.push_back({"0", d(rng)});
    s.constants.push_back({"1", d(rng)});
    for (unsigned i = 0; i < extra; ++i) s.constants.push_back({"c" + std::to_string(i), d(rng)});
    return s;
}

// Small random edit: one table entry or one constant changes; or a relabelling (isomorphic copy).
inline RelStructure perturb(std::mt19937_64& rng, const RelStructure& s) {
    RelStructure t = s;
    std::uniform_int_distribution<std::uint32_t> d(0, static_cast<std::uint32_t>(s.size - 1));
    switch (rng() % 3) {
    case 0: t.functions[0].table[rng() % t.functions[0].table.size()] = d(rng); break;
    case 1: t.constants[rng() % t.constants.size()].value = d(rng); break;
    default: {
        std::vector<std::uint32_t> p(s.size);
        std::iota(p.begin(), p.end(), 0u);
        std::shuffle(p.begin(), p.end(), rng);
        for (std::uint32_t x = 0; x < s.size; ++x) {
            t.functions[1].table[p[x]] = p[s.functions[1].table[x]];
            for (std::uint32_t y = 0; y < s.size; ++y)
                t.functions[0].table[p[x] * s.size + p[y]] = p[s.functions[0].table[x * s.size + y]];
        }
        for (std::size_t c = 0; c < s.constants.size(); ++c) t.constants[c].value = p[s.constants[c].value];
    }
    }
    return t;
}

} // namespace fixture
