#include "cylneat/witness.hpp"

#include "cylneat/errors.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <unordered_map>

namespace cylneat {

namespace {

struct VecHash {
    std::size_t operator()(const std::vector<std::uint32_t>& v) const {
        std::size_t h = v.size();
        for (auto x : v) h ^= x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        return h;
    }
};

bool satisfies(const Demand& d, std::uint32_t mask) {
    return d.polarity == Polarity::small ? (mask & d.colorset) != 0 : (mask & d.colorset) == 0;
}

std::string set_string(std::uint32_t s) {
    std::string out = "{";
    bool first = true;
    for (unsigned r = 0; r < 32; ++r)
        if ((s >> r) & 1u) {
            if (!first) out += ",";
            out += "r" + std::to_string(r);
            first = false;
        }
    return out + "}";
}

// One relevant slot of a demand: an injective index map whose induced tuple is a transversal.
struct Slot {
    std::vector<unsigned> pos;
    unsigned orbit;
};

// Slots over positions 0..len where position len holds the witness (block m), grouped into
// orbits by their range.
std::vector<Slot> relevant_slots(unsigned n, const std::vector<unsigned>& pos_block, unsigned& orbits) {
    const unsigned len = static_cast<unsigned>(pos_block.size()) - 1;
    std::vector<Slot> out;
    std::map<std::uint64_t, unsigned> orbit_of;
    std::vector<unsigned> iota(n);
    std::vector<unsigned> cur(n);
    // Enumerate maps n -> len+1 in lexicographic order.
    const std::size_t total = [&] {
        std::size_t t = 1;
        for (unsigned i = 0; i < n; ++i) t *= len + 1;
        return t;
    }();
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        for (unsigned i = n; i-- > 0;) {
            cur[i] = static_cast<unsigned>(c % (len + 1));
            c /= len + 1;
        }
        std::uint64_t range = 0, blocks = 0;
        bool ok = true;
        for (unsigned i = 0; i < n && ok; ++i) {
            if ((range >> cur[i]) & 1u) ok = false;
            range |= std::uint64_t{1} << cur[i];
            const unsigned b = pos_block[cur[i]];
            if ((blocks >> b) & 1u) ok = false;
            blocks |= std::uint64_t{1} << b;
        }
        if (!ok || !((range >> len) & 1u)) continue;
        auto [it, fresh] = orbit_of.try_emplace(range, static_cast<unsigned>(orbit_of.size()));
        out.push_back({cur, it->second});
    }
    orbits = static_cast<unsigned>(orbit_of.size());
    return out;
}

std::string point_list(const BlockedBase& bb, const std::vector<std::uint32_t>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + bb.base->name(v[i]);
    return s + ")";
}

std::string family_string(const std::vector<Demand>& opts, const std::vector<unsigned>& g) {
    std::string s = "[";
    for (std::size_t o = 0; o < g.size(); ++o) s += (o ? ", " : "") + demand_string(opts[g[o]]);
    return s + "]";
}

// Enumerates one-to-one tuples of length len over `domain` in lexicographic order.
template <class F>
void for_each_injective(const std::vector<std::uint32_t>& domain, unsigned len, F&& f) {
    std::vector<std::uint32_t> v(len);
    std::vector<bool> used(domain.size(), false);
    auto rec = [&](auto& self, unsigned d) -> void {
        if (d == len) {
            f(v);
            return;
        }
        for (std::size_t i = 0; i < domain.size(); ++i) {
            if (used[i]) continue;
            used[i] = true;
            v[d] = domain[i];
            self(self, d + 1);
            used[i] = false;
        }
    };
    rec(rec, 0);
}

// Dense table of color masks over the n-tuple space of a family.
std::vector<std::uint32_t> color_masks(const ColorFamily& cf) {
    const TupleSpace sp(cf.blocks.size(), cf.blocks.n);
    std::vector<std::uint32_t> m(sp.count(), 0);
    for (std::size_t r = 0; r < cf.colors.size(); ++r)
        cf.colors[r].bits().for_each([&](std::size_t t) { m[t] |= 1u << r; });
    return m;
}

struct SaturationScan {
    std::size_t demands = 0;
    std::size_t failures = 0;
    std::vector<std::string> witnesses;
    bool too_large = false;
};

// Checks every demand (v, m, g) with v over `domain` and witnesses drawn from `candidates_of(m)`.
template <class ColorOf, class Candidates>
void scan_demands(const BlockedBase& bb, unsigned rcount, unsigned j, const std::vector<std::uint32_t>& domain,
                  ColorOf&& color_of, Candidates&& candidates_of, SaturationScan& out, std::size_t family_cap) {
    const unsigned n = bb.n;
    const unsigned len = n + j - 1;
    auto opts = demand_options(rcount, Polarity::small);
    auto co = demand_options(rcount, Polarity::cosmall);
    opts.insert(opts.end(), co.begin(), co.end());
    std::vector<std::uint32_t> tuple(n);
    for_each_injective(domain, len, [&](const std::vector<std::uint32_t>& v) {
        for (unsigned m = 0; m < n; ++m) {
            std::vector<unsigned> pos_block(len + 1);
            for (unsigned p = 0; p < len; ++p) pos_block[p] = bb.block_of[v[p]];
            pos_block[len] = m;
            unsigned orbits = 0;
            const auto slots = relevant_slots(n, pos_block, orbits);
            std::size_t families = 1;
            for (unsigned o = 0; o < orbits; ++o) {
                families *= opts.size();
                if (families > family_cap) {
                    out.too_large = true;
                    return;
                }
            }
            // Distinct color patterns realized by candidate witnesses.
            std::vector<std::vector<std::uint32_t>> patterns;
            for (auto x : candidates_of(m)) {
                if (std::find(v.begin(), v.end(), x) != v.end()) continue;
                std::vector<std::uint32_t> pat(slots.size());
                for (std::size_t s = 0; s < slots.size(); ++s) {
                    for (unsigned i = 0; i < n; ++i) {
                        const unsigned p = slots[s].pos[i];
                        tuple[i] = p == len ? x : v[p];
                    }
                    pat[s] = color_of(tuple);
                }
                patterns.push_back(std::move(pat));
            }
            std::sort(patterns.begin(), patterns.end());
            patterns.erase(std::unique(patterns.begin(), patterns.end()), patterns.end());
            std::vector<unsigned> g(orbits, 0);
            for (std::size_t f = 0; f < families; ++f) {
                std::size_t c = f;
                for (unsigned o = orbits; o-- > 0;) {
                    g[o] = static_cast<unsigned>(c % opts.size());
                    c /= opts.size();
                }
                ++out.demands;
                bool met = false;
                for (const auto& pat : patterns) {
                    bool ok = true;
                    for (std::size_t s = 0; s < slots.size() && ok; ++s) ok = satisfies(opts[g[slots[s].orbit]], pat[s]);
                    if (ok) {
                        met = true;
                        break;
                    }
                }
                if (!met) {
                    ++out.failures;
                    if (out.witnesses.size() < 16)
                        out.witnesses.push_back("j=" + std::to_string(j) + " v=" + point_list(bb, v) +
                                                " block=" + std::to_string(m) + " g=" + family_string(opts, g));
                }
            }
        }
    });
}

} // namespace

BlockedBase BlockedBase::uniform(unsigned n, std::size_t m) {
    if (n == 0 || m == 0) throw UsageError("blocked base needs n >= 1 and m >= 1");
    BlockedBase bb;
    bb.n = n;
    std::vector<std::string> names;
    for (unsigned i = 0; i < n; ++i)
        for (std::size_t k = 0; k < m; ++k) {
            names.push_back("w" + std::to_string(i) + "_" + std::to_string(k));
            bb.block_of.push_back(i);
            bb.layer_of.push_back(0);
        }
    bb.base = Base::make(std::move(names));
    return bb;
}

std::vector<std::uint32_t> BlockedBase::block(unsigned i) const {
    std::vector<std::uint32_t> out;
    for (std::size_t p = 0; p < block_of.size(); ++p)
        if (block_of[p] == i) out.push_back(static_cast<std::uint32_t>(p));
    return out;
}

unsigned BlockedBase::depth() const {
    unsigned d = 0;
    for (auto l : layer_of) d = std::max(d, l);
    return d;
}

std::vector<Demand> demand_options(unsigned rcount, Polarity p) {
    std::vector<Demand> out;
    const std::uint32_t all = rcount >= 32 ? ~0u : (1u << rcount) - 1;
    for (std::uint32_t s = 1; s <= all && s != 0; ++s) {
        if (p == Polarity::cosmall && s == all) continue;
        out.push_back({p, s, p == Polarity::small ? s : (all & ~s)});
    }
    return out;
}

std::string demand_string(const Demand& d) {
    return (d.polarity == Polarity::small ? "small" : "cosmall") + set_string(d.colorset);
}

bool d_predicate(std::span<const std::uint32_t> s, const BlockedBase& bb) {
    if (s.size() != bb.n) return false;
    std::uint64_t seen = 0;
    for (auto x : s) {
        const unsigned b = bb.block_of.at(x);
        if ((seen >> b) & 1u) return false;
        seen |= std::uint64_t{1} << b;
    }
    return true;
}

std::vector<std::vector<unsigned>> s_indices(unsigned n, unsigned k) {
    if (k == 0) throw UsageError("s_indices needs k >= 1");
    std::vector<std::vector<unsigned>> out;
    std::vector<unsigned> cur(n, 0);
    const unsigned top = n + k;
    for (;;) {
        if (std::find(cur.begin(), cur.end(), top - 1) != cur.end()) out.push_back(cur);
        unsigned i = n;
        while (i > 0 && cur[i - 1] == top - 1) cur[--i] = 0;
        if (i == 0) break;
        ++cur[i - 1];
    }
    return out;
}

Region eta_pos(const std::vector<unsigned>& x, const ColorFamily& cf) {
    Region r(cf.blocks.base, cf.blocks.n);
    for (auto c : x) r.bits() |= cf.colors.at(c).bits();
    return r;
}

Region eta_neg(const std::vector<unsigned>& x, const ColorFamily& cf) {
    Region r = full_space(cf.blocks.base, cf.blocks.n);
    for (auto c : x) r.bits().subtract(cf.colors.at(c).bits());
    return r;
}

ConditionCertificate check_conditions(const ColorFamily& cf, const SaturationParams& sp, bool full) {
    ConditionCertificate cert;
    const auto& bb = cf.blocks;
    const unsigned n = bb.n;
    const TupleSpace space(bb.size(), n);
    const auto masks = color_masks(cf);
    const auto perms = permutations(n);

    for (std::size_t r = 0; r < cf.rcount(); ++r) {
        cf.colors[r].bits().for_each([&](std::size_t t) {
            const Tuple s = space.tuple(t);
            ++cert.transversal.items;
            if (!d_predicate(s, bb)) {
                ++cert.transversal.failures;
                if (cert.transversal.witnesses.size() < 16)
                    cert.transversal.witnesses.push_back("r" + std::to_string(r) + " " + point_list(bb, s));
            }
            Tuple moved(n);
            for (const auto& pi : perms) {
                for (unsigned i = 0; i < n; ++i) moved[i] = s[pi[i]];
                ++cert.permutation.items;
                if (!cf.colors[r].contains(moved)) {
                    ++cert.permutation.failures;
                    if (cert.permutation.witnesses.size() < 16)
                        cert.permutation.witnesses.push_back("r" + std::to_string(r) + " " + point_list(bb, s) +
                                                             " -> " + point_list(bb, moved));
                }
            }
        });
    }
    for (std::size_t t = 0; t < masks.size(); ++t) {
        ++cert.disjoint.items;
        if (std::popcount(masks[t]) > 1) {
            ++cert.disjoint.failures;
            if (cert.disjoint.witnesses.size() < 16)
                cert.disjoint.witnesses.push_back(set_string(masks[t]) + " " + point_list(bb, space.tuple(t)));
        }
    }

    auto color_of = [&](const std::vector<std::uint32_t>& s) { return masks[space.index(s)]; };
    const std::size_t family_cap = 5'000'000;
    const unsigned depth = bb.depth();
    const unsigned rcount = static_cast<unsigned>(cf.rcount());
    if (depth == 0 || sp.depth == 0) {
        cert.saturation.checked = false;
    } else {
        SaturationScan scan;
        for (unsigned l = 0; l < std::min(depth, sp.depth); ++l) {
            std::vector<std::uint32_t> domain;
            for (std::size_t p = 0; p < bb.size(); ++p)
                if (bb.layer_of[p] <= l) domain.push_back(static_cast<std::uint32_t>(p));
            std::vector<std::vector<std::uint32_t>> next(n);
            for (std::size_t p = 0; p < bb.size(); ++p)
                if (bb.layer_of[p] == l + 1) next[bb.block_of[p]].push_back(static_cast<std::uint32_t>(p));
            for (unsigned j = 1; j <= sp.k; ++j)
                scan_demands(bb, rcount, j, domain, color_of,
                             [&](unsigned m) -> const std::vector<std::uint32_t>& { return next[m]; }, scan,
                             family_cap);
        }
        cert.saturation.items = scan.demands;
        cert.saturation.failures = scan.failures;
        cert.saturation.witnesses = scan.witnesses;
        if (scan.too_large) {
            cert.saturation.checked = false;
            cert.saturation.witnesses.push_back("demand family space exceeds the enumeration cap");
        }
    }
    if (full && depth > 0) {
        SaturationScan scan;
        std::vector<std::uint32_t> all(bb.size());
        std::iota(all.begin(), all.end(), 0u);
        std::vector<std::vector<std::uint32_t>> blocks(n);
        for (unsigned i = 0; i < n; ++i) blocks[i] = bb.block(i);
        scan_demands(bb, rcount, 1, all, color_of,
                     [&](unsigned m) -> const std::vector<std::uint32_t>& { return blocks[m]; }, scan, family_cap);
        cert.full_saturation.items = scan.demands;
        cert.full_saturation.failures = scan.failures;
        cert.full_saturation.witnesses = scan.witnesses;
        cert.full_saturation.checked = !scan.too_large;
    } else {
        cert.full_saturation.checked = false;
    }
    for (Verdict* v : {&cert.transversal, &cert.permutation, &cert.saturation, &cert.disjoint, &cert.full_saturation})
        v->pass = v->failures == 0 && (v->checked || v == &cert.saturation);
    if (!cert.saturation.checked && depth > 0 && sp.depth > 0) cert.saturation.pass = false;
    if (!cert.full_saturation.checked) cert.full_saturation.pass = false;
    return cert;
}

std::vector<std::vector<unsigned>> permutations(unsigned n) {
    std::vector<unsigned> p(n);
    std::iota(p.begin(), p.end(), 0u);
    std::vector<std::vector<unsigned>> out;
    do out.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    return out;
}

std::vector<std::vector<unsigned>> all_maps(unsigned n) {
    std::vector<std::vector<unsigned>> out;
    std::vector<unsigned> cur(n, 0);
    for (;;) {
        out.push_back(cur);
        unsigned i = n;
        while (i > 0 && cur[i - 1] == n - 1) cur[--i] = 0;
        if (i == 0) break;
        ++cur[i - 1];
    }
    return out;
}

Region one_u(const std::vector<unsigned>& u, const BlockedBase& bb) {
    if (u.size() != bb.n) throw UsageError("u has wrong length");
    Region r(bb.base, bb.n);
    const auto& sp = r.space();
    for (std::size_t t = 0; t < sp.count(); ++t) {
        bool in = true;
        for (unsigned i = 0; i < bb.n && in; ++i) in = bb.block_of[sp.coord(t, i)] == u[i];
        if (in) r.bits().set(t);
    }
    return r;
}

Region p_region(const std::vector<unsigned>& u, unsigned r, const ColorFamily& cf) {
    return cf.colors.at(r) & one_u(u, cf.blocks);
}

SetCA build_A(const ColorFamily& cf, std::size_t carrier_cap) {
    std::vector<Region> gens;
    for (const auto& u : permutations(cf.blocks.n))
        for (unsigned r = 0; r < cf.rcount(); ++r) gens.push_back(p_region(u, r, cf));
    SetCA a = generate_subalgebra(cf.blocks.base, cf.blocks.n, gens);
    a.carrier_size(carrier_cap);
    return a;
}

SetCA build_dilation(const ColorFamily& cf, unsigned k, std::size_t atom_cap) {
    if (k == 0) return build_A(cf, std::size_t{1} << 62);
    std::vector<Region> gens;
    for (const auto& u : permutations(cf.blocks.n))
        for (unsigned r = 0; r < cf.rcount(); ++r) gens.push_back(lift(p_region(u, r, cf), cf.blocks.n + k));
    SetCA d = generate_subalgebra(cf.blocks.base, cf.blocks.n + k, gens);
    if (d.atom_count() > atom_cap)
        throw CapExceeded("dilation has " + std::to_string(d.atom_count()) + " atoms, cap is " +
                          std::to_string(atom_cap));
    return d;
}

// ---------------------------------------------------------------------------------------------
// Builder

namespace {

class Builder {
public:
    Builder(unsigned n, const SaturationParams& sp, unsigned rcount, const BuildOptions& opt)
        : n_(n), sp_(sp), rcount_(rcount), opt_(opt), rng_(opt.seed) {}

    BuildResult run();

private:
    std::uint32_t add_point(unsigned block, unsigned layer);
    std::uint32_t color_mask(const std::vector<std::uint32_t>& pts) const {
        auto key = pts;
        std::sort(key.begin(), key.end());
        auto it = colors_.find(key);
        return it == colors_.end() ? 0u : (1u << it->second);
    }
    void set_color(std::vector<std::uint32_t> pts, unsigned r, bool pin) {
        std::sort(pts.begin(), pts.end());
        colors_[pts] = r;
        if (pin) pinned_.insert({pts, true});
    }
    void color_new_transversals(std::uint32_t x);
    void run_layer(unsigned l);
    void closure();
    bool closure_attempt(std::size_t N);
    std::string describe(unsigned j, const std::vector<std::uint32_t>& v, unsigned m, const std::vector<Demand>& opts,
                         const std::vector<unsigned>& g) const {
        return "layer-demand j=" + std::to_string(j) + " v=" + names(v) + " block=" + std::to_string(m) +
               " g=" + family_string(opts, g);
    }
    bool over_budget() { return ++nodes_ > opt_.node_budget; }
    std::string names(const std::vector<std::uint32_t>& v) const {
        std::string s = "(";
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + names_[v[i]];
        return s + ")";
    }

    unsigned n_;
    SaturationParams sp_;
    unsigned rcount_;
    BuildOptions opt_;
    std::mt19937_64 rng_;
    BlockedBase bb_;
    std::vector<std::string> names_;
    std::vector<std::size_t> per_block_;
    std::unordered_map<std::vector<std::uint32_t>, unsigned, VecHash> colors_;
    std::unordered_map<std::vector<std::uint32_t>, bool, VecHash> pinned_;
    std::size_t nodes_ = 0;
    BuildStats stats_;
};

std::uint32_t Builder::add_point(unsigned block, unsigned layer) {
    const auto id = static_cast<std::uint32_t>(bb_.block_of.size());
    bb_.block_of.push_back(block);
    bb_.layer_of.push_back(layer);
    names_.push_back("w" + std::to_string(block) + "_" + std::to_string(per_block_[block]++));
    return id;
}

// Every transversal through x gets the least color unless it is already colored.
void Builder::color_new_transversals(std::uint32_t x) {
    const unsigned bx = bb_.block_of[x];
    std::vector<std::vector<std::uint32_t>> others;
    for (unsigned b = 0; b < n_; ++b) {
        if (b == bx) continue;
        std::vector<std::uint32_t> pts;
        for (std::size_t p = 0; p < bb_.block_of.size(); ++p)
            if (bb_.block_of[p] == b) pts.push_back(static_cast<std::uint32_t>(p));
        others.push_back(std::move(pts));
    }
    std::vector<std::uint32_t> t(n_);
    auto rec = [&](auto& self, std::size_t d) -> void {
        if (d == others.size()) {
            t[n_ - 1] = x;
            auto key = t;
            std::sort(key.begin(), key.end());
            if (!colors_.count(key)) colors_[key] = 0;
            return;
        }
        for (auto p : others[d]) {
            t[d] = p;
            self(self, d + 1);
        }
    };
    rec(rec, 0);
}

void Builder::run_layer(unsigned l) {
    std::vector<std::uint32_t> domain;
    for (std::size_t p = 0; p < bb_.block_of.size(); ++p)
        if (bb_.layer_of[p] <= l) domain.push_back(static_cast<std::uint32_t>(p));
    auto small = demand_options(rcount_, Polarity::small);
    auto cosmall = demand_options(rcount_, Polarity::cosmall);
    std::vector<Demand> opts = small;
    opts.insert(opts.end(), cosmall.begin(), cosmall.end());
    std::vector<std::vector<std::uint32_t>> layer_points(n_);
    std::vector<std::uint32_t> tuple(n_);

    for (unsigned j = 1; j <= sp_.k; ++j) {
        const unsigned len = n_ + j - 1;
        for_each_injective(domain, len, [&](const std::vector<std::uint32_t>& v) {
            for (unsigned m = 0; m < n_; ++m) {
                std::vector<unsigned> pos_block(len + 1);
                for (unsigned p = 0; p < len; ++p) pos_block[p] = bb_.block_of[v[p]];
                pos_block[len] = m;
                unsigned orbits = 0;
                const auto slots = relevant_slots(n_, pos_block, orbits);
                if (orbits > 0 && (small.empty() || cosmall.empty())) {
                    std::vector<unsigned> g(orbits, 0);
                    throw ExhaustionError(
                        "no admissible " + std::string(small.empty() ? "small" : "cosmall") +
                            " color set exists for " + std::to_string(rcount_) + " color(s); the demand cannot be posed",
                        describe(j, v, m, opts, g));
                }
                std::size_t families = 1;
                for (unsigned o = 0; o < orbits; ++o) families *= opts.size();
                std::vector<unsigned> g(orbits, 0);
                auto slot_tuple = [&](const Slot& s, std::uint32_t x) {
                    for (unsigned i = 0; i < n_; ++i) tuple[i] = s.pos[i] == len ? x : v[s.pos[i]];
                    return tuple;
                };
                for (std::size_t f = 0; f < families; ++f) {
                    std::size_t c = f;
                    for (unsigned o = orbits; o-- > 0;) {
                        g[o] = static_cast<unsigned>(c % opts.size());
                        c /= opts.size();
                    }
                    ++stats_.demands;
                    if (over_budget())
                        throw ExhaustionError("builder node budget exhausted", describe(j, v, m, opts, g));
                    std::optional<std::uint32_t> witness;
                    for (auto x : layer_points[m]) {
                        if (std::find(v.begin(), v.end(), x) != v.end()) continue;
                        bool ok = true;
                        for (const auto& s : slots) {
                            ok = satisfies(opts[g[s.orbit]], color_mask(slot_tuple(s, x)));
                            if (!ok) break;
                        }
                        if (ok) {
                            witness = x;
                            break;
                        }
                    }
                    if (witness) {
                        ++stats_.met_in_layer;
                    } else {
                        witness = add_point(m, l + 1);
                        layer_points[m].push_back(*witness);
                        ++stats_.fresh_points;
                        for (const auto& s : slots) {
                            const std::uint32_t allowed = opts[g[s.orbit]].allowed;
                            if (allowed == 0)
                                throw ExhaustionError("demand has no satisfying color", describe(j, v, m, opts, g));
                            set_color(slot_tuple(s, *witness), static_cast<unsigned>(std::countr_zero(allowed)),
                                      false);
                        }
                        color_new_transversals(*witness);
                    }
                    for (const auto& s : slots) {
                        auto key = slot_tuple(s, *witness);
                        std::sort(key.begin(), key.end());
                        pinned_[key] = true;
                    }
                }
            }
        });
    }
}

bool Builder::closure_attempt(std::size_t N) {
    // Work on copies; commit only on success.
    const std::size_t R = rcount_;
    std::vector<std::uint32_t> rows, cols;
    for (std::size_t p = 0; p < bb_.block_of.size(); ++p)
        (bb_.block_of[p] == 0 ? rows : cols).push_back(static_cast<std::uint32_t>(p));
    const std::size_t real_rows = rows.size(), real_cols = cols.size();
    const std::size_t P = std::max(N, real_rows), Q = std::max(N, real_cols);
    std::vector<std::uint8_t> c(P * Q), pin(P * Q, 0);
    for (std::size_t a = 0; a < P; ++a)
        for (std::size_t b = 0; b < Q; ++b) {
            if (a < real_rows && b < real_cols) {
                std::vector<std::uint32_t> key{std::min(rows[a], cols[b]), std::max(rows[a], cols[b])};
                auto it = colors_.find(key);
                c[a * Q + b] = static_cast<std::uint8_t>(it == colors_.end() ? 0 : it->second);
                pin[a * Q + b] = pinned_.count(key) ? 1 : 0;
                if (!pin[a * Q + b]) c[a * Q + b] = static_cast<std::uint8_t>(rng_() % R);
            } else {
                c[a * Q + b] = static_cast<std::uint8_t>(rng_() % R);
            }
        }
    const std::size_t R2 = R * R;
    std::vector<std::uint16_t> rp(P * P * R2, 0), cp(Q * Q * R2, 0), rc(P * R, 0), cc(Q * R, 0);
    auto rp_at = [&](std::size_t a, std::size_t a2, std::size_t pat) -> std::uint16_t& { return rp[(a * P + a2) * R2 + pat]; };
    auto cp_at = [&](std::size_t b, std::size_t b2, std::size_t pat) -> std::uint16_t& { return cp[(b * Q + b2) * R2 + pat]; };
    for (std::size_t a = 0; a < P; ++a)
        for (std::size_t b = 0; b < Q; ++b) {
            ++rc[a * R + c[a * Q + b]];
            ++cc[b * R + c[a * Q + b]];
        }
    for (std::size_t a = 0; a < P; ++a)
        for (std::size_t a2 = a + 1; a2 < P; ++a2)
            for (std::size_t b = 0; b < Q; ++b) ++rp_at(a, a2, c[a * Q + b] * R + c[a2 * Q + b]);
    for (std::size_t b = 0; b < Q; ++b)
        for (std::size_t b2 = b + 1; b2 < Q; ++b2)
            for (std::size_t a = 0; a < P; ++a) ++cp_at(b, b2, c[a * Q + b] * R + c[a * Q + b2]);
    long cost = 0;
    for (std::size_t a = 0; a < P; ++a)
        for (std::size_t a2 = a + 1; a2 < P; ++a2)
            for (std::size_t p = 0; p < R2; ++p) cost += rp_at(a, a2, p) == 0;
    for (std::size_t b = 0; b < Q; ++b)
        for (std::size_t b2 = b + 1; b2 < Q; ++b2)
            for (std::size_t p = 0; p < R2; ++p) cost += cp_at(b, b2, p) == 0;
    auto deficit = [](std::uint16_t x) { return x >= 2 ? 0L : 2L - x; };
    for (auto x : rc) cost += deficit(x);
    for (auto x : cc) cost += deficit(x);

    std::vector<std::size_t> free_cells;
    for (std::size_t i = 0; i < P * Q; ++i)
        if (!pin[i]) free_cells.push_back(i);
    if (free_cells.empty() || R < 2) return cost == 0;

    // Recolors cell (a, b) and returns the change in cost.
    auto recolor = [&](std::size_t a, std::size_t b, std::uint8_t nw) -> long {
        const std::uint8_t old = c[a * Q + b];
        long d = 0;
        for (std::size_t a2 = 0; a2 < P; ++a2) {
            if (a2 == a) continue;
            const std::size_t o2 = c[a2 * Q + b];
            std::size_t lo = std::min(a, a2), hi = std::max(a, a2);
            std::size_t po = a < a2 ? old * R + o2 : o2 * R + old;
            std::size_t pn = a < a2 ? nw * R + o2 : o2 * R + nw;
            if (--rp_at(lo, hi, po) == 0) ++d;
            if (rp_at(lo, hi, pn)++ == 0) --d;
        }
        for (std::size_t b2 = 0; b2 < Q; ++b2) {
            if (b2 == b) continue;
            const std::size_t o2 = c[a * Q + b2];
            std::size_t lo = std::min(b, b2), hi = std::max(b, b2);
            std::size_t po = b < b2 ? old * R + o2 : o2 * R + old;
            std::size_t pn = b < b2 ? nw * R + o2 : o2 * R + nw;
            if (--cp_at(lo, hi, po) == 0) ++d;
            if (cp_at(lo, hi, pn)++ == 0) --d;
        }
        d -= deficit(rc[a * R + old]) + deficit(rc[a * R + nw]) + deficit(cc[b * R + old]) + deficit(cc[b * R + nw]);
        --rc[a * R + old];
        ++rc[a * R + nw];
        --cc[b * R + old];
        ++cc[b * R + nw];
        d += deficit(rc[a * R + old]) + deficit(rc[a * R + nw]) + deficit(cc[b * R + old]) + deficit(cc[b * R + nw]);
        c[a * Q + b] = nw;
        return d;
    };

    ++stats_.closure_attempts;
    for (std::size_t it = 0; it < opt_.closure_iterations && cost > 0; ++it) {
        if (over_budget())
            throw ExhaustionError("builder node budget exhausted",
                                  "saturation closure at block size " + std::to_string(N));
        ++stats_.closure_moves;
        const std::size_t cell = free_cells[rng_() % free_cells.size()];
        const std::size_t a = cell / Q, b = cell % Q;
        const std::uint8_t old = c[cell];
        const std::uint8_t nw = static_cast<std::uint8_t>((old + 1 + rng_() % (R - 1)) % R);
        const long d = recolor(a, b, nw);
        if (d <= 0 || rng_() % 1000 < 3) {
            cost += d;
        } else {
            recolor(a, b, old);
        }
    }
    if (cost != 0) return false;

    for (std::size_t a = real_rows; a < P; ++a) rows.push_back(add_point(0, sp_.depth));
    for (std::size_t b = real_cols; b < Q; ++b) cols.push_back(add_point(1, sp_.depth));
    stats_.closure_points = (P - real_rows) + (Q - real_cols);
    for (std::size_t a = 0; a < P; ++a)
        for (std::size_t b = 0; b < Q; ++b) {
            std::vector<std::uint32_t> key{std::min(rows[a], cols[b]), std::max(rows[a], cols[b])};
            colors_[key] = c[a * Q + b];
        }
    return true;
}

void Builder::closure() {
    if (!opt_.closure || sp_.depth == 0) {
        stats_.closure_status = "disabled";
        return;
    }
    if (n_ != 2) {
        stats_.closure_status = "skipped: only implemented for n = 2";
        return;
    }
    std::size_t N = std::max<std::size_t>({bb_.block(0).size(), bb_.block(1).size(), 3});
    for (; N <= opt_.closure_max_block; ++N) {
        if (closure_attempt(N)) {
            stats_.closure_status = "saturated at block size " + std::to_string(N);
            return;
        }
    }
    throw ExhaustionError("saturation closure failed up to block size " + std::to_string(opt_.closure_max_block),
                          "closure");
}

BuildResult Builder::run() {
    bb_.n = n_;
    per_block_.assign(n_, 0);
    for (unsigned b = 0; b < n_; ++b)
        for (std::size_t k = 0; k < sp_.m0; ++k) add_point(b, 0);
    // Layer 0 transversals are colored now so that layer-0 demands see a total coloring.
    std::vector<std::uint32_t> initial(bb_.block_of.size());
    std::iota(initial.begin(), initial.end(), 0u);
    if (sp_.depth > 0)
        for (auto x : initial)
            if (bb_.block_of[x] == n_ - 1) color_new_transversals(x);
    for (unsigned l = 0; l < sp_.depth; ++l) run_layer(l);
    closure();

    bb_.base = Base::make(names_);
    for (unsigned l = 0; l <= sp_.depth; ++l) {
        std::size_t c = 0;
        for (auto x : bb_.layer_of) c += x == l;
        stats_.points_per_layer.push_back(c);
    }
    ColorFamily cf;
    cf.blocks = bb_;
    cf.colors.assign(rcount_, Region(bb_.base, n_));
    const auto perms = permutations(n_);
    std::vector<std::uint32_t> t(n_);
    for (const auto& [key, r] : colors_)
        for (const auto& pi : perms) {
            for (unsigned i = 0; i < n_; ++i) t[i] = key[pi[i]];
            cf.colors[r].insert(t);
        }
    return {std::move(cf), stats_};
}

} // namespace

BuildResult build_colored_structure(unsigned n, const SaturationParams& sp, unsigned rcount, const BuildOptions& opt) {
    if (n < 2) throw UsageError("builder needs n >= 2");
    if (n > 8) throw UsageError("builder supports n <= 8");
    if (sp.m0 == 0) throw UsageError("m0 must be at least 1");
    if (rcount == 0 || rcount > 8) throw UsageError("rcount must be in 1..8");
    if (sp.k == 0) throw UsageError("k must be at least 1");
    Builder b(n, sp, rcount, opt);
    return b.run();
}

} // namespace cylneat
