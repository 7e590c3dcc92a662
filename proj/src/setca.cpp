#include "cylneat/setca.hpp"

#include "cylneat/errors.hpp"

#include <algorithm>
#include <map>
#include <numeric>
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

// Assigns ids in order of first request; with tuples scanned in lexicographic order this
// numbers atoms by their least member.
class Interner {
public:
    std::uint32_t get(const std::vector<std::uint32_t>& key) {
        auto [it, fresh] = ids_.try_emplace(key, static_cast<std::uint32_t>(ids_.size()));
        return it->second;
    }
    std::size_t size() const { return ids_.size(); }

private:
    std::unordered_map<std::vector<std::uint32_t>, std::uint32_t, VecHash> ids_;
};

// Calls f(first_index, stride) for every fiber along axis i.
template <class F>
void for_each_fiber(const TupleSpace& sp, unsigned i, F&& f) {
    const std::size_t st = sp.stride(i), block = st * sp.base_size();
    for (std::size_t hi = 0; hi < sp.count(); hi += block)
        for (std::size_t lo = 0; lo < st; ++lo) f(hi + lo, st);
}

std::string mask_str(std::uint64_t m) {
    std::string s = "{";
    bool first = true;
    for (unsigned a = 0; a < 64; ++a)
        if ((m >> a) & 1u) {
            if (!first) s += ",";
            s += "a" + std::to_string(a);
            first = false;
        }
    return s + "}";
}

std::string atoms_str(const AtomSet& x) {
    std::string s = "{";
    bool first = true;
    x.for_each([&](std::size_t a) {
        if (!first) s += ",";
        s += "a" + std::to_string(a);
        first = false;
    });
    return s + "}";
}

} // namespace

SetCA::SetCA(const BasePtr& base, unsigned dim) : base_(base), dim_(dim), space_(base ? base->size() : 0, dim) {
    if (!base) throw UsageError("algebra needs a base");
}

SetCA SetCA::generate(const BasePtr& base, unsigned dim, const std::vector<Region>& generators) {
    for (const auto& g : generators)
        if (g.dim() != dim || !same_base(g.base(), base)) throw UsageError("generator over a different space");
    SetCA a(base, dim);
    const auto& sp = a.space_;
    const std::size_t T = sp.count(), N = sp.base_size();

    std::vector<Region> features = generators;
    for (unsigned i = 0; i < dim; ++i)
        for (unsigned j = i + 1; j < dim; ++j) features.push_back(diagonal(base, dim, i, j));

    std::vector<std::uint32_t> labels(T);
    std::size_t count;
    {
        Interner in;
        std::vector<std::uint32_t> key(features.size());
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t f = 0; f < features.size(); ++f) key[f] = features[f].bits().test(t);
            labels[t] = in.get(key);
        }
        count = in.size();
    }

    // Refine by the set of labels met in each fiber until the partition is stable; the result is
    // the coarsest partition refining the generators on which every c_i is a union of blocks.
    std::vector<std::vector<std::uint32_t>> fiber_id(dim, std::vector<std::uint32_t>(T));
    std::vector<std::uint32_t> seen;
    for (;;) {
        for (unsigned i = 0; i < dim; ++i) {
            Interner in;
            for_each_fiber(sp, i, [&](std::size_t start, std::size_t st) {
                seen.clear();
                for (std::size_t z = 0; z < N; ++z) seen.push_back(labels[start + z * st]);
                std::sort(seen.begin(), seen.end());
                seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
                const auto id = in.get(seen);
                for (std::size_t z = 0; z < N; ++z) fiber_id[i][start + z * st] = id;
            });
        }
        Interner in;
        std::vector<std::uint32_t> next(T), key(dim + 1);
        for (std::size_t t = 0; t < T; ++t) {
            key[0] = labels[t];
            for (unsigned i = 0; i < dim; ++i) key[i + 1] = fiber_id[i][t];
            next[t] = in.get(key);
        }
        labels.swap(next);
        if (in.size() == count) break;
        count = in.size();
    }

    a.labels_ = std::move(labels);
    a.atoms_.assign(count, Region(base, dim));
    for (std::size_t t = 0; t < T; ++t) a.atoms_[a.labels_[t]].bits().set(t);
    a.index_atoms(false);
    return a;
}

SetCA SetCA::from_atoms(const BasePtr& base, unsigned dim, std::vector<Region> atoms) {
    SetCA a = from_atoms_unchecked(base, dim, std::move(atoms));
    if (!a.defects_.empty()) throw UsageError("atoms do not form a cylindric set algebra: " + a.defects_.front());
    return a;
}

SetCA SetCA::from_atoms_unchecked(const BasePtr& base, unsigned dim, std::vector<Region> atoms) {
    SetCA a(base, dim);
    const std::size_t T = a.space_.count();
    for (const auto& r : atoms) {
        if (r.dim() != dim || !same_base(r.base(), base)) throw UsageError("atom over a different space");
        if (r.empty()) throw UsageError("empty atom");
    }
    std::sort(atoms.begin(), atoms.end(),
              [](const Region& x, const Region& y) { return x.bits().first() < y.bits().first(); });
    a.labels_.assign(T, UINT32_MAX);
    for (std::size_t k = 0; k < atoms.size(); ++k)
        atoms[k].bits().for_each([&](std::size_t t) {
            if (a.labels_[t] != UINT32_MAX) throw UsageError("atoms overlap");
            a.labels_[t] = static_cast<std::uint32_t>(k);
        });
    for (auto l : a.labels_)
        if (l == UINT32_MAX) throw UsageError("atoms do not cover the space");
    a.atoms_ = std::move(atoms);
    a.index_atoms(true);
    return a;
}

void SetCA::index_atoms(bool validate) {
    const std::size_t k = atoms_.size(), N = space_.base_size();
    diag_.assign(std::size_t{dim_} * dim_, AtomSet(k));
    for (unsigned i = 0; i < dim_; ++i)
        for (unsigned j = 0; j < dim_; ++j) {
            Region d = diagonal(base_, dim_, i, j);
            auto& out = diag_[i * dim_ + j];
            d.bits().for_each([&](std::size_t t) { out.set(labels_[t]); });
            if (validate && !(region(out) == d))
                defects_.push_back("d_" + std::to_string(i) + std::to_string(j) + " is not a union of atoms");
        }
    cyl_.assign(dim_, std::vector<AtomSet>(k, AtomSet(k)));
    std::vector<std::uint32_t> seen;
    for (unsigned i = 0; i < dim_; ++i) {
        for_each_fiber(space_, i, [&](std::size_t start, std::size_t st) {
            seen.clear();
            for (std::size_t z = 0; z < N; ++z) seen.push_back(labels_[start + z * st]);
            std::sort(seen.begin(), seen.end());
            seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
            for (auto x : seen)
                for (auto y : seen) cyl_[i][x].set(y);
        });
        if (!validate) continue;
        for (std::size_t x = 0; x < k; ++x)
            if (!(cylindrify(atoms_[x], i) == region(cyl_[i][x])))
                defects_.push_back("c_" + std::to_string(i) + " of atom a" + std::to_string(x) +
                                   " is not a union of atoms");
    }
}

AtomSet SetCA::unit() const {
    AtomSet u(atoms_.size());
    u.fill();
    return u;
}

AtomSet SetCA::cyl(const AtomSet& x, unsigned i) const {
    AtomSet r(atoms_.size());
    x.for_each([&](std::size_t a) { r |= cyl_[i][a]; });
    return r;
}

Region SetCA::region(const AtomSet& x) const {
    Region r(base_, dim_);
    x.for_each([&](std::size_t a) { r.bits() |= atoms_[a].bits(); });
    return r;
}

std::optional<AtomSet> SetCA::element_of(const Region& r) const {
    if (r.dim() != dim_ || !same_base(r.base(), base_)) return std::nullopt;
    AtomSet x(atoms_.size());
    r.bits().for_each([&](std::size_t t) { x.set(labels_[t]); });
    if (!(region(x) == r)) return std::nullopt;
    return x;
}

std::size_t SetCA::carrier_size(std::size_t cap) const {
    const std::size_t k = atoms_.size();
    if (k > 62 || (std::size_t{1} << k) > cap)
        throw CapExceeded("carrier has 2^" + std::to_string(k) + " elements, cap is " + std::to_string(cap));
    return std::size_t{1} << k;
}

std::uint64_t SetCA::mask(const AtomSet& x) const {
    if (atoms_.size() > 63) throw CapExceeded("too many atoms for a mask");
    return x.words().empty() ? 0 : x.words()[0];
}

AtomSet SetCA::from_mask(std::uint64_t m) const { return AtomSet::from_u64(atoms_.size(), m); }

std::uint64_t SetCA::cyl_mask(std::uint64_t m, unsigned i) const {
    std::uint64_t r = 0;
    while (m) {
        int a = std::countr_zero(m);
        r |= mask(cyl_[i][static_cast<std::size_t>(a)]);
        m &= m - 1;
    }
    return r;
}

std::uint64_t SetCA::unit_mask() const { return mask(unit()); }

SetCA generate_subalgebra(const BasePtr& base, unsigned dim, const std::vector<Region>& generators) {
    return SetCA::generate(base, dim, generators);
}

std::vector<std::uint32_t> AbstractCA::atoms() const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t a = 0; a < size; ++a) {
        if (a == zero) continue;
        bool atom = true;
        for (std::uint32_t b = 0; b < size && atom; ++b)
            if (b != zero && b != a && leq(b, a)) atom = false;
        if (atom) out.push_back(a);
    }
    return out;
}

bool AbstractCA::well_formed() const {
    auto in = [&](std::uint32_t x) { return x < size; };
    if (size == 0 || meet_table.size() != size * size || compl_table.size() != size) return false;
    if (!in(zero) || !in(one) || cyl_table.size() != dim || diag_table.size() != std::size_t{dim} * dim) return false;
    for (auto x : meet_table)
        if (!in(x)) return false;
    for (auto x : compl_table)
        if (!in(x)) return false;
    for (const auto& t : cyl_table) {
        if (t.size() != size) return false;
        for (auto x : t)
            if (!in(x)) return false;
    }
    for (auto x : diag_table)
        if (!in(x)) return false;
    return true;
}

AbstractCA abstractize(const SetCA& a, std::size_t cap) {
    const std::size_t u = a.carrier_size(cap);
    const std::uint64_t unit = a.unit_mask();
    AbstractCA r;
    r.dim = a.dim();
    r.size = u;
    r.meet_table.resize(u * u);
    for (std::size_t x = 0; x < u; ++x)
        for (std::size_t y = 0; y < u; ++y) r.meet_table[x * u + y] = static_cast<std::uint32_t>(x & y);
    r.compl_table.resize(u);
    for (std::size_t x = 0; x < u; ++x) r.compl_table[x] = static_cast<std::uint32_t>(unit & ~x);
    r.cyl_table.assign(a.dim(), std::vector<std::uint32_t>(u));
    for (unsigned i = 0; i < a.dim(); ++i)
        for (std::size_t x = 0; x < u; ++x) r.cyl_table[i][x] = static_cast<std::uint32_t>(a.cyl_mask(x, i));
    r.zero = 0;
    r.one = static_cast<std::uint32_t>(unit);
    for (unsigned i = 0; i < a.dim(); ++i)
        for (unsigned j = 0; j < a.dim(); ++j) r.diag_table.push_back(static_cast<std::uint32_t>(a.diag_mask(i, j)));
    r.origin.resize(u);
    std::iota(r.origin.begin(), r.origin.end(), std::uint64_t{0});
    return r;
}

AbstractCA relativize(const SetCA& a, const Region& e, std::size_t cap) {
    auto el = a.element_of(e);
    if (!el) throw UsageError("relativizing element is not in the carrier");
    a.carrier_size(cap);
    const std::uint64_t em = a.mask(*el);
    std::vector<std::uint64_t> members;
    std::uint64_t sub = 0;
    do {
        members.push_back(sub);
        sub = (sub - em) & em;
    } while (sub != 0);
    std::unordered_map<std::uint64_t, std::uint32_t> index;
    for (std::size_t k = 0; k < members.size(); ++k) index[members[k]] = static_cast<std::uint32_t>(k);
    AbstractCA r;
    r.dim = 0;
    r.size = members.size();
    r.meet_table.resize(r.size * r.size);
    for (std::size_t x = 0; x < r.size; ++x)
        for (std::size_t y = 0; y < r.size; ++y) r.meet_table[x * r.size + y] = index.at(members[x] & members[y]);
    r.compl_table.resize(r.size);
    for (std::size_t x = 0; x < r.size; ++x) r.compl_table[x] = index.at(em & ~members[x]);
    r.zero = 0;
    r.one = index.at(em);
    r.origin = std::move(members);
    return r;
}

SetCA neat_reduct(const SetCA& c, unsigned n) {
    if (n == 0 || n > c.dim()) throw UsageError("neat reduct dimension out of range");
    if (n == c.dim()) return c;
    const std::size_t k = c.atom_count();
    std::vector<bool> done(k, false);
    std::vector<Region> parts;
    for (std::size_t a = 0; a < k; ++a) {
        if (done[a]) continue;
        AtomSet cls = AtomSet::from_u64(k, 0);
        cls.set(a);
        for (unsigned i = n; i < c.dim(); ++i) cls = c.cyl(cls, i);
        cls.for_each([&](std::size_t b) { done[b] = true; });
        parts.push_back(project(c.region(cls), n));
    }
    return SetCA::from_atoms(c.base(), n, std::move(parts));
}

namespace {

// Mask-level evaluation of the seven schemata; x and y range over `xs`, and the
// c_i(x . c_i y) schema ranges y over the distinct values of c_i.
template <class Ops>
void run_axioms(const Ops& A, const std::vector<std::uint64_t>& xs, AxiomReport& rep, std::size_t limit) {
    const unsigned n = A.dim();
    auto add = [&](std::string ax, std::vector<unsigned> idx, std::vector<std::string> w) {
        if (rep.violations.size() < limit) rep.violations.push_back({std::move(ax), std::move(idx), std::move(w)});
    };
    auto s = [&](std::uint64_t x) { return A.str(x); };
    const auto zero = A.zero(), one = A.one();
    for (unsigned i = 0; i < n; ++i) {
        if (A.cyl(i, zero) != zero) add("c_i 0 = 0", {i}, {s(A.cyl(i, zero))});
        std::vector<std::uint64_t> image;
        for (auto x : xs) image.push_back(A.cyl(i, x));
        std::sort(image.begin(), image.end());
        image.erase(std::unique(image.begin(), image.end()), image.end());
        for (auto x : xs) {
            const auto cx = A.cyl(i, x);
            if (A.meet(x, cx) != x) add("x <= c_i x", {i}, {s(x)});
            for (auto cy : image)
                if (A.cyl(i, A.meet(x, cy)) != A.meet(cx, cy)) add("c_i(x.c_i y) = c_i x.c_i y", {i}, {s(x), s(cy)});
            for (unsigned j = 0; j < n; ++j)
                if (A.cyl(i, A.cyl(j, x)) != A.cyl(j, cx)) add("c_i c_j x = c_j c_i x", {i, j}, {s(x)});
        }
        if (A.diag(i, i) != one) add("d_ii = 1", {i}, {s(A.diag(i, i))});
        for (unsigned j = 0; j < n; ++j) {
            for (unsigned k = 0; k < n; ++k) {
                if (k == i || k == j) continue;
                if (A.diag(i, j) != A.cyl(k, A.meet(A.diag(i, k), A.diag(k, j))))
                    add("d_ij = c_k(d_ik.d_kj)", {i, j, k}, {s(A.diag(i, j))});
            }
            if (i == j) continue;
            const auto d = A.diag(i, j);
            for (auto x : xs)
                if (A.meet(A.cyl(i, A.meet(d, x)), A.cyl(i, A.meet(d, A.compl_(x)))) != zero)
                    add("c_i(d_ij.x).c_i(d_ij.-x) = 0", {i, j}, {s(x)});
        }
    }
}

struct MaskOps {
    const SetCA& a;
    std::uint64_t unit;
    std::vector<std::vector<std::uint64_t>> cylm;
    explicit MaskOps(const SetCA& s) : a(s), unit(s.unit_mask()), cylm(s.dim()) {
        for (unsigned i = 0; i < s.dim(); ++i)
            for (std::size_t x = 0; x < s.atom_count(); ++x) cylm[i].push_back(s.mask(s.cyl_atom(i, x)));
    }
    unsigned dim() const { return a.dim(); }
    std::uint64_t zero() const { return 0; }
    std::uint64_t one() const { return unit; }
    std::uint64_t meet(std::uint64_t x, std::uint64_t y) const { return x & y; }
    std::uint64_t compl_(std::uint64_t x) const { return unit & ~x; }
    std::uint64_t cyl(unsigned i, std::uint64_t x) const {
        std::uint64_t r = 0;
        while (x) {
            r |= cylm[i][static_cast<std::size_t>(std::countr_zero(x))];
            x &= x - 1;
        }
        return r;
    }
    std::uint64_t diag(unsigned i, unsigned j) const { return a.diag_mask(i, j); }
    std::string str(std::uint64_t x) const { return mask_str(x); }
};

struct TableOps {
    const AbstractCA& a;
    unsigned dim() const { return a.dim; }
    std::uint64_t zero() const { return a.zero; }
    std::uint64_t one() const { return a.one; }
    std::uint64_t meet(std::uint64_t x, std::uint64_t y) const {
        return a.meet(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y));
    }
    std::uint64_t compl_(std::uint64_t x) const { return a.compl_(static_cast<std::uint32_t>(x)); }
    std::uint64_t cyl(unsigned i, std::uint64_t x) const { return a.cyl(i, static_cast<std::uint32_t>(x)); }
    std::uint64_t diag(unsigned i, unsigned j) const { return a.diag(i, j); }
    std::string str(std::uint64_t x) const { return "#" + std::to_string(x); }
};

} // namespace

AxiomReport check_ca_axioms(const SetCA& a, std::size_t max_violations) {
    AxiomReport rep;
    for (const auto& d : a.closure_defects())
        if (rep.violations.size() < max_violations) rep.violations.push_back({"closure", {}, {d}});
    const std::size_t k = a.atom_count();
    if (k <= 20) {
        rep.mode = "exhaustive";
        rep.elements = std::size_t{1} << k;
        std::vector<std::uint64_t> xs(rep.elements);
        std::iota(xs.begin(), xs.end(), std::uint64_t{0});
        run_axioms(MaskOps(a), xs, rep, max_violations);
        return rep;
    }
    // Atomic mode: additive schemata are exact on atoms; the others are sampled on atoms.
    rep.mode = "atomic";
    rep.elements = k;
    const unsigned n = a.dim();
    auto add = [&](std::string ax, std::vector<unsigned> idx, std::vector<std::string> w) {
        if (rep.violations.size() < max_violations)
            rep.violations.push_back({std::move(ax), std::move(idx), std::move(w)});
    };
    std::vector<AtomSet> xs;
    for (std::size_t x = 0; x < k; ++x) {
        AtomSet e(k);
        e.set(x);
        xs.push_back(e);
    }
    const AtomSet zero = a.zero(), one = a.unit();
    for (unsigned i = 0; i < n; ++i) {
        if (a.cyl(zero, i).any()) add("c_i 0 = 0", {i}, {atoms_str(a.cyl(zero, i))});
        for (const auto& x : xs) {
            const AtomSet cx = a.cyl(x, i);
            if (!x.subset_of(cx)) add("x <= c_i x", {i}, {atoms_str(x)});
            for (const auto& y : xs) {
                const AtomSet cy = a.cyl(y, i);
                if (!(a.cyl(x & cy, i) == (cx & cy))) add("c_i(x.c_i y) = c_i x.c_i y", {i}, {atoms_str(x), atoms_str(y)});
            }
            for (unsigned j = 0; j < n; ++j)
                if (!(a.cyl(a.cyl(x, j), i) == a.cyl(cx, j))) add("c_i c_j x = c_j c_i x", {i, j}, {atoms_str(x)});
        }
        if (!(a.diag(i, i) == one)) add("d_ii = 1", {i}, {atoms_str(a.diag(i, i))});
        for (unsigned j = 0; j < n; ++j) {
            for (unsigned k2 = 0; k2 < n; ++k2) {
                if (k2 == i || k2 == j) continue;
                if (!(a.diag(i, j) == a.cyl(a.diag(i, k2) & a.diag(k2, j), k2)))
                    add("d_ij = c_k(d_ik.d_kj)", {i, j, k2}, {atoms_str(a.diag(i, j))});
            }
            if (i == j) continue;
            const AtomSet& d = a.diag(i, j);
            for (const auto& x : xs)
                if ((a.cyl(d & x, i) & a.cyl(d & ~x, i)).any())
                    add("c_i(d_ij.x).c_i(d_ij.-x) = 0", {i, j}, {atoms_str(x)});
        }
    }
    return rep;
}

AxiomReport check_ca_axioms(const AbstractCA& a, std::size_t max_violations) {
    AxiomReport rep;
    rep.mode = "exhaustive";
    rep.elements = a.size;
    if (!a.well_formed()) {
        rep.violations.push_back({"tables total", {}, {"operation table out of range or wrong shape"}});
        return rep;
    }
    std::vector<std::uint64_t> xs(a.size);
    std::iota(xs.begin(), xs.end(), std::uint64_t{0});
    run_axioms(TableOps{a}, xs, rep, max_violations);
    return rep;
}

} // namespace cylneat
