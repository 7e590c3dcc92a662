#include "cylneat/neat.hpp"

#include "cylneat/elementarity.hpp"
#include "cylneat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace cylneat {

std::string to_string(DilationOutcome o) {
    switch (o) {
    case DilationOutcome::witness: return "witness";
    case DilationOutcome::refutation: return "refutation";
    default: return "inconclusive";
    }
}

DilationHint hint_from(const SetCA& a) { return {a.atoms()}; }

namespace {

struct Shape {
    std::vector<std::uint32_t> atoms;
    std::vector<std::uint64_t> mask;  // element -> atoms below it
    std::unordered_map<std::uint64_t, std::uint32_t> by_mask;
    std::vector<std::vector<std::uint64_t>> cls;   // [i][atom] -> atoms of c_i(atom)
    std::vector<std::uint64_t> diag;               // [atom] -> bit i*n+j when atom <= d_ij
};

Shape shape_of(const AbstractCA& b) {
    Shape s;
    s.atoms = b.atoms();
    if (s.atoms.size() > 63) throw CapExceeded("more than 63 atoms");
    s.mask.resize(b.size);
    for (std::uint32_t x = 0; x < b.size; ++x) {
        std::uint64_t m = 0;
        for (std::size_t a = 0; a < s.atoms.size(); ++a)
            if (b.leq(s.atoms[a], x)) m |= std::uint64_t{1} << a;
        s.mask[x] = m;
        s.by_mask.emplace(m, x);
    }
    if (s.by_mask.size() != b.size) throw UsageError("algebra is not atomic");
    s.cls.assign(b.dim, std::vector<std::uint64_t>(s.atoms.size()));
    s.diag.assign(s.atoms.size(), 0);
    for (std::size_t a = 0; a < s.atoms.size(); ++a) {
        for (unsigned i = 0; i < b.dim; ++i) s.cls[i][a] = s.mask[b.cyl(i, s.atoms[a])];
        for (unsigned i = 0; i < b.dim * b.dim; ++i)
            if (b.leq(s.atoms[a], b.diag_table[i])) s.diag[a] |= std::uint64_t{1} << i;
    }
    return s;
}

// Builds D from n-dimensional atom images and checks Nr_n D against b.
std::optional<DilationWitness> try_images(const AbstractCA& b, const Shape& sh, unsigned n, unsigned k,
                                          const std::vector<Region>& images, const char* source) {
    if (images.size() != sh.atoms.size()) return std::nullopt;
    const BasePtr& base = images.front().base();
    std::vector<Region> lifted;
    for (const auto& r : images) {
        if (r.dim() != n || !same_base(r.base(), base) || r.empty()) return std::nullopt;
        lifted.push_back(lift(r, n + k));
    }
    SetCA D = SetCA::generate(base, n + k, lifted);
    SetCA Nr = neat_reduct(D, n);
    if (Nr.atom_count() != sh.atoms.size()) return std::nullopt;
    std::vector<Region> unions(b.size, Region(base, n));
    for (std::uint32_t x = 0; x < b.size; ++x)
        for (std::size_t a = 0; a < sh.atoms.size(); ++a)
            if ((sh.mask[x] >> a) & 1u) unions[x] = unions[x] | images[a];
    DilationWitness w;
    w.n = n;
    w.k = k;
    w.base_size = base->size();
    for (std::uint32_t x = 0; x < b.size; ++x) {
        auto el = Nr.element_of(unions[x]);
        if (!el) return std::nullopt;
        w.map.push_back(Nr.mask(*el));
    }
    const AbstractCA nr = abstractize(Nr);
    std::vector<std::uint32_t> m32(w.map.begin(), w.map.end());
    if (!is_ca_isomorphism(b, nr, m32)) return std::nullopt;
    w.D = std::move(D);
    w.atom_images = images;
    w.source = source;
    return w;
}

class CellSearch {
public:
    CellSearch(const AbstractCA& b, const Shape& sh, unsigned n, unsigned k, std::size_t s, std::size_t budget)
        : b_(b), sh_(sh), n_(n), k_(k), s_(s), budget_(budget), space_(s, n) {
        const std::size_t N = space_.count();
        // diagonal cells first, then the rest in index order
        for (std::size_t p = 0; p < s; ++p) order_.push_back(space_.index(Tuple(n, static_cast<std::uint32_t>(p))));
        for (std::size_t c = 0; c < N; ++c)
            if (!is_diag_cell(c)) order_.push_back(c);
        allowed_.resize(N);
        for (std::size_t c = 0; c < N; ++c) {
            const Tuple t = space_.tuple(c);
            std::uint64_t want = 0;
            for (unsigned i = 0; i < n; ++i)
                for (unsigned j = 0; j < n; ++j)
                    if (t[i] == t[j]) want |= std::uint64_t{1} << (i * n + j);
            for (std::size_t a = 0; a < sh.atoms.size(); ++a)
                if (sh.diag[a] == want) allowed_[c].push_back(static_cast<std::uint32_t>(a));
        }
        line_of_.assign(n, std::vector<std::size_t>(N));
        for (unsigned i = 0; i < n; ++i)
            for (std::size_t c = 0; c < N; ++c) line_of_[i][c] = c - space_.coord(c, i) * space_.stride(i);
        line_mask_.assign(n, std::vector<std::uint64_t>(N, 0));
        line_seen_.assign(n, std::vector<std::uint64_t>(N, 0));
        line_free_.assign(n, std::vector<std::uint32_t>(N, static_cast<std::uint32_t>(s)));
        label_.assign(N, UINT32_MAX);
        used_.assign(sh.atoms.size(), 0);
    }

    std::optional<DilationWitness> run(BaseSearchStats& st) {
        stats_ = &st;
        return rec(0);
    }

private:
    bool is_diag_cell(std::size_t c) const {
        for (unsigned i = 1; i < n_; ++i)
            if (space_.coord(c, i) != space_.coord(c, 0)) return false;
        return true;
    }

    std::optional<DilationWitness> rec(std::size_t pos) {
        if (stats_->nodes > budget_) return std::nullopt;
        const std::size_t N = order_.size();
        const std::size_t missing = std::count(used_.begin(), used_.end(), 0u);
        if (missing > N - pos) return std::nullopt;
        if (pos == N) return candidate();
        const std::size_t c = order_[pos];
        for (auto a : allowed_[c]) {
            // diagonal labels nondecreasing: point renamings are quotiented out
            if (pos > 0 && pos < s_ && a < label_[order_[pos - 1]]) continue;
            ++stats_->nodes;
            if (stats_->nodes > budget_) return std::nullopt;
            if (!place(c, a)) continue;
            auto w = rec(pos + 1);
            unplace(c, a);
            if (w || stats_->nodes > budget_) return w;
        }
        return std::nullopt;
    }

    bool place(std::size_t c, std::uint32_t a) {
        const std::uint64_t bit = std::uint64_t{1} << a;
        for (unsigned i = 0; i < n_; ++i) {
            const std::size_t l = line_of_[i][c];
            const std::uint64_t m = line_mask_[i][l] ? line_mask_[i][l] : sh_.cls[i][a];
            if (m != sh_.cls[i][a]) return false;
            const std::uint64_t seen = line_seen_[i][l] | bit;
            const auto need = static_cast<std::uint32_t>(__builtin_popcountll(m & ~seen));
            if (need > line_free_[i][l] - 1) return false;
        }
        for (unsigned i = 0; i < n_; ++i) {
            const std::size_t l = line_of_[i][c];
            saved_.push_back({line_mask_[i][l], line_seen_[i][l]});
            line_mask_[i][l] = sh_.cls[i][a];
            line_seen_[i][l] |= bit;
            --line_free_[i][l];
        }
        label_[c] = a;
        ++used_[a];
        return true;
    }

    void unplace(std::size_t c, std::uint32_t a) {
        for (unsigned i = n_; i-- > 0;) {
            const std::size_t l = line_of_[i][c];
            line_mask_[i][l] = saved_.back().first;
            line_seen_[i][l] = saved_.back().second;
            saved_.pop_back();
            ++line_free_[i][l];
        }
        label_[c] = UINT32_MAX;
        --used_[a];
    }

    std::optional<DilationWitness> candidate() {
        ++stats_->candidates;
        const BasePtr base = Base::numbered(s_);
        std::vector<Region> images(sh_.atoms.size(), Region(base, n_));
        for (std::size_t c = 0; c < label_.size(); ++c) images[label_[c]].bits().set(c);
        auto w = try_images(b_, sh_, n_, k_, images, "search");
        if (!w) ++stats_->rejected;
        return w;
    }

    const AbstractCA& b_;
    const Shape& sh_;
    unsigned n_, k_;
    std::size_t s_, budget_;
    TupleSpace space_;
    std::vector<std::size_t> order_;
    std::vector<std::vector<std::uint32_t>> allowed_;
    std::vector<std::vector<std::size_t>> line_of_;
    std::vector<std::vector<std::uint64_t>> line_mask_, line_seen_;
    std::vector<std::vector<std::uint32_t>> line_free_;
    std::vector<std::uint32_t> label_;
    std::vector<std::uint32_t> used_;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> saved_;
    BaseSearchStats* stats_ = nullptr;
};

} // namespace

DilationResult dilation_search(const AbstractCA& b, unsigned n, unsigned k, std::size_t max_base,
                               const DilationOptions& opt) {
    if (!b.well_formed()) throw UsageError("malformed algebra");
    if (b.dim != n || n == 0) throw UsageError("algebra dimension differs from n");
    if (max_base == 0) throw UsageError("max base must be positive");
    DilationResult r;
    r.digest = encode_ca(b).digest();
    r.n = n;
    r.k = k;
    r.max_base = max_base;
    if (b.size == 1) {
        DilationWitness w;
        w.n = n;
        w.k = k;
        w.base_size = 1;
        w.degenerate = true;
        w.map = {0};
        w.source = "search";
        r.per_base.push_back({1, 0, 0, 0, true});
        r.witness = std::move(w);
        r.outcome = DilationOutcome::witness;
        return r;
    }
    const Shape sh = shape_of(b);
    bool all_exhausted = true;
    for (std::size_t s = 1; s <= max_base; ++s) {
        BaseSearchStats st;
        st.base_size = s;
        for (const auto& h : opt.hints) {
            if (h.atom_images.empty() || h.atom_images.front().base()->size() != s) continue;
            if (auto w = try_images(b, sh, n, k, h.atom_images, "hint")) {
                st.candidates = 1;
                r.per_base.push_back(st);
                r.witness = std::move(w);
                r.outcome = DilationOutcome::witness;
                return r;
            }
        }
        const double cells = std::pow(static_cast<double>(s), n);
        if (cells > 1e6) throw CapExceeded("base " + std::to_string(s) + " gives too many cells");
        CellSearch cs(b, sh, n, k, s, opt.node_budget);
        auto w = cs.run(st);
        st.exhausted = !w && st.nodes <= opt.node_budget;
        r.per_base.push_back(st);
        if (w) {
            r.witness = std::move(w);
            r.outcome = DilationOutcome::witness;
            return r;
        }
        all_exhausted = all_exhausted && st.exhausted;
    }
    r.outcome = all_exhausted ? DilationOutcome::refutation : DilationOutcome::inconclusive;
    return r;
}

bool verify_dilation_witness(const AbstractCA& b, const DilationWitness& w, std::string* why) {
    auto no = [&](const std::string& s) {
        if (why) *why = s;
        return false;
    };
    if (b.dim != w.n) return no("dimension mismatch");
    if (w.degenerate) {
        if (b.size != 1) return no("degenerate witness for a non-degenerate algebra");
        return w.map == std::vector<std::uint64_t>{0} ? true : no("bad map");
    }
    if (!w.D) return no("missing dilation");
    const SetCA& D = *w.D;
    if (D.dim() != w.n + w.k) return no("dilation has the wrong dimension");
    const AxiomReport ax = check_ca_axioms(D);
    if (!ax.pass()) {
        const auto& v = ax.violations.front();
        std::string s = "dilation fails " + v.axiom;
        for (const auto& x : v.witnesses) s += " " + x;
        return no(s);
    }
    try {
        const SetCA Nr = neat_reduct(D, w.n);
        const AbstractCA nr = abstractize(Nr);
        if (w.map.size() != b.size) return no("map has the wrong size");
        std::vector<std::uint32_t> m32;
        for (auto x : w.map) {
            if (x >= nr.size) return no("map leaves the neat reduct");
            m32.push_back(static_cast<std::uint32_t>(x));
        }
        if (!is_ca_isomorphism(b, nr, m32)) {
            for (std::uint32_t x = 0; x < b.size; ++x)
                for (unsigned i = 0; i < b.dim; ++i)
                    if (m32[b.cyl(i, x)] != nr.cyl(i, m32[x]))
                        return no("c_" + std::to_string(i) + " does not commute at element " + std::to_string(x));
            for (std::uint32_t x = 0; x < b.size; ++x)
                for (std::uint32_t y = 0; y < b.size; ++y)
                    if (m32[b.meet(x, y)] != nr.meet(m32[x], m32[y]))
                        return no("meet does not commute at " + std::to_string(x) + "," + std::to_string(y));
            return no("map is not an isomorphism onto the neat reduct");
        }
    } catch (const std::exception& e) {
        return no(std::string("neat reduct failed: ") + e.what());
    }
    return true;
}

} // namespace cylneat
