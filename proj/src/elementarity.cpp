#include "cylneat/elementarity.hpp"

#include "cylneat/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

namespace cylneat {

namespace {

struct VecHash {
    std::size_t operator()(const std::vector<std::int32_t>& v) const {
        std::uint64_t h = v.size() * 0x9e3779b97f4a7c15ull;
        std::size_t i = 0;
        for (; i + 1 < v.size(); i += 2) {
            const std::uint64_t w = (std::uint64_t{static_cast<std::uint32_t>(v[i])} << 32) | static_cast<std::uint32_t>(v[i + 1]);
            h = (h ^ w) * 0xff51afd7ed558ccdull;
            h ^= h >> 29;
        }
        if (i < v.size()) h = (h ^ static_cast<std::uint32_t>(v[i])) * 0xc4ceb9fe1a85ec53ull;
        return static_cast<std::size_t>(h ^ (h >> 32));
    }
};

std::size_t ipow(std::size_t b, unsigned e) {
    std::size_t r = 1;
    for (unsigned i = 0; i < e; ++i) {
        if (b != 0 && r > SIZE_MAX / b) return SIZE_MAX;
        r *= b;
    }
    return r;
}

void require_signature(const RelStructure& a, const RelStructure& b) {
    if (!a.well_formed() || !b.well_formed()) throw UsageError("malformed structure");
    if (!a.same_signature(b)) throw UsageError("structures have different signatures");
}

} // namespace

std::uint32_t RelStructure::apply(std::size_t f, const std::uint32_t* args) const {
    const auto& fn = functions[f];
    std::size_t idx = 0;
    for (unsigned k = 0; k < fn.arity; ++k) idx = idx * size + args[k];
    return fn.table[idx];
}

bool RelStructure::same_signature(const RelStructure& o) const {
    if (functions.size() != o.functions.size() || constants.size() != o.constants.size()) return false;
    for (std::size_t f = 0; f < functions.size(); ++f)
        if (functions[f].name != o.functions[f].name || functions[f].arity != o.functions[f].arity) return false;
    for (std::size_t c = 0; c < constants.size(); ++c)
        if (constants[c].name != o.constants[c].name) return false;
    return true;
}

bool RelStructure::well_formed() const {
    if (size == 0) return false;
    for (const auto& f : functions) {
        if (f.table.size() != ipow(size, f.arity)) return false;
        for (auto v : f.table)
            if (v >= size) return false;
    }
    for (const auto& c : constants)
        if (c.value >= size) return false;
    return true;
}

std::string RelStructure::digest() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    auto mixs = [&](const std::string& s) {
        mix(s.size());
        for (char ch : s) mix(static_cast<unsigned char>(ch));
    };
    mix(size);
    for (const auto& f : functions) {
        mixs(f.name);
        mix(f.arity);
        for (auto v : f.table) mix(v);
    }
    for (const auto& c : constants) {
        mixs(c.name);
        mix(c.value);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

RelStructure ba_part(const AbstractCA& a) {
    RelStructure s;
    s.size = a.size;
    s.functions.push_back({"meet", 2, a.meet_table});
    s.functions.push_back({"compl", 1, a.compl_table});
    return s;
}

std::string dname(unsigned i, unsigned j) { return "d_" + std::to_string(i) + std::to_string(j); }

} // namespace

RelStructure encode_ca(const AbstractCA& a) {
    if (!a.well_formed()) throw UsageError("malformed algebra");
    RelStructure s = ba_part(a);
    for (unsigned i = 0; i < a.dim; ++i) s.functions.push_back({"c_" + std::to_string(i), 1, a.cyl_table[i]});
    s.constants.push_back({"0", a.zero});
    s.constants.push_back({"1", a.one});
    for (unsigned i = 0; i < a.dim; ++i)
        for (unsigned j = 0; j < a.dim; ++j) s.constants.push_back({dname(i, j), a.diag(i, j)});
    return s;
}

RelStructure encode_ba(const AbstractCA& a, const std::vector<std::pair<std::string, std::uint32_t>>& constants) {
    if (!a.well_formed()) throw UsageError("malformed algebra");
    RelStructure s = ba_part(a);
    for (const auto& [n, v] : constants) s.constants.push_back({n, v});
    if (!s.well_formed()) throw UsageError("constant outside universe");
    return s;
}

RelStructure encode_product(const ProductBA& p) {
    const std::size_t N = p.size();
    if (N > 4096) throw CapExceeded("product too large to encode: " + std::to_string(N) + " elements");
    RelStructure s;
    s.size = N;
    RelStructure::Function meet{"meet", 2, std::vector<std::uint32_t>(N * N)};
    RelStructure::Function compl_{"compl", 1, std::vector<std::uint32_t>(N)};
    std::vector<ProductElem> el(N);
    for (std::size_t x = 0; x < N; ++x) el[x] = p.element(x);
    for (std::size_t x = 0; x < N; ++x) {
        compl_.table[x] = static_cast<std::uint32_t>(p.index(p.compl_(el[x])));
        for (std::size_t y = 0; y < N; ++y) meet.table[x * N + y] = static_cast<std::uint32_t>(p.index(p.meet(el[x], el[y])));
    }
    s.functions.push_back(std::move(meet));
    s.functions.push_back(std::move(compl_));
    auto idx = [&](const ProductElem& e) { return static_cast<std::uint32_t>(p.index(e)); };
    s.constants.push_back({"0", idx(p.zero())});
    s.constants.push_back({"1", idx(p.unit())});
    for (std::size_t u = 0; u < p.one_u.size(); ++u) s.constants.push_back({"1_u" + std::to_string(u), idx(p.one_u[u])});
    for (unsigned i = 0; i < p.n; ++i)
        for (unsigned j = 0; j < p.n; ++j) s.constants.push_back({dname(i, j), idx(p.d(i, j))});
    return s;
}

std::string to_string(Player p) { return p == Player::duplicator ? "duplicator" : "spoiler"; }

// ---------------------------------------------------------------------------------------------
// Game solving by rank-r types. tp_0 is the atomic type of constants followed by the pebbles;
// tp_r adds the set of tp_{r-1} of all one-element extensions. Duplicator wins r rounds from
// (a, b) iff tp_r(a) == tp_r(b).

namespace {

using Tup = std::vector<std::uint32_t>;

class Solver {
public:
    Solver(const RelStructure& m1, const RelStructure& m2, std::size_t budget) : m_{&m1, &m2}, budget_(budget) {}

    const RelStructure& m(unsigned s) const { return *m_[s]; }

    std::vector<std::int32_t> atomic_key(unsigned s, const Tup& t) {
        fill_key(s, t);
        return key_;
    }

    // Writes the atomic type of constants followed by t into key_.
    void fill_key(unsigned s, const Tup& t) {
        const RelStructure& M = *m_[s];
        L_.clear();
        for (const auto& c : M.constants) L_.push_back(c.value);
        L_.insert(L_.end(), t.begin(), t.end());
        const std::size_t Ln = L_.size();
        const std::uint32_t* L = L_.data();
        auto pos = [&](std::uint32_t v) -> std::int32_t {
            for (std::size_t k = 0; k < Ln; ++k)
                if (L[k] == v) return static_cast<std::int32_t>(k);
            return -1;
        };
        key_.clear();
        for (std::size_t k = 0; k < Ln; ++k) key_.push_back(pos(L[k]));
        std::uint32_t args[8];
        for (std::size_t f = 0; f < M.functions.size(); ++f) {
            const auto& fn = M.functions[f];
            const unsigned ar = fn.arity;
            if (ar > 8) throw UsageError("arity above 8");
            const std::size_t combos = ipow(Ln, ar);
            work_ += combos;
            if (work_ > budget_) throw BudgetExceeded("game budget exhausted after " + std::to_string(work_) + " steps");
            if (ar == 1) {
                for (std::size_t a = 0; a < Ln; ++a) key_.push_back(pos(fn.table[L[a]]));
            } else if (ar == 2) {
                for (std::size_t a = 0; a < Ln; ++a) {
                    const std::uint32_t* row = fn.table.data() + std::size_t{L[a]} * M.size;
                    for (std::size_t b = 0; b < Ln; ++b) key_.push_back(pos(row[L[b]]));
                }
            } else {
                std::size_t c[8] = {};
                for (std::size_t n = 0; n < combos; ++n) {
                    for (unsigned k = 0; k < ar; ++k) args[k] = L[c[k]];
                    key_.push_back(pos(M.apply(f, args)));
                    for (unsigned k = ar; k-- > 0;) {
                        if (++c[k] < Ln) break;
                        c[k] = 0;
                    }
                }
            }
        }
    }

    std::uint32_t atype(unsigned s, const Tup& t) {
        fill_key(s, t);
        if (auto it = atoms_.find(key_); it != atoms_.end()) return it->second;
        return intern(atoms_, key_);
    }

    std::uint32_t type(unsigned s, Tup& t, unsigned r) {
        if (r == 0) return atype(s, t);
        std::vector<std::int32_t> mk{static_cast<std::int32_t>(s), static_cast<std::int32_t>(r)};
        mk.insert(mk.end(), t.begin(), t.end());
        if (auto it = memo_.find(mk); it != memo_.end()) return it->second;
        std::vector<std::int32_t> key{static_cast<std::int32_t>(r), static_cast<std::int32_t>(atype(s, t))};
        std::vector<std::int32_t> kids;
        const auto N = static_cast<std::uint32_t>(m_[s]->size);
        for (std::uint32_t x = 0; x < N; ++x) {
            t.push_back(x);
            kids.push_back(static_cast<std::int32_t>(type(s, t, r - 1)));
            t.pop_back();
        }
        if (cached_ints_ + N <= kKidsCache) {
            cached_ints_ += N;
            kids_.emplace(mk, std::vector<std::uint32_t>(kids.begin(), kids.end()));
        }
        std::sort(kids.begin(), kids.end());
        kids.erase(std::unique(kids.begin(), kids.end()), kids.end());
        key.insert(key.end(), kids.begin(), kids.end());
        const auto id = intern(types_, std::move(key));
        if (r >= 2 || memo_.size() < 4'000'000) memo_.emplace(std::move(mk), id);
        return id;
    }

    std::vector<std::uint32_t> child_types(unsigned s, Tup& t, unsigned r) {
        std::vector<std::int32_t> mk{static_cast<std::int32_t>(s), static_cast<std::int32_t>(r + 1)};
        mk.insert(mk.end(), t.begin(), t.end());
        if (auto it = kids_.find(mk); it != kids_.end()) return it->second;
        std::vector<std::uint32_t> out;
        for (std::uint32_t x = 0; x < m_[s]->size; ++x) {
            t.push_back(x);
            out.push_back(type(s, t, r));
            t.pop_back();
        }
        return out;
    }

    std::string describe(const Tup& a, const Tup& b) {
        const auto ka = atomic_key(0, a), kb = atomic_key(1, b);
        const RelStructure& M = *m_[0];
        const std::size_t Ls = M.constants.size() + a.size();
        auto nm = [&](std::int32_t k) -> std::string {
            if (k < 0) return "none of the named elements";
            if (static_cast<std::size_t>(k) < M.constants.size()) return M.constants[k].name;
            return "x" + std::to_string(k - M.constants.size());
        };
        std::size_t i = 0;
        for (; i < Ls; ++i)
            if (ka[i] != kb[i])
                return nm(static_cast<std::int32_t>(i)) + " = " + nm(ka[i] < kb[i] ? ka[i] : kb[i]) + " holds in " +
                       (ka[i] < kb[i] ? "left" : "right") + " only";
        for (std::size_t f = 0; f < M.functions.size(); ++f) {
            const unsigned ar = M.functions[f].arity;
            const std::size_t combos = ipow(Ls, ar);
            for (std::size_t n = 0; n < combos; ++n, ++i) {
                if (ka[i] == kb[i]) continue;
                std::string s = M.functions[f].name + "(";
                std::size_t rem = n;
                std::vector<std::size_t> c(ar);
                for (unsigned k = ar; k-- > 0;) {
                    c[k] = rem % Ls;
                    rem /= Ls;
                }
                for (unsigned k = 0; k < ar; ++k) s += (k ? "," : "") + nm(static_cast<std::int32_t>(c[k]));
                s += ")";
                return s + " is " + nm(ka[i]) + " on the left but " + nm(kb[i]) + " on the right";
            }
        }
        return "atomic types agree";
    }

    std::size_t work() const { return work_; }

private:
    static std::uint32_t intern(std::unordered_map<std::vector<std::int32_t>, std::uint32_t, VecHash>& m,
                                std::vector<std::int32_t> key) {
        auto [it, fresh] = m.try_emplace(std::move(key), static_cast<std::uint32_t>(m.size()));
        (void)fresh;
        return it->second;
    }

    const RelStructure* m_[2];
    std::size_t budget_;
    std::size_t work_ = 0;
    std::unordered_map<std::vector<std::int32_t>, std::uint32_t, VecHash> atoms_, types_, memo_;
    std::vector<std::uint32_t> L_;
    std::vector<std::int32_t> key_;
    static constexpr std::size_t kKidsCache = 32'000'000;
    std::size_t cached_ints_ = 0;
    std::unordered_map<std::vector<std::int32_t>, std::vector<std::uint32_t>, VecHash> kids_;
};

struct TreeBuilder {
    Solver& S;
    std::size_t limit;
    std::size_t nodes = 0;
    bool complete = true;

    std::unique_ptr<SpoilerNode> spoil(Tup& a, Tup& b, unsigned r) {
        auto node = std::make_unique<SpoilerNode>();
        ++nodes;
        if (S.atype(0, a) != S.atype(1, b)) {
            node->violation = S.describe(a, b);
            return node;
        }
        if (r == 0) throw std::logic_error("spoil called on a drawn position");
        const auto ta = S.child_types(0, a, r - 1), tb = S.child_types(1, b, r - 1);
        const std::set<std::uint32_t> sa(ta.begin(), ta.end()), sb(tb.begin(), tb.end());
        unsigned side = 2;
        std::uint32_t pick = 0;
        for (std::uint32_t x = 0; x < ta.size() && side == 2; ++x)
            if (!sb.count(ta[x])) side = 0, pick = x;
        for (std::uint32_t y = 0; y < tb.size() && side == 2; ++y)
            if (!sa.count(tb[y])) side = 1, pick = y;
        if (side == 2) throw std::logic_error("types differ but no separating move");
        node->side = side;
        node->element = pick;
        Tup& mine = side == 0 ? a : b;
        Tup& theirs = side == 0 ? b : a;
        mine.push_back(pick);
        const auto N = static_cast<std::uint32_t>(S.m(1 - side).size);
        for (std::uint32_t y = 0; y < N; ++y) {
            theirs.push_back(y);
            std::unique_ptr<SpoilerNode> child;
            if (nodes < limit) child = spoil(a, b, r - 1);
            else complete = false;
            node->answers.emplace_back(y, std::move(child));
            theirs.pop_back();
        }
        mine.pop_back();
        return node;
    }

    std::unique_ptr<DuplicatorNode> dup(Tup& a, Tup& b, unsigned r) {
        if (r == 0) return nullptr;
        auto node = std::make_unique<DuplicatorNode>();
        ++nodes;
        const auto ta = S.child_types(0, a, r - 1), tb = S.child_types(1, b, r - 1);
        auto answer = [](const std::vector<std::uint32_t>& want, const std::vector<std::uint32_t>& have) {
            std::vector<std::uint32_t> out;
            for (auto t : want) {
                auto it = std::find(have.begin(), have.end(), t);
                if (it == have.end()) throw std::logic_error("types equal but no answer");
                out.push_back(static_cast<std::uint32_t>(it - have.begin()));
            }
            return out;
        };
        node->answer_left = answer(ta, tb);
        node->answer_right = answer(tb, ta);
        if (r >= 2) {
            for (std::uint32_t x = 0; x < ta.size(); ++x) {
                a.push_back(x);
                b.push_back(node->answer_left[x]);
                if (nodes < limit) node->next_left.push_back(dup(a, b, r - 1));
                else node->next_left.push_back(nullptr), complete = false;
                a.pop_back();
                b.pop_back();
            }
            for (std::uint32_t y = 0; y < tb.size(); ++y) {
                b.push_back(y);
                a.push_back(node->answer_right[y]);
                if (nodes < limit) node->next_right.push_back(dup(a, b, r - 1));
                else node->next_right.push_back(nullptr), complete = false;
                a.pop_back();
                b.pop_back();
            }
        }
        return node;
    }
};

void split_start(const std::vector<Move>& start, const RelStructure& m1, const RelStructure& m2, Tup& a, Tup& b) {
    for (const auto& [x, y] : start) {
        if (x >= m1.size || y >= m2.size) throw UsageError("start map outside universe");
        a.push_back(x);
        b.push_back(y);
    }
}

bool is_identity_start(const std::vector<Move>& start) {
    return std::all_of(start.begin(), start.end(), [](const Move& m) { return m.first == m.second; });
}

bool iso_ok(const RelStructure& m1, const RelStructure& m2, const std::vector<std::uint32_t>& f) {
    if (m1.size != m2.size || f.size() != m1.size) return false;
    std::vector<char> hit(m2.size, 0);
    for (auto y : f) {
        if (y >= m2.size || hit[y]) return false;
        hit[y] = 1;
    }
    for (std::size_t c = 0; c < m1.constants.size(); ++c)
        if (f[m1.constants[c].value] != m2.constants[c].value) return false;
    for (std::size_t fn = 0; fn < m1.functions.size(); ++fn) {
        const unsigned ar = m1.functions[fn].arity;
        const std::size_t combos = ipow(m1.size, ar);
        std::uint32_t args[8], img[8];
        for (std::size_t n = 0; n < combos; ++n) {
            std::size_t rem = n;
            for (unsigned k = ar; k-- > 0;) {
                args[k] = static_cast<std::uint32_t>(rem % m1.size);
                img[k] = f[args[k]];
                rem /= m1.size;
            }
            if (f[m1.apply(fn, args)] != m2.apply(fn, img)) return false;
        }
    }
    return true;
}

} // namespace

GameCertificate ef_winner(const RelStructure& m1, const RelStructure& m2, unsigned q, const std::vector<Move>& start,
                          const GameOptions& opt) {
    require_signature(m1, m2);
    GameCertificate c;
    c.digest1 = m1.digest();
    c.digest2 = m2.digest();
    c.rounds = q;
    c.start = start;
    Tup a, b;
    split_start(start, m1, m2, a, b);
    if (opt.shortcuts && c.digest1 == c.digest2 && is_identity_start(start)) {
        c.kind = "identity";
        c.winner = Player::duplicator;
        return c;
    }
    Solver S(m1, m2, opt.budget);
    const bool dup = S.type(0, a, q) == S.type(1, b, q);
    c.kind = "strategy";
    c.winner = dup ? Player::duplicator : Player::spoiler;
    TreeBuilder tb{S, opt.tree_limit};
    if (dup) c.duplicator = tb.dup(a, b, q);
    else c.spoiler = tb.spoil(a, b, q);
    c.complete = tb.complete;
    c.positions = tb.nodes;
    return c;
}

namespace {

struct Replayer {
    Solver& S;
    std::string why;

    bool fail(std::string s) {
        if (why.empty()) why = std::move(s);
        return false;
    }

    bool dup_wins(Tup& a, Tup& b, unsigned r) { return S.type(0, a, r) == S.type(1, b, r); }

    bool spoiler(const SpoilerNode& n, Tup& a, Tup& b, unsigned r) {
        if (n.answers.empty()) {
            if (S.atype(0, a) == S.atype(1, b)) return fail("leaf is not an atomic violation");
            return true;
        }
        if (r == 0) return fail("move tree deeper than the round count");
        if (n.side > 1 || n.element >= S.m(n.side).size) return fail("illegal Spoiler move");
        const std::size_t N = S.m(1 - n.side).size;
        if (n.answers.size() != N) return fail("move tree misses a Duplicator answer");
        Tup& mine = n.side == 0 ? a : b;
        Tup& theirs = n.side == 0 ? b : a;
        mine.push_back(n.element);
        bool ok = true;
        for (std::size_t y = 0; y < N && ok; ++y) {
            if (n.answers[y].first != y) {
                ok = fail("answers out of order");
                break;
            }
            theirs.push_back(static_cast<std::uint32_t>(y));
            if (n.answers[y].second) ok = spoiler(*n.answers[y].second, a, b, r - 1);
            else if (dup_wins(a, b, r - 1)) ok = fail("elided branch is not a Spoiler win");
            theirs.pop_back();
        }
        mine.pop_back();
        return ok;
    }

    bool duplicator(const DuplicatorNode* n, Tup& a, Tup& b, unsigned r) {
        if (S.atype(0, a) != S.atype(1, b)) return fail("position is not a partial isomorphism: " + S.describe(a, b));
        if (r == 0) return true;
        if (!n) return dup_wins(a, b, r) ? true : fail("elided position is lost");
        if (n->answer_left.size() != S.m(0).size || n->answer_right.size() != S.m(1).size)
            return fail("response table has the wrong size");
        for (std::uint32_t x = 0; x < n->answer_left.size(); ++x) {
            const auto y = n->answer_left[x];
            if (y >= S.m(1).size) return fail("answer outside universe");
            a.push_back(x);
            b.push_back(y);
            const DuplicatorNode* nx = r >= 2 && x < n->next_left.size() ? n->next_left[x].get() : nullptr;
            const bool ok = duplicator(nx, a, b, r - 1);
            a.pop_back();
            b.pop_back();
            if (!ok) return false;
        }
        for (std::uint32_t y = 0; y < n->answer_right.size(); ++y) {
            const auto x = n->answer_right[y];
            if (x >= S.m(0).size) return fail("answer outside universe");
            a.push_back(x);
            b.push_back(y);
            const DuplicatorNode* nx = r >= 2 && y < n->next_right.size() ? n->next_right[y].get() : nullptr;
            const bool ok = duplicator(nx, a, b, r - 1);
            a.pop_back();
            b.pop_back();
            if (!ok) return false;
        }
        return true;
    }
};

} // namespace

bool replay(const GameCertificate& c, const RelStructure& m1, const RelStructure& m2, std::string* why,
            const GameOptions& opt) {
    auto out = [&](bool ok, const std::string& s) {
        if (!ok && why) *why = s;
        return ok;
    };
    require_signature(m1, m2);
    if (c.digest1 != m1.digest() || c.digest2 != m2.digest()) return out(false, "digest mismatch");
    Tup a, b;
    split_start(c.start, m1, m2, a, b);
    if (c.kind == "identity") {
        if (c.winner != Player::duplicator) return out(false, "identity certificate for Spoiler");
        return out(c.digest1 == c.digest2 && is_identity_start(c.start), "identity certificate on distinct inputs");
    }
    if (c.kind == "isomorphism") {
        if (c.winner != Player::duplicator) return out(false, "isomorphism certificate for Spoiler");
        if (!iso_ok(m1, m2, c.isomorphism)) return out(false, "map is not an isomorphism");
        for (const auto& [x, y] : c.start)
            if (c.isomorphism[x] != y) return out(false, "start map disagrees with the isomorphism");
        return true;
    }
    if (c.kind != "strategy") return out(false, "unknown certificate kind");
    Solver S(m1, m2, opt.budget);
    Replayer R{S, {}};
    bool ok;
    if (c.winner == Player::spoiler) {
        ok = c.spoiler ? R.spoiler(*c.spoiler, a, b, c.rounds) : R.fail("missing move tree");
    } else {
        ok = R.duplicator(c.duplicator.get(), a, b, c.rounds);
        if (ok && c.rounds > 0 && !c.duplicator) ok = R.fail("missing response table");
    }
    return out(ok, R.why);
}

// ---------------------------------------------------------------------------------------------
// theory_compare: the definable sets of the level (r, j) are Boolean combinations of atomic
// formulas in x_1..x_j plus sentences "exists x_{j+1}. phi" with phi definable at (r-1, j+1).
// Each level is stored as the partition of j-tuples of both structures by the truth values of
// its generators; two sentence-level tuples share a class iff every rank-r sentence agrees.

namespace {

struct Atom {
    enum Kind { eq, graph } kind;
    std::size_t f = 0;
    std::vector<int> args;  // term codes: < 0 is constant (-1-c), >= 0 is variable
    int out = 0;
};

std::vector<Atom> atomic_formulas(const RelStructure& m, unsigned j) {
    std::vector<int> terms;
    for (std::size_t c = 0; c < m.constants.size(); ++c) terms.push_back(-1 - static_cast<int>(c));
    for (unsigned v = 0; v < j; ++v) terms.push_back(static_cast<int>(v));
    std::vector<Atom> out;
    for (std::size_t s = 0; s < terms.size(); ++s)
        for (std::size_t t = s + 1; t < terms.size(); ++t) out.push_back({Atom::eq, 0, {terms[s]}, terms[t]});
    for (std::size_t f = 0; f < m.functions.size(); ++f) {
        const unsigned ar = m.functions[f].arity;
        const std::size_t combos = ipow(terms.size(), ar);
        for (std::size_t n = 0; n < combos; ++n) {
            std::vector<int> args(ar);
            std::size_t rem = n;
            for (unsigned k = ar; k-- > 0;) {
                args[k] = terms[rem % terms.size()];
                rem /= terms.size();
            }
            for (int o : terms) out.push_back({Atom::graph, f, args, o});
        }
    }
    return out;
}

bool holds(const RelStructure& m, const Atom& at, const Tup& t) {
    auto val = [&](int code) { return code < 0 ? m.constants[-1 - code].value : t[code]; };
    if (at.kind == Atom::eq) return val(at.args[0]) == val(at.out);
    std::uint32_t args[8];
    for (std::size_t k = 0; k < at.args.size(); ++k) args[k] = val(at.args[k]);
    return m.apply(at.f, args) == val(at.out);
}

Tup decode(std::size_t idx, std::size_t n, unsigned j) {
    Tup t(j);
    for (unsigned k = j; k-- > 0;) {
        t[k] = static_cast<std::uint32_t>(idx % n);
        idx /= n;
    }
    return t;
}

} // namespace

bool theory_compare(const RelStructure& m1, const RelStructure& m2, unsigned q, std::size_t budget) {
    require_signature(m1, m2);
    const RelStructure* ms[2] = {&m1, &m2};
    std::size_t work = 0;
    auto charge = [&](std::size_t w) {
        work += w;
        if (work > budget) throw BudgetExceeded("theory comparison budget exhausted");
    };
    // level[r][j]: class id for each j-tuple, structure 0 first, then structure 1.
    std::vector<std::vector<std::vector<std::uint32_t>>> level(q + 1, std::vector<std::vector<std::uint32_t>>(q + 1));
    auto count = [&](unsigned s, unsigned j) { return ipow(ms[s]->size, j); };
    for (unsigned j = 0; j <= q; ++j) {
        const auto atoms = atomic_formulas(m1, j);
        std::map<std::vector<bool>, std::uint32_t> cls;
        for (unsigned s = 0; s < 2; ++s) {
            charge(count(s, j) * (atoms.size() + 1));
            for (std::size_t idx = 0; idx < count(s, j); ++idx) {
                const Tup t = decode(idx, ms[s]->size, j);
                std::vector<bool> truth;
                truth.reserve(atoms.size());
                for (const auto& at : atoms) truth.push_back(holds(*ms[s], at, t));
                level[0][j].push_back(cls.try_emplace(truth, static_cast<std::uint32_t>(cls.size())).first->second);
            }
        }
    }
    for (unsigned r = 1; r <= q; ++r)
        for (unsigned j = 0; j + r <= q; ++j) {
            const auto& below = level[r - 1][j + 1];
            const auto& same = level[r - 1][j];
            std::map<std::vector<std::uint32_t>, std::uint32_t> cls;
            std::size_t off_j = 0, off_j1 = 0;
            for (unsigned s = 0; s < 2; ++s) {
                const std::size_t n = ms[s]->size;
                charge(count(s, j + 1));
                for (std::size_t idx = 0; idx < count(s, j); ++idx) {
                    // Generators true at this tuple: its old class and every class C with
                    // "exists x. C" true, i.e. the classes of its one-step extensions.
                    std::vector<std::uint32_t> sig{same[off_j + idx]};
                    std::set<std::uint32_t> ex;
                    for (std::size_t x = 0; x < n; ++x) ex.insert(below[off_j1 + idx * n + x]);
                    sig.insert(sig.end(), ex.begin(), ex.end());
                    level[r][j].push_back(cls.try_emplace(sig, static_cast<std::uint32_t>(cls.size())).first->second);
                }
                off_j += count(s, j);
                off_j1 += count(s, j + 1);
            }
        }
    return level[q][0][0] == level[q][0][1];
}

// ---------------------------------------------------------------------------------------------

namespace {

struct AtomView {
    std::vector<std::uint32_t> atoms;
    std::vector<std::uint64_t> mask;  // element -> atom set
    std::unordered_map<std::uint64_t, std::uint32_t> by_mask;
};

AtomView atom_view(const AbstractCA& a) {
    AtomView v;
    v.atoms = a.atoms();
    if (v.atoms.size() > 63) throw CapExceeded("more than 63 atoms");
    v.mask.resize(a.size);
    for (std::uint32_t x = 0; x < a.size; ++x) {
        std::uint64_t m = 0;
        for (std::size_t k = 0; k < v.atoms.size(); ++k)
            if (a.leq(v.atoms[k], x)) m |= std::uint64_t{1} << k;
        v.mask[x] = m;
        v.by_mask.emplace(m, x);
    }
    return v;
}

std::vector<std::vector<int>> restricted_growth(unsigned n, unsigned blocks) {
    std::vector<std::vector<int>> out;
    std::vector<int> a(n, 0);
    auto rec = [&](auto& self, unsigned i, int mx) -> void {
        if (i == n) {
            if (mx + 1 == static_cast<int>(blocks)) out.push_back(a);
            return;
        }
        for (int v = 0; v <= std::min(mx + 1, static_cast<int>(blocks) - 1); ++v) {
            // prune: remaining positions must be able to open the missing blocks
            const int newmx = std::max(mx, v);
            if (static_cast<int>(n - i - 1) < static_cast<int>(blocks) - 1 - newmx) continue;
            a[i] = v;
            self(self, i + 1, newmx);
        }
    };
    if (n == 0) {
        if (blocks == 0) out.emplace_back();
        return out;
    }
    rec(rec, 0, -1);
    return out;
}

} // namespace

SubAlgebra subalgebra_from_elements(const AbstractCA& ba, std::vector<std::uint32_t> elements) {
    std::sort(elements.begin(), elements.end());
    elements.erase(std::unique(elements.begin(), elements.end()), elements.end());
    SubAlgebra s;
    s.elements = elements;
    auto pos = [&](std::uint32_t x) {
        auto it = std::lower_bound(elements.begin(), elements.end(), x);
        if (it == elements.end() || *it != x) throw UsageError("element set is not closed under the operations");
        return static_cast<std::uint32_t>(it - elements.begin());
    };
    AbstractCA& a = s.algebra;
    a.dim = 0;
    a.size = elements.size();
    a.meet_table.resize(a.size * a.size);
    a.compl_table.resize(a.size);
    for (std::size_t i = 0; i < a.size; ++i) {
        a.compl_table[i] = pos(ba.compl_(elements[i]));
        for (std::size_t j = 0; j < a.size; ++j) a.meet_table[i * a.size + j] = pos(ba.meet(elements[i], elements[j]));
    }
    a.zero = pos(ba.zero);
    a.one = pos(ba.one);
    if (!ba.origin.empty())
        for (auto x : elements) a.origin.push_back(ba.origin[x]);
    s.improper = a.size == ba.size;
    return s;
}

SubAlgebra find_q_subalgebra(const AbstractCA& ba, const std::vector<std::pair<std::string, std::uint32_t>>& constants,
                             unsigned q, unsigned L, const GameOptions& opt) {
    const AtomView av = atom_view(ba);
    const auto k = static_cast<unsigned>(av.atoms.size());
    const RelStructure amb = encode_ba(ba, constants);
    std::size_t tried = 0;
    for (unsigned blocks = 1; blocks < k; ++blocks) {
        for (const auto& rgs : restricted_growth(k, blocks)) {
            std::vector<std::uint64_t> bm(blocks, 0);
            for (unsigned t = 0; t < k; ++t) bm[rgs[t]] |= std::uint64_t{1} << t;
            // constants must be unions of blocks
            bool ok = true;
            for (const auto& c : constants) {
                const auto m = av.mask[c.second];
                for (auto b : bm)
                    if ((m & b) != 0 && (m & b) != b) ok = false;
            }
            if (!ok) continue;
            ++tried;
            std::vector<std::uint32_t> els;
            for (std::uint64_t sel = 0; sel < (std::uint64_t{1} << blocks); ++sel) {
                std::uint64_t m = 0;
                for (unsigned b = 0; b < blocks; ++b)
                    if ((sel >> b) & 1u) m |= bm[b];
                els.push_back(av.by_mask.at(m));
            }
            SubAlgebra cand = subalgebra_from_elements(ba, els);
            std::vector<std::pair<std::string, std::uint32_t>> sc;
            for (const auto& [n, v] : constants)
                sc.emplace_back(n, static_cast<std::uint32_t>(
                                       std::lower_bound(cand.elements.begin(), cand.elements.end(), v) - cand.elements.begin()));
            const RelStructure sub = encode_ba(cand.algebra, sc);
            bool good = true;
            for (unsigned len = 0; len <= L && good; ++len) {
                const std::size_t tuples = ipow(cand.elements.size(), len);
                for (std::size_t t = 0; t < tuples && good; ++t) {
                    const Tup tp = decode(t, cand.elements.size(), len);
                    std::vector<Move> start;
                    for (auto x : tp) start.emplace_back(x, cand.elements[x]);
                    good = ef_winner(sub, amb, q, start, opt).winner == Player::duplicator;
                }
            }
            if (good) {
                cand.candidates_tried = tried;
                cand.q = q;
                cand.L = L;
                return cand;
            }
        }
    }
    std::vector<std::uint32_t> all(ba.size);
    std::iota(all.begin(), all.end(), 0u);
    SubAlgebra s = subalgebra_from_elements(ba, all);
    s.flag_no_proper = true;
    s.candidates_tried = tried;
    s.q = q;
    s.L = L;
    return s;
}

std::vector<std::pair<std::string, std::uint32_t>> id_factor_constants(const ProductBA& p) {
    const auto id = p.identity_index();
    std::vector<std::pair<std::string, std::uint32_t>> out;
    out.emplace_back("0", p.zero()[id]);
    out.emplace_back("1", p.unit()[id]);
    for (std::size_t u = 0; u < p.one_u.size(); ++u) out.emplace_back("1_u" + std::to_string(u), p.one_u[u][id]);
    for (unsigned i = 0; i < p.n; ++i)
        for (unsigned j = 0; j < p.n; ++j) out.emplace_back(dname(i, j), p.d(i, j)[id]);
    return out;
}

std::vector<std::uint32_t> QStructure::embed_all() const { return id_embedding; }

QStructure build_Q(const SubAlgebra& bId, const ProductBA& p) {
    const auto id = p.identity_index();
    const AbstractCA& full = p.factors[id];
    for (auto x : bId.elements)
        if (x >= full.size) throw UsageError("subalgebra element outside the Id factor");
    // closure under the Boolean operations of the Id factor
    subalgebra_from_elements(full, bId.elements);
    QStructure out;
    out.product = p;
    out.id_embedding = bId.elements;
    auto pos = [&](std::uint32_t x) {
        auto it = std::lower_bound(bId.elements.begin(), bId.elements.end(), x);
        if (it == bId.elements.end() || *it != x) throw UsageError("subalgebra misses a constant of the Id factor");
        return static_cast<std::uint32_t>(it - bId.elements.begin());
    };
    SubAlgebra sub = subalgebra_from_elements(full, bId.elements);
    out.product.factors[id] = sub.algebra;
    for (auto& e : out.product.one_u) e[id] = pos(e[id]);
    for (auto& e : out.product.diag) e[id] = pos(e[id]);
    return out;
}

std::vector<std::uint32_t> q_into_p(const QStructure& q, const ProductBA& p) {
    const auto id = p.identity_index();
    const std::size_t N = q.product.size();
    std::vector<std::uint32_t> out(N);
    for (std::size_t x = 0; x < N; ++x) {
        ProductElem e = q.product.element(x);
        e[id] = q.id_embedding.at(e[id]);
        out[x] = static_cast<std::uint32_t>(p.index(e));
    }
    return out;
}

ElementarityReport check_q_elementary(const QStructure& q, const ProductBA& p, unsigned rounds, unsigned L,
                                      const GameOptions& opt) {
    ElementarityReport r;
    const auto id = p.identity_index();
    if (q.product.factors[id].size == p.factors[id].size) {
        r.method = "identity";
        r.parameter_tuples = 0;
        return r;
    }
    r.method = "games";
    const RelStructure mq = encode_product(q.product), mp = encode_product(p);
    const auto emb = q_into_p(q, p);
    for (unsigned len = 0; len <= L; ++len) {
        const std::size_t tuples = ipow(mq.size, len);
        for (std::size_t t = 0; t < tuples; ++t) {
            const Tup tp = decode(t, mq.size, len);
            std::vector<Move> start;
            for (auto x : tp) start.emplace_back(x, emb[x]);
            ++r.parameter_tuples;
            GameOptions o = opt;
            o.tree_limit = 1;
            if (ef_winner(mq, mp, rounds, start, o).winner != Player::duplicator) {
                r.pass = false;
                std::string s = "parameters (";
                for (std::size_t k = 0; k < tp.size(); ++k) s += (k ? "," : "") + elem_string(q.product.element(tp[k]));
                r.failures.push_back(s + ")");
                if (r.failures.size() >= 8) return r;
            }
        }
    }
    return r;
}

AbstractCA apply_interpretation(const ProductBA& q) {
    const std::size_t N = q.size();
    if (N > 4096) throw CapExceeded("interpreted structure too large: " + std::to_string(N));
    const std::size_t Vn = q.V.size();
    AbstractCA b;
    b.dim = q.n;
    b.size = N;
    std::vector<ProductElem> el(N);
    for (std::size_t x = 0; x < N; ++x) el[x] = q.element(x);
    b.meet_table.resize(N * N);
    b.compl_table.resize(N);
    for (std::size_t x = 0; x < N; ++x) {
        b.compl_table[x] = static_cast<std::uint32_t>(q.index(q.compl_(el[x])));
        for (std::size_t y = 0; y < N; ++y) b.meet_table[x * N + y] = static_cast<std::uint32_t>(q.index(q.meet(el[x], el[y])));
    }
    b.zero = static_cast<std::uint32_t>(q.index(q.zero()));
    b.one = static_cast<std::uint32_t>(q.index(q.unit()));
    for (unsigned i = 0; i < q.n; ++i)
        for (unsigned j = 0; j < q.n; ++j) b.diag_table.push_back(static_cast<std::uint32_t>(q.index(q.d(i, j))));
    const bool has_origin = q.unit_masks.size() == Vn &&
                            std::all_of(q.factors.begin(), q.factors.end(), [](const AbstractCA& f) { return !f.origin.empty(); });
    auto set_string = [&](std::uint64_t S) {
        std::string s = "{";
        bool first = true;
        for (std::size_t u = 0; u < Vn; ++u)
            if ((S >> u) & 1u) {
                s += (first ? "" : ",") + std::to_string(u);
                first = false;
            }
        return s + "}";
    };
    b.cyl_table.assign(q.n, std::vector<std::uint32_t>(N));
    for (unsigned i = 0; i < q.n; ++i) {
        const Formula eta = eta_i_formula(i, q);
        for (std::size_t x = 0; x < N; ++x) {
            std::uint64_t S = 0;
            for (std::size_t u = 0; u < Vn; ++u)
                if (el[x][u] != q.factors[u].zero) S |= std::uint64_t{1} << u;
            // the value t_S must be present: its component at v is the unit of A_v when some
            // u in S is i-equivalent to v, else 0
            std::size_t expected = SIZE_MAX;
            if (has_origin) {
                ProductElem want(Vn);
                for (std::size_t v = 0; v < Vn; ++v) {
                    bool in = false;
                    for (std::size_t u = 0; u < Vn && !in; ++u) in = ((S >> u) & 1u) && equiv_i(q.V[u], q.V[v], i);
                    const std::uint64_t need = in ? q.unit_masks[v] : 0;
                    const auto& org = q.factors[v].origin;
                    auto it = std::lower_bound(org.begin(), org.end(), need);
                    if (it == org.end() || *it != need)
                        throw ClosureFailure("t_S value absent from the universe (S=" + set_string(S) + ", i=" +
                                                 std::to_string(i) + ")",
                                             i, set_string(S));
                    want[v] = static_cast<std::uint32_t>(it - org.begin());
                }
                expected = q.index(want);
            }
            Assignment env(2);
            env[kVarX] = el[x];
            const Formula res = partial_eval(q, eta, env);
            std::size_t found = 0;
            std::uint32_t y0 = 0;
            for (std::size_t y = 0; y < N; ++y) {
                Assignment e2(2);
                e2[kVarY] = el[y];
                if (eval_formula(q, res, e2)) {
                    if (found++ == 0) y0 = static_cast<std::uint32_t>(y);
                }
            }
            if (found != 1)
                throw ClosureFailure("eta_" + std::to_string(i) + " is not functional at x=" + elem_string(el[x]) + " (" +
                                         std::to_string(found) + " values, S=" + set_string(S) + ")",
                                     i, set_string(S));
            if (expected != SIZE_MAX && y0 != expected)
                throw ClosureFailure("eta_" + std::to_string(i) + " picks a value other than t_S (S=" + set_string(S) + ")",
                                     i, set_string(S));
            b.cyl_table[i][x] = y0;
        }
    }
    if (has_origin)
        for (std::size_t x = 0; x < N; ++x) b.origin.push_back(f_inverse(el[x], q));
    return b;
}

// ---------------------------------------------------------------------------------------------

bool is_ca_isomorphism(const AbstractCA& b, const AbstractCA& a, const std::vector<std::uint32_t>& map) {
    if (b.dim != a.dim) return false;
    return iso_ok(encode_ca(b), encode_ca(a), map);
}

std::vector<std::uint32_t> find_ca_isomorphism(const AbstractCA& b, const AbstractCA& a) {
    if (b.dim != a.dim || b.size != a.size) return {};
    const AtomView vb = atom_view(b), va = atom_view(a);
    const std::size_t k = vb.atoms.size();
    if (va.atoms.size() != k) return {};
    const unsigned n = b.dim;
    // per-atom: c_i image as atom set, diagonal membership
    auto profile = [&](const AbstractCA& c, const AtomView& v, std::vector<std::vector<std::uint64_t>>& cyl,
                       std::vector<std::uint64_t>& diag) {
        cyl.assign(k, std::vector<std::uint64_t>(n));
        diag.assign(k, 0);
        for (std::size_t t = 0; t < k; ++t) {
            for (unsigned i = 0; i < n; ++i) cyl[t][i] = v.mask[c.cyl(i, v.atoms[t])];
            for (unsigned i = 0; i < n * n; ++i)
                if (c.leq(v.atoms[t], c.diag_table[i])) diag[t] |= std::uint64_t{1} << i;
        }
    };
    std::vector<std::vector<std::uint64_t>> cb, ca;
    std::vector<std::uint64_t> db, da;
    profile(b, vb, cb, db);
    profile(a, va, ca, da);
    auto inv = [&](const std::vector<std::vector<std::uint64_t>>& cyl, const std::vector<std::uint64_t>& d, std::size_t t) {
        std::vector<std::uint64_t> s{d[t]};
        for (unsigned i = 0; i < n; ++i) s.push_back(static_cast<std::uint64_t>(__builtin_popcountll(cyl[t][i])));
        return s;
    };
    std::vector<int> m(k, -1);
    std::vector<char> used(k, 0);
    auto consistent = [&](std::size_t t) {
        for (std::size_t s = 0; s <= t; ++s)
            for (unsigned i = 0; i < n; ++i) {
                if (((cb[t][i] >> s) & 1u) != ((ca[m[t]][i] >> m[s]) & 1u)) return false;
                if (((cb[s][i] >> t) & 1u) != ((ca[m[s]][i] >> m[t]) & 1u)) return false;
            }
        return true;
    };
    std::vector<std::uint32_t> result;
    auto rec = [&](auto& self, std::size_t t) -> bool {
        if (t == k) {
            std::vector<std::uint32_t> f(b.size);
            for (std::uint32_t x = 0; x < b.size; ++x) {
                std::uint64_t mm = 0;
                for (std::size_t s = 0; s < k; ++s)
                    if ((vb.mask[x] >> s) & 1u) mm |= std::uint64_t{1} << m[s];
                auto it = va.by_mask.find(mm);
                if (it == va.by_mask.end()) return false;
                f[x] = it->second;
            }
            if (!is_ca_isomorphism(b, a, f)) return false;
            result = std::move(f);
            return true;
        }
        const auto want = inv(cb, db, t);
        for (std::size_t c = 0; c < k; ++c) {
            if (used[c] || inv(ca, da, c) != want) continue;
            m[t] = static_cast<int>(c);
            used[c] = 1;
            if (consistent(t) && self(self, t + 1)) return true;
            used[c] = 0;
            m[t] = -1;
        }
        return false;
    };
    rec(rec, 0);
    return result;
}

GameCertificate check_equiv(const AbstractCA& b, const AbstractCA& a, unsigned q, const GameOptions& opt) {
    if (b.dim != a.dim) throw UsageError("algebras of different dimension");
    const RelStructure mb = encode_ca(b), ma = encode_ca(a);
    if (opt.shortcuts && b.size == a.size) {
        auto iso = find_ca_isomorphism(b, a);
        if (!iso.empty()) {
            GameCertificate c;
            c.digest1 = mb.digest();
            c.digest2 = ma.digest();
            c.rounds = q;
            c.winner = Player::duplicator;
            c.kind = "isomorphism";
            c.isomorphism = std::move(iso);
            return c;
        }
    }
    return ef_winner(mb, ma, q, {}, opt);
}

} // namespace cylneat
