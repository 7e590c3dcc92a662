#include "cylneat/interpretation.hpp"

#include "cylneat/errors.hpp"

#include <algorithm>
#include <unordered_set>

namespace cylneat {

namespace {

std::string mask_string(std::uint64_t m) {
    std::string s = "{";
    bool first = true;
    for (unsigned a = 0; a < 64; ++a)
        if ((m >> a) & 1u) {
            s += (first ? "" : ",") + std::string("a") + std::to_string(a);
            first = false;
        }
    return s + "}";
}

void record(CheckResult& c, std::string what) {
    c.pass = false;
    if (c.counterexamples.size() < 16) c.counterexamples.push_back(std::move(what));
}

} // namespace

std::string elem_string(const ProductElem& e) {
    std::string s = "[";
    for (std::size_t i = 0; i < e.size(); ++i) s += (i ? "," : "") + std::to_string(e[i]);
    return s + "]";
}

std::size_t ProductBA::identity_index() const {
    for (std::size_t k = 0; k < V.size(); ++k) {
        bool id = true;
        for (unsigned i = 0; i < n && id; ++i) id = V[k][i] == i;
        if (id) return k;
    }
    throw UsageError("index set lacks the identity map");
}

std::size_t ProductBA::size() const {
    std::size_t s = 1;
    for (const auto& f : factors) {
        if (s > SIZE_MAX / std::max<std::size_t>(f.size, 1)) return SIZE_MAX;
        s *= f.size;
    }
    return s;
}

ProductElem ProductBA::zero() const {
    ProductElem e(factors.size());
    for (std::size_t u = 0; u < factors.size(); ++u) e[u] = factors[u].zero;
    return e;
}

ProductElem ProductBA::unit() const {
    ProductElem e(factors.size());
    for (std::size_t u = 0; u < factors.size(); ++u) e[u] = factors[u].one;
    return e;
}

ProductElem ProductBA::meet(const ProductElem& a, const ProductElem& b) const {
    ProductElem e(factors.size());
    for (std::size_t u = 0; u < factors.size(); ++u) e[u] = factors[u].meet(a[u], b[u]);
    return e;
}

ProductElem ProductBA::join(const ProductElem& a, const ProductElem& b) const {
    ProductElem e(factors.size());
    for (std::size_t u = 0; u < factors.size(); ++u) e[u] = factors[u].join(a[u], b[u]);
    return e;
}

ProductElem ProductBA::compl_(const ProductElem& a) const {
    ProductElem e(factors.size());
    for (std::size_t u = 0; u < factors.size(); ++u) e[u] = factors[u].compl_(a[u]);
    return e;
}

std::size_t ProductBA::index(const ProductElem& a) const {
    std::size_t idx = 0;
    for (std::size_t u = 0; u < factors.size(); ++u) idx = idx * factors[u].size + a[u];
    return idx;
}

ProductElem ProductBA::element(std::size_t idx) const {
    ProductElem e(factors.size());
    for (std::size_t u = factors.size(); u-- > 0;) {
        e[u] = static_cast<std::uint32_t>(idx % factors[u].size);
        idx /= factors[u].size;
    }
    return e;
}

ProductBA make_product(const SetCA& A, const BlockedBase& bb, std::size_t cap) {
    A.carrier_size(cap);
    if (A.dim() != bb.n) throw UsageError("algebra and blocked base disagree on dimension");
    ProductBA p;
    p.n = bb.n;
    p.V = all_maps(bb.n);
    for (const auto& u : p.V) {
        // Atoms meeting 1_u; the factor is {a . 1_u : a in A}, one element per sub-mask.
        const Region ou = one_u(u, bb);
        std::uint64_t pm = 0;
        for (std::size_t a = 0; a < A.atom_count(); ++a)
            if (A.atoms()[a].bits().intersects(ou.bits())) pm |= std::uint64_t{1} << a;
        p.unit_masks.push_back(pm);
        p.unit_regions.push_back(ou);
        std::vector<std::uint64_t> members;
        std::uint64_t sub = 0;
        do {
            members.push_back(sub);
            sub = (sub - pm) & pm;
        } while (sub != 0);
        AbstractCA f;
        f.size = members.size();
        auto idx = [&](std::uint64_t m) {
            return static_cast<std::uint32_t>(std::lower_bound(members.begin(), members.end(), m) - members.begin());
        };
        f.meet_table.resize(f.size * f.size);
        for (std::size_t x = 0; x < f.size; ++x)
            for (std::size_t y = 0; y < f.size; ++y) f.meet_table[x * f.size + y] = idx(members[x] & members[y]);
        f.compl_table.resize(f.size);
        for (std::size_t x = 0; x < f.size; ++x) f.compl_table[x] = idx(pm & ~members[x]);
        f.zero = 0;
        f.one = idx(pm);
        f.origin = std::move(members);
        p.factors.push_back(std::move(f));
    }
    for (std::size_t u = 0; u < p.V.size(); ++u) {
        ProductElem e = p.zero();
        e[u] = p.factors[u].one;
        p.one_u.push_back(e);
    }
    for (unsigned i = 0; i < p.n; ++i)
        for (unsigned j = 0; j < p.n; ++j) p.diag.push_back(f_map(A.diag_mask(i, j), p));
    return p;
}

ProductElem f_map(std::uint64_t a, const ProductBA& p) {
    ProductElem e(p.factors.size());
    for (std::size_t u = 0; u < p.factors.size(); ++u) {
        const auto& org = p.factors[u].origin;
        const std::uint64_t part = a & p.unit_masks[u];
        auto it = std::lower_bound(org.begin(), org.end(), part);
        if (it == org.end() || *it != part) throw UsageError("component outside factor");
        e[u] = static_cast<std::uint32_t>(it - org.begin());
    }
    return e;
}

std::uint64_t f_inverse(const ProductElem& e, const ProductBA& p) {
    std::uint64_t m = 0;
    for (std::size_t u = 0; u < p.factors.size(); ++u) m |= p.factors[u].origin.at(e[u]);
    return m;
}

bool equiv_i(const std::vector<unsigned>& u, const std::vector<unsigned>& v, unsigned i) {
    for (std::size_t j = 0; j < u.size(); ++j)
        if (j != i && u[j] != v[j]) return false;
    return true;
}

namespace {
std::uint64_t t_S_support(std::uint64_t S, unsigned i, const ProductBA& p) {
    std::uint64_t out = 0;
    for (std::size_t v = 0; v < p.V.size(); ++v)
        for (std::size_t u = 0; u < p.V.size(); ++u)
            if (((S >> u) & 1u) && equiv_i(p.V[u], p.V[v], i)) {
                out |= std::uint64_t{1} << v;
                break;
            }
    return out;
}
} // namespace

ProductElem t_S(std::uint64_t S, unsigned i, const ProductBA& p) {
    if (i >= p.n) throw UsageError("index out of range");
    ProductElem e = p.zero();
    const auto sup = t_S_support(S, i, p);
    for (std::size_t v = 0; v < p.V.size(); ++v)
        if ((sup >> v) & 1u) e = p.join(e, p.one_u[v]);
    return e;
}

// ---------------------------------------------------------------------------------------------

namespace term {
namespace {
Term mk(TermNode::Kind k, unsigned a = 0, unsigned b = 0, Term l = nullptr, Term r = nullptr) {
    auto n = std::make_shared<TermNode>();
    n->kind = k;
    n->a = a;
    n->b = b;
    n->l = std::move(l);
    n->r = std::move(r);
    return n;
}
} // namespace
Term var(unsigned id) { return mk(TermNode::Kind::var, id); }
Term zero() { return mk(TermNode::Kind::zero); }
Term one() { return mk(TermNode::Kind::one); }
Term one_u(unsigned u) { return mk(TermNode::Kind::one_u, u); }
Term diag(unsigned i, unsigned j) { return mk(TermNode::Kind::diag, i, j); }
Term constant(ProductElem v) {
    auto n = std::make_shared<TermNode>();
    n->kind = TermNode::Kind::constant;
    n->value = std::move(v);
    return n;
}
Term meet(Term l, Term r) { return mk(TermNode::Kind::meet, 0, 0, std::move(l), std::move(r)); }
Term join(Term l, Term r) { return mk(TermNode::Kind::join, 0, 0, std::move(l), std::move(r)); }
Term compl_(Term t) { return mk(TermNode::Kind::compl_, 0, 0, std::move(t)); }
} // namespace term

namespace formula {
namespace {
std::shared_ptr<FormulaNode> mk(FormulaNode::Kind k) {
    auto n = std::make_shared<FormulaNode>();
    n->kind = k;
    return n;
}
} // namespace
Formula truth(bool v) {
    auto n = mk(FormulaNode::Kind::truth);
    n->truth = v;
    return n;
}
Formula eq(Term l, Term r) {
    auto n = mk(FormulaNode::Kind::eq);
    n->l = std::move(l);
    n->r = std::move(r);
    return n;
}
Formula not_(Formula f) {
    auto n = mk(FormulaNode::Kind::not_);
    n->kids.push_back(std::move(f));
    return n;
}
Formula and_(std::vector<Formula> fs) {
    auto n = mk(FormulaNode::Kind::and_);
    n->kids = std::move(fs);
    return n;
}
Formula or_(std::vector<Formula> fs) {
    auto n = mk(FormulaNode::Kind::or_);
    n->kids = std::move(fs);
    return n;
}
Formula implies(Formula a, Formula b) { return or_({not_(std::move(a)), std::move(b)}); }
Formula indexed_and(std::size_t width, std::function<Formula(std::size_t)> gen) {
    auto n = mk(FormulaNode::Kind::indexed_and);
    n->width = width;
    n->gen = std::move(gen);
    return n;
}
Formula indexed_or(std::size_t width, std::function<Formula(std::size_t)> gen) {
    auto n = mk(FormulaNode::Kind::indexed_or);
    n->width = width;
    n->gen = std::move(gen);
    return n;
}
} // namespace formula

Term t_S_term(std::uint64_t S, unsigned i, const ProductBA& p) {
    const auto sup = t_S_support(S, i, p);
    Term t = term::zero();
    for (std::size_t v = 0; v < p.V.size(); ++v)
        if ((sup >> v) & 1u) t = term::join(t, term::one_u(static_cast<unsigned>(v)));
    return t;
}

Formula eta_i_formula(unsigned i, const ProductBA& p, std::size_t v_cap) {
    if (i >= p.n) throw UsageError("index out of range");
    const std::size_t nv = p.V.size();
    if (nv > v_cap || nv > 62)
        throw CapExceeded("index set has " + std::to_string(nv) + " components, cap is " + std::to_string(v_cap));
    const ProductBA* pp = &p;
    return formula::indexed_and(std::size_t{1} << nv, [pp, i, nv](std::size_t S) {
        std::vector<Formula> ante;
        for (std::size_t u = 0; u < nv; ++u) {
            auto part = formula::eq(term::meet(term::var(kVarX), term::one_u(static_cast<unsigned>(u))), term::zero());
            ante.push_back(((S >> u) & 1u) ? formula::not_(part) : part);
        }
        return formula::implies(formula::and_(std::move(ante)),
                                formula::eq(term::var(kVarY), t_S_term(S, i, *pp)));
    });
}

namespace {

std::optional<ProductElem> try_eval(const ProductBA& p, const Term& t, const Assignment& env) {
    using K = TermNode::Kind;
    switch (t->kind) {
    case K::var:
        if (t->a < env.size() && env[t->a]) return *env[t->a];
        return std::nullopt;
    case K::zero: return p.zero();
    case K::one: return p.unit();
    case K::one_u: return p.one_u.at(t->a);
    case K::diag: return p.d(t->a, t->b);
    case K::constant: return t->value;
    case K::meet:
    case K::join: {
        auto l = try_eval(p, t->l, env);
        auto r = try_eval(p, t->r, env);
        if (!l || !r) return std::nullopt;
        return t->kind == K::meet ? p.meet(*l, *r) : p.join(*l, *r);
    }
    case K::compl_: {
        auto l = try_eval(p, t->l, env);
        if (!l) return std::nullopt;
        return p.compl_(*l);
    }
    }
    return std::nullopt;
}

Term substitute(const ProductBA& p, const Term& t, const Assignment& env) {
    if (auto v = try_eval(p, t, env)) return term::constant(std::move(*v));
    using K = TermNode::Kind;
    switch (t->kind) {
    case K::meet: return term::meet(substitute(p, t->l, env), substitute(p, t->r, env));
    case K::join: return term::join(substitute(p, t->l, env), substitute(p, t->r, env));
    case K::compl_: return term::compl_(substitute(p, t->l, env));
    default: return t;
    }
}

} // namespace

ProductElem eval_term(const ProductBA& p, const Term& t, const Assignment& env) {
    auto v = try_eval(p, t, env);
    if (!v) throw UsageError("unbound variable in term");
    return *v;
}

bool eval_formula(const ProductBA& p, const Formula& f, const Assignment& env) {
    using K = FormulaNode::Kind;
    switch (f->kind) {
    case K::truth: return f->truth;
    case K::eq: return eval_term(p, f->l, env) == eval_term(p, f->r, env);
    case K::not_: return !eval_formula(p, f->kids[0], env);
    case K::and_:
        for (const auto& k : f->kids)
            if (!eval_formula(p, k, env)) return false;
        return true;
    case K::or_:
        for (const auto& k : f->kids)
            if (eval_formula(p, k, env)) return true;
        return false;
    case K::indexed_and:
        for (std::size_t s = 0; s < f->width; ++s)
            if (!eval_formula(p, f->gen(s), env)) return false;
        return true;
    case K::indexed_or:
        for (std::size_t s = 0; s < f->width; ++s)
            if (eval_formula(p, f->gen(s), env)) return true;
        return false;
    }
    return false;
}

Formula partial_eval(const ProductBA& p, const Formula& f, const Assignment& env) {
    using K = FormulaNode::Kind;
    switch (f->kind) {
    case K::truth: return f;
    case K::eq: {
        auto l = try_eval(p, f->l, env);
        auto r = try_eval(p, f->r, env);
        if (l && r) return formula::truth(*l == *r);
        return formula::eq(substitute(p, f->l, env), substitute(p, f->r, env));
    }
    case K::not_: {
        auto k = partial_eval(p, f->kids[0], env);
        if (k->kind == K::truth) return formula::truth(!k->truth);
        return formula::not_(k);
    }
    case K::and_:
    case K::or_:
    case K::indexed_and:
    case K::indexed_or: {
        const bool conj = f->kind == K::and_ || f->kind == K::indexed_and;
        const bool indexed = f->kind == K::indexed_and || f->kind == K::indexed_or;
        const std::size_t width = indexed ? f->width : f->kids.size();
        std::vector<Formula> rest;
        for (std::size_t s = 0; s < width; ++s) {
            auto k = partial_eval(p, indexed ? f->gen(s) : f->kids[s], env);
            if (k->kind == K::truth) {
                if (k->truth != conj) return formula::truth(!conj);
                continue;
            }
            rest.push_back(std::move(k));
        }
        if (rest.empty()) return formula::truth(conj);
        if (rest.size() == 1) return rest.front();
        return conj ? formula::and_(std::move(rest)) : formula::or_(std::move(rest));
    }
    }
    return f;
}

bool InterpretationCertificate::pass() const {
    bool ok = injective.pass && homomorphism.pass && decomposition.pass && partition_lemmas.pass &&
              range_definability.pass && diagonal_definability.pass;
    for (const auto& e : eta) ok = ok && e.pass;
    return ok;
}

InterpretationCertificate verify_interpretation(const SetCA& A, const ProductBA& p) {
    InterpretationCertificate cert;
    cert.injective.name = "f injective";
    cert.homomorphism.name = "f preserves meet, complement, 0, 1, d_ij";
    cert.decomposition.name = "unique decomposition a = sum_u a.1_u";
    cert.partition_lemmas.name = "1_u partition the unit; c_i 1_u = sum_{v ~i u} 1_v; c_i a = c_i 1_u for 0 < a <= 1_u";
    cert.range_definability.name = "x = x defines Rng(f)";
    cert.diagonal_definability.name = "x = d_ij defines f(d_ij)";

    const std::size_t u_count = A.carrier_size(std::size_t{1} << 20);
    const std::uint64_t unit = A.unit_mask();
    const unsigned n = A.dim();
    std::vector<ProductElem> f(u_count);
    for (std::uint64_t a = 0; a < u_count; ++a) f[a] = f_map(a, p);
    auto astr = [](std::uint64_t a) { return mask_string(a); };

    // (1)
    {
        std::unordered_set<std::size_t> seen;
        for (std::uint64_t a = 0; a < u_count; ++a) {
            ++cert.injective.cases;
            if (!seen.insert(p.index(f[a])).second) record(cert.injective, "collision at " + astr(a));
        }
    }
    // (2)
    {
        auto& c = cert.homomorphism;
        if (f[0] != p.zero()) record(c, "f(0) = " + elem_string(f[0]));
        if (f[unit] != p.unit()) record(c, "f(1) = " + elem_string(f[unit]));
        for (std::uint64_t a = 0; a < u_count; ++a) {
            if (f[unit & ~a] != p.compl_(f[a])) record(c, "complement at " + astr(a));
            for (std::uint64_t b = 0; b < u_count; ++b) {
                ++c.cases;
                if (f[a & b] != p.meet(f[a], f[b])) record(c, "meet at " + astr(a) + ", " + astr(b));
            }
        }
        for (unsigned i = 0; i < n; ++i)
            for (unsigned j = 0; j < n; ++j)
                if (p.d(i, j) != f[A.diag_mask(i, j)])
                    record(c, "d_" + std::to_string(i) + std::to_string(j) + " is " + elem_string(p.d(i, j)) +
                                  ", f(d) is " + elem_string(f[A.diag_mask(i, j)]));
    }
    // (3)
    for (unsigned i = 0; i < n; ++i) {
        CheckResult c;
        c.name = "eta_" + std::to_string(i) + "(f(a), b) iff b = f(c_" + std::to_string(i) + " a)";
        const Formula eta = eta_i_formula(i, p);
        Assignment env(2);
        for (std::uint64_t a = 0; a < u_count; ++a) {
            env[kVarX] = f[a];
            env[kVarY].reset();
            const Formula residual = partial_eval(p, eta, env);
            const ProductElem& want = f[A.cyl_mask(a, i)];
            for (std::uint64_t b = 0; b < u_count; ++b) {
                env[kVarY] = f[b];
                ++c.cases;
                if (eval_formula(p, residual, env) != (f[b] == want))
                    record(c, "a=" + astr(a) + " b=" + elem_string(f[b]));
            }
        }
        cert.eta.push_back(std::move(c));
    }
    // (4)
    auto piece = [&](std::size_t u, std::uint32_t x) {
        return A.region(A.from_mask(p.factors[u].origin[x])) & p.unit_regions[u];
    };
    {
        auto& c = cert.decomposition;
        for (std::uint64_t a = 0; a < u_count; ++a) {
            ++c.cases;
            const Region ra = A.region(A.from_mask(a));
            Region sum(A.base(), n);
            for (std::size_t u = 0; u < p.V.size(); ++u) {
                const Region cu = piece(u, f[a][u]);
                if (!(cu == (ra & p.unit_regions[u]))) record(c, "component " + std::to_string(u) + " of " + astr(a));
                if (!(sum & cu).empty()) record(c, "overlapping components of " + astr(a));
                sum = sum | cu;
            }
            if (!(sum == ra)) record(c, "components of " + astr(a) + " do not sum to it");
        }
    }
    // (5)
    {
        auto& c = cert.partition_lemmas;
        Region cover(A.base(), n);
        for (std::size_t u = 0; u < p.V.size(); ++u) {
            ++c.cases;
            if (!(cover & p.unit_regions[u]).empty()) record(c, "1_u overlap at u=" + std::to_string(u));
            cover = cover | p.unit_regions[u];
        }
        if (!(cover == full_space(A.base(), n))) record(c, "the 1_u do not cover the unit");
        for (unsigned i = 0; i < n; ++i)
            for (std::size_t u = 0; u < p.V.size(); ++u) {
                ++c.cases;
                Region sum(A.base(), n);
                for (std::size_t v = 0; v < p.V.size(); ++v)
                    if (equiv_i(p.V[u], p.V[v], i)) sum = sum | p.unit_regions[v];
                const Region cu = cylindrify(p.unit_regions[u], i);
                if (!(cu == sum)) record(c, "c_" + std::to_string(i) + " 1_u at u=" + std::to_string(u));
                for (std::uint32_t x = 0; x < p.factors[u].size; ++x) {
                    if (x == p.factors[u].zero) continue;
                    ++c.cases;
                    if (!(cylindrify(piece(u, x), i) == cu))
                        record(c, "c_" + std::to_string(i) + " of component " + std::to_string(x) + " at u=" +
                                      std::to_string(u));
                }
            }
    }
    // Range: x = x holds everywhere, so it defines Rng(f) exactly when f is onto P.
    {
        auto& c = cert.range_definability;
        const Formula top = formula::eq(term::var(kVarX), term::var(kVarX));
        const std::size_t total = p.size();
        if (total > (std::size_t{1} << 22)) {
            record(c, "product too large to enumerate");
        } else {
            std::vector<bool> hit(total, false);
            for (std::uint64_t a = 0; a < u_count; ++a) hit[p.index(f[a])] = true;
            Assignment env(1);
            for (std::size_t b = 0; b < total; ++b) {
                ++c.cases;
                env[kVarX] = p.element(b);
                if (eval_formula(p, top, env) != static_cast<bool>(hit[b]))
                    record(c, "b=" + elem_string(*env[kVarX]) + " outside Rng(f)");
            }
        }
    }
    {
        auto& c = cert.diagonal_definability;
        Assignment env(1);
        for (unsigned i = 0; i < n; ++i)
            for (unsigned j = 0; j < n; ++j) {
                const Formula phi = formula::eq(term::var(kVarX), term::diag(i, j));
                const std::uint64_t d = A.diag_mask(i, j);
                for (std::uint64_t a = 0; a < u_count; ++a) {
                    ++c.cases;
                    env[kVarX] = f[a];
                    if (eval_formula(p, phi, env) != (a == d))
                        record(c, "x = d_" + std::to_string(i) + std::to_string(j) + " at a=" + astr(a));
                }
            }
    }
    return cert;
}

} // namespace cylneat
