#include <doctest.h>

#include "cylneat/errors.hpp"
#include "cylneat/interpretation.hpp"

using namespace cylneat;

namespace {

struct Instance {
    ColorFamily cf;
    SetCA A;
    ProductBA P;
};

Instance make_instance(unsigned rcount, unsigned depth = 1) {
    SaturationParams sp;
    sp.depth = depth;
    auto cf = build_colored_structure(2, sp, rcount, {}).family;
    auto A = build_A(cf);
    auto P = make_product(A, cf.blocks);
    return {std::move(cf), std::move(A), std::move(P)};
}

bool five_checks(const InterpretationCertificate& c) {
    bool ok = c.injective.pass && c.homomorphism.pass && c.decomposition.pass && c.partition_lemmas.pass;
    for (const auto& e : c.eta) ok = ok && e.pass;
    return ok;
}

} // namespace

TEST_CASE("f_map examples") {
    auto in = make_instance(2);
    CHECK(f_map(0, in.P) == in.P.zero());
    const auto unit = f_map(in.A.unit_mask(), in.P);
    CHECK(unit == in.P.unit());
    for (std::size_t u = 0; u < in.P.V.size(); ++u) CHECK(unit[u] == in.P.factors[u].one);
    const auto id = in.P.identity_index();
    for (unsigned r = 0; r < 2; ++r) {
        auto el = in.A.element_of(p_region({0, 1}, r, in.cf));
        REQUIRE(el);
        const auto f = f_map(in.A.mask(*el), in.P);
        for (std::size_t u = 0; u < in.P.V.size(); ++u)
            CHECK((f[u] != in.P.factors[u].zero) == (u == id));
    }
}

TEST_CASE("f components lie below 1_u and reconstruct a") {
    auto in = make_instance(2);
    for (std::uint64_t a = 0; a < in.A.carrier_size(); ++a) {
        const auto f = f_map(a, in.P);
        for (std::size_t u = 0; u < in.P.V.size(); ++u)
            CHECK((in.P.factors[u].origin[f[u]] & ~in.P.unit_masks[u]) == 0);
        CHECK(f_inverse(f, in.P) == a);
    }
}

TEST_CASE("t_S examples and monotonicity") {
    auto in = make_instance(2);
    const auto& P = in.P;
    REQUIRE(P.V == std::vector<std::vector<unsigned>>{{0, 0}, {0, 1}, {1, 0}, {1, 1}});
    CHECK(t_S(0, 0, P) == P.zero());
    CHECK(t_S(0b0010, 0, P) == P.join(P.one_u[1], P.one_u[3]));
    CHECK(t_S(0b1111, 1, P) == P.unit());
    for (std::uint64_t s = 0; s < 16; ++s)
        for (std::uint64_t s2 = 0; s2 < 16; ++s2)
            if ((s & ~s2) == 0)
                for (unsigned i = 0; i < 2; ++i) {
                    const auto a = t_S(s, i, P), b = t_S(s2, i, P);
                    CHECK(P.meet(a, b) == a);
                }
    Assignment env;
    CHECK(eval_term(P, t_S_term(0b0110, 1, P), env) == t_S(0b0110, 1, P));
}

TEST_CASE("eta_i antecedents are exclusive and exhaustive") {
    auto in = make_instance(2);
    const auto eta = eta_i_formula(0, in.P);
    REQUIRE(eta->kind == FormulaNode::Kind::indexed_and);
    CHECK(eta->width == 16);
    Assignment env(2);
    for (std::uint64_t a = 0; a < in.A.carrier_size(); ++a) {
        env[kVarX] = f_map(a, in.P);
        int hits = 0;
        for (std::size_t s = 0; s < eta->width; ++s) {
            const auto conj = eta->gen(s);
            const auto ante = conj->kids[0]->kids[0];
            hits += eval_formula(in.P, ante, env);
        }
        CHECK(hits == 1);
    }
}

TEST_CASE("eta_i evaluation examples") {
    auto in = make_instance(2);
    const auto& P = in.P;
    Assignment env(2);
    for (unsigned i = 0; i < 2; ++i) {
        const auto eta = eta_i_formula(i, P);
        env[kVarX] = f_map(0, P);
        env[kVarY] = P.zero();
        CHECK(eval_formula(P, eta, env));
        env[kVarY] = P.unit();
        CHECK_FALSE(eval_formula(P, eta, env));
        env[kVarX] = f_map(in.A.unit_mask(), P);
        CHECK(eval_formula(P, eta, env));
        for (std::uint64_t a = 0; a < in.A.carrier_size(); ++a) {
            env[kVarX] = f_map(a, P);
            env[kVarY] = f_map(in.A.cyl_mask(a, i), P);
            CHECK(eval_formula(P, eta, env));
            // The residual after binding x agrees with full evaluation.
            Assignment xs(2);
            xs[kVarX] = env[kVarX];
            CHECK(eval_formula(P, partial_eval(P, eta, xs), env));
        }
    }
    CHECK_THROWS_AS(eta_i_formula(0, P, 3), CapExceeded);
    CHECK_THROWS_AS(eta_i_formula(2, P), UsageError);
}

TEST_CASE("eval_formula basics") {
    auto in = make_instance(2);
    const auto& P = in.P;
    Assignment env(1);
    env[kVarX] = P.element(17);
    CHECK(eval_formula(P, formula::eq(term::var(kVarX), term::var(kVarX)), env));
    env[kVarX] = f_map(in.A.diag_mask(0, 1), P);
    CHECK(eval_formula(P, formula::eq(term::var(kVarX), term::diag(0, 1)), env));
    Assignment none(2);
    CHECK_THROWS_AS(eval_formula(P, formula::eq(term::var(kVarY), term::zero()), none), UsageError);
    CHECK(eval_formula(P, formula::indexed_or(3, [](std::size_t s) { return formula::truth(s == 2); }), none));
    CHECK_FALSE(eval_formula(P, formula::indexed_and(3, [](std::size_t s) { return formula::truth(s != 1); }), none));
}

TEST_CASE("verify_interpretation on the toy instance") {
    auto in = make_instance(2);
    auto c = verify_interpretation(in.A, in.P);
    CHECK(c.pass());
    CHECK(c.eta.size() == 2);
    for (const auto& e : c.eta) CHECK(e.counterexamples.empty());
}

TEST_CASE("verify_interpretation detects a corrupted d_01") {
    auto in = make_instance(2);
    in.P.diag[0 * 2 + 1] = in.P.zero();
    auto c = verify_interpretation(in.A, in.P);
    CHECK_FALSE(c.pass());
    CHECK_FALSE(c.homomorphism.pass);
    REQUIRE_FALSE(c.homomorphism.counterexamples.empty());
    CHECK(c.homomorphism.counterexamples.front().find("d_01") != std::string::npos);
    CHECK_FALSE(c.diagonal_definability.pass);
}

TEST_CASE("verify_interpretation on the minimal algebra") {
    auto in = make_instance(2, 0);
    CHECK(in.A.atom_count() == 2);
    auto c = verify_interpretation(in.A, in.P);
    CHECK(five_checks(c));
    // 1_u is not in the minimal algebra, so f is not onto the product of relativizations.
    CHECK_FALSE(c.range_definability.pass);
}
