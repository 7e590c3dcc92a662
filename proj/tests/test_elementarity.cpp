#include <doctest.h>

#include "cylneat/errors.hpp"
#include "fixtures.hpp"

using namespace cylneat;
using fixture::ba_structure;

namespace {

GameOptions plain() {
    GameOptions o;
    o.shortcuts = false;
    return o;
}

bool dup(const GameCertificate& c) { return c.winner == Player::duplicator; }

struct Toy {
    ColorFamily cf;
    SetCA A;
    ProductBA P;
};

const Toy& toy() {
    static const Toy t = [] {
        auto cf = build_colored_structure(2, {}, 2, {}).family;
        auto A = build_A(cf);
        auto P = make_product(A, cf.blocks);
        return Toy{std::move(cf), std::move(A), std::move(P)};
    }();
    return t;
}

} // namespace

TEST_CASE("identical structures: Duplicator at every rank") {
    const auto m = ba_structure(2, {1});
    for (unsigned q = 0; q <= 3; ++q) {
        auto c = ef_winner(m, m, q, {{1, 1}});
        CHECK(dup(c));
        CHECK(c.kind == "identity");
        CHECK(replay(c, m, m));
        auto s = ef_winner(m, m, q, {{1, 1}}, plain());
        CHECK(dup(s));
        CHECK(s.kind == "strategy");
        CHECK(replay(s, m, m));
        CHECK(theory_compare(m, m, q));
    }
}

TEST_CASE("2-element vs 4-element Boolean algebra") {
    const auto two = encode_ba(fixture::powerset_ba(1), {}), four = encode_ba(fixture::powerset_ba(2), {});
    CHECK(dup(ef_winner(two, four, 0, {})));
    CHECK(dup(ef_winner(two, four, 1, {})));
    auto c = ef_winner(two, four, 2, {});
    CHECK(c.winner == Player::spoiler);
    std::string why;
    CHECK_MESSAGE(replay(c, two, four, &why), why);
    REQUIRE(c.spoiler);
    CHECK(theory_compare(two, four, 1));
    CHECK_FALSE(theory_compare(two, four, 2));
    // naming 0 and 1 makes an unnamed atom visible at rank 1
    const auto two01 = ba_structure(1, {}), four01 = ba_structure(2, {});
    auto d = ef_winner(two01, four01, 1, {});
    CHECK(d.winner == Player::spoiler);
    CHECK(d.spoiler->side == 1);
    CHECK_FALSE(theory_compare(two01, four01, 1));
}

TEST_CASE("q = 0 from a partial isomorphism is a Duplicator win") {
    const auto m1 = ba_structure(2, {}), m2 = ba_structure(3, {});
    auto c = ef_winner(m1, m2, 0, {{1, 1}, {2, 6}});
    CHECK(dup(c));
    CHECK(replay(c, m1, m2));
    auto bad = ef_winner(m1, m2, 0, {{1, 1}, {2, 1}});
    CHECK(bad.winner == Player::spoiler);
    REQUIRE(bad.spoiler);
    CHECK(bad.spoiler->answers.empty());
    CHECK_FALSE(bad.spoiler->violation.empty());
    CHECK(replay(bad, m1, m2));
}

TEST_CASE("a differing constant is seen at rank 0") {
    const auto m1 = ba_structure(2, {1}), m2 = ba_structure(2, {3});
    auto c = ef_winner(m1, m2, 0, {});
    CHECK(c.winner == Player::spoiler);
    CHECK(c.spoiler->violation.find("c0") != std::string::npos);
    CHECK_FALSE(theory_compare(m1, m2, 0));
    // relabelled copy with the constant moved along is indistinguishable
    const auto m3 = ba_structure(2, {2}, {0, 2, 1, 3});
    CHECK(dup(ef_winner(m1, m3, 3, {})));
    CHECK(theory_compare(m1, m3, 3));
}

TEST_CASE("tampered certificates fail replay") {
    const auto two = ba_structure(1, {}), four = ba_structure(2, {});
    auto c = ef_winner(two, four, 2, {});
    c.winner = Player::duplicator;
    CHECK_FALSE(replay(c, two, four));

    auto d = ef_winner(four, four, 2, {}, plain());
    REQUIRE(d.duplicator);
    d.duplicator->answer_left[1] = 2;  // atom answered by a different atom is fine at rank 1 ...
    d.duplicator->answer_left[3] = 1;  // ... but 1 answered by an atom is not
    std::string why;
    CHECK_FALSE(replay(d, four, four, &why));
    CHECK_FALSE(why.empty());

    auto e = ef_winner(two, four, 2, {});
    REQUIRE(e.spoiler);
    e.spoiler->answers.pop_back();
    CHECK_FALSE(replay(e, two, four));
    auto f = ef_winner(two, four, 2, {});
    f.digest2 = "0";
    CHECK_FALSE(replay(f, two, four));
}

TEST_CASE("monotonicity, symmetry and agreement on random small structures") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 1 + rng() % 4;
        const auto m1 = fixture::random_structure(rng, n, 1);
        const auto m2 = trial % 2 ? fixture::perturb(rng, m1) : fixture::random_structure(rng, 1 + rng() % 4, 1);
        bool prev = true;
        for (unsigned q = 0; q <= 3; ++q) {
            const auto c = ef_winner(m1, m2, q, {}, plain());
            const auto r = ef_winner(m2, m1, q, {}, plain());
            CHECK(c.winner == r.winner);
            if (!prev) CHECK(c.winner == Player::spoiler);
            prev = dup(c);
            CHECK(dup(c) == theory_compare(m1, m2, q));
            CHECK(replay(c, m1, m2));
        }
    }
}

TEST_CASE("budget is enforced") {
    const auto m = ba_structure(4, {});
    GameOptions o = plain();
    o.budget = 1000;
    CHECK_THROWS_AS(ef_winner(m, m, 3, {}, o), BudgetExceeded);
    CHECK_THROWS_AS(theory_compare(m, m, 3, 1000), BudgetExceeded);
    CHECK_THROWS_AS(ef_winner(m, ba_structure(1, {1}), 1, {}), UsageError);
}

TEST_CASE("find_q_subalgebra") {
    const auto b8 = fixture::powerset_ba(3);
    const std::vector<std::pair<std::string, std::uint32_t>> c01{{"0", 0}, {"1", 7}};
    SUBCASE("q = 0 gives the minimal subalgebra") {
        auto s = find_q_subalgebra(b8, c01, 0, 2);
        CHECK(s.elements == std::vector<std::uint32_t>{0, 7});
        CHECK_FALSE(s.flag_no_proper);
        auto with = c01;
        with.emplace_back("c", 1);
        auto t = find_q_subalgebra(b8, with, 0, 1);
        CHECK(t.elements == std::vector<std::uint32_t>{0, 1, 6, 7});
    }
    SUBCASE("rank 1 without parameters: a 4-element subalgebra") {
        auto s = find_q_subalgebra(b8, c01, 1, 0);
        CHECK(s.elements.size() == 4);
        CHECK_FALSE(s.flag_no_proper);
    }
    SUBCASE("rank 2: no proper candidate") {
        auto s = find_q_subalgebra(b8, c01, 2, 0);
        CHECK(s.flag_no_proper);
        CHECK(s.improper);
        CHECK(s.elements.size() == 8);
    }
    SUBCASE("4-element BA, q = 1, L = 1; verdict confirmed by replay") {
        const auto b4 = fixture::powerset_ba(2);
        const std::vector<std::pair<std::string, std::uint32_t>> cs{{"0", 0}, {"1", 3}};
        auto s = find_q_subalgebra(b4, cs, 1, 1);
        const auto amb = encode_ba(b4, cs);
        // the only proper candidate {0,1} loses already at rank 1
        const auto sub = encode_ba(fixture::powerset_ba(1), {{"0", 0}, {"1", 1}});
        auto c = ef_winner(sub, amb, 1, {});
        CHECK(c.winner == Player::spoiler);
        CHECK(replay(c, sub, amb));
        CHECK(s.flag_no_proper);
    }
    SUBCASE("all elements named: only the improper result") {
        std::vector<std::pair<std::string, std::uint32_t>> all;
        for (std::uint32_t x = 0; x < 8; ++x) all.emplace_back("e" + std::to_string(x), x);
        auto s = find_q_subalgebra(b8, all, 0, 0);
        CHECK(s.improper);
        CHECK(s.flag_no_proper);
    }
}

TEST_CASE("Q from the full Id factor is P, and B is isomorphic to A") {
    const auto& t = toy();
    const auto id = t.P.identity_index();
    std::vector<std::uint32_t> all(t.P.factors[id].size);
    std::iota(all.begin(), all.end(), 0u);
    auto Q = build_Q(subalgebra_from_elements(t.P.factors[id], all), t.P);
    CHECK(encode_product(Q.product).digest() == encode_product(t.P).digest());
    CHECK(check_q_elementary(Q, t.P, 2, 1).method == "identity");
    const auto B = apply_interpretation(Q.product);
    CHECK(check_ca_axioms(B).pass());
    const auto A = abstractize(t.A);
    // f^-1 is the isomorphism: B's element x has origin mask = A's element index
    std::vector<std::uint32_t> finv(B.size);
    for (std::size_t x = 0; x < B.size; ++x) finv[x] = static_cast<std::uint32_t>(B.origin[x]);
    CHECK(is_ca_isomorphism(B, A, finv));
    auto c = check_equiv(B, A, 2);
    CHECK(dup(c));
    CHECK(c.kind == "isomorphism");
    CHECK(replay(c, encode_ca(B), encode_ca(A)));
}

TEST_CASE("minimal Id subalgebra: Q is smaller, B passes the axioms") {
    const auto& t = toy();
    const auto id = t.P.identity_index();
    auto s = find_q_subalgebra(t.P.factors[id], id_factor_constants(t.P), 0, 0);
    CHECK(s.elements.size() < t.P.factors[id].size);
    auto Q = build_Q(s, t.P);
    CHECK(Q.product.size() < t.P.size());
    const auto emb = q_into_p(Q, t.P);
    const auto mq = encode_product(Q.product), mp = encode_product(t.P);
    // inclusion is a substructure embedding
    for (std::size_t c = 0; c < mq.constants.size(); ++c) CHECK(emb[mq.constants[c].value] == mp.constants[c].value);
    for (std::uint32_t x = 0; x < mq.size; ++x) {
        CHECK(emb[mq.functions[1].table[x]] == mp.functions[1].table[emb[x]]);
        for (std::uint32_t y = 0; y < mq.size; y += 7)
            CHECK(emb[mq.functions[0].table[x * mq.size + y]] == mp.functions[0].table[emb[x] * mp.size + emb[y]]);
    }
    const auto B = apply_interpretation(Q.product);
    CHECK(check_ca_axioms(B).pass());
    auto rep = check_q_elementary(Q, t.P, 2, 0);
    CHECK(rep.method == "games");
    CHECK(rep.parameter_tuples == 1);
}

TEST_CASE("corrupted Q missing a t_S value raises a closure failure") {
    const auto& t = toy();
    const auto id = t.P.identity_index();
    ProductBA bad = t.P;
    AbstractCA single;
    single.size = 1;
    single.meet_table = {0};
    single.compl_table = {0};
    single.origin = {0};
    bad.factors[id] = single;
    for (auto& e : bad.one_u) e[id] = 0;
    for (auto& e : bad.diag) e[id] = 0;
    try {
        apply_interpretation(bad);
        FAIL("expected a closure failure");
    } catch (const ClosureFailure& e) {
        CHECK(e.index() < 2);
        CHECK(e.subset().size() > 2);
    }
}

TEST_CASE("check_equiv: self and flipped diagonal") {
    const auto& t = toy();
    const auto A = abstractize(t.A);
    CHECK(dup(check_equiv(A, A, 3)));
    AbstractCA flipped = A;
    flipped.diag_table[1] = A.compl_(A.diag(0, 1));  // d_01 only
    auto c = check_equiv(flipped, A, 0);
    CHECK(c.winner == Player::spoiler);
    REQUIRE(c.spoiler);
    CHECK(c.spoiler->answers.empty());
    CHECK(c.spoiler->violation.find("d_") != std::string::npos);
    CHECK(replay(c, encode_ca(flipped), encode_ca(A)));
}
