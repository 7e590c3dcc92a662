#include <doctest.h>

#include "cylneat/elementarity.hpp"
#include "cylneat/errors.hpp"
#include "cylneat/neat.hpp"
#include "cylneat/witness.hpp"

#include <random>

using namespace cylneat;

namespace {

SetCA full_powerset(std::size_t m, unsigned n) {
    auto base = Base::numbered(m, "a");
    std::vector<Region> g;
    const std::size_t N = TupleSpace(m, n).count();
    for (std::size_t t = 0; t < N; ++t) {
        Region r(base, n);
        r.bits().set(t);
        g.push_back(r);
    }
    return SetCA::generate(base, n, g);
}

} // namespace

TEST_CASE("full powerset of dimension 2 over two points") {
    const auto P = full_powerset(2, 2);
    const auto b = abstractize(P);
    const auto r = dilation_search(b, 2, 1, 2);
    REQUIRE(r.outcome == DilationOutcome::witness);
    const auto& w = *r.witness;
    CHECK(w.base_size == 2);
    CHECK(w.D->dim() == 3);
    CHECK(w.D->atom_count() == 8);  // the full dimension-3 algebra
    CHECK(neat_reduct(*w.D, 2).atom_count() == 4);
    std::string why;
    CHECK_MESSAGE(verify_dilation_witness(b, w, &why), why);
}

TEST_CASE("one-element algebra") {
    AbstractCA b;
    b.dim = 2;
    b.size = 1;
    b.meet_table = {0};
    b.compl_table = {0};
    b.cyl_table = {{0}, {0}};
    b.diag_table = {0, 0, 0, 0};
    const auto r = dilation_search(b, 2, 1, 3);
    REQUIRE(r.outcome == DilationOutcome::witness);
    CHECK(r.witness->base_size == 1);
    CHECK(r.witness->degenerate);
    CHECK(verify_dilation_witness(b, *r.witness));
}

TEST_CASE("toy A: witness at base <= |M|, with and without the construction's hint") {
    auto cf = build_colored_structure(2, {}, 2, {}).family;
    const auto A = build_A(cf);
    const auto b = abstractize(A);
    const std::size_t M = cf.blocks.size();
    auto r = dilation_search(b, 2, 1, M);
    REQUIRE(r.outcome == DilationOutcome::witness);
    CHECK(r.witness->base_size <= M);
    CHECK(verify_dilation_witness(b, *r.witness));
    // the hint alone (search budget zero) still yields the witness at |M|
    DilationOptions o;
    o.node_budget = 0;
    o.hints = {hint_from(A)};
    auto h = dilation_search(b, 2, 1, M, o);
    REQUIRE(h.outcome == DilationOutcome::witness);
    CHECK(h.witness->source == "hint");
    CHECK(h.witness->base_size == M);
    CHECK(verify_dilation_witness(b, *h.witness));
    // and the dilation it rebuilds has A as its neat reduct
    CHECK(neat_reduct(*h.witness->D, 2).atom_count() == A.atom_count());
}

TEST_CASE("refutation is bounded; budget exhaustion is inconclusive") {
    const auto b = abstractize(full_powerset(3, 2));  // 9 atoms need at least 9 cells
    const auto r = dilation_search(b, 2, 1, 2);
    CHECK(r.outcome == DilationOutcome::refutation);
    CHECK_FALSE(r.witness);
    REQUIRE(r.per_base.size() == 2);
    for (const auto& s : r.per_base) CHECK(s.exhausted);
    CHECK(r.max_base == 2);

    DilationOptions o;
    o.node_budget = 1;
    const auto i = dilation_search(b, 2, 1, 3, o);
    CHECK(i.outcome == DilationOutcome::inconclusive);
    CHECK_FALSE(i.witness);
    CHECK_FALSE(i.per_base.back().exhausted);
}

TEST_CASE("fault: permuted pair in the map") {
    const auto b = abstractize(full_powerset(2, 2));
    auto w = *dilation_search(b, 2, 1, 2).witness;
    std::swap(w.map[1], w.map[2]);
    std::string why;
    CHECK_FALSE(verify_dilation_witness(b, w, &why));
    CHECK_FALSE(why.empty());
}

TEST_CASE("fault: dilation that is not a cylindric algebra") {
    const auto b = abstractize(full_powerset(2, 2));
    auto w = *dilation_search(b, 2, 1, 2).witness;
    auto base = w.D->base();
    Region one(base, 3), rest = full_space(base, 3);
    one.bits().set(0);
    rest.bits().reset(0);
    w.D = SetCA::from_atoms_unchecked(base, 3, {one, rest});
    std::string why;
    CHECK_FALSE(verify_dilation_witness(b, w, &why));
    CHECK(why.find("dilation fails") != std::string::npos);
}

TEST_CASE("soundness on generated algebras") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t m = 1 + rng() % 3;
        auto base = Base::numbered(m);
        std::vector<Region> g(1 + rng() % 2, Region(base, 2));
        for (auto& r : g)
            for (std::size_t t = 0; t < r.space().count(); ++t)
                if (rng() % 2) r.bits().set(t);
        const auto b = abstractize(generate_subalgebra(base, 2, g));
        DilationOptions o;
        o.node_budget = 20000;
        const auto r = dilation_search(b, 2, 1, m + 1, o);
        CHECK(r.witness.has_value() == (r.outcome == DilationOutcome::witness));
        if (r.witness) CHECK(verify_dilation_witness(b, *r.witness));
        if (r.outcome == DilationOutcome::refutation)
            for (const auto& s : r.per_base) CHECK(s.exhausted);
    }
    CHECK_THROWS_AS(dilation_search(abstractize(full_powerset(2, 2)), 3, 1, 2), UsageError);
}
