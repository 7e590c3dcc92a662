#include <doctest.h>

#include "cylneat/errors.hpp"
#include "cylneat/region.hpp"
#include "cylneat/setca.hpp"
#include "oracles.hpp"

#include <random>

using namespace cylneat;

namespace {

Region random_region(const BasePtr& b, unsigned dim, std::mt19937& rng, double p = 0.3) {
    Region r(b, dim);
    std::bernoulli_distribution coin(p);
    for (std::size_t t = 0; t < r.space().count(); ++t)
        if (coin(rng)) r.bits().set(t);
    return r;
}

std::vector<Region> singletons(const BasePtr& b, unsigned dim) {
    std::vector<Region> out;
    Region probe(b, dim);
    for (std::size_t t = 0; t < probe.space().count(); ++t) {
        Region r(b, dim);
        r.bits().set(t);
        out.push_back(r);
    }
    return out;
}

} // namespace

TEST_CASE("full space and diagonals") {
    auto ab = Base::make({"a", "b"});
    CHECK(full_space(ab, 2).count() == 4);
    auto one = Base::make({"a"});
    auto f = full_space(one, 3);
    CHECK(f.count() == 1);
    CHECK(f.contains(Tuple{0, 0, 0}));
    CHECK(full_space(Base::numbered(4), 2).count() == 16);
    CHECK_THROWS_AS(full_space(ab, 0), UsageError);

    auto d = diagonal(ab, 2, 0, 1);
    CHECK(d.members() == std::vector<Tuple>{{0, 0}, {1, 1}});
    CHECK(diagonal(ab, 3, 1, 1) == full_space(ab, 3));
    CHECK(diagonal(Base::numbered(4), 2, 0, 1).count() == 4);
    CHECK_THROWS_AS(diagonal(ab, 2, 0, 2), UsageError);
}

TEST_CASE("cylindrify") {
    auto b = Base::make({"a0", "a1", "b0", "b1"});
    Region x(b, 2);
    CHECK(cylindrify(x, 0).empty());
    x.insert(Tuple{0, 2});
    auto c = cylindrify(x, 0);
    CHECK(c.count() == 4);
    for (std::uint32_t z = 0; z < 4; ++z) CHECK(c.contains(Tuple{z, 2}));
    CHECK(cylindrify(full_space(b, 2), 1) == full_space(b, 2));
    CHECK_THROWS_AS(cylindrify(x, 2), UsageError);
}

TEST_CASE("cylindrify is idempotent and additive") {
    for (std::size_t n = 1; n <= 4; ++n)
        for (unsigned dim = 1; dim <= 3; ++dim) {
            auto b = Base::numbered(n);
            TupleSpace sp(n, dim);
            std::mt19937 rng(static_cast<unsigned>(n * 10 + dim));
            const bool all = sp.count() <= 9;
            const std::size_t trials = all ? (std::size_t{1} << sp.count()) : 300;
            std::vector<Region> xs;
            for (std::size_t k = 0; k < trials; ++k) {
                Region r(b, dim);
                if (all)
                    for (std::size_t t = 0; t < sp.count(); ++t) r.bits().assign(t, (k >> t) & 1u);
                else
                    r = random_region(b, dim, rng, 0.2);
                xs.push_back(r);
            }
            for (unsigned i = 0; i < dim; ++i)
                for (std::size_t k = 0; k < xs.size(); ++k) {
                    auto c = cylindrify(xs[k], i);
                    REQUIRE(cylindrify(c, i) == c);
                    const auto& y = xs[(k * 7 + 3) % xs.size()];
                    REQUIRE(cylindrify(xs[k] | y, i) == (c | cylindrify(y, i)));
                }
        }
}

TEST_CASE("generate_subalgebra examples") {
    auto ab = Base::make({"a", "b"});
    auto minimal = generate_subalgebra(ab, 2, {});
    CHECK(minimal.carrier_size() == 4);
    auto d = diagonal(ab, 2, 0, 1);
    CHECK(minimal.contains(d));
    CHECK(minimal.contains(~d));
    CHECK(minimal.contains(Region(ab, 2)));
    CHECK(minimal.contains(full_space(ab, 2)));

    auto same = generate_subalgebra(ab, 2, {full_space(ab, 2)});
    CHECK(same.atoms() == minimal.atoms());

    auto full = generate_subalgebra(ab, 2, singletons(ab, 2));
    CHECK(full.carrier_size() == 16);

    CHECK_THROWS_AS(generate_subalgebra(ab, 2, {full_space(ab, 3)}), UsageError);
    CHECK_THROWS_AS(generate_subalgebra(ab, 2, {full_space(Base::make({"a", "c"}), 2)}), UsageError);
}

TEST_CASE("generate_subalgebra agrees with the worklist closure oracle") {
    std::mt19937 rng(7);
    int compared = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 1 + rng() % 3;
        const unsigned dim = 1 + rng() % 3;
        auto b = Base::numbered(n);
        std::vector<Region> gens;
        const int g = static_cast<int>(rng() % 3);
        for (int k = 0; k < g; ++k) gens.push_back(random_region(b, dim, rng, 0.15));
        auto a = generate_subalgebra(b, dim, gens);
        if (a.atom_count() > 9) continue;
        auto ref = oracle::closure(b, dim, gens);
        REQUIRE(oracle::carrier_of(a) == ref);
        ++compared;
    }
    CHECK(compared > 30);
}

TEST_CASE("generation is independent of generator order") {
    std::mt19937 rng(11);
    auto b = Base::numbered(4);
    std::vector<Region> gens;
    for (int k = 0; k < 3; ++k) gens.push_back(random_region(b, 2, rng, 0.2));
    auto a1 = generate_subalgebra(b, 2, gens);
    std::reverse(gens.begin(), gens.end());
    auto a2 = generate_subalgebra(b, 2, gens);
    CHECK(a1.atoms() == a2.atoms());
}

TEST_CASE("relativize") {
    auto ab = Base::make({"a", "b"});
    auto minimal = generate_subalgebra(ab, 2, {});
    auto whole = relativize(minimal, full_space(ab, 2));
    CHECK(whole.size == 4);
    auto degenerate = relativize(minimal, Region(ab, 2));
    CHECK(degenerate.size == 1);
    CHECK(degenerate.zero == degenerate.one);
    auto dd = relativize(minimal, diagonal(ab, 2, 0, 1));
    CHECK(dd.size == 2);
    CHECK(dd.compl_(dd.zero) == dd.one);
    Region single(ab, 2);
    single.insert(Tuple{0, 1});
    CHECK_THROWS_AS(relativize(minimal, single), UsageError);
}

TEST_CASE("neat_reduct examples") {
    auto ab = Base::make({"a", "b"});
    auto full3 = generate_subalgebra(ab, 3, singletons(ab, 3));
    auto nr = neat_reduct(full3, 2);
    CHECK(nr.carrier_size() == 16);
    auto full2 = generate_subalgebra(ab, 2, singletons(ab, 2));
    CHECK(nr.atoms() == full2.atoms());

    CHECK(neat_reduct(full3, 3).atoms() == full3.atoms());
    CHECK(neat_reduct(generate_subalgebra(ab, 3, {}), 2).atoms() == generate_subalgebra(ab, 2, {}).atoms());
    CHECK_THROWS_AS(neat_reduct(full3, 4), UsageError);
}

TEST_CASE("neat_reduct size equals the number of fixed carrier elements") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        auto b = Base::numbered(2 + rng() % 2);
        std::vector<Region> gens{random_region(b, 3, rng, 0.1)};
        auto c = generate_subalgebra(b, 3, gens);
        if (c.atom_count() > 16) continue;
        auto nr = neat_reduct(c, 2);
        std::size_t fixed = 0;
        std::set<Bits, oracle::BitsLess> projections;
        for (std::uint64_t m = 0; m < c.carrier_size(1u << 16); ++m)
            if (c.cyl_mask(m, 2) == m) {
                ++fixed;
                projections.insert(project(c.region(c.from_mask(m)), 2).bits());
            }
        CHECK(nr.carrier_size(1u << 16) == fixed);
        CHECK(projections.size() == fixed);
        CHECK(projections == oracle::carrier_of(nr));
    }
}

TEST_CASE("check_ca_axioms") {
    auto ab = Base::make({"a", "b"});
    auto full = generate_subalgebra(ab, 2, singletons(ab, 2));
    auto rep = check_ca_axioms(full);
    CHECK(rep.pass());
    CHECK(rep.mode == "exhaustive");

    auto abs = abstractize(full);
    CHECK(check_ca_axioms(abs).pass());
    abs.cyl_table[0][1] = abs.zero;
    auto bad = check_ca_axioms(abs);
    REQUIRE_FALSE(bad.pass());
    CHECK_FALSE(bad.violations.front().witnesses.empty());
}

TEST_CASE("closure defects are reported") {
    auto ab = Base::make({"a", "b"});
    auto full = generate_subalgebra(ab, 2, {});
    // Split the off-diagonal atom so that c_0 of one half is not a union of atoms.
    std::vector<Region> atoms;
    for (const auto& r : full.atoms()) {
        if (r.count() == 2 && !(r == diagonal(ab, 2, 0, 1))) {
            Region h1(ab, 2), h2(ab, 2);
            auto m = r.members();
            h1.insert(m[0]);
            h2.insert(m[1]);
            atoms.push_back(h1);
            atoms.push_back(h2);
        } else {
            atoms.push_back(r);
        }
    }
    CHECK_THROWS_AS(SetCA::from_atoms(ab, 2, atoms), UsageError);
    auto broken = SetCA::from_atoms_unchecked(ab, 2, atoms);
    auto rep = check_ca_axioms(broken);
    REQUIRE_FALSE(rep.pass());
    CHECK(rep.violations.front().axiom == "closure");
}

TEST_CASE("abstractize is a homomorphism") {
    std::mt19937 rng(3);
    auto b = Base::numbered(3);
    auto a = generate_subalgebra(b, 2, {random_region(b, 2, rng, 0.3)});
    auto t = abstractize(a, 1u << 12);
    CHECK(t.well_formed());
    for (std::uint32_t x = 0; x < t.size; ++x) {
        const Region rx = a.region(a.from_mask(t.origin[x]));
        CHECK(a.region(a.from_mask(t.origin[t.compl_(x)])) == ~rx);
        for (unsigned i = 0; i < 2; ++i)
            CHECK(a.region(a.from_mask(t.origin[t.cyl(i, x)])) == cylindrify(rx, i));
        for (std::uint32_t y = 0; y < t.size; y += 3)
            CHECK(a.region(a.from_mask(t.origin[t.meet(x, y)])) == (rx & a.region(a.from_mask(t.origin[y]))));
    }
    CHECK(abstractize(generate_subalgebra(b, 2, {})).size == 4);
    CHECK(abstractize(generate_subalgebra(Base::make({"a"}), 2, {})).size == 2);
    CHECK(abstractize(generate_subalgebra(Base::make({"a", "b"}), 2, singletons(Base::make({"a", "b"}), 2))).size == 16);
}

TEST_CASE("axiom suite on powerset algebras") {
    auto b4 = Base::numbered(4);
    auto p42 = generate_subalgebra(b4, 2, singletons(b4, 2));
    CHECK(p42.atom_count() == 16);
    CHECK(check_ca_axioms(p42).pass());
    auto b2 = Base::numbered(2);
    auto p23 = generate_subalgebra(b2, 3, singletons(b2, 3));
    CHECK(check_ca_axioms(p23).pass());
}
