#include <doctest.h>

#include "cylneat/errors.hpp"
#include "cylneat/pipeline.hpp"

#include <filesystem>
#include <fstream>

using namespace cylneat;

namespace {

PipelineConfig toy() {
    PipelineConfig c;
    c.rcount = 2;
    return c;
}

const Json& stage(const CommandResult& r, const std::string& file, const std::string& name) {
    return r.files.at(file).at("stages").at(name);
}

} // namespace

TEST_CASE("pipeline on the toy config") {
    const auto r = cmd_pipeline(toy());
    CHECK(r.exit_code == 0);
    const auto& s = r.files.at("summary.json");
    CHECK(s.at("version") == kFormatVersion);
    CHECK(s.at("config").at("rcount") == 2);
    CHECK(s.at("complete").get<bool>());
    CHECK_FALSE(s.dump().find("seconds") != std::string::npos);
    for (const char* st : {"build", "conditions", "algebra", "dilation", "interpretation", "subalgebra", "q_elementary",
                           "interpret_Q", "round_trip", "equivalence"})
        CHECK_MESSAGE(stage(r, "summary.json", st).at("verdict") == "pass", st);
    CHECK(stage(r, "summary.json", "neat").at("counts_for_exit") == false);
    for (const auto& [name, body] : r.files) CHECK(body.at("version") == kFormatVersion);
}

TEST_CASE("pipeline is deterministic") {
    const auto a = cmd_pipeline(toy()), b = cmd_pipeline(toy());
    REQUIRE(a.files.size() == b.files.size());
    for (const auto& [name, body] : a.files) CHECK(canonical(body) == canonical(b.files.at(name)));
    auto c = toy();
    c.seed = 3;
    const auto d = cmd_pipeline(c);
    CHECK(canonical(d.files.at("family.json")) != canonical(a.files.at("family.json")));
}

TEST_CASE("q = 0: the equivalence stage is a Duplicator win") {
    auto c = toy();
    c.q = 0;
    const auto r = cmd_pipeline(c);
    CHECK(r.exit_code == 0);
    CHECK(stage(r, "summary.json", "equivalence").at("winner") == "duplicator");
    // with q = 0 the minimal Id subalgebra already qualifies
    CHECK(stage(r, "summary.json", "subalgebra").at("flag_no_proper") == false);
}

TEST_CASE("build: exhaustion, vacuous depth, timing") {
    auto c = toy();
    c.rcount = 1;
    const auto r = cmd_build(c);
    CHECK(r.exit_code == 1);
    const auto& b = stage(r, "build.json", "build");
    CHECK(b.at("verdict") == "error");
    CHECK(b.at("demand").get<std::string>().find("layer-demand") != std::string::npos);
    CHECK(r.diagnostic.find("build") == 0);

    auto v = toy();
    v.depth = 0;
    const auto z = cmd_build(v);
    CHECK(z.exit_code == 0);

    auto t = toy();
    t.timing = true;
    const auto w = cmd_build(t);
    CHECK(stage(w, "build.json", "build").contains("seconds"));
}

TEST_CASE("family JSON round trip feeds the later commands") {
    const auto r = cmd_build(toy());
    const auto cf = family_from_json(r.files.at("family.json"));
    CHECK(cmd_check(toy(), cf).exit_code == 0);
    CHECK(cmd_interpret(toy(), cf).exit_code == 0);
    const auto e = cmd_elementarity(toy(), cf);
    CHECK(e.exit_code == 0);
    CHECK(e.files.count("equivalence.json"));
    auto three = toy();
    three.max_base = 3;  // the toy A needs four points
    const auto n = cmd_neatcheck(three, cf, "A");
    CHECK(n.files.at("neat.json").at("outcome") == "refutation");
    CHECK(n.exit_code == 1);
    auto big = toy();
    big.max_base = 12;
    const auto w = cmd_neatcheck(big, cf, "B");
    CHECK(w.exit_code == 0);
    CHECK(w.files.at("neat.json").at("witness_verified") == true);
    CHECK_THROWS_AS(cmd_neatcheck(toy(), cf, "C"), UsageError);

    Json broken = r.files.at("family.json");
    broken["block_of"] = Json::array();
    CHECK_THROWS_AS(family_from_json(broken), UsageError);
}

TEST_CASE("config validation and output files") {
    auto c = toy();
    c.n = 9;
    CHECK_THROWS_AS(cmd_pipeline(c), UsageError);
    c = toy();
    c.max_base = 0;
    CHECK_THROWS_AS(cmd_build(c), UsageError);

    const auto dir = std::filesystem::temp_directory_path() / "cylneat_test_out";
    std::filesystem::remove_all(dir);
    const auto r = cmd_build(toy());
    write_outputs(r, dir.string());
    std::ifstream f(dir / "build.json");
    const auto j = Json::parse(f);
    CHECK(j.at("kind") == "build");
    std::filesystem::remove_all(dir);
}
