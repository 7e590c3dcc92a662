#include "cylneat/errors.hpp"
#include "cylneat/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace cylneat;

namespace {

ColorFamily load_family(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw UsageError("missing artifact: " + path + " (run `build` first)");
    Json j;
    try {
        j = Json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("cannot parse " + path + ": " + e.what());
    }
    return family_from_json(j);
}

// Keys of a config file mirror the long flag names; flags given on the command line win.
void apply_config_file(const std::string& path, PipelineConfig& c, const CLI::App& app) {
    std::ifstream f(path);
    if (!f) throw UsageError("cannot read config file " + path);
    Json j = Json::parse(f);
    auto take = [&](const char* key, const char* flag, auto& field) {
        if (j.contains(key) && app.count(flag) == 0) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    take("n", "--n", c.n);
    take("k", "--k", c.k);
    take("m0", "--m0", c.m0);
    take("rcount", "--rcount", c.rcount);
    take("depth", "--depth", c.depth);
    take("seed", "--seed", c.seed);
    take("q", "--q", c.q);
    take("L", "--L", c.L);
    take("max_base", "--max-base", c.max_base);
    take("carrier_cap", "--carrier-cap", c.carrier_cap);
    take("v_cap", "--v-cap", c.v_cap);
    take("build_budget", "--build-budget", c.build_budget);
    take("game_budget", "--game-budget", c.game_budget);
    take("neat_budget", "--budget", c.neat_budget);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite cylindric set algebras: colored witnesses, interpretation, EF games, neat reducts"};
    app.require_subcommand(1);

    PipelineConfig c;
    std::string out_dir = "out", family_path, config_path, target = "B";

    auto common = [&](CLI::App* s) {
        s->add_option("--seed", c.seed, "builder seed")->capture_default_str();
        s->add_option("--out-dir", out_dir, "output directory")->capture_default_str();
        s->add_option("--config", config_path, "JSON config file");
        s->add_option("--n", c.n, "dimension")->capture_default_str();
        s->add_option("--k", c.k, "extra dimensions of the dilation")->capture_default_str();
        s->add_option("--m0", c.m0, "initial block size")->capture_default_str();
        s->add_option("--rcount", c.rcount, "number of colors")->capture_default_str();
        s->add_option("--depth", c.depth, "saturation layers")->capture_default_str();
        s->add_option("--q", c.q, "game rounds")->capture_default_str();
        s->add_option("--L", c.L, "parameter tuple length")->capture_default_str();
        s->add_option("--max-base", c.max_base, "largest base size for dilation search")->capture_default_str();
        s->add_option("--budget", c.neat_budget, "dilation search node budget per base size")->capture_default_str();
        s->add_option("--carrier-cap", c.carrier_cap, "largest carrier materialized")->capture_default_str();
        s->add_option("--v-cap", c.v_cap, "largest index set V")->capture_default_str();
        s->add_option("--build-budget", c.build_budget, "builder node budget")->capture_default_str();
        s->add_option("--game-budget", c.game_budget, "EF game step budget")->capture_default_str();
        s->add_flag("--timing", c.timing, "add stage timings (breaks byte-identical output)");
    };
    auto with_family = [&](CLI::App* s) {
        s->add_option("--family", family_path, "family file (default: <out-dir>/family.json)");
    };

    auto* build = app.add_subcommand("build", "build the colored structure, A and its dilation");
    auto* check = app.add_subcommand("check", "re-check conditions and axioms on a built family");
    auto* interpret = app.add_subcommand("interpret", "verify the interpretation of A in the product");
    auto* elem = app.add_subcommand("elementarity", "subalgebra, Q, B and the B-vs-A game");
    auto* neat = app.add_subcommand("neatcheck", "bounded search for a dilation witness");
    auto* pipe = app.add_subcommand("pipeline", "run every stage and write a summary");
    for (auto* s : {build, check, interpret, elem, neat, pipe}) common(s);
    for (auto* s : {check, interpret, elem, neat}) with_family(s);
    neat->add_option("--target", target, "algebra to test: A or B")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 3;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        if (!config_path.empty()) apply_config_file(config_path, c, *sub);
        if (family_path.empty()) family_path = (std::filesystem::path(out_dir) / "family.json").string();
        CommandResult r;
        if (sub == build) r = cmd_build(c);
        else if (sub == pipe) r = cmd_pipeline(c);
        else {
            const ColorFamily cf = load_family(family_path);
            if (sub == check) r = cmd_check(c, cf);
            else if (sub == interpret) r = cmd_interpret(c, cf);
            else if (sub == elem) r = cmd_elementarity(c, cf);
            else r = cmd_neatcheck(c, cf, target);
        }
        write_outputs(r, out_dir);
        std::cout << sub->get_name() << ": exit " << r.exit_code;
        if (!r.diagnostic.empty()) std::cout << " (" << r.diagnostic << ")";
        std::cout << "\n";
        return r.exit_code;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 3;
    } catch (const ResourceError& e) {
        std::cerr << "resource limit: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
