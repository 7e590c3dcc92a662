#include "cylneat/json_io.hpp"

#include "cylneat/errors.hpp"

namespace cylneat {

Json to_json(const Region& r) {
    Json tuples = Json::array();
    for (const auto& t : r.members()) tuples.push_back(t);
    return {{"dim", r.dim()}, {"tuples", tuples}};
}

Json to_json(const SetCA& a) {
    Json atoms = Json::array();
    for (const auto& r : a.atoms()) atoms.push_back(to_json(r)["tuples"]);
    return {{"base", a.base()->names()}, {"dim", a.dim()}, {"atom_count", a.atom_count()}, {"atoms", atoms}};
}

Json to_json(const AbstractCA& a) {
    const auto atoms = a.atoms();
    auto below = [&](std::uint32_t x) {
        Json s = Json::array();
        for (std::size_t k = 0; k < atoms.size(); ++k)
            if (a.leq(atoms[k], x)) s.push_back(k);
        return s;
    };
    Json cyl = Json::array();
    for (unsigned i = 0; i < a.dim; ++i) {
        Json row = Json::array();
        for (auto at : atoms) row.push_back(below(a.cyl(i, at)));
        cyl.push_back(row);
    }
    Json diag = Json::object();
    for (unsigned i = 0; i < a.dim; ++i)
        for (unsigned j = 0; j < a.dim; ++j) diag["d_" + std::to_string(i) + std::to_string(j)] = below(a.diag(i, j));
    return {{"dim", a.dim},   {"size", a.size}, {"atom_count", atoms.size()},
            {"cyl_on_atoms", cyl}, {"diagonals", diag}, {"digest", encode_ca(a).digest()}};
}

Json to_json(const ColorFamily& cf) {
    Json colors = Json::array();
    for (const auto& c : cf.colors) colors.push_back(to_json(c)["tuples"]);
    return {{"n", cf.blocks.n},
            {"base", cf.blocks.base->names()},
            {"block_of", cf.blocks.block_of},
            {"layer_of", cf.blocks.layer_of},
            {"colors", colors}};
}

ColorFamily family_from_json(const Json& j) {
    try {
        ColorFamily cf;
        cf.blocks.n = j.at("n").get<unsigned>();
        cf.blocks.base = Base::make(j.at("base").get<std::vector<std::string>>());
        cf.blocks.block_of = j.at("block_of").get<std::vector<unsigned>>();
        cf.blocks.layer_of = j.at("layer_of").get<std::vector<unsigned>>();
        if (cf.blocks.block_of.size() != cf.blocks.base->size() || cf.blocks.layer_of.size() != cf.blocks.base->size())
            throw UsageError("family: block/layer arrays do not match the base");
        for (auto b : cf.blocks.block_of)
            if (b >= cf.blocks.n) throw UsageError("family: block index out of range");
        for (const auto& c : j.at("colors")) {
            Region r(cf.blocks.base, cf.blocks.n);
            for (const auto& t : c) {
                const auto tup = t.get<std::vector<std::uint32_t>>();
                if (tup.size() != cf.blocks.n) throw UsageError("family: tuple of wrong length");
                for (auto x : tup)
                    if (x >= cf.blocks.base->size()) throw UsageError("family: point out of range");
                r.insert(tup);
            }
            cf.colors.push_back(std::move(r));
        }
        return cf;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("family: ") + e.what());
    }
}

Json to_json(const AxiomReport& r) {
    Json v = Json::array();
    for (const auto& x : r.violations)
        v.push_back({{"axiom", x.axiom}, {"indices", x.indices}, {"witnesses", x.witnesses}});
    return {{"pass", r.pass()}, {"mode", r.mode}, {"elements", r.elements}, {"violations", v}};
}

Json to_json(const Verdict& v) {
    return {{"pass", v.pass}, {"checked", v.checked}, {"items", v.items}, {"failures", v.failures}, {"witnesses", v.witnesses}};
}

Json to_json(const ConditionCertificate& c) {
    return {{"pass", c.pass()},
            {"transversal", to_json(c.transversal)},
            {"permutation", to_json(c.permutation)},
            {"saturation", to_json(c.saturation)},
            {"disjoint", to_json(c.disjoint)},
            {"full_saturation", to_json(c.full_saturation)}};
}

Json to_json(const BuildStats& s) {
    return {{"demands", s.demands},
            {"met_in_layer", s.met_in_layer},
            {"fresh_points", s.fresh_points},
            {"closure_points", s.closure_points},
            {"closure_moves", s.closure_moves},
            {"closure_attempts", s.closure_attempts},
            {"closure_status", s.closure_status},
            {"points_per_layer", s.points_per_layer}};
}

Json to_json(const CheckResult& c) {
    return {{"name", c.name}, {"pass", c.pass}, {"cases", c.cases}, {"counterexamples", c.counterexamples}};
}

Json to_json(const InterpretationCertificate& c) {
    Json eta = Json::array();
    for (const auto& e : c.eta) eta.push_back(to_json(e));
    return {{"pass", c.pass()},
            {"injective", to_json(c.injective)},
            {"homomorphism", to_json(c.homomorphism)},
            {"eta", eta},
            {"decomposition", to_json(c.decomposition)},
            {"partition_lemmas", to_json(c.partition_lemmas)},
            {"range_definability", to_json(c.range_definability)},
            {"diagonal_definability", to_json(c.diagonal_definability)}};
}

namespace {

Json spoiler_json(const SpoilerNode& n) {
    if (n.answers.empty()) return {{"violation", n.violation}};
    Json ans = Json::array();
    for (const auto& [y, child] : n.answers) ans.push_back({y, child ? spoiler_json(*child) : Json(nullptr)});
    return {{"side", n.side}, {"element", n.element}, {"answers", ans}};
}

std::size_t dup_entries(const DuplicatorNode* n) {
    if (!n) return 0;
    std::size_t s = n->answer_left.size() + n->answer_right.size();
    for (const auto& c : n->next_left) s += dup_entries(c.get());
    for (const auto& c : n->next_right) s += dup_entries(c.get());
    return s;
}

Json dup_json(const DuplicatorNode* n, bool deep) {
    if (!n) return nullptr;
    Json j = {{"answer_left", n->answer_left}, {"answer_right", n->answer_right}};
    if (deep && (!n->next_left.empty() || !n->next_right.empty())) {
        Json l = Json::array(), r = Json::array();
        for (const auto& c : n->next_left) l.push_back(dup_json(c.get(), true));
        for (const auto& c : n->next_right) r.push_back(dup_json(c.get(), true));
        j["next_left"] = l;
        j["next_right"] = r;
    }
    return j;
}

std::size_t spoiler_entries(const SpoilerNode* n) {
    if (!n) return 0;
    std::size_t s = 1;
    for (const auto& a : n->answers) s += spoiler_entries(a.second.get());
    return s;
}

} // namespace

Json to_json(const GameCertificate& c, std::size_t max_entries) {
    Json start = Json::array();
    for (const auto& [a, b] : c.start) start.push_back({a, b});
    Json j = {{"digests", {c.digest1, c.digest2}},
              {"rounds", c.rounds},
              {"winner", to_string(c.winner)},
              {"kind", c.kind},
              {"start", start},
              {"complete", c.complete},
              {"positions", c.positions}};
    if (c.kind == "isomorphism") j["isomorphism"] = c.isomorphism;
    if (c.spoiler) {
        if (spoiler_entries(c.spoiler.get()) <= max_entries) j["spoiler_tree"] = spoiler_json(*c.spoiler);
        else {
            j["spoiler_tree"] = {{"side", c.spoiler->side}, {"element", c.spoiler->element}};
            j["tree_written"] = "first move only";
        }
    }
    if (c.duplicator) {
        const bool deep = dup_entries(c.duplicator.get()) <= max_entries;
        j["duplicator_system"] = dup_json(c.duplicator.get(), deep);
        if (!deep) j["tree_written"] = "first-round responses only";
    }
    return j;
}

Json to_json(const SubAlgebra& s) {
    return {{"elements", s.elements},
            {"size", s.elements.size()},
            {"improper", s.improper},
            {"flag_no_proper", s.flag_no_proper},
            {"candidates_tried", s.candidates_tried},
            {"q", s.q},
            {"L", s.L}};
}

Json to_json(const ElementarityReport& r) {
    return {{"pass", r.pass}, {"method", r.method}, {"parameter_tuples", r.parameter_tuples}, {"failures", r.failures}};
}

Json to_json(const DilationResult& r) {
    Json per = Json::array();
    for (const auto& s : r.per_base)
        per.push_back({{"base_size", s.base_size},
                       {"nodes", s.nodes},
                       {"candidates", s.candidates},
                       {"rejected", s.rejected},
                       {"exhausted", s.exhausted}});
    Json j = {{"outcome", to_string(r.outcome)}, {"digest", r.digest}, {"n", r.n},       {"k", r.k},
              {"max_base", r.max_base},           {"per_base", per}};
    if (r.outcome == DilationOutcome::refutation) j["claim"] = "no dilation over any base of size <= max_base";
    if (r.witness) {
        const auto& w = *r.witness;
        Json wj = {{"base_size", w.base_size}, {"source", w.source}, {"degenerate", w.degenerate}, {"map", w.map}};
        if (w.D) wj["dilation"] = {{"dim", w.D->dim()}, {"atom_count", w.D->atom_count()}, {"base", w.D->base()->names()}};
        Json imgs = Json::array();
        for (const auto& im : w.atom_images) imgs.push_back(to_json(im)["tuples"]);
        wj["atom_images"] = imgs;
        j["witness"] = wj;
    }
    return j;
}

std::string canonical(const Json& j) { return j.dump(2) + "\n"; }

} // namespace cylneat
