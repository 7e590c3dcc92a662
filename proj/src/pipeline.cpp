#include "cylneat/pipeline.hpp"

#include "cylneat/errors.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>

namespace cylneat {

Json PipelineConfig::to_json() const {
    return {{"n", n},
            {"k", k},
            {"m0", m0},
            {"rcount", rcount},
            {"depth", depth},
            {"seed", seed},
            {"q", q},
            {"L", L},
            {"max_base", max_base},
            {"carrier_cap", carrier_cap},
            {"v_cap", v_cap},
            {"build_budget", build_budget},
            {"game_budget", game_budget},
            {"neat_budget", neat_budget}};
}

void PipelineConfig::validate() const {
    if (n < 2 || n > 3) throw UsageError("n must be 2 or 3");
    if (k < 1 || k > 3) throw UsageError("k must be in 1..3");
    if (m0 < 1 || m0 > 16) throw UsageError("m0 must be in 1..16");
    if (rcount < 1 || rcount > 8) throw UsageError("rcount must be in 1..8");
    if (depth > 4) throw UsageError("depth must be at most 4");
    if (q > 4) throw UsageError("q must be at most 4");
    if (L > 3) throw UsageError("L must be at most 3");
    if (max_base < 1 || max_base > 64) throw UsageError("max-base must be in 1..64");
    if (carrier_cap < 2) throw UsageError("carrier cap too small");
}

namespace {

enum class ErrClass { usage, resource, negative };

// Runs stages in order; the first exception halts the run and is recorded under the stage.
class Stages {
public:
    explicit Stages(const PipelineConfig& c) : c_(c) {}

    bool run(const std::string& name, const std::function<Json()>& fn, bool counts = true) {
        if (halted_) return false;
        const auto t0 = std::chrono::steady_clock::now();
        Json out;
        try {
            out = fn();
        } catch (const UsageError& e) {
            return halt(name, ErrClass::usage, e.what(), {});
        } catch (const ResourceError& e) {
            return halt(name, ErrClass::resource, e.what(), {});
        } catch (const ExhaustionError& e) {
            return halt(name, ErrClass::negative, e.what(), {{"demand", e.demand()}});
        } catch (const ClosureFailure& e) {
            return halt(name, ErrClass::negative, e.what(), {{"subset", e.subset()}, {"index", e.index()}});
        } catch (const std::exception& e) {
            return halt(name, ErrClass::negative, e.what(), {});
        }
        if (c_.timing)
            out["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out["counts_for_exit"] = counts;
        const std::string v = out.value("verdict", "pass");
        if (counts) {
            if (v == "fail") worst(1);
            else if (v == "inconclusive") worst(2);
        }
        stages_[name] = out;
        order_.push_back(name);
        return true;
    }

    Json summary() const {
        Json s = {{"stages", stages_}, {"stage_order", order_}, {"exit_code", code_}, {"complete", !halted_}};
        if (halted_) s["halted_at"] = halted_at_;
        return s;
    }
    int code() const { return code_; }
    bool halted() const { return halted_; }
    const std::string& diagnostic() const { return diag_; }

private:
    bool halt(const std::string& name, ErrClass k, const std::string& what, Json extra) {
        const char* cls = k == ErrClass::usage ? "usage" : k == ErrClass::resource ? "resource" : "negative";
        Json j = {{"verdict", "error"}, {"error_class", cls}, {"error", what}};
        for (auto& [key, v] : extra.items()) j[key] = v;
        stages_[name] = j;
        order_.push_back(name);
        halted_ = true;
        halted_at_ = name;
        diag_ = name + ": " + what;
        worst(k == ErrClass::usage ? 3 : k == ErrClass::resource ? 2 : 1);
        return false;
    }
    void worst(int c) {
        // usage beats resource beats negative beats pass
        auto rank = [](int x) { return x == 3 ? 3 : x == 2 ? 2 : x == 1 ? 1 : 0; };
        if (rank(c) > rank(code_)) code_ = c;
    }

    const PipelineConfig& c_;
    Json stages_ = Json::object();
    std::vector<std::string> order_;
    int code_ = 0;
    bool halted_ = false;
    std::string halted_at_, diag_;
};

Json wrap(const PipelineConfig& c, const std::string& kind, Json body) {
    body["version"] = kFormatVersion;
    body["config"] = c.to_json();
    body["kind"] = kind;
    return body;
}

const char* pf(bool b) { return b ? "pass" : "fail"; }

SaturationParams sat(const PipelineConfig& c) {
    SaturationParams sp;
    sp.k = c.k;
    sp.depth = c.depth;
    sp.m0 = c.m0;
    return sp;
}

struct Chain {
    const PipelineConfig& c;
    ColorFamily cf;
    BuildStats stats;
    std::optional<SetCA> A;
    AbstractCA Aabs;
    std::optional<ProductBA> P;
    SubAlgebra sub;
    std::optional<QStructure> Q;
    AbstractCA B;
    std::vector<std::uint32_t> iso;  // B -> Aabs when found
    Json closure_log = Json::array();

    explicit Chain(const PipelineConfig& cfg) : c(cfg) {}

    GameOptions game() const {
        GameOptions o;
        o.budget = c.game_budget;
        return o;
    }

    Json build() {
        BuildOptions o;
        o.seed = c.seed;
        o.node_budget = c.build_budget;
        auto br = build_colored_structure(c.n, sat(c), c.rcount, o);
        cf = std::move(br.family);
        stats = br.stats;
        return {{"verdict", "pass"}, {"base_size", cf.blocks.size()}, {"stats", to_json(stats)}};
    }

    Json conditions(Json& file) {
        auto cert = check_conditions(cf, sat(c));
        file = to_json(cert);
        return {{"verdict", pf(cert.pass())},
                {"transversal", cert.transversal.pass},
                {"permutation", cert.permutation.pass},
                {"saturation", cert.saturation.pass},
                {"disjoint", cert.disjoint.pass},
                {"full_saturation", cert.full_saturation.pass}};
    }

    Json algebra(Json& file) {
        A = build_A(cf, c.carrier_cap);
        Aabs = abstractize(*A, c.carrier_cap);
        auto rep = check_ca_axioms(*A);
        file["A"] = to_json(*A);
        file["A_abstract"] = to_json(Aabs);
        file["A_axioms"] = to_json(rep);
        return {{"verdict", pf(rep.pass())}, {"atoms", A->atom_count()}, {"carrier", Aabs.size}, {"axiom_mode", rep.mode}};
    }

    Json dilation(Json& file) {
        const SetCA D = build_dilation(cf, c.k);
        const SetCA nr = neat_reduct(D, c.n);
        const bool same = nr.atoms() == A->atoms();
        auto rep = check_ca_axioms(D);
        file["dilation"] = {{"dim", D.dim()}, {"atom_count", D.atom_count()}, {"axioms", to_json(rep)},
                            {"neat_reduct_equals_A", same}};
        return {{"verdict", pf(same && rep.pass())}, {"dilation_atoms", D.atom_count()}, {"neat_reduct_equals_A", same}};
    }

    Json interpretation(Json& file) {
        P = make_product(*A, cf.blocks, c.carrier_cap);
        if (P->V.size() > c.v_cap) throw CapExceeded("index set V exceeds the configured cap");
        auto cert = verify_interpretation(*A, *P);
        file = to_json(cert);
        return {{"verdict", pf(cert.pass())}, {"product_size", P->size()}, {"components", P->V.size()}};
    }

    Json subalgebra() {
        const auto id = P->identity_index();
        sub = find_q_subalgebra(P->factors[id], id_factor_constants(*P), c.q, c.L, game());
        Json j = to_json(sub);
        j["verdict"] = "pass";
        j["id_factor_size"] = P->factors[id].size;
        return j;
    }

    Json q_elementary() {
        Q = build_Q(sub, *P);
        auto rep = check_q_elementary(*Q, *P, c.q, c.L, game());
        Json j = to_json(rep);
        j["verdict"] = pf(rep.pass);
        j["Q_size"] = Q->product.size();
        return j;
    }

    Json interpret_Q() {
        const auto id = P->identity_index();
        for (int attempt = 0;; ++attempt) {
            try {
                B = apply_interpretation(Q->product);
                break;
            } catch (const ClosureFailure& e) {
                if (attempt > 0) throw;
                closure_log.push_back({{"subset", e.subset()}, {"index", e.index()}, {"message", e.what()}});
                // t_S has Id component 0 or the unit; add both and close under the Boolean operations
                const AbstractCA& full = P->factors[id];
                std::vector<std::uint32_t> els = sub.elements;
                els.push_back(full.zero);
                els.push_back(full.one);
                for (bool grew = true; grew;) {
                    grew = false;
                    std::sort(els.begin(), els.end());
                    els.erase(std::unique(els.begin(), els.end()), els.end());
                    const auto cur = els;
                    for (auto x : cur) {
                        if (!std::binary_search(cur.begin(), cur.end(), full.compl_(x))) els.push_back(full.compl_(x)), grew = true;
                        for (auto y : cur)
                            if (!std::binary_search(cur.begin(), cur.end(), full.meet(x, y))) els.push_back(full.meet(x, y)), grew = true;
                    }
                }
                sub = subalgebra_from_elements(full, els);
                Q = build_Q(sub, *P);
            }
        }
        auto rep = check_ca_axioms(B);
        return {{"verdict", pf(rep.pass())}, {"B_size", B.size}, {"axioms", to_json(rep)}, {"closure_retries", closure_log}};
    }

    Json round_trip() {
        // apply_interpretation(P) against A through f^-1
        const AbstractCA BP = Q->product.size() == P->size() ? B : apply_interpretation(*P);
        std::vector<std::uint32_t> finv(BP.size);
        for (std::size_t x = 0; x < BP.size; ++x) finv[x] = static_cast<std::uint32_t>(BP.origin.at(x));
        const bool ok = is_ca_isomorphism(BP, Aabs, finv);
        return {{"verdict", pf(ok)}, {"map", "f^-1"}, {"elements", BP.size}};
    }

    Json equivalence(Json& file) {
        GameOptions o = game();
        auto cert = check_equiv(B, Aabs, c.q, o);
        const auto mb = encode_ca(B), ma = encode_ca(Aabs);
        std::string why;
        const bool rep = replay(cert, mb, ma, &why, o);
        if (cert.kind == "isomorphism") iso = cert.isomorphism;
        file["certificate"] = to_json(cert);
        file["replay"] = rep;
        if (!why.empty()) file["replay_error"] = why;
        Json j = {{"winner", to_string(cert.winner)}, {"kind", cert.kind}, {"replay", rep}, {"rounds", c.q}};
        bool strategy_ok = true;
        if (cert.kind != "strategy") {
            // the game itself, solved without shortcuts
            GameOptions s = o;
            s.shortcuts = false;
            try {
                auto st = ef_winner(mb, ma, c.q, {}, s);
                std::string w2;
                const bool r2 = replay(st, mb, ma, &w2, s);
                file["strategy"] = to_json(st);
                file["strategy_replay"] = r2;
                j["strategy_winner"] = to_string(st.winner);
                j["strategy_replay"] = r2;
                j["strategy_positions"] = st.positions;
                strategy_ok = r2 && st.winner == cert.winner;
            } catch (const ResourceError& e) {
                file["strategy"] = {{"error", e.what()}};
                j["strategy_winner"] = "not computed";
            }
        }
        j["verdict"] = !rep || !strategy_ok ? "fail" : cert.winner == Player::duplicator ? "pass" : "fail";
        return j;
    }

    Json neat(Json& file, const AbstractCA& target, bool use_hint) {
        DilationOptions o;
        o.node_budget = c.neat_budget;
        if (use_hint) {
            if (&target == &Aabs) {
                o.hints.push_back(hint_from(*A));
            } else if (!iso.empty()) {
                // carry A's representation over to B along the isomorphism
                DilationHint h;
                for (auto b : target.atoms()) {
                    const std::uint64_t m = Aabs.origin.empty() ? iso[b] : Aabs.origin[iso[b]];
                    h.atom_images.push_back(A->atoms().at(static_cast<std::size_t>(__builtin_ctzll(m))));
                }
                o.hints.push_back(std::move(h));
            }
        }
        auto r = dilation_search(target, c.n, c.k, c.max_base, o);
        Json wj = to_json(r);
        bool verified = false;
        if (r.witness) {
            std::string why;
            verified = verify_dilation_witness(target, *r.witness, &why);
            wj["witness_verified"] = verified;
            if (!why.empty()) wj["verify_error"] = why;
        }
        file = wj;
        const char* v = r.outcome == DilationOutcome::witness ? (verified ? "pass" : "fail")
                        : r.outcome == DilationOutcome::refutation ? "fail" : "inconclusive";
        return {{"verdict", v}, {"outcome", to_string(r.outcome)}, {"max_base", c.max_base},
                {"hints", o.hints.size()}, {"witness_base", r.witness ? Json(r.witness->base_size) : Json(nullptr)}};
    }
};

CommandResult finish(const PipelineConfig& c, Stages& st, const std::string& kind, std::map<std::string, Json> files) {
    CommandResult r;
    r.exit_code = st.code();
    r.diagnostic = st.diagnostic();
    for (auto& [name, body] : files)
        if (!body.is_null()) r.files[name] = wrap(c, name.substr(0, name.rfind(".json")), std::move(body));
    r.files[kind + ".json"] = wrap(c, kind, st.summary());
    return r;
}

CommandResult with_family(const PipelineConfig& c, const ColorFamily& cf, const std::string& kind,
                          const std::function<void(Chain&, Stages&, std::map<std::string, Json>&)>& body) {
    c.validate();
    Chain ch(c);
    ch.cf = cf;
    Stages st(c);
    std::map<std::string, Json> files;
    if (cf.blocks.n != c.n) {
        st.run("load", []() -> Json { throw UsageError("family dimension differs from --n"); });
        return finish(c, st, kind, files);
    }
    body(ch, st, files);
    return finish(c, st, kind, files);
}

} // namespace

CommandResult cmd_build(const PipelineConfig& c) {
    c.validate();
    Chain ch(c);
    Stages st(c);
    std::map<std::string, Json> files;
    Json cond, alg;
    if (st.run("build", [&] { return ch.build(); })) files["family.json"] = to_json(ch.cf);
    st.run("conditions", [&] { return ch.conditions(cond); });
    st.run("algebra", [&] { return ch.algebra(alg); });
    st.run("dilation", [&] { return ch.dilation(alg); });
    files["conditions.json"] = cond;
    files["algebra.json"] = alg;
    return finish(c, st, "build", files);
}

CommandResult cmd_check(const PipelineConfig& c, const ColorFamily& cf) {
    return with_family(c, cf, "check", [&](Chain& ch, Stages& st, std::map<std::string, Json>& files) {
        Json cond, alg;
        st.run("conditions", [&] { return ch.conditions(cond); });
        st.run("algebra", [&] { return ch.algebra(alg); });
        files["conditions.json"] = cond;
        files["algebra.json"] = alg;
    });
}

CommandResult cmd_interpret(const PipelineConfig& c, const ColorFamily& cf) {
    return with_family(c, cf, "interpret", [&](Chain& ch, Stages& st, std::map<std::string, Json>& files) {
        Json alg, cert;
        st.run("algebra", [&] { return ch.algebra(alg); });
        st.run("interpretation", [&] { return ch.interpretation(cert); });
        files["interpretation.json"] = cert;
    });
}

namespace {
void elementarity_stages(Chain& ch, Stages& st, Json& eq) {
    st.run("subalgebra", [&] { return ch.subalgebra(); });
    st.run("q_elementary", [&] { return ch.q_elementary(); });
    st.run("interpret_Q", [&] { return ch.interpret_Q(); });
    st.run("round_trip", [&] { return ch.round_trip(); });
    st.run("equivalence", [&] { return ch.equivalence(eq); });
}
} // namespace

CommandResult cmd_elementarity(const PipelineConfig& c, const ColorFamily& cf) {
    return with_family(c, cf, "elementarity", [&](Chain& ch, Stages& st, std::map<std::string, Json>& files) {
        Json alg, eq;
        st.run("algebra", [&] { return ch.algebra(alg); });
        st.run("product", [&] {
            ch.P = make_product(*ch.A, ch.cf.blocks, ch.c.carrier_cap);
            return Json{{"verdict", "pass"}, {"product_size", ch.P->size()}};
        });
        elementarity_stages(ch, st, eq);
        files["equivalence.json"] = eq;
    });
}

CommandResult cmd_neatcheck(const PipelineConfig& c, const ColorFamily& cf, const std::string& target) {
    if (target != "A" && target != "B") throw UsageError("target must be A or B");
    return with_family(c, cf, "neatcheck", [&](Chain& ch, Stages& st, std::map<std::string, Json>& files) {
        Json alg, eq, nj;
        st.run("algebra", [&] { return ch.algebra(alg); });
        if (target == "B") {
            st.run("product", [&] {
                ch.P = make_product(*ch.A, ch.cf.blocks, ch.c.carrier_cap);
                return Json{{"verdict", "pass"}, {"product_size", ch.P->size()}};
            });
            st.run("subalgebra", [&] { return ch.subalgebra(); });
            st.run("q_elementary", [&] { return ch.q_elementary(); }, false);
            st.run("interpret_Q", [&] { return ch.interpret_Q(); });
            st.run("isomorphism", [&] {
                ch.iso = find_ca_isomorphism(ch.B, ch.Aabs);
                return Json{{"verdict", "info"}, {"B_isomorphic_to_A", !ch.iso.empty()}};
            });
        }
        st.run("neat", [&] { return ch.neat(nj, target == "A" ? ch.Aabs : ch.B, true); });
        files["neat.json"] = nj;
    });
}

CommandResult cmd_pipeline(const PipelineConfig& c) {
    c.validate();
    Chain ch(c);
    Stages st(c);
    std::map<std::string, Json> files;
    Json cond, alg, cert, eq, nj;
    if (st.run("build", [&] { return ch.build(); })) files["family.json"] = to_json(ch.cf);
    st.run("conditions", [&] { return ch.conditions(cond); });
    st.run("algebra", [&] { return ch.algebra(alg); });
    st.run("dilation", [&] { return ch.dilation(alg); });
    st.run("interpretation", [&] { return ch.interpretation(cert); });
    elementarity_stages(ch, st, eq);
    // B outside Nr_n CA_{n+k} is the claim under study, not a check: recorded, never decisive
    st.run("neat", [&] { return ch.neat(nj, ch.B, true); }, false);
    files["conditions.json"] = cond;
    files["algebra.json"] = alg;
    files["interpretation.json"] = cert;
    files["equivalence.json"] = eq;
    files["neat.json"] = nj;
    return finish(c, st, "summary", files);
}

void write_outputs(const CommandResult& r, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, body] : r.files) {
        std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
        if (!f) throw UsageError("cannot write " + name + " in " + dir);
        f << canonical(body);
    }
}

} // namespace cylneat
