#pragma once

#include "cylneat/interpretation.hpp"
#include "cylneat/setca.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace cylneat {

// Finite structure with total operations (read relationally as their graphs) and constants.
struct RelStructure {
    struct Function {
        std::string name;
        unsigned arity = 0;
        std::vector<std::uint32_t> table;  // row-major over size^arity
    };
    struct Constant {
        std::string name;
        std::uint32_t value = 0;
    };

    std::size_t size = 0;
    std::vector<Function> functions;
    std::vector<Constant> constants;

    std::uint32_t apply(std::size_t f, const std::uint32_t* args) const;
    bool same_signature(const RelStructure& o) const;
    bool well_formed() const;
    std::string digest() const;
};

RelStructure encode_ca(const AbstractCA& a);
// Boolean algebra with meet, complement and the given named constants.
RelStructure encode_ba(const AbstractCA& a, const std::vector<std::pair<std::string, std::uint32_t>>& constants);
RelStructure encode_product(const ProductBA& p);

enum class Player { duplicator, spoiler };
std::string to_string(Player p);

using Move = std::pair<std::uint32_t, std::uint32_t>;

// Spoiler's winning tree: at an inner node Spoiler picks `element` in structure `side`, and
// every Duplicator answer has a child. Leaves carry the atomic formula that fails.
struct SpoilerNode {
    unsigned side = 0;
    std::uint32_t element = 0;
    std::vector<std::pair<std::uint32_t, std::unique_ptr<SpoilerNode>>> answers;
    std::string violation;
};

// Duplicator's strategy: for every Spoiler move, an answer and (if rounds remain) the
// strategy from there. Subtrees beyond the size limit are left for replay to re-solve.
struct DuplicatorNode {
    std::vector<std::uint32_t> answer_left;   // answer in structure 2 to each move in structure 1
    std::vector<std::uint32_t> answer_right;  // answer in structure 1 to each move in structure 2
    std::vector<std::unique_ptr<DuplicatorNode>> next_left, next_right;
};

struct GameCertificate {
    std::string digest1, digest2;
    unsigned rounds = 0;
    Player winner = Player::duplicator;
    std::string kind;  // "isomorphism", "identity", "strategy"
    std::vector<Move> start;
    std::vector<std::uint32_t> isomorphism;
    std::unique_ptr<SpoilerNode> spoiler;
    std::unique_ptr<DuplicatorNode> duplicator;
    bool complete = true;  // false when strategy subtrees were elided
    std::size_t positions = 0;
};

struct GameOptions {
    std::size_t budget = 50'000'000;      // atomic type evaluations
    std::size_t tree_limit = 200'000;     // certificate nodes kept
    bool shortcuts = true;                // identity and isomorphism fast paths
};

GameCertificate ef_winner(const RelStructure& m1, const RelStructure& m2, unsigned q, const std::vector<Move>& start,
                          const GameOptions& opt = {});
// Re-checks a certificate against the structures; for elided subtrees the game is re-solved.
bool replay(const GameCertificate& c, const RelStructure& m1, const RelStructure& m2, std::string* why = nullptr,
            const GameOptions& opt = {});

// Independent oracle: compares truth of all sentences of quantifier rank <= q via the
// normal form "Boolean combinations of atomic formulas and of exists-x applied to the
// definable sets one level down".
bool theory_compare(const RelStructure& m1, const RelStructure& m2, unsigned q, std::size_t budget = 20'000'000);

struct SubAlgebra {
    std::vector<std::uint32_t> elements;  // indices into the ambient algebra, increasing
    AbstractCA algebra;                   // tables over positions in `elements`
    bool improper = false;
    bool flag_no_proper = false;          // true when no proper candidate qualified
    std::size_t candidates_tried = 0;
    unsigned q = 0, L = 0;
};

// Smallest subalgebra (fewest atoms, then a fixed partition order) containing the constants
// such that Duplicator wins q rounds from every parameter tuple of length <= L.
SubAlgebra find_q_subalgebra(const AbstractCA& ba, const std::vector<std::pair<std::string, std::uint32_t>>& constants,
                             unsigned q, unsigned L, const GameOptions& opt = {});
SubAlgebra subalgebra_from_elements(const AbstractCA& ba, std::vector<std::uint32_t> elements);

// Constants of the Id factor: the Id components of 0, 1, every 1_u and every d_ij.
std::vector<std::pair<std::string, std::uint32_t>> id_factor_constants(const ProductBA& p);

struct QStructure {
    ProductBA product;
    std::vector<std::uint32_t> id_embedding;  // Q's Id-factor index -> P's Id-factor index
    std::vector<std::uint32_t> embed_all() const;
};

QStructure build_Q(const SubAlgebra& bId, const ProductBA& p);
// Index in P of every element of Q.
std::vector<std::uint32_t> q_into_p(const QStructure& q, const ProductBA& p);

struct ElementarityReport {
    bool pass = true;
    std::string method;
    std::size_t parameter_tuples = 0;
    std::vector<std::string> failures;
};

ElementarityReport check_q_elementary(const QStructure& q, const ProductBA& p, unsigned rounds, unsigned L,
                                      const GameOptions& opt = {});

AbstractCA apply_interpretation(const ProductBA& q);

// Atom-bijection search for a CA isomorphism; empty when none exists.
std::vector<std::uint32_t> find_ca_isomorphism(const AbstractCA& b, const AbstractCA& a);
bool is_ca_isomorphism(const AbstractCA& b, const AbstractCA& a, const std::vector<std::uint32_t>& map);

GameCertificate check_equiv(const AbstractCA& b, const AbstractCA& a, unsigned q, const GameOptions& opt = {});

} // namespace cylneat
