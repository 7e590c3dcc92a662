#pragma once

#include "cylneat/setca.hpp"
#include "cylneat/witness.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cylneat {

// A choice vector: component u is an element index of factor u.
using ProductElem = std::vector<std::uint32_t>;

struct ProductBA {
    unsigned n = 0;
    std::vector<std::vector<unsigned>> V;
    std::vector<AbstractCA> factors;
    std::vector<ProductElem> one_u;
    std::vector<ProductElem> diag;  // n*n, row-major
    // Mask of 1_u in the source algebra, when the product was read off a SetCA.
    std::vector<std::uint64_t> unit_masks;
    // The regions 1_u themselves (the chi_u of the construction).
    std::vector<Region> unit_regions;

    std::size_t identity_index() const;
    std::size_t size() const;  // saturates at SIZE_MAX
    ProductElem zero() const;
    ProductElem unit() const;
    ProductElem meet(const ProductElem& a, const ProductElem& b) const;
    ProductElem join(const ProductElem& a, const ProductElem& b) const;
    ProductElem compl_(const ProductElem& a) const;
    const ProductElem& d(unsigned i, unsigned j) const { return diag[i * n + j]; }
    std::size_t index(const ProductElem& a) const;
    ProductElem element(std::size_t idx) const;
};

ProductBA make_product(const SetCA& A, const BlockedBase& bb, std::size_t cap = kDefaultCarrierCap);

// f(a) = <a . 1_u>_u for a carrier element given by its atom mask.
ProductElem f_map(std::uint64_t a, const ProductBA& p);
// Inverse of f on product elements read off a SetCA.
std::uint64_t f_inverse(const ProductElem& e, const ProductBA& p);

bool equiv_i(const std::vector<unsigned>& u, const std::vector<unsigned>& v, unsigned i);
// S is a bitmask over positions of V.
ProductElem t_S(std::uint64_t S, unsigned i, const ProductBA& p);

// ---------------------------------------------------------------------------------------------
// Quantifier-free formulas with set-indexed connectives.

struct TermNode;
using Term = std::shared_ptr<const TermNode>;

struct TermNode {
    enum class Kind { var, zero, one, one_u, diag, constant, meet, join, compl_ };
    Kind kind;
    unsigned a = 0, b = 0;
    ProductElem value;
    Term l, r;
};

namespace term {
Term var(unsigned id);
Term zero();
Term one();
Term one_u(unsigned u);
Term diag(unsigned i, unsigned j);
Term constant(ProductElem v);
Term meet(Term l, Term r);
Term join(Term l, Term r);
Term compl_(Term t);
} // namespace term

struct FormulaNode;
using Formula = std::shared_ptr<const FormulaNode>;

struct FormulaNode {
    enum class Kind { truth, eq, not_, and_, or_, indexed_and, indexed_or };
    Kind kind;
    bool truth = true;
    Term l, r;
    std::vector<Formula> kids;
    // Indexed connectives: conjuncts are produced on demand, never materialized together.
    std::size_t width = 0;
    std::function<Formula(std::size_t)> gen;
};

namespace formula {
Formula truth(bool v);
Formula eq(Term l, Term r);
Formula not_(Formula f);
Formula and_(std::vector<Formula> fs);
Formula or_(std::vector<Formula> fs);
Formula implies(Formula a, Formula b);
Formula indexed_and(std::size_t width, std::function<Formula(std::size_t)> gen);
Formula indexed_or(std::size_t width, std::function<Formula(std::size_t)> gen);
} // namespace formula

inline constexpr unsigned kVarX = 0;
inline constexpr unsigned kVarY = 1;
inline constexpr std::size_t kDefaultVCap = 27;

using Assignment = std::vector<std::optional<ProductElem>>;

Term t_S_term(std::uint64_t S, unsigned i, const ProductBA& p);
Formula eta_i_formula(unsigned i, const ProductBA& p, std::size_t v_cap = kDefaultVCap);

ProductElem eval_term(const ProductBA& p, const Term& t, const Assignment& env);
bool eval_formula(const ProductBA& p, const Formula& f, const Assignment& env);
// Substitutes bound variables and folds closed subformulas; the result mentions only unbound
// variables and has the same truth value as f under every extension of env.
Formula partial_eval(const ProductBA& p, const Formula& f, const Assignment& env);

struct CheckResult {
    std::string name;
    bool pass = true;
    std::size_t cases = 0;
    std::vector<std::string> counterexamples;
};

struct InterpretationCertificate {
    CheckResult injective;
    CheckResult homomorphism;
    std::vector<CheckResult> eta;
    CheckResult decomposition;
    CheckResult partition_lemmas;
    CheckResult range_definability;
    CheckResult diagonal_definability;
    bool pass() const;
};

InterpretationCertificate verify_interpretation(const SetCA& A, const ProductBA& p);

std::string elem_string(const ProductElem& e);

} // namespace cylneat
