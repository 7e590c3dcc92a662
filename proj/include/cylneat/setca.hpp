#pragma once

#include "cylneat/bits.hpp"
#include "cylneat/region.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cylneat {

using AtomSet = Bits;

inline constexpr std::size_t kDefaultCarrierCap = 4096;

// A finite cylindric set algebra, stored by its atom partition. Every element is a union of
// atoms; the carrier is materialized on demand when it fits under a cap.
class SetCA {
public:
    static SetCA generate(const BasePtr& base, unsigned dim, const std::vector<Region>& generators);
    // Validates that the atoms partition the space and that diagonals and c_i images are unions.
    static SetCA from_atoms(const BasePtr& base, unsigned dim, std::vector<Region> atoms);
    // No validation; closure defects are reported later by check_ca_axioms.
    static SetCA from_atoms_unchecked(const BasePtr& base, unsigned dim, std::vector<Region> atoms);

    const BasePtr& base() const { return base_; }
    unsigned dim() const { return dim_; }
    const TupleSpace& space() const { return space_; }
    std::size_t atom_count() const { return atoms_.size(); }
    const std::vector<Region>& atoms() const { return atoms_; }
    std::uint32_t label(std::size_t tuple_index) const { return labels_[tuple_index]; }

    AtomSet zero() const { return AtomSet(atoms_.size()); }
    AtomSet unit() const;
    const AtomSet& diag(unsigned i, unsigned j) const { return diag_[i * dim_ + j]; }
    const AtomSet& cyl_atom(unsigned i, std::size_t atom) const { return cyl_[i][atom]; }
    AtomSet cyl(const AtomSet& x, unsigned i) const;

    Region region(const AtomSet& x) const;
    std::optional<AtomSet> element_of(const Region& r) const;
    bool contains(const Region& r) const { return element_of(r).has_value(); }

    // Tuples of some atom whose c_i image is not a union of atoms (empty when closed).
    const std::vector<std::string>& closure_defects() const { return defects_; }

    // Elements as atom masks; requires atom_count <= 63 and 2^atoms <= cap.
    std::size_t carrier_size(std::size_t cap = kDefaultCarrierCap) const;
    std::uint64_t mask(const AtomSet& x) const;
    AtomSet from_mask(std::uint64_t m) const;
    std::uint64_t cyl_mask(std::uint64_t m, unsigned i) const;
    std::uint64_t diag_mask(unsigned i, unsigned j) const { return mask(diag(i, j)); }
    std::uint64_t unit_mask() const;

private:
    SetCA(const BasePtr& base, unsigned dim);
    void index_atoms(bool validate);

    BasePtr base_;
    unsigned dim_ = 0;
    TupleSpace space_;
    std::vector<std::uint32_t> labels_;
    std::vector<Region> atoms_;
    std::vector<AtomSet> diag_;
    std::vector<std::vector<AtomSet>> cyl_;
    std::vector<std::string> defects_;
};

SetCA generate_subalgebra(const BasePtr& base, unsigned dim, const std::vector<Region>& generators);

// Operation tables over an explicit universe 0..size-1. dim = 0 means a Boolean algebra.
struct AbstractCA {
    unsigned dim = 0;
    std::size_t size = 0;
    std::vector<std::uint32_t> meet_table;
    std::vector<std::uint32_t> compl_table;
    std::vector<std::vector<std::uint32_t>> cyl_table;
    std::uint32_t zero = 0;
    std::uint32_t one = 0;
    std::vector<std::uint32_t> diag_table;
    // For algebras read off a SetCA: the atom mask of each element.
    std::vector<std::uint64_t> origin;

    std::uint32_t meet(std::uint32_t a, std::uint32_t b) const { return meet_table[a * size + b]; }
    std::uint32_t compl_(std::uint32_t a) const { return compl_table[a]; }
    std::uint32_t join(std::uint32_t a, std::uint32_t b) const { return compl_(meet(compl_(a), compl_(b))); }
    std::uint32_t cyl(unsigned i, std::uint32_t a) const { return cyl_table[i][a]; }
    std::uint32_t diag(unsigned i, unsigned j) const { return diag_table[i * dim + j]; }
    bool leq(std::uint32_t a, std::uint32_t b) const { return meet(a, b) == a; }
    std::vector<std::uint32_t> atoms() const;
    // Tables total, constants in range.
    bool well_formed() const;
};

AbstractCA abstractize(const SetCA& a, std::size_t cap = kDefaultCarrierCap);
// Boolean algebra of carrier elements below e, complement relative to e.
AbstractCA relativize(const SetCA& a, const Region& e, std::size_t cap = kDefaultCarrierCap);
SetCA neat_reduct(const SetCA& c, unsigned n);

struct AxiomViolation {
    std::string axiom;
    std::vector<unsigned> indices;
    std::vector<std::string> witnesses;
};

struct AxiomReport {
    std::string mode;
    std::size_t elements = 0;
    std::vector<AxiomViolation> violations;
    bool pass() const { return violations.empty(); }
};

// Exhaustive over the carrier when it has at most 2^20 elements; otherwise axioms are
// evaluated with x, y ranging over atoms (mode "atomic").
AxiomReport check_ca_axioms(const SetCA& a, std::size_t max_violations = 16);
AxiomReport check_ca_axioms(const AbstractCA& a, std::size_t max_violations = 16);

} // namespace cylneat
