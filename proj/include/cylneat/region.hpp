#pragma once

#include "cylneat/bits.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cylneat {

class Base {
public:
    explicit Base(std::vector<std::string> names);

    static std::shared_ptr<const Base> make(std::vector<std::string> names);
    static std::shared_ptr<const Base> numbered(std::size_t n, const std::string& prefix = "p");

    std::size_t size() const { return names_.size(); }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    const std::vector<std::string>& names() const { return names_; }
    std::optional<std::size_t> index_of(std::string_view s) const;

    bool operator==(const Base& o) const { return names_ == o.names_; }

private:
    std::vector<std::string> names_;
};

using BasePtr = std::shared_ptr<const Base>;

bool same_base(const BasePtr& a, const BasePtr& b);

using Tuple = std::vector<std::uint32_t>;

// Lexicographic enumeration of ^dim(base): index = sum s_i * N^(dim-1-i).
class TupleSpace {
public:
    TupleSpace() = default;
    TupleSpace(std::size_t base_size, unsigned dim);

    std::size_t base_size() const { return n_; }
    unsigned dim() const { return dim_; }
    std::size_t count() const { return count_; }
    std::size_t stride(unsigned i) const { return stride_[i]; }

    std::size_t index(std::span<const std::uint32_t> s) const;
    Tuple tuple(std::size_t idx) const;
    std::uint32_t coord(std::size_t idx, unsigned i) const {
        return static_cast<std::uint32_t>((idx / stride_[i]) % n_);
    }

private:
    std::size_t n_ = 0;
    unsigned dim_ = 0;
    std::size_t count_ = 0;
    std::vector<std::size_t> stride_;
};

class Region {
public:
    Region(BasePtr base, unsigned dim);

    const BasePtr& base() const { return base_; }
    unsigned dim() const { return space_.dim(); }
    const TupleSpace& space() const { return space_; }

    bool contains(std::span<const std::uint32_t> s) const { return bits_.test(space_.index(s)); }
    void insert(std::span<const std::uint32_t> s) { bits_.set(space_.index(s)); }
    void erase(std::span<const std::uint32_t> s) { bits_.reset(space_.index(s)); }
    std::size_t count() const { return bits_.count(); }
    bool empty() const { return bits_.none(); }

    const Bits& bits() const { return bits_; }
    Bits& bits() { return bits_; }

    std::vector<Tuple> members() const;

    bool subset_of(const Region& o) const;
    Region operator&(const Region& o) const;
    Region operator|(const Region& o) const;
    Region operator~() const;
    Region minus(const Region& o) const;

    bool operator==(const Region& o) const;

private:
    void require_compatible(const Region& o) const;
    BasePtr base_;
    TupleSpace space_;
    Bits bits_;
};

Region full_space(const BasePtr& base, unsigned dim);
Region diagonal(const BasePtr& base, unsigned dim, unsigned i, unsigned j);
Region cylindrify(const Region& x, unsigned i);

// Projection {s|n : s in x}; x must be fixed by every c_i with i >= n.
Region project(const Region& x, unsigned n);
// Cylinder {s in ^dim(base) : s|n in x}.
Region lift(const Region& x, unsigned dim);

} // namespace cylneat
