#include "cylneat/region.hpp"

#include "cylneat/errors.hpp"

#include <set>

namespace cylneat {

Base::Base(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) throw UsageError("base must be nonempty");
    std::set<std::string> seen(names_.begin(), names_.end());
    if (seen.size() != names_.size()) throw UsageError("base element identifiers must be distinct");
}

std::shared_ptr<const Base> Base::make(std::vector<std::string> names) {
    return std::make_shared<const Base>(std::move(names));
}

std::shared_ptr<const Base> Base::numbered(std::size_t n, const std::string& prefix) {
    std::vector<std::string> v;
    v.reserve(n);
    for (std::size_t i = 0; i < n; ++i) v.push_back(prefix + std::to_string(i));
    return make(std::move(v));
}

std::optional<std::size_t> Base::index_of(std::string_view s) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == s) return i;
    return std::nullopt;
}

bool same_base(const BasePtr& a, const BasePtr& b) {
    return a == b || (a && b && *a == *b);
}

TupleSpace::TupleSpace(std::size_t base_size, unsigned dim) : n_(base_size), dim_(dim), stride_(dim) {
    if (dim == 0) throw UsageError("dimension 0 is not supported");
    std::size_t s = 1;
    for (unsigned i = dim; i-- > 0;) {
        stride_[i] = s;
        if (s > (std::size_t{1} << 40) / std::max<std::size_t>(base_size, 1))
            throw CapExceeded("tuple space too large");
        s *= base_size;
    }
    count_ = s;
}

std::size_t TupleSpace::index(std::span<const std::uint32_t> s) const {
    if (s.size() != dim_) throw UsageError("tuple has wrong dimension");
    std::size_t idx = 0;
    for (unsigned i = 0; i < dim_; ++i) {
        if (s[i] >= n_) throw UsageError("tuple entry outside base");
        idx = idx * n_ + s[i];
    }
    return idx;
}

Tuple TupleSpace::tuple(std::size_t idx) const {
    Tuple t(dim_);
    for (unsigned i = dim_; i-- > 0;) {
        t[i] = static_cast<std::uint32_t>(idx % n_);
        idx /= n_;
    }
    return t;
}

Region::Region(BasePtr base, unsigned dim)
    : base_(std::move(base)), space_(base_ ? base_->size() : 0, dim), bits_(space_.count()) {
    if (!base_) throw UsageError("region needs a base");
}

std::vector<Tuple> Region::members() const {
    std::vector<Tuple> out;
    bits_.for_each([&](std::size_t i) { out.push_back(space_.tuple(i)); });
    return out;
}

void Region::require_compatible(const Region& o) const {
    if (dim() != o.dim() || !same_base(base_, o.base_)) throw UsageError("regions over different spaces");
}

bool Region::subset_of(const Region& o) const {
    require_compatible(o);
    return bits_.subset_of(o.bits_);
}

Region Region::operator&(const Region& o) const {
    require_compatible(o);
    Region r = *this;
    r.bits_ &= o.bits_;
    return r;
}

Region Region::operator|(const Region& o) const {
    require_compatible(o);
    Region r = *this;
    r.bits_ |= o.bits_;
    return r;
}

Region Region::operator~() const {
    Region r = *this;
    r.bits_ = ~bits_;
    return r;
}

Region Region::minus(const Region& o) const {
    require_compatible(o);
    Region r = *this;
    r.bits_.subtract(o.bits_);
    return r;
}

bool Region::operator==(const Region& o) const {
    return dim() == o.dim() && same_base(base_, o.base_) && bits_ == o.bits_;
}

Region full_space(const BasePtr& base, unsigned dim) {
    Region r(base, dim);
    r.bits().fill();
    return r;
}

Region diagonal(const BasePtr& base, unsigned dim, unsigned i, unsigned j) {
    if (i >= dim || j >= dim) throw UsageError("diagonal index out of range");
    Region r(base, dim);
    const auto& sp = r.space();
    for (std::size_t t = 0; t < sp.count(); ++t)
        if (sp.coord(t, i) == sp.coord(t, j)) r.bits().set(t);
    return r;
}

Region cylindrify(const Region& x, unsigned i) {
    if (i >= x.dim()) throw UsageError("cylindrification index out of range");
    const auto& sp = x.space();
    const std::size_t n = sp.base_size(), st = sp.stride(i), block = st * n;
    Region r(x.base(), x.dim());
    for (std::size_t hi = 0; hi < sp.count(); hi += block) {
        for (std::size_t lo = 0; lo < st; ++lo) {
            bool hit = false;
            for (std::size_t z = 0; z < n && !hit; ++z) hit = x.bits().test(hi + z * st + lo);
            if (!hit) continue;
            for (std::size_t z = 0; z < n; ++z) r.bits().set(hi + z * st + lo);
        }
    }
    return r;
}

Region project(const Region& x, unsigned n) {
    if (n == 0 || n > x.dim()) throw UsageError("projection dimension out of range");
    Region r(x.base(), n);
    const std::size_t tail = x.space().count() / r.space().count();
    for (std::size_t t = 0; t < r.space().count(); ++t)
        if (x.bits().test(t * tail)) r.bits().set(t);
    return r;
}

Region lift(const Region& x, unsigned dim) {
    if (dim < x.dim()) throw UsageError("lift to a smaller dimension");
    Region r(x.base(), dim);
    const std::size_t tail = r.space().count() / x.space().count();
    x.bits().for_each([&](std::size_t t) {
        for (std::size_t k = 0; k < tail; ++k) r.bits().set(t * tail + k);
    });
    return r;
}

} // namespace cylneat
