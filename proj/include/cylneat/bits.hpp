#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace cylneat {

// Fixed-length dense bitset; the length is part of the value.
class Bits {
public:
    Bits() = default;
    explicit Bits(std::size_t n) : n_(n), w_((n + 63) / 64, 0) {}

    std::size_t size() const { return n_; }
    bool test(std::size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1u; }
    void set(std::size_t i) { w_[i >> 6] |= std::uint64_t{1} << (i & 63); }
    void reset(std::size_t i) { w_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
    void assign(std::size_t i, bool v) { v ? set(i) : reset(i); }

    void fill() {
        for (auto& x : w_) x = ~std::uint64_t{0};
        trim();
    }
    void clear() {
        for (auto& x : w_) x = 0;
    }

    std::size_t count() const {
        std::size_t c = 0;
        for (auto x : w_) c += std::popcount(x);
        return c;
    }
    bool none() const {
        for (auto x : w_)
            if (x) return false;
        return true;
    }
    bool any() const { return !none(); }

    bool subset_of(const Bits& o) const {
        for (std::size_t i = 0; i < w_.size(); ++i)
            if (w_[i] & ~o.w_[i]) return false;
        return true;
    }
    bool intersects(const Bits& o) const {
        for (std::size_t i = 0; i < w_.size(); ++i)
            if (w_[i] & o.w_[i]) return true;
        return false;
    }

    Bits& operator&=(const Bits& o) {
        for (std::size_t i = 0; i < w_.size(); ++i) w_[i] &= o.w_[i];
        return *this;
    }
    Bits& operator|=(const Bits& o) {
        for (std::size_t i = 0; i < w_.size(); ++i) w_[i] |= o.w_[i];
        return *this;
    }
    Bits& operator^=(const Bits& o) {
        for (std::size_t i = 0; i < w_.size(); ++i) w_[i] ^= o.w_[i];
        return *this;
    }
    Bits& subtract(const Bits& o) {
        for (std::size_t i = 0; i < w_.size(); ++i) w_[i] &= ~o.w_[i];
        return *this;
    }
    Bits operator~() const {
        Bits r = *this;
        for (auto& x : r.w_) x = ~x;
        r.trim();
        return r;
    }
    friend Bits operator&(Bits a, const Bits& b) { return a &= b; }
    friend Bits operator|(Bits a, const Bits& b) { return a |= b; }
    friend Bits operator^(Bits a, const Bits& b) { return a ^= b; }

    bool operator==(const Bits& o) const = default;
    // Lexicographic by word value, high words first; a total order for sorting.
    bool operator<(const Bits& o) const {
        if (n_ != o.n_) return n_ < o.n_;
        for (std::size_t i = w_.size(); i-- > 0;)
            if (w_[i] != o.w_[i]) return w_[i] < o.w_[i];
        return false;
    }

    // Calls f(i) for every set bit in increasing order.
    template <class F>
    void for_each(F&& f) const {
        for (std::size_t wi = 0; wi < w_.size(); ++wi) {
            std::uint64_t x = w_[wi];
            while (x) {
                int b = std::countr_zero(x);
                f(wi * 64 + static_cast<std::size_t>(b));
                x &= x - 1;
            }
        }
    }
    std::size_t first() const {
        for (std::size_t wi = 0; wi < w_.size(); ++wi)
            if (w_[wi]) return wi * 64 + static_cast<std::size_t>(std::countr_zero(w_[wi]));
        return n_;
    }
    std::vector<std::size_t> ones() const {
        std::vector<std::size_t> r;
        for_each([&](std::size_t i) { r.push_back(i); });
        return r;
    }

    const std::vector<std::uint64_t>& words() const { return w_; }
    std::vector<std::uint64_t>& words() { return w_; }

    std::size_t hash() const {
        std::size_t h = n_ * 0x9e3779b97f4a7c15ull;
        for (auto x : w_) h ^= std::hash<std::uint64_t>{}(x) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        return h;
    }

    static Bits from_u64(std::size_t n, std::uint64_t v) {
        Bits b(n);
        if (!b.w_.empty()) b.w_[0] = v;
        b.trim();
        return b;
    }

private:
    void trim() {
        if (n_ & 63) w_.back() &= (std::uint64_t{1} << (n_ & 63)) - 1;
    }
    std::size_t n_ = 0;
    std::vector<std::uint64_t> w_;
};

struct BitsHash {
    std::size_t operator()(const Bits& b) const { return b.hash(); }
};

} // namespace cylneat
