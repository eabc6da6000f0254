#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace estc {

// Disjoint sets over 0..n-1 with union by size and path halving. Grows on demand.
class UnionFind {
 public:
    UnionFind() = default;
    explicit UnionFind(std::size_t n) { grow(n); }

    std::size_t add() {
        parent_.push_back(parent_.size());
        size_.push_back(1);
        ++sets_;
        return parent_.size() - 1;
    }

    void grow(std::size_t n) {
        while (parent_.size() < n) add();
    }

    std::size_t find(std::size_t x) noexcept {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    // Returns the surviving root.
    std::size_t unite(std::size_t a, std::size_t b) noexcept {
        a = find(a);
        b = find(b);
        if (a == b) return a;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        --sets_;
        return a;
    }

    std::size_t set_size(std::size_t x) noexcept { return size_[find(x)]; }
    std::size_t sets() const noexcept { return sets_; }
    std::size_t size() const noexcept { return parent_.size(); }

 private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
    std::size_t sets_ = 0;
};

}  // namespace estc
