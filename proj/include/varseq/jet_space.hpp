#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace varseq {

// Symmetric multi-index over base indices 1..n, stored sorted and packed
// four bits per entry, most significant first.  Packing order makes numeric
// comparison coincide with lexicographic comparison of the entry tuples.
class MultiIndex {
public:
    static constexpr int max_length = 15;
    static constexpr int max_index = 15;

    MultiIndex() = default;

    explicit MultiIndex(std::vector<int> entries) {
        std::sort(entries.begin(), entries.end());
        for (int e : entries) *this = append(e);
    }

    int size() const { return len_; }
    bool empty() const { return len_ == 0; }

    int operator[](int k) const {
        return static_cast<int>((bits_ >> (60 - 4 * (k + 1))) & 0xF);
    }

    std::vector<int> entries() const {
        std::vector<int> out(len_);
        for (int k = 0; k < len_; ++k) out[k] = (*this)[k];
        return out;
    }

    // Sorted merge of J and (i).
    MultiIndex append(int i) const {
        if (i < 1 || i > max_index) throw std::out_of_range("multi-index entry out of range");
        if (len_ >= max_length) throw std::length_error("multi-index too long");
        std::vector<int> e = entries();
        e.insert(std::upper_bound(e.begin(), e.end(), i), i);
        MultiIndex out;
        for (int k = 0; k < static_cast<int>(e.size()); ++k)
            out.bits_ |= static_cast<std::uint64_t>(e[k]) << (60 - 4 * (k + 1));
        out.len_ = len_ + 1;
        return out;
    }

    // Removes one occurrence of i; precondition: i occurs.
    MultiIndex remove(int i) const {
        std::vector<int> e = entries();
        auto it = std::find(e.begin(), e.end(), i);
        if (it == e.end()) throw std::invalid_argument("index not in multi-index");
        e.erase(it);
        return MultiIndex(e);
    }

    int count(int i) const {
        int c = 0;
        for (int k = 0; k < len_; ++k) c += (*this)[k] == i;
        return c;
    }

    int last() const { return len_ ? (*this)[len_ - 1] : 0; }

    std::uint64_t bits() const { return bits_; }

    friend bool operator==(const MultiIndex& a, const MultiIndex& b) { return a.bits_ == b.bits_; }
    friend std::strong_ordering operator<=>(const MultiIndex& a, const MultiIndex& b) {
        return a.bits_ <=> b.bits_;
    }

private:
    std::uint64_t bits_ = 0;
    int len_ = 0;
};

inline MultiIndex append(const MultiIndex& J, int i) { return J.append(i); }

// x^i (base) or y^sigma_J (fibre).  Indices are 1-based.
struct JetCoordinate {
    enum class Kind : std::uint8_t { base, fibre };
    Kind kind = Kind::base;
    int index = 1;
    MultiIndex J;

    static JetCoordinate base(int i) { return {Kind::base, i, {}}; }
    static JetCoordinate fibre(int sigma, MultiIndex J = {}) { return {Kind::fibre, sigma, J}; }

    bool is_base() const { return kind == Kind::base; }
    bool is_fibre() const { return kind == Kind::fibre; }
    int order() const { return is_fibre() ? J.size() : 0; }

    friend bool operator==(const JetCoordinate&, const JetCoordinate&) = default;
};

// Base coordinates first, then fibre coordinates by (|J|, sigma, J).
inline std::strong_ordering operator<=>(const JetCoordinate& a, const JetCoordinate& b) {
    if (a.kind != b.kind) return a.is_base() ? std::strong_ordering::less : std::strong_ordering::greater;
    if (a.is_base()) return a.index <=> b.index;
    if (auto c = a.J.size() <=> b.J.size(); c != 0) return c;
    if (auto c = a.index <=> b.index; c != 0) return c;
    return a.J <=> b.J;
}

inline long long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    long long r = 1;
    for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
    return r;
}

inline long long count_multiindices(int n, int k) { return binomial(n + k - 1, k); }

// All canonical multi-indices of length k over 1..n, lexicographic.
inline std::vector<MultiIndex> multiindices_of_length(int n, int k) {
    std::vector<MultiIndex> out;
    std::vector<int> cur;
    auto rec = [&](auto&& self, int start) -> void {
        if (static_cast<int>(cur.size()) == k) {
            out.emplace_back(cur);
            return;
        }
        for (int i = start; i <= n; ++i) {
            cur.push_back(i);
            self(self, i);
            cur.pop_back();
        }
    };
    rec(rec, 1);
    return out;
}

inline std::vector<MultiIndex> multiindices_up_to(int n, int r) {
    std::vector<MultiIndex> out;
    for (int k = 0; k <= r; ++k) {
        auto v = multiindices_of_length(n, k);
        out.insert(out.end(), v.begin(), v.end());
    }
    return out;
}

class JetSpace {
public:
    JetSpace(std::vector<std::string> base_names, std::vector<std::string> fibre_names)
        : base_(std::move(base_names)), fibre_(std::move(fibre_names)) {
        if (base_.empty()) throw std::invalid_argument("base dimension must be >= 1");
        if (fibre_.empty()) throw std::invalid_argument("fibre dimension must be >= 1");
        if (static_cast<int>(base_.size()) > MultiIndex::max_index)
            throw std::invalid_argument("base dimension too large");
        std::vector<std::string> all = base_;
        all.insert(all.end(), fibre_.begin(), fibre_.end());
        std::sort(all.begin(), all.end());
        if (std::adjacent_find(all.begin(), all.end()) != all.end())
            throw std::invalid_argument("coordinate names must be pairwise distinct");
        short_suffix_ = std::all_of(base_.begin(), base_.end(), [](const std::string& s) { return s.size() == 1; });
    }

    static std::shared_ptr<const JetSpace> make(std::vector<std::string> base, std::vector<std::string> fibre) {
        return std::make_shared<const JetSpace>(std::move(base), std::move(fibre));
    }

    int n() const { return static_cast<int>(base_.size()); }
    int m() const { return static_cast<int>(fibre_.size()); }
    const std::vector<std::string>& base_names() const { return base_; }
    const std::vector<std::string>& fibre_names() const { return fibre_; }

    std::vector<JetCoordinate> enumerate_coordinates(int r) const {
        if (r < 0) throw std::invalid_argument("negative order");
        std::vector<JetCoordinate> out;
        for (int i = 1; i <= n(); ++i) out.push_back(JetCoordinate::base(i));
        for (int k = 0; k <= r; ++k)
            for (int s = 1; s <= m(); ++s)
                for (const auto& J : multiindices_of_length(n(), k)) out.push_back(JetCoordinate::fibre(s, J));
        return out;
    }

    // Mechanics (n = 1) uses dot suffixes: q, qd, qdd.  Otherwise the base
    // names of J are appended after an underscore: v_tx, or x0_s_t when some
    // base name is longer than one character.
    std::string coordinate_name(const JetCoordinate& c) const {
        if (c.is_base()) return base_.at(c.index - 1);
        std::string s = fibre_.at(c.index - 1);
        if (c.J.empty()) return s;
        if (n() == 1) return s + std::string(c.J.size(), 'd');
        s += '_';
        for (int k = 0; k < c.J.size(); ++k) {
            if (!short_suffix_ && k) s += '_';
            s += base_[c.J[k] - 1];
        }
        return s;
    }

    // Name lookup; accepts dot names (n = 1) and underscore names with base
    // suffixes in any order.  Orders up to max_order are recognised.
    std::optional<JetCoordinate> find_coordinate(const std::string& name, int max_order = 12) const {
        for (int i = 1; i <= n(); ++i)
            if (base_[i - 1] == name) return JetCoordinate::base(i);
        for (int s = 1; s <= m(); ++s) {
            const std::string& f = fibre_[s - 1];
            if (name == f) return JetCoordinate::fibre(s);
            if (name.size() <= f.size() || name.compare(0, f.size(), f) != 0) continue;
            std::string rest = name.substr(f.size());
            if (n() == 1 && rest.find_first_not_of('d') == std::string::npos &&
                static_cast<int>(rest.size()) <= max_order)
                return JetCoordinate::fibre(s, MultiIndex(std::vector<int>(rest.size(), 1)));
            if (rest[0] != '_') continue;
            if (auto J = parse_suffix(rest.substr(1), max_order)) return JetCoordinate::fibre(s, *J);
        }
        return std::nullopt;
    }

    std::optional<int> base_index(const std::string& name) const {
        for (int i = 1; i <= n(); ++i)
            if (base_[i - 1] == name) return i;
        return std::nullopt;
    }
    std::optional<int> fibre_index(const std::string& name) const {
        for (int s = 1; s <= m(); ++s)
            if (fibre_[s - 1] == name) return s;
        return std::nullopt;
    }

    friend bool operator==(const JetSpace& a, const JetSpace& b) {
        return a.base_ == b.base_ && a.fibre_ == b.fibre_;
    }

private:
    std::optional<MultiIndex> parse_suffix(const std::string& s, int max_order) const {
        std::vector<int> idx;
        std::size_t pos = 0;
        while (pos < s.size()) {
            if (static_cast<int>(idx.size()) >= max_order) return std::nullopt;
            int hit = 0;
            std::size_t best = 0;
            for (int i = 1; i <= n(); ++i) {
                const std::string& b = base_[i - 1];
                if (s.compare(pos, b.size(), b) == 0 && b.size() > best) {
                    bool boundary = short_suffix_ || pos + b.size() == s.size() || s[pos + b.size()] == '_';
                    if (boundary) {
                        hit = i;
                        best = b.size();
                    }
                }
            }
            if (!hit) return std::nullopt;
            idx.push_back(hit);
            pos += best;
            if (!short_suffix_ && pos < s.size()) {
                if (s[pos] != '_') return std::nullopt;
                ++pos;
                if (pos == s.size()) return std::nullopt;
            }
        }
        if (idx.empty()) return std::nullopt;
        return MultiIndex(idx);
    }

    std::vector<std::string> base_;
    std::vector<std::string> fibre_;
    bool short_suffix_ = true;
};

using SpacePtr = std::shared_ptr<const JetSpace>;

}  // namespace varseq
