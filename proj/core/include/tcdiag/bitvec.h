#ifndef TCDIAG_BITVEC_H
#define TCDIAG_BITVEC_H

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace tcdiag {

/// Fixed-length bit vector over GF(2).
class BitVec {
   public:
    BitVec() = default;
    explicit BitVec(size_t num_bits);
    static BitVec from_indices(size_t num_bits, const std::vector<int> &indices);
    static BitVec from_u64(size_t num_bits, uint64_t word);

    size_t size() const {
        return num_bits_;
    }
    bool get(size_t k) const {
        return (words_[k >> 6] >> (k & 63)) & 1;
    }
    void set(size_t k, bool value = true);
    void flip(size_t k) {
        words_[k >> 6] ^= uint64_t{1} << (k & 63);
    }

    BitVec &operator^=(const BitVec &other);
    BitVec &operator&=(const BitVec &other);
    BitVec &operator|=(const BitVec &other);
    friend BitVec operator^(BitVec a, const BitVec &b) {
        return a ^= b;
    }
    friend BitVec operator&(BitVec a, const BitVec &b) {
        return a &= b;
    }
    friend BitVec operator|(BitVec a, const BitVec &b) {
        return a |= b;
    }
    BitVec operator~() const;
    bool operator==(const BitVec &other) const = default;

    size_t popcount() const;
    bool any() const;
    bool none() const {
        return !any();
    }
    /// Parity of popcount(*this & other).
    bool dot(const BitVec &other) const;
    bool is_subset_of(const BitVec &other) const;
    std::vector<int> indices() const;
    /// Requires size() <= 64.
    uint64_t to_u64() const;
    std::string str() const;

    const std::vector<uint64_t> &words() const {
        return words_;
    }

   private:
    void check_same_size(const BitVec &other) const;
    void clear_tail();

    size_t num_bits_ = 0;
    std::vector<uint64_t> words_;
};

}  // namespace tcdiag

#endif
