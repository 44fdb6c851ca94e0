#include "tcdiag/bitvec.h"

#include <bit>
#include <stdexcept>

namespace tcdiag {

BitVec::BitVec(size_t num_bits) : num_bits_(num_bits), words_((num_bits + 63) / 64, 0) {
}

BitVec BitVec::from_indices(size_t num_bits, const std::vector<int> &indices) {
    BitVec result(num_bits);
    for (int k : indices) {
        if (k < 0 || (size_t)k >= num_bits) {
            throw std::out_of_range("bit index " + std::to_string(k) + " outside [0, " + std::to_string(num_bits) + ")");
        }
        result.flip(k);
    }
    return result;
}

BitVec BitVec::from_u64(size_t num_bits, uint64_t word) {
    if (num_bits > 64) {
        throw std::invalid_argument("from_u64 needs num_bits <= 64");
    }
    BitVec result(num_bits);
    if (num_bits) {
        result.words_[0] = word;
        result.clear_tail();
    }
    return result;
}

void BitVec::set(size_t k, bool value) {
    uint64_t m = uint64_t{1} << (k & 63);
    if (value) {
        words_[k >> 6] |= m;
    } else {
        words_[k >> 6] &= ~m;
    }
}

void BitVec::check_same_size(const BitVec &other) const {
    if (num_bits_ != other.num_bits_) {
        throw std::invalid_argument(
            "bit vector length mismatch: " + std::to_string(num_bits_) + " vs " + std::to_string(other.num_bits_));
    }
}

void BitVec::clear_tail() {
    if (num_bits_ & 63) {
        words_.back() &= (uint64_t{1} << (num_bits_ & 63)) - 1;
    }
}

BitVec &BitVec::operator^=(const BitVec &other) {
    check_same_size(other);
    for (size_t k = 0; k < words_.size(); k++) {
        words_[k] ^= other.words_[k];
    }
    return *this;
}

BitVec &BitVec::operator&=(const BitVec &other) {
    check_same_size(other);
    for (size_t k = 0; k < words_.size(); k++) {
        words_[k] &= other.words_[k];
    }
    return *this;
}

BitVec &BitVec::operator|=(const BitVec &other) {
    check_same_size(other);
    for (size_t k = 0; k < words_.size(); k++) {
        words_[k] |= other.words_[k];
    }
    return *this;
}

BitVec BitVec::operator~() const {
    BitVec result = *this;
    for (auto &w : result.words_) {
        w = ~w;
    }
    result.clear_tail();
    return result;
}

size_t BitVec::popcount() const {
    size_t total = 0;
    for (auto w : words_) {
        total += std::popcount(w);
    }
    return total;
}

bool BitVec::any() const {
    for (auto w : words_) {
        if (w) {
            return true;
        }
    }
    return false;
}

bool BitVec::dot(const BitVec &other) const {
    check_same_size(other);
    uint64_t acc = 0;
    for (size_t k = 0; k < words_.size(); k++) {
        acc ^= words_[k] & other.words_[k];
    }
    return std::popcount(acc) & 1;
}

bool BitVec::is_subset_of(const BitVec &other) const {
    check_same_size(other);
    for (size_t k = 0; k < words_.size(); k++) {
        if (words_[k] & ~other.words_[k]) {
            return false;
        }
    }
    return true;
}

std::vector<int> BitVec::indices() const {
    std::vector<int> out;
    for (size_t k = 0; k < num_bits_; k++) {
        if (get(k)) {
            out.push_back((int)k);
        }
    }
    return out;
}

uint64_t BitVec::to_u64() const {
    if (num_bits_ > 64) {
        throw std::invalid_argument("to_u64 needs size() <= 64");
    }
    return words_.empty() ? 0 : words_[0];
}

std::string BitVec::str() const {
    std::string s(num_bits_, '0');
    for (size_t k = 0; k < num_bits_; k++) {
        if (get(k)) {
            s[k] = '1';
        }
    }
    return s;
}

}  // namespace tcdiag
