#ifndef TCDIAG_PAULI_CODE_H
#define TCDIAG_PAULI_CODE_H

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tcdiag/bitvec.h"

namespace tcdiag {

using EdgeSet = BitVec;

/// Pauli string without a global phase; Y on qubit k means x[k] = z[k] = 1.
struct PauliString {
    BitVec x;
    BitVec z;

    PauliString() = default;
    explicit PauliString(size_t n) : x(n), z(n) {
    }
    PauliString(BitVec x_bits, BitVec z_bits);
    static PauliString x_type(const BitVec &support);
    static PauliString z_type(const BitVec &support);

    size_t size() const {
        return x.size();
    }
    size_t weight() const;
    size_t weight_in(const EdgeSet &region) const;
    bool is_identity() const {
        return x.none() && z.none();
    }
    PauliString &operator*=(const PauliString &other);
    friend PauliString operator*(PauliString a, const PauliString &b) {
        return a *= b;
    }
    bool operator==(const PauliString &other) const = default;
    std::string str() const;
};

/// +1 if g and h commute, -1 otherwise.
int commutation_sign(const PauliString &g, const PauliString &h);
/// Commutation sign of the restrictions g|_A and h|_A.
int region_sign(const PauliString &g, const PauliString &h, const EdgeSet &region);
/// (-1)^(number of Y factors of g inside the region).
int y_phase(const PauliString &g, const EdgeSet &region);

enum class LoopKind { X, Z };
const char *loop_kind_name(LoopKind kind);

/// L x L periodic toric code. Vertex (r, c) and plaquette (r, c) both have index r*L + c.
/// Edge h(r, c) joins vertices (r, c) and (r, c+1); edge v(r, c) joins (r, c) and (r+1, c).
/// Plaquette (r, c) has corners (r, c) and (r+1, c+1).
struct ToricCode {
    int L = 0;
    int N = 0;
    std::vector<std::array<int, 4>> star_edges;
    std::vector<std::array<int, 4>> plaquette_edges;
    std::vector<std::array<int, 2>> edge_vertices;
    /// The two plaquettes sharing each edge.
    std::vector<std::array<int, 2>> edge_plaquettes;

    int num_sites() const {
        return L * L;
    }
    int site(int r, int c) const {
        return ((r % L + L) % L) * L + ((c % L + L) % L);
    }
    int h(int r, int c) const {
        return site(r, c);
    }
    int v(int r, int c) const {
        return L * L + site(r, c);
    }

    EdgeSet star_support(int s) const;
    EdgeSet plaquette_support(int p) const;
    PauliString star(int s) const {
        return PauliString::x_type(star_support(s));
    }
    PauliString plaquette(int p) const {
        return PauliString::z_type(plaquette_support(p));
    }
    /// l = 0: the row-0 horizontal cycle; l = 1: the column-0 vertical cycle.
    EdgeSet logical_z_support(int l) const;
    /// Dual cycles, chosen so that logical_x(l) anticommutes with logical_z(l) only.
    EdgeSet logical_x_support(int l) const;
    PauliString logical_z(int l) const {
        return PauliString::z_type(logical_z_support(l));
    }
    PauliString logical_x(int l) const {
        return PauliString::x_type(logical_x_support(l));
    }

    /// Stabilizer generators of one type: stars for X, plaquettes for Z.
    std::vector<EdgeSet> stabilizer_supports(LoopKind kind) const;
    std::vector<EdgeSet> logical_supports(LoopKind kind) const;
    /// Cells whose products generate the loops of the other type; used by the pinning constraint.
    std::vector<EdgeSet> constraint_cells(LoopKind kind) const;

    std::string dump() const;
};

ToricCode build_code(int L);

/// Closed loops of one Pauli type: L^2 - 1 independent stabilizers plus two logicals.
struct LoopGroup {
    LoopKind kind;
    int L;
    std::vector<EdgeSet> generators;
    int contractible_rank() const {
        return L * L - 1;
    }
    int rank() const {
        return (int)generators.size();
    }
    uint64_t order() const {
        return uint64_t{1} << rank();
    }
};

LoopGroup loop_group(const ToricCode &code, LoopKind kind);

/// Visits all 2^(L^2+1) elements in Gray-code order with their weights.
void enumerate_loops(
    const ToricCode &code, LoopKind kind, const std::function<void(const PauliString &, int)> &visit);

constexpr int kMaxLoopRank = 34;

}  // namespace tcdiag

#endif
