#include "tcdiag/pauli_code.h"

#include <bit>
#include <sstream>
#include <stdexcept>

#include "tcdiag/errors.h"

namespace tcdiag {

PauliString::PauliString(BitVec x_bits, BitVec z_bits) : x(std::move(x_bits)), z(std::move(z_bits)) {
    if (x.size() != z.size()) {
        throw std::invalid_argument("x and z parts of a Pauli string must have equal length");
    }
}

PauliString PauliString::x_type(const BitVec &support) {
    return PauliString(support, BitVec(support.size()));
}

PauliString PauliString::z_type(const BitVec &support) {
    return PauliString(BitVec(support.size()), support);
}

size_t PauliString::weight() const {
    return (x | z).popcount();
}

size_t PauliString::weight_in(const EdgeSet &region) const {
    return ((x | z) & region).popcount();
}

PauliString &PauliString::operator*=(const PauliString &other) {
    x ^= other.x;
    z ^= other.z;
    return *this;
}

std::string PauliString::str() const {
    std::string s(size(), '_');
    for (size_t k = 0; k < size(); k++) {
        bool bx = x.get(k), bz = z.get(k);
        s[k] = bx ? (bz ? 'Y' : 'X') : (bz ? 'Z' : '_');
    }
    return s;
}

int commutation_sign(const PauliString &g, const PauliString &h) {
    if (g.size() != h.size()) {
        throw std::invalid_argument("commutation_sign: Pauli strings have different lengths");
    }
    return (g.x.dot(h.z) ^ g.z.dot(h.x)) ? -1 : +1;
}

int region_sign(const PauliString &g, const PauliString &h, const EdgeSet &region) {
    if (g.size() != h.size() || g.size() != region.size()) {
        throw std::invalid_argument("region_sign: length mismatch");
    }
    bool odd = (g.x & region).dot(h.z) ^ (g.z & region).dot(h.x);
    return odd ? -1 : +1;
}

int y_phase(const PauliString &g, const EdgeSet &region) {
    return ((g.x & g.z & region).popcount() & 1) ? -1 : +1;
}

const char *loop_kind_name(LoopKind kind) {
    return kind == LoopKind::X ? "X" : "Z";
}

ToricCode build_code(int L) {
    if (L < 2) {
        throw std::invalid_argument("toric code needs L >= 2, got L=" + std::to_string(L));
    }
    ToricCode code;
    code.L = L;
    code.N = 2 * L * L;
    code.star_edges.resize(L * L);
    code.plaquette_edges.resize(L * L);
    code.edge_vertices.resize(code.N);
    code.edge_plaquettes.resize(code.N);
    for (int r = 0; r < L; r++) {
        for (int c = 0; c < L; c++) {
            int s = code.site(r, c);
            code.star_edges[s] = {code.h(r, c), code.h(r, c - 1), code.v(r, c), code.v(r - 1, c)};
            code.plaquette_edges[s] = {code.h(r, c), code.h(r + 1, c), code.v(r, c), code.v(r, c + 1)};
            code.edge_vertices[code.h(r, c)] = {s, code.site(r, c + 1)};
            code.edge_vertices[code.v(r, c)] = {s, code.site(r + 1, c)};
            code.edge_plaquettes[code.h(r, c)] = {code.site(r - 1, c), s};
            code.edge_plaquettes[code.v(r, c)] = {code.site(r, c - 1), s};
        }
    }
    return code;
}

EdgeSet ToricCode::star_support(int s) const {
    EdgeSet e(N);
    for (int k : star_edges.at(s)) {
        e.flip(k);
    }
    return e;
}

EdgeSet ToricCode::plaquette_support(int p) const {
    EdgeSet e(N);
    for (int k : plaquette_edges.at(p)) {
        e.flip(k);
    }
    return e;
}

EdgeSet ToricCode::logical_z_support(int l) const {
    EdgeSet e(N);
    for (int k = 0; k < L; k++) {
        e.set(l == 0 ? h(0, k) : v(k, 0));
    }
    return e;
}

EdgeSet ToricCode::logical_x_support(int l) const {
    EdgeSet e(N);
    for (int k = 0; k < L; k++) {
        e.set(l == 0 ? h(k, 0) : v(0, k));
    }
    return e;
}

std::vector<EdgeSet> ToricCode::stabilizer_supports(LoopKind kind) const {
    std::vector<EdgeSet> out;
    for (int s = 0; s < L * L; s++) {
        out.push_back(kind == LoopKind::X ? star_support(s) : plaquette_support(s));
    }
    return out;
}

std::vector<EdgeSet> ToricCode::logical_supports(LoopKind kind) const {
    if (kind == LoopKind::X) {
        return {logical_x_support(0), logical_x_support(1)};
    }
    return {logical_z_support(0), logical_z_support(1)};
}

std::vector<EdgeSet> ToricCode::constraint_cells(LoopKind kind) const {
    return stabilizer_supports(kind == LoopKind::X ? LoopKind::Z : LoopKind::X);
}

std::string ToricCode::dump() const {
    std::ostringstream out;
    out << "toric_code L=" << L << " N=" << N << "\n";
    for (int e = 0; e < N; e++) {
        out << "edge " << e << (e < L * L ? " h" : " v") << " vertices " << edge_vertices[e][0] << " "
            << edge_vertices[e][1] << " plaquettes " << edge_plaquettes[e][0] << " " << edge_plaquettes[e][1] << "\n";
    }
    for (int s = 0; s < L * L; s++) {
        out << "star " << s << " edges";
        for (int k : star_edges[s]) {
            out << " " << k;
        }
        out << "\n";
    }
    for (int p = 0; p < L * L; p++) {
        out << "plaquette " << p << " edges";
        for (int k : plaquette_edges[p]) {
            out << " " << k;
        }
        out << "\n";
    }
    for (int l = 0; l < 2; l++) {
        out << "logical_z " << l << " " << logical_z_support(l).str() << "\n";
        out << "logical_x " << l << " " << logical_x_support(l).str() << "\n";
    }
    return out.str();
}

LoopGroup loop_group(const ToricCode &code, LoopKind kind) {
    LoopGroup group{kind, code.L, {}};
    auto stabs = code.stabilizer_supports(kind);
    stabs.pop_back();
    group.generators = std::move(stabs);
    for (auto &g : code.logical_supports(kind)) {
        group.generators.push_back(g);
    }
    return group;
}

void enumerate_loops(
    const ToricCode &code, LoopKind kind, const std::function<void(const PauliString &, int)> &visit) {
    LoopGroup group = loop_group(code, kind);
    if (group.rank() > kMaxLoopRank) {
        throw CapacityError(
            "loop enumeration rank " + std::to_string(group.rank()) + " exceeds guard " +
            std::to_string(kMaxLoopRank));
    }
    EdgeSet current(code.N);
    auto as_pauli = [&](const EdgeSet &e) {
        return kind == LoopKind::X ? PauliString::x_type(e) : PauliString::z_type(e);
    };
    visit(as_pauli(current), 0);
    for (uint64_t step = 1; step < group.order(); step++) {
        current ^= group.generators[std::countr_zero(step)];
        visit(as_pauli(current), (int)current.popcount());
    }
}

}  // namespace tcdiag
