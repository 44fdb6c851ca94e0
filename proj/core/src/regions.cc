#include "tcdiag/regions.h"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace tcdiag {

EdgeSet block_region(const ToricCode &code, int row0, int col0, int rows, int cols) {
    EdgeSet e(code.N);
    for (int r = 0; r <= rows; r++) {
        for (int c = 0; c < cols; c++) {
            e.set(code.h(row0 + r, col0 + c));
        }
    }
    for (int r = 0; r < rows; r++) {
        for (int c = 0; c <= cols; c++) {
            e.set(code.v(row0 + r, col0 + c));
        }
    }
    return e;
}

std::string Tripartition::describe() const {
    std::ostringstream out;
    out << "wedges side=" << side << " origin=(" << row0 << "," << col0 << ") |A|=" << A.popcount()
        << " |B|=" << B.popcount() << " |C|=" << C.popcount();
    return out.str();
}

Tripartition wedge_tripartition(const ToricCode &code, int side, int row0, int col0) {
    if (side < 1 || side + 2 > code.L) {
        throw std::invalid_argument("wedge block side must be in [1, L-2]");
    }
    Tripartition t{EdgeSet(code.N), EdgeSet(code.N), EdgeSet(code.N), side, row0, col0};
    double center = side / 2.0;
    auto assign = [&](int edge, double mid_r, double mid_c) {
        double deg = std::atan2(-(mid_r - center), mid_c - center) * 180.0 / std::numbers::pi;
        if (deg >= 30 && deg < 150) {
            t.A.set(edge);
        } else if (deg >= 150 || deg < -90) {
            t.B.set(edge);
        } else {
            t.C.set(edge);
        }
    };
    for (int r = 0; r <= side; r++) {
        for (int c = 0; c < side; c++) {
            assign(code.h(row0 + r, col0 + c), r, c + 0.5);
        }
    }
    for (int r = 0; r < side; r++) {
        for (int c = 0; c <= side; c++) {
            assign(code.v(row0 + r, col0 + c), r + 0.5, c);
        }
    }
    return t;
}

std::vector<std::pair<std::string, EdgeSet>> kp_regions(const Tripartition &t) {
    return {
        {"A", t.A},
        {"B", t.B},
        {"C", t.C},
        {"AB", t.A | t.B},
        {"BC", t.B | t.C},
        {"AC", t.A | t.C},
        {"ABC", t.A | t.B | t.C},
    };
}

std::vector<int> cut_cells(const ToricCode &code, LoopKind kind, const EdgeSet &region) {
    std::vector<int> out;
    auto cells = code.constraint_cells(kind);
    for (size_t k = 0; k < cells.size(); k++) {
        size_t inside = (cells[k] & region).popcount();
        if (inside > 0 && inside < cells[k].popcount()) {
            out.push_back((int)k);
        }
    }
    return out;
}

std::array<int, 2> edge_spins(const ToricCode &code, LoopKind kind, int edge) {
    return kind == LoopKind::X ? code.edge_vertices.at(edge) : code.edge_plaquettes.at(edge);
}

int pinning_rank(const ToricCode &code, LoopKind kind, const EdgeSet &region) {
    auto cells = code.constraint_cells(kind);
    std::vector<BitVec> rows;
    for (int cell : cut_cells(code, kind, region)) {
        BitVec row(code.num_sites());
        for (int e : (cells[cell] & region).indices()) {
            auto [a, b] = edge_spins(code, kind, e);
            row.flip(a);
            row.flip(b);
        }
        rows.push_back(row);
    }
    int rank = 0;
    for (size_t col = 0; col < (size_t)code.num_sites() && !rows.empty(); col++) {
        size_t pivot = rows.size();
        for (size_t k = 0; k < rows.size(); k++) {
            if (rows[k].get(col)) {
                pivot = k;
                break;
            }
        }
        if (pivot == rows.size()) {
            continue;
        }
        BitVec p = rows[pivot];
        rows.erase(rows.begin() + pivot);
        for (auto &row : rows) {
            if (row.get(col)) {
                row ^= p;
            }
        }
        rank++;
    }
    return rank;
}

}  // namespace tcdiag
