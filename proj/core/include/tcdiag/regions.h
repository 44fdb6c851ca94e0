#ifndef TCDIAG_REGIONS_H
#define TCDIAG_REGIONS_H

#include <string>
#include <vector>

#include "tcdiag/pauli_code.h"

namespace tcdiag {

/// Edges with both endpoints inside the (rows+1) x (cols+1) vertex block at (row0, col0).
EdgeSet block_region(const ToricCode &code, int row0, int col0, int rows, int cols);

/// A, B, C wedges of a square block, split by the angle of each edge midpoint about the block center:
/// A in [30, 150) degrees, B in [150, 270), C in [-90, 30).
struct Tripartition {
    EdgeSet A, B, C;
    int side = 0;
    int row0 = 0;
    int col0 = 0;
    std::string describe() const;
};

Tripartition wedge_tripartition(const ToricCode &code, int side, int row0, int col0);

/// The seven unions used by the Kitaev-Preskill combination, in the order A, B, C, AB, BC, AC, ABC.
std::vector<std::pair<std::string, EdgeSet>> kp_regions(const Tripartition &t);

/// Indices of constraint cells (plaquettes for X loops, stars for Z loops) partially covered by the region.
std::vector<int> cut_cells(const ToricCode &code, LoopKind kind, const EdgeSet &region);

/// The two spin sites an edge couples: vertices for X loops, plaquettes for Z loops.
std::array<int, 2> edge_spins(const ToricCode &code, LoopKind kind, int edge);

/// GF(2) rank of the boundary alignment constraints, which equals |cut cells| minus boundary components.
int pinning_rank(const ToricCode &code, LoopKind kind, const EdgeSet &region);

}  // namespace tcdiag

#endif
