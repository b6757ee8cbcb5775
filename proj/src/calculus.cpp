#include "filtrationlab/lattice/calculus.hpp"

#include <set>

namespace filtrationlab {

std::vector<ElementaryMartingale> elementary_martingales(const FiniteFilteredSpace& space, Filt tag, int T) {
    require(T >= 1 && T <= space.horizon(), "elementary_martingales: T outside the horizon");
    std::vector<ElementaryMartingale> out;
    for (int t = 1; t <= T; ++t) {
        const Partition& parent = space.partition(tag, t - 1);
        const Partition& child = space.partition(tag, t);
        for (int c = 0; c < parent.cells(); ++c) {
            std::set<int> children;
            for (int a : parent.members(c))
                children.insert(child.cell_of(a));
            if (children.size() < 2)
                continue;
            for (int f : children)
                out.push_back({t, c, f});
        }
    }
    return out;
}

} // namespace filtrationlab
