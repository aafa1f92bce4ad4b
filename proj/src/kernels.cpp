#include "hnls/kernels.hpp"

namespace hnls::kernels {

std::vector<std::vector<int>> ball_offsets(int dim, double radius_cells) {
    const int r = static_cast<int>(std::floor(radius_cells));
    std::vector<std::vector<int>> out;
    std::vector<int> cur(dim, -r);
    const double r2 = radius_cells * radius_cells;
    while (true) {
        double n2 = 0.0;
        for (int v : cur) n2 += double(v) * v;
        if (n2 <= r2) out.push_back(cur);
        int a = dim - 1;
        while (a >= 0 && cur[a] == r) {
            cur[a] = -r;
            --a;
        }
        if (a < 0) break;
        ++cur[a];
    }
    return out;
}

} // namespace hnls::kernels
