#include "iipmixer/patching.hpp"

#include <stdexcept>
#include <string>

namespace iipm {

PatchGrid to_patches(std::span<const double> series, std::size_t w) {
    const std::size_t len = series.size();
    if (w == 0 || len == 0 || len % w != 0) {
        throw std::invalid_argument("to_patches: length " + std::to_string(len) +
                                    " is not divisible by patch length " + std::to_string(w));
    }
    PatchGrid g;
    g.w = w;
    g.h = len / w;
    g.origin_len = len;
    g.grid = Matrix(g.h, g.w, std::vector<double>(series.begin(), series.end()));
    return g;
}

std::vector<double> flatten_patches(const PatchGrid& g) {
    return {g.grid.values().begin(), g.grid.values().end()};
}

} // namespace iipm
