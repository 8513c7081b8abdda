#pragma once

#include "iipmixer/matrix.hpp"

#include <span>
#include <vector>

namespace iipm {

//! A 1D window of length L laid out as H patches of W contiguous steps.
//! grid(i, j) holds the original step i*W + j, so relative positions are
//! preserved and flatten_patches(to_patches(x, w)) == x.
struct PatchGrid {
    std::size_t h = 0;          // patch count
    std::size_t w = 0;          // patch length
    Matrix grid;                // h x w
    std::size_t origin_len = 0; // h * w
};

//! Reshapes the series into H = L/w patches. L must be divisible by w;
//! a remainder is rejected rather than padded.
PatchGrid to_patches(std::span<const double> series, std::size_t w);

//! Exact inverse of to_patches.
std::vector<double> flatten_patches(const PatchGrid& g);

} // namespace iipm
