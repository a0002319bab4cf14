#pragma once

#include <string>

#include "gcs/tensor.hpp"

namespace gcs {

// M points in N real dimensions, unit average energy per complex pair.
struct Constellation {
    int m = 0;
    int n = 0;
    Tensor points;  // [M x N]
    std::string label;

    void validate() const;  // unit power (1e-9), pairwise distinct points
    double min_distance() const;
};

// Rescales points (in place) to unit average energy per complex pair.
// Errors on zero-energy input.
void normalize_unit_power(Tensor& points);

// Square M-QAM (M in {4, 16, 64, 256, ...}: 4 or a perfect-square power of
// two), unit power, canonical row-major grid ordering.
Constellation qam(int m);

// Canonical form for snapshot-stable comparisons: for N == 2 the global
// phase is removed by rotating the highest-energy point onto the positive
// real axis; points are then sorted lexicographically.
void canonicalize(Constellation& c);

void save_constellation(const std::string& path, const Constellation& c);

struct LoadedConstellation {
    Constellation constellation;
    bool renormalized = false;  // input file was not unit power
};

// Text format: line 1 "M N", then M lines of N floats; '#' comments allowed.
LoadedConstellation load_constellation(const std::string& path);

}  // namespace gcs
