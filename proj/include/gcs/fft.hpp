#pragma once

#include <complex>
#include <vector>

namespace gcs {

// Thin wrapper over FFTW with a plan cache. Plans use FFTW_ESTIMATE so
// planning is fast and results are reproducible run to run; plan creation
// is serialized behind a mutex, execution is thread-safe.
namespace fft {

// in place, unnormalized
void forward(std::vector<std::complex<double>>& x);

// in place, scales by 1/N
void inverse(std::vector<std::complex<double>>& x);

}  // namespace fft

}  // namespace gcs
