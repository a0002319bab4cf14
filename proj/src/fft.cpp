#include "gcs/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

#include "gcs/errors.hpp"

namespace gcs {
namespace fft {

namespace {

std::mutex plan_mutex;
std::map<std::pair<std::size_t, int>, fftw_plan> plan_cache;

fftw_plan plan_for(std::size_t n, int sign) {
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto key = std::make_pair(n, sign);
    auto it = plan_cache.find(key);
    if (it != plan_cache.end()) return it->second;
    // Plan on a scratch buffer with FFTW_UNALIGNED so the plan can execute
    // on any caller buffer via the new-array interface.
    std::vector<std::complex<double>> scratch(n);
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n),
                                   reinterpret_cast<fftw_complex*>(scratch.data()),
                                   reinterpret_cast<fftw_complex*>(scratch.data()), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!p) fail(strf("fftw: planning failed for size %zu", n));
    plan_cache[key] = p;
    return p;
}

void execute(std::vector<std::complex<double>>& x, int sign) {
    if (x.empty()) fail("fft: empty buffer");
    fftw_plan p = plan_for(x.size(), sign);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(x.data()),
                     reinterpret_cast<fftw_complex*>(x.data()));
}

}  // namespace

void forward(std::vector<std::complex<double>>& x) { execute(x, FFTW_FORWARD); }

void inverse(std::vector<std::complex<double>>& x) {
    execute(x, FFTW_BACKWARD);
    const double inv = 1.0 / static_cast<double>(x.size());
    for (auto& v : x) v *= inv;
}

}  // namespace fft
}  // namespace gcs
