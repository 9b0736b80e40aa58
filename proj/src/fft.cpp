#include "cchedge/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace cchedge::detail {

namespace {

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};
using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;

fftw_plan plan_for(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, PlanHandle> plans;
    std::lock_guard lock(mutex);
    auto it = plans.find(n);
    if (it != plans.end()) return it->second.get();
    std::vector<std::complex<double>> scratch(n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    // FFTW_UNALIGNED: the plan is executed on caller buffers of arbitrary alignment.
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans.emplace(n, PlanHandle(p));
    return p;
}

}  // namespace

void fft_forward(std::span<std::complex<double>> data) {
    if (data.empty()) return;
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan_for(data.size()), buf, buf);
}

}  // namespace cchedge::detail
