#pragma once

#include <complex>
#include <span>

namespace cchedge::detail {

/// In-place forward DFT, X_j = sum_n x_n exp(-2 pi i n j / N). Safe to call
/// concurrently; plans are cached per size behind a mutex.
void fft_forward(std::span<std::complex<double>> data);

}  // namespace cchedge::detail
