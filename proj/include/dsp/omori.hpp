#pragma once

#include <array>
#include <cstddef>

namespace dsp {

/// Ten-component Gaussian mixture approximating the distribution of
/// log(eps^2), eps ~ N(0, 1) (Omori, Chib, Shephard and Nakajima, 2007).
struct OmoriTable {
  static constexpr std::size_t size = 10;

  std::array<double, size> prob{0.00609, 0.04775, 0.13057, 0.20674, 0.22715,
                                0.18842, 0.12047, 0.05591, 0.01575, 0.00115};
  std::array<double, size> mean{1.92677,  1.34744,  0.73504,  0.02266,  -0.85173,
                                -1.97278, -3.46788, -5.55246, -8.68384, -14.65000};
  std::array<double, size> var{0.11265, 0.17788, 0.26768, 0.40611, 0.62699,
                               0.98583, 1.57469, 2.54498, 4.16591, 7.33342};

  double mixture_mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size; ++i) m += prob[i] * mean[i];
    return m;
  }

  double mixture_variance() const {
    const double m = mixture_mean();
    double v = 0.0;
    for (std::size_t i = 0; i < size; ++i) v += prob[i] * (var[i] + (mean[i] - m) * (mean[i] - m));
    return v;
  }
};

inline const OmoriTable& omori_table() {
  static const OmoriTable table{};
  return table;
}

}  // namespace dsp
