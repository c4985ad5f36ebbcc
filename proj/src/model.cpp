#include "times2d/model.hpp"

namespace times2d {

template <typename T>
PeriodSet estimate_frozen_periods(const SplitSeries& series, const WindowSet& windows,
                                  std::size_t top_k) {
    if (windows.size() == 0) throw ConfigError("estimate_frozen_periods: no windows");
    Spectrum averaged;
    averaged.seq_len = windows.input_len;
    averaged.magnitudes.assign(windows.input_len / 2 + 1, 0.0);
    for (std::size_t w = 0; w < windows.size(); ++w) {
        auto [x, y] = gather_batch<T>(series, windows, {w});
        (void)y;
        Spectrum s = rfft_magnitude(x);
        for (std::size_t f = 0; f < s.magnitudes.size(); ++f)
            averaged.magnitudes[f] += s.magnitudes[f];
    }
    const double inv = 1.0 / static_cast<double>(windows.size());
    for (double& m : averaged.magnitudes) m *= inv;
    return top_k_periods(averaged, top_k);
}

template PeriodSet estimate_frozen_periods<float>(const SplitSeries&, const WindowSet&, std::size_t);
template PeriodSet estimate_frozen_periods<double>(const SplitSeries&, const WindowSet&,
                                                   std::size_t);

} // namespace times2d
