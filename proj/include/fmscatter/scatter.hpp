// Backscatter: square-wave switch control synthesis and its multiplicative
// application to ambient RF.
#pragma once

#include <cstdint>
#include <vector>

#include "fmscatter/fmcore.hpp"
#include "fmscatter/types.hpp"

namespace fmscatter::scatter {

/// Two-level (+1/-1) antenna switch control sequence. The instantaneous
/// switching frequency is f_back + delta_f * fm_back(t).
struct SwitchWaveform {
    std::vector<std::int8_t> levels; // each +1 or -1
    int sample_rate = 0;
    double f_back = 0.0;
    double delta_f = 0.0;
};

/// sign(cos(phase)) with a continuous phase accumulator:
/// phase[n] = 2*pi*(f_back*n + delta_f*sum_{k<=n} fm_back[k]) / rate.
/// Requires f_back + delta_f < rate/4 so the square wave stays resolvable.
SwitchWaveform synth_backscatter_control(const std::vector<float>& fm_back,
                                         int fm_back_rate, double f_back,
                                         double delta_f, int rate);
SwitchWaveform synth_backscatter_control(const AudioBuffer& fm_back, double f_back,
                                         double delta_f, int rate);
SwitchWaveform synth_backscatter_control(const MultiplexBaseband& fm_back, double f_back,
                                         double delta_f, int rate);

/// Pointwise multiply: out[n] = reflectivity * ambient[n] * levels[n].
/// Rates and lengths must match. Both sidebands (f_c +/- f_back) appear;
/// the lower image is rejected later by receiver filtering.
IqBuffer apply_backscatter(const IqBuffer& ambient, const SwitchWaveform& ctrl,
                           double reflectivity = 0.5);

/// One-call receiver-side scene: direct ambient path plus the reflected
/// copy, then the link budget. The direct path is kept so that receivers
/// tuned to f_c (cooperative mode) and adjacent-channel leakage behave
/// like the over-the-air scene.
IqBuffer backscatter_link(const IqBuffer& ambient,
                          const std::vector<float>& fm_back, int fm_back_rate,
                          double f_back, double delta_f,
                          const fmcore::LinkBudget& budget, std::uint64_t seed,
                          double reflectivity = 0.5);

} // namespace fmscatter::scatter
