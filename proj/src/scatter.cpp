#include "fmscatter/scatter.hpp"

#include <cmath>
#include <sstream>

#include "fmscatter/dsp.hpp"

namespace fmscatter::scatter {

SwitchWaveform synth_backscatter_control(const std::vector<float>& fm_back,
                                         int fm_back_rate, double f_back,
                                         double delta_f, int rate) {
    if (rate <= 0 || fm_back_rate <= 0)
        throw InvalidInput("synth_backscatter_control: invalid rate");
    if (f_back <= 0 || delta_f < 0)
        throw InvalidInput("synth_backscatter_control: invalid frequency");
    if (f_back + delta_f >= rate / 4.0) {
        std::ostringstream os;
        os << "synth_backscatter_control: f_back + delta_f = " << (f_back + delta_f)
           << " Hz must stay below rate/4 = " << rate / 4.0 << " Hz";
        throw BandwidthError(os.str());
    }

    std::vector<float> bb = (fm_back_rate == rate)
        ? fm_back
        : dsp::resample(fm_back, fm_back_rate, rate);

    SwitchWaveform w;
    w.sample_rate = rate;
    w.f_back = f_back;
    w.delta_f = delta_f;
    w.levels.resize(bb.size());

    // phase in cycles; sign(cos) needs only the fractional part
    const double base_inc = f_back / double(rate);
    const double dev_inc = delta_f / double(rate);
    double phase = 0.0;
    for (std::size_t i = 0; i < bb.size(); ++i) {
        phase += base_inc + dev_inc * double(bb[i]);
        phase -= std::floor(phase);
        w.levels[i] = (phase < 0.25 || phase >= 0.75) ? std::int8_t(1) : std::int8_t(-1);
    }
    return w;
}

SwitchWaveform synth_backscatter_control(const AudioBuffer& fm_back, double f_back,
                                         double delta_f, int rate) {
    return synth_backscatter_control(fm_back.samples, fm_back.sample_rate,
                                     f_back, delta_f, rate);
}

SwitchWaveform synth_backscatter_control(const MultiplexBaseband& fm_back, double f_back,
                                         double delta_f, int rate) {
    return synth_backscatter_control(fm_back.samples, fm_back.sample_rate,
                                     f_back, delta_f, rate);
}

IqBuffer apply_backscatter(const IqBuffer& ambient, const SwitchWaveform& ctrl,
                           double reflectivity) {
    if (ambient.sample_rate != ctrl.sample_rate)
        throw InvalidInput("apply_backscatter: sample rates differ (resample the control first)");
    if (ambient.samples.size() != ctrl.levels.size())
        throw InvalidInput("apply_backscatter: buffer lengths differ");
    if (!(reflectivity > 0.0 && reflectivity <= 1.0))
        throw InvalidInput("apply_backscatter: reflectivity must be in (0, 1]");

    IqBuffer out;
    out.sample_rate = ambient.sample_rate;
    out.center_freq = ambient.center_freq;
    out.samples.resize(ambient.samples.size());
    const float r = float(reflectivity);
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        const float s = r * float(ctrl.levels[i]);
        out.samples[i] = ambient.samples[i] * s;
    }
    return out;
}

IqBuffer backscatter_link(const IqBuffer& ambient,
                          const std::vector<float>& fm_back, int fm_back_rate,
                          double f_back, double delta_f,
                          const fmcore::LinkBudget& budget, std::uint64_t seed,
                          double reflectivity) {
    // pad the baseband out to the ambient duration (the switch idles at the
    // plain f_back square wave when there is nothing to send), then trim the
    // control to the ambient length exactly
    std::vector<float> bb = fm_back;
    const std::size_t want_bb = std::size_t(
        (double(ambient.samples.size()) * fm_back_rate) / ambient.sample_rate) + 2;
    if (bb.size() < want_bb) bb.resize(want_bb, 0.0f);

    SwitchWaveform ctrl = synth_backscatter_control(bb, fm_back_rate, f_back,
                                                    delta_f, ambient.sample_rate);
    if (ctrl.levels.size() < ambient.samples.size())
        throw InvalidInput("backscatter_link: control shorter than the ambient scene");
    ctrl.levels.resize(ambient.samples.size());

    IqBuffer scene = apply_backscatter(ambient, ctrl, reflectivity);
    for (std::size_t i = 0; i < scene.samples.size(); ++i)
        scene.samples[i] += ambient.samples[i]; // direct path
    return fmcore::apply_link_budget(scene, budget, seed);
}

} // namespace fmscatter::scatter
