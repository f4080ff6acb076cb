#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "stms/errors.hpp"
#include "stms/motion.hpp"
#include "stms/random.hpp"

namespace stms {

// Deterministic synthetic motion: every joint coordinate is an offset plus a
// sum of two sinusoids. Smooth and band-limited, so the DCT representation is
// compact and the spatial branch has something to model.
struct SynthSpec {
    Index joints = 2;
    Index dims = 3;
    std::size_t frames = 50;
    double frame_rate_hz = 25.0;
    std::uint64_t seed = 0;
    std::array<double, 2> amplitude_range = {20.0, 60.0};  // mm
    std::array<double, 2> frequency_range = {0.2, 2.0};    // Hz

    void validate() const {
        if (joints < 1) throw InvalidInputError("synth: joints must be positive");
        if (dims != 2 && dims != 3) throw InvalidInputError("synth: dims must be 2 or 3");
        if (frames < 1) throw InvalidInputError("synth: frames must be at least 1");
        if (!(frame_rate_hz > 0.0)) throw InvalidInputError("synth: frame rate must be positive");
        for (const auto& range : {amplitude_range, frequency_range}) {
            if (range[0] < 0.0) throw InvalidInputError("synth: range lower bound is negative");
            if (range[0] > range[1]) throw InvalidInputError("synth: range lower bound exceeds upper bound");
        }
    }
};

// Drawn generator parameters for one joint coordinate.
struct SinusoidParams {
    double offset;
    std::array<double, 2> amplitude;
    std::array<double, 2> frequency;
    std::array<double, 2> phase;

    double value_at(double frame_index, double rate) const {
        double v = offset;
        for (int c = 0; c < 2; ++c)
            v += amplitude[c] *
                 std::sin(2.0 * std::numbers::pi * frequency[c] * frame_index / rate + phase[c]);
        return v;
    }
};

// Offsets are drawn from +-2x the amplitude upper bound, so the whole corpus
// scales with one knob; the default band gives torso-scale joint placement.
inline double synth_offset_band(const SynthSpec& spec) {
    return 2.0 * spec.amplitude_range[1];
}

// The draw order is part of the contract: for each joint, for each dimension:
// offset, then per sinusoid component amplitude, frequency, phase.
inline std::vector<SinusoidParams> synth_parameters(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const double offset_band = synth_offset_band(spec);
    std::vector<SinusoidParams> params;
    params.reserve(static_cast<std::size_t>(spec.joints * spec.dims));
    for (Index j = 0; j < spec.joints; ++j) {
        for (Index d = 0; d < spec.dims; ++d) {
            SinusoidParams p{};
            p.offset = rng.uniform(-offset_band, offset_band);
            for (int c = 0; c < 2; ++c) {
                p.amplitude[c] = rng.uniform(spec.amplitude_range[0], spec.amplitude_range[1]);
                p.frequency[c] = rng.uniform(spec.frequency_range[0], spec.frequency_range[1]);
                p.phase[c] = rng.uniform(0.0, 2.0 * std::numbers::pi);
            }
            params.push_back(p);
        }
    }
    return params;
}

// Pure function of the spec record: identical spec+seed, identical sequence.
inline MotionSequence synthesize_motion(const SynthSpec& spec) {
    const std::vector<SinusoidParams> params = synth_parameters(spec);
    Matrix<double> flat(static_cast<Index>(spec.frames), spec.joints * spec.dims);
    for (Index t = 0; t < flat.rows(); ++t)
        for (Index c = 0; c < flat.cols(); ++c)
            flat(t, c) = params[static_cast<std::size_t>(c)].value_at(static_cast<double>(t),
                                                                      spec.frame_rate_hz);
    return MotionSequence::from_flat(flat, spec.joints, spec.dims, spec.frame_rate_hz);
}

}  // namespace stms
