#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "stms/errors.hpp"
#include "stms/matrix.hpp"

namespace stms {

// One skeleton at one instant: J joints in D dimensions, millimeters.
struct Pose {
    Matrix<double> joints;  // J x D

    Pose() = default;
    explicit Pose(Matrix<double> j) : joints(std::move(j)) { validate(); }

    Index joint_count() const { return joints.rows(); }
    Index dims() const { return joints.cols(); }

    void validate() const {
        if (joints.rows() < 1) throw InvalidInputError("pose has no joints");
        if (joints.cols() != 2 && joints.cols() != 3)
            throw InvalidInputError("pose dimension must be 2 or 3, got " +
                                    std::to_string(joints.cols()));
        if (!all_finite(joints)) throw InvalidInputError("pose contains non-finite coordinates");
    }
};

// An ordered list of poses sharing (J, D), with a frame rate. Immutable after
// construction; the universal data carrier.
class MotionSequence {
  public:
    MotionSequence(std::vector<Pose> frames, double frame_rate_hz)
        : frames_(std::move(frames)), frame_rate_hz_(frame_rate_hz) {
        if (frames_.empty()) throw InvalidInputError("motion sequence has no frames");
        if (!(frame_rate_hz_ > 0.0))
            throw InvalidInputError("frame rate must be positive, got " +
                                    std::to_string(frame_rate_hz_));
        frames_.front().validate();
        const Index j = frames_.front().joint_count();
        const Index d = frames_.front().dims();
        for (std::size_t t = 1; t < frames_.size(); ++t) {
            frames_[t].validate();
            if (frames_[t].joint_count() != j || frames_[t].dims() != d)
                throw DimensionError("frame " + std::to_string(t + 1) +
                                     " does not match (J, D) of frame 1");
        }
    }

    // Row t holds frame t+1 in joint-major order: joint 1's D coordinates,
    // then joint 2's, ...
    static MotionSequence from_flat(const Matrix<double>& flat, Index joints, Index dims,
                                    double frame_rate_hz) {
        if (flat.cols() != joints * dims)
            throw DimensionError("flat matrix has " + std::to_string(flat.cols()) +
                                 " columns, expected J*D = " + std::to_string(joints * dims));
        std::vector<Pose> frames;
        frames.reserve(static_cast<std::size_t>(flat.rows()));
        for (Index t = 0; t < flat.rows(); ++t) {
            Matrix<double> pose(joints, dims);
            for (Index j = 0; j < joints; ++j)
                for (Index d = 0; d < dims; ++d) pose(j, d) = flat(t, j * dims + d);
            frames.emplace_back(std::move(pose));
        }
        return MotionSequence(std::move(frames), frame_rate_hz);
    }

    std::size_t size() const { return frames_.size(); }
    const Pose& frame(std::size_t t) const { return frames_.at(t); }
    const std::vector<Pose>& frames() const { return frames_; }
    double frame_rate_hz() const { return frame_rate_hz_; }
    Index joint_count() const { return frames_.front().joint_count(); }
    Index dims() const { return frames_.front().dims(); }
    Index coords() const { return joint_count() * dims(); }

    // T x (J*D) view of the whole sequence, joint-major columns.
    Matrix<double> flat() const {
        Matrix<double> out(static_cast<Index>(frames_.size()), coords());
        for (std::size_t t = 0; t < frames_.size(); ++t) {
            const Matrix<double>& p = frames_[t].joints;
            for (Index j = 0; j < p.rows(); ++j)
                for (Index d = 0; d < p.cols(); ++d)
                    out(static_cast<Index>(t), j * p.cols() + d) = p(j, d);
        }
        return out;
    }

    MotionSequence slice(std::size_t begin, std::size_t count) const {
        if (begin + count > frames_.size())
            throw DimensionError("slice [" + std::to_string(begin) + ", " +
                                 std::to_string(begin + count) + ") exceeds sequence length " +
                                 std::to_string(frames_.size()));
        std::vector<Pose> part(frames_.begin() + static_cast<std::ptrdiff_t>(begin),
                               frames_.begin() + static_cast<std::ptrdiff_t>(begin + count));
        return MotionSequence(std::move(part), frame_rate_hz_);
    }

  private:
    std::vector<Pose> frames_;
    double frame_rate_hz_;
};

// Observed window plus its ground-truth continuation.
struct Sample {
    MotionSequence observed;
    MotionSequence future;

    Sample(MotionSequence obs, MotionSequence fut)
        : observed(std::move(obs)), future(std::move(fut)) {
        if (observed.joint_count() != future.joint_count() || observed.dims() != future.dims())
            throw DimensionError("observed and future windows disagree on (J, D)");
        if (observed.frame_rate_hz() != future.frame_rate_hz())
            throw DimensionError("observed and future windows disagree on frame rate");
    }
};

// Repeat the last observed pose t_f times so input and output share length
// T_p + T_f.
inline MotionSequence pad_observation(const MotionSequence& observed, std::size_t t_f) {
    std::vector<Pose> frames = observed.frames();
    const Pose last = frames.back();
    for (std::size_t i = 0; i < t_f; ++i) frames.push_back(last);
    return MotionSequence(std::move(frames), observed.frame_rate_hz());
}

// Every fully contained (T_p, T_f) window, advancing by stride frames.
inline std::vector<Sample> window_sequence(const MotionSequence& seq, std::size_t t_p,
                                           std::size_t t_f, std::size_t stride) {
    if (t_p < 1 || t_f < 1) throw InvalidInputError("window lengths must be at least 1");
    if (stride < 1) throw InvalidInputError("stride must be at least 1");
    std::vector<Sample> samples;
    const std::size_t window = t_p + t_f;
    for (std::size_t start = 0; start + window <= seq.size(); start += stride)
        samples.emplace_back(seq.slice(start, t_p), seq.slice(start + t_p, t_f));
    return samples;
}

}  // namespace stms
