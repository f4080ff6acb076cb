#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "stms/errors.hpp"
#include "stms/internal/pose_distance.hpp"
#include "stms/matrix.hpp"
#include "stms/model.hpp"
#include "stms/motion.hpp"

namespace stms {

struct HorizonRow {
    double horizon_ms;
    Index frame_index;  // 1-based frame beyond the last observed frame
    double mpjpe_mm;
};

struct HorizonTable {
    std::vector<HorizonRow> rows;
    double average_mm = 0.0;
};

// A predictor maps a sample to its predicted future window, T_f x (J*D).
using Predictor = std::function<Matrix<double>(const Sample&)>;

// MPJPE per horizon: the horizon is mapped to a single future frame with
// round-half-up, the per-joint Euclidean error of that frame is averaged
// over joints and then over samples. The average row is the mean of the
// listed horizons.
inline HorizonTable evaluate_horizons(const Predictor& predictor,
                                      const std::vector<Sample>& samples,
                                      const std::vector<double>& horizons_ms) {
    if (samples.empty()) throw InvalidInputError("evaluate_horizons: no samples");
    if (horizons_ms.empty()) throw InvalidInputError("evaluate_horizons: no horizons");
    const double rate = samples.front().observed.frame_rate_hz();
    const Index t_f = static_cast<Index>(samples.front().future.size());
    const Index dims = samples.front().observed.dims();
    for (const Sample& s : samples)
        if (s.observed.frame_rate_hz() != rate ||
            static_cast<Index>(s.future.size()) != t_f || s.observed.dims() != dims)
            throw DimensionError("evaluate_horizons: samples disagree on rate or window shape");
    for (double h_prev = 0.0; const double h : horizons_ms) {
        if (h <= h_prev)
            throw ConfigError("horizons must be strictly increasing and positive");
        h_prev = h;
    }

    HorizonTable table;
    table.rows.reserve(horizons_ms.size());
    std::vector<Matrix<double>> predictions;
    predictions.reserve(samples.size());
    for (const Sample& sample : samples) {
        Matrix<double> pred = predictor(sample);
        if (pred.rows() != t_f || pred.cols() != sample.future.coords())
            throw DimensionError("predictor returned " + std::to_string(pred.rows()) + "x" +
                                 std::to_string(pred.cols()) + ", expected " +
                                 std::to_string(t_f) + "x" +
                                 std::to_string(sample.future.coords()));
        predictions.push_back(std::move(pred));
    }

    double sum = 0.0;
    for (const double horizon : horizons_ms) {
        const Index frame = static_cast<Index>(std::floor(horizon / 1000.0 * rate + 0.5));
        if (frame < 1 || frame > t_f)
            throw ConfigError("horizon " + std::to_string(horizon) + " ms maps to frame " +
                              std::to_string(frame) + ", outside [1, T_f=" +
                              std::to_string(t_f) + "] at " + std::to_string(rate) + " Hz");
        double acc = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const Matrix<double> gt_row = samples[i].future.flat().row(frame - 1);
            const Matrix<double> pred_row = predictions[i].row(frame - 1);
            acc += internal::mean_pose_distance(pred_row, gt_row, dims, false);
        }
        const double mpjpe = acc / static_cast<double>(samples.size());
        table.rows.push_back({horizon, frame, mpjpe});
        sum += mpjpe;
    }
    table.average_mm = sum / static_cast<double>(table.rows.size());
    return table;
}

// --- predictors ---------------------------------------------------------------

// Runs the model and returns the future segment of its final prediction.
// `fusion` averages the deepest predictions of both branches instead of
// taking the spatial one (an evaluation-only variant, never the default).
template <typename Scalar>
Predictor make_model_predictor(StmsModel<Scalar> model, bool fusion = false) {
    if (fusion && !(model.has_temporal() && model.has_spatial()))
        throw ConfigError("fusion prediction needs both branches");
    return [model = std::move(model), fusion](const Sample& sample) -> Matrix<double> {
        const ForwardResult<Scalar> fwd = model_forward(model, sample.observed);
        Matrix<Scalar> full = fusion ? Matrix<Scalar>(Scalar(0.5) * (fwd.temporal_preds.back() +
                                                                     fwd.spatial_preds.back()))
                                     : fwd.final;
        const Index t_f = static_cast<Index>(sample.future.size());
        return full.bottomRows(t_f).template cast<double>();
    };
}

// Ground-truth oracle: zero error at every horizon by construction.
inline Predictor make_oracle_predictor() {
    return [](const Sample& sample) { return sample.future.flat(); };
}

// Repeats the last observed pose: the untrained model's behavior.
inline Predictor make_zero_velocity_predictor() {
    return [](const Sample& sample) {
        const Matrix<double> obs = sample.observed.flat();
        Matrix<double> out(static_cast<Index>(sample.future.size()), obs.cols());
        out.rowwise() = obs.row(obs.rows() - 1);
        return out;
    };
}

// --- CSV ------------------------------------------------------------------------

inline void write_horizon_csv(std::ostream& out, const HorizonTable& table) {
    out << "horizon_ms,frame_index,mpjpe_mm\n";
    char buf[64];
    for (const HorizonRow& row : table.rows) {
        std::snprintf(buf, sizeof(buf), "%.9g", row.horizon_ms);
        out << buf << ',' << row.frame_index << ',';
        std::snprintf(buf, sizeof(buf), "%.9g", row.mpjpe_mm);
        out << buf << '\n';
    }
    std::snprintf(buf, sizeof(buf), "%.9g", table.average_mm);
    out << "average,," << buf << '\n';
}

inline std::string horizon_csv(const HorizonTable& table) {
    std::ostringstream out;
    write_horizon_csv(out, table);
    return out.str();
}

}  // namespace stms
