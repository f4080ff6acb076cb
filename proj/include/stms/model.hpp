#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stms/autodiff.hpp"
#include "stms/dct.hpp"
#include "stms/errors.hpp"
#include "stms/graph_layers.hpp"
#include "stms/matrix.hpp"
#include "stms/motion.hpp"
#include "stms/random.hpp"

namespace stms {

struct ModelConfig {
    Index t_p = 10;
    Index t_f = 10;
    Index joints = 2;
    Index dims = 3;
    Index channels = 64;  // embedding width C
    Index depth = 4;      // encoder stack depth L
    Index kernels = 4;    // graph convolutions per layer K
    std::optional<Index> dct_truncation;
    bool use_temporal = true;
    bool use_spatial = true;

    Index horizon() const { return t_p + t_f; }
    Index coords() const { return joints * dims; }
    Index dct_coeffs() const { return dct_truncation ? *dct_truncation : horizon(); }

    void validate() const {
        if (t_p < 1 || t_f < 1 || joints < 1 || dims < 1)
            throw ConfigError("model: T_p, T_f, J, D must all be positive");
        if (channels < 1 || depth < 1 || kernels < 1)
            throw ConfigError("model: C, L, K must all be positive");
        if (dct_truncation && (*dct_truncation < 1 || *dct_truncation > horizon()))
            throw ConfigError("model: dct_truncation must lie in [1, T_p+T_f]");
        if (!use_temporal && !use_spatial)
            throw ConfigError("model: at least one branch must be enabled");
    }
};

// Shrink factor for the decoder weight at init, relative to the encoder
// kernels' uniform bound.
inline constexpr double kDecoderInitScale = 0.1;

// Two affine maps with a ReLU between: x -> W2 * relu(W1 * x + b1) + b2,
// applied to every row. Biases are kept as 1 x C rows.
template <typename Scalar>
struct EmbedParams {
    Matrix<Scalar> w1;  // C x in_width
    Matrix<Scalar> b1;  // 1 x C
    Matrix<Scalar> w2;  // C x C
    Matrix<Scalar> b2;  // 1 x C
};

// One branch of the dual-branch architecture: embedding, an L-deep stack of
// multi-subgraph encoders, and a single decoder kernel shared by every
// layer's prediction head.
template <typename Scalar>
struct Branch {
    EmbedParams<Scalar> embed;
    std::vector<MultiSubgraphLayer<Scalar>> encoders;
    SubgraphKernel<Scalar> decoder;
};

// Per-layer predictions from both branches; `final` is the deepest spatial
// prediction when the spatial branch exists, the deepest temporal one
// otherwise. All matrices are (T_p+T_f) x (J*D).
template <typename Scalar>
struct ForwardResult {
    std::vector<Matrix<Scalar>> temporal_preds;
    std::vector<Matrix<Scalar>> spatial_preds;
    Matrix<Scalar> final;
};

// Binds parameter matrices to tape nodes, once each, as leaves (tracked) or
// constants. Lets a decoder shared across layers accumulate gradient from
// every use automatically.
template <typename Scalar>
class ParamBinder {
  public:
    ParamBinder(ad::Graph<Scalar>& g, bool track) : graph_(&g), track_(track) {}

    int operator()(const Matrix<Scalar>& m) {
        auto [it, fresh] = ids_.try_emplace(&m, -1);
        if (fresh) it->second = track_ ? graph_->leaf(m) : graph_->constant(m);
        return it->second;
    }

    int id_of(const Matrix<Scalar>& m) const {
        auto it = ids_.find(&m);
        if (it == ids_.end()) throw InvalidInputError("parameter was never bound");
        return it->second;
    }

    bool tracking() const { return track_; }

  private:
    ad::Graph<Scalar>* graph_;
    bool track_;
    std::unordered_map<const Matrix<Scalar>*, int> ids_;
};

template <typename Scalar>
int embed_node(ad::Graph<Scalar>& g, int x, int w1, int b1, int w2, int b2) {
    const int hidden = g.relu(g.add_row(g.matmul(x, g.transpose(w1)), b1));
    return g.add_row(g.matmul(hidden, g.transpose(w2)), b2);
}

template <typename Scalar>
struct ForwardNodes {
    std::vector<int> temporal_preds;
    std::vector<int> spatial_preds;
    int final = -1;
};

template <typename Scalar>
class StmsModel {
  public:
    StmsModel(ModelConfig config, std::uint64_t seed, double adjacency_init_noise = 1e-2)
        : config_(config) {
        config_.validate();
        Rng rng(seed);
        if (config_.use_temporal)
            temporal_ = make_branch(config_.horizon(), config_.coords(), rng,
                                    adjacency_init_noise);
        if (config_.use_spatial)
            spatial_ = make_branch(config_.coords(), config_.dct_coeffs(), rng,
                                   adjacency_init_noise);
    }

    const ModelConfig& config() const { return config_; }
    bool has_temporal() const { return temporal_.has_value(); }
    bool has_spatial() const { return spatial_.has_value(); }

    Branch<Scalar>& temporal() { return branch_or_throw(temporal_, "temporal"); }
    const Branch<Scalar>& temporal() const { return branch_or_throw(temporal_, "temporal"); }
    Branch<Scalar>& spatial() { return branch_or_throw(spatial_, "spatial"); }
    const Branch<Scalar>& spatial() const { return branch_or_throw(spatial_, "spatial"); }

    // Tc x (T_p+T_f) orthonormal DCT basis used by the spatial branch.
    Matrix<Scalar> dct_matrix() const {
        return dct_basis<Scalar>(config_.horizon(), config_.dct_coeffs());
    }

    // Visits every parameter in a fixed order: temporal then spatial; within
    // a branch embed (w1, b1, w2, b2), encoder layers (each kernel adjacency
    // then weight), then the decoder. Initialization draws and checkpoint
    // layout both follow this order.
    template <typename Fn>
    void for_each_parameter(Fn&& fn) {
        visit_parameters(*this, fn);
    }
    template <typename Fn>
    void for_each_parameter(Fn&& fn) const {
        visit_parameters(*this, fn);
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for_each_parameter([&](const std::string&, const Matrix<Scalar>&) { ++n; });
        return n;
    }

    std::size_t scalar_parameter_count() const {
        std::size_t n = 0;
        for_each_parameter([&](const std::string&, const Matrix<Scalar>& m) {
            n += static_cast<std::size_t>(m.size());
        });
        return n;
    }

  private:
    template <typename Self, typename Fn>
    static void visit_parameters(Self& self, Fn& fn) {
        auto visit_branch = [&](auto& branch, const std::string& prefix) {
            fn(prefix + ".embed.w1", branch.embed.w1);
            fn(prefix + ".embed.b1", branch.embed.b1);
            fn(prefix + ".embed.w2", branch.embed.w2);
            fn(prefix + ".embed.b2", branch.embed.b2);
            for (std::size_t l = 0; l < branch.encoders.size(); ++l) {
                for (std::size_t k = 0; k < branch.encoders[l].kernels.size(); ++k) {
                    const std::string base =
                        prefix + ".enc" + std::to_string(l + 1) + ".k" + std::to_string(k + 1);
                    fn(base + ".a", branch.encoders[l].kernels[k].adjacency);
                    fn(base + ".w", branch.encoders[l].kernels[k].weight);
                }
            }
            fn(prefix + ".dec.a", branch.decoder.adjacency);
            fn(prefix + ".dec.w", branch.decoder.weight);
        };
        if (self.temporal_) visit_branch(*self.temporal_, "temporal");
        if (self.spatial_) visit_branch(*self.spatial_, "spatial");
    }

    // `nodes` is the graph size (frames for the temporal branch, joint
    // coordinates for the spatial one); `width` the embed input / decoder
    // output width.
    Branch<Scalar> make_branch(Index nodes, Index width, Rng& rng, double noise) const {
        const Index c = config_.channels;
        Branch<Scalar> branch;
        const double bound1 = detail::weight_init_bound(width);
        const double bound2 = detail::weight_init_bound(c);
        // Biases are drawn too: an all-zero embedding would park every
        // encoder ReLU exactly on its kink.
        branch.embed.w1 = draw_uniform(c, width, bound1, rng);
        branch.embed.b1 = draw_uniform(1, c, bound1, rng);
        branch.embed.w2 = draw_uniform(c, c, bound2, rng);
        branch.embed.b2 = draw_uniform(1, c, bound2, rng);
        branch.encoders.reserve(static_cast<std::size_t>(config_.depth));
        for (Index l = 0; l < config_.depth; ++l)
            branch.encoders.push_back(
                init_layer<Scalar>({nodes, c, c, config_.kernels}, rng, noise));
        // The decoder weight starts small: the untrained model then sits next
        // to the zero-velocity baseline (small residual corrections) while
        // every parameter still receives gradient from step one.
        branch.decoder =
            detail::init_kernel<Scalar>(nodes, c, width, rng, noise, Activation::identity);
        branch.decoder.weight *= Scalar(kDecoderInitScale);
        return branch;
    }

    static Matrix<Scalar> draw_uniform(Index rows, Index cols, double bound, Rng& rng) {
        Matrix<Scalar> m(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j)
                m(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
        return m;
    }

    template <typename Opt>
    static auto& branch_or_throw(Opt& opt, const char* name) {
        if (!opt) throw ConfigError(std::string("model has no ") + name + " branch");
        return *opt;
    }

    ModelConfig config_;
    std::optional<Branch<Scalar>> temporal_;
    std::optional<Branch<Scalar>> spatial_;
};

namespace detail {

template <typename Scalar>
std::vector<int> build_encoder_stack(ad::Graph<Scalar>& g, const Branch<Scalar>& branch,
                                     ParamBinder<Scalar>& bind, int embedded) {
    std::vector<int> states;
    states.reserve(branch.encoders.size());
    int m = embedded;
    for (const auto& layer : branch.encoders) {
        std::vector<std::pair<int, int>> params;
        params.reserve(layer.kernels.size());
        for (const auto& kernel : layer.kernels)
            params.emplace_back(bind(kernel.adjacency), bind(kernel.weight));
        m = layer_node(g, m, params, layer.kernels.front().activation);
        states.push_back(m);
    }
    return states;
}

template <typename Scalar>
int build_embed(ad::Graph<Scalar>& g, const EmbedParams<Scalar>& embed,
                ParamBinder<Scalar>& bind, int x) {
    return embed_node(g, x, bind(embed.w1), bind(embed.b1), bind(embed.w2), bind(embed.b2));
}

// Per-layer temporal predictions: decode each encoder state with the shared
// decoder and add the padded input back.
template <typename Scalar>
std::vector<int> build_temporal(ad::Graph<Scalar>& g, const Branch<Scalar>& branch,
                                ParamBinder<Scalar>& bind, int padded) {
    const int embedded = build_embed(g, branch.embed, bind, padded);
    const std::vector<int> states = build_encoder_stack(g, branch, bind, embedded);
    const int dec_a = bind(branch.decoder.adjacency);
    const int dec_w = bind(branch.decoder.weight);
    std::vector<int> preds;
    preds.reserve(states.size());
    for (const int m : states)
        preds.push_back(
            g.add(kernel_node(g, m, dec_a, dec_w, branch.decoder.activation), padded));
    return preds;
}

// Spatial path: DCT the transposed input, embed the coefficient rows, encode,
// decode back to coefficients, invert the DCT, and add the padded input. The
// input is untracked, so its DCT is folded into the constant.
template <typename Scalar>
std::vector<int> build_spatial(ad::Graph<Scalar>& g, const Branch<Scalar>& branch,
                               ParamBinder<Scalar>& bind, int padded,
                               const Matrix<Scalar>& basis) {
    const Matrix<Scalar> coeffs = g.value(padded).transpose() * basis.transpose();
    const int coeff_node = g.constant(coeffs);
    const int basis_node = g.constant(basis);
    const int embedded = build_embed(g, branch.embed, bind, coeff_node);
    const std::vector<int> states = build_encoder_stack(g, branch, bind, embedded);
    const int dec_a = bind(branch.decoder.adjacency);
    const int dec_w = bind(branch.decoder.weight);
    std::vector<int> preds;
    preds.reserve(states.size());
    for (const int m : states) {
        const int decoded = kernel_node(g, m, dec_a, dec_w, branch.decoder.activation);
        const int recovered = g.matmul(decoded, basis_node);
        preds.push_back(g.add(g.transpose(recovered), padded));
    }
    return preds;
}

}  // namespace detail

// Builds the full dual-branch forward pass on the tape. `padded` is the
// (T_p+T_f) x (J*D) padded input matrix.
template <typename Scalar>
ForwardNodes<Scalar> build_forward(ad::Graph<Scalar>& g, const StmsModel<Scalar>& model,
                                   ParamBinder<Scalar>& bind, const Matrix<Scalar>& padded) {
    const ModelConfig& cfg = model.config();
    if (padded.rows() != cfg.horizon() || padded.cols() != cfg.coords())
        throw DimensionError("model input must be " + std::to_string(cfg.horizon()) + "x" +
                             std::to_string(cfg.coords()) + ", got " +
                             std::to_string(padded.rows()) + "x" +
                             std::to_string(padded.cols()));
    const int padded_node = g.constant(padded);
    ForwardNodes<Scalar> out;
    if (model.has_temporal())
        out.temporal_preds = detail::build_temporal(g, model.temporal(), bind, padded_node);
    if (model.has_spatial())
        out.spatial_preds =
            detail::build_spatial(g, model.spatial(), bind, padded_node, model.dct_matrix());
    out.final = model.has_spatial() ? out.spatial_preds.back() : out.temporal_preds.back();
    return out;
}

// --- value-level forwards ----------------------------------------------------

template <typename Scalar>
Matrix<Scalar> frame_embed(const EmbedParams<Scalar>& embed, const Matrix<Scalar>& x) {
    ad::Graph<Scalar> g;
    ParamBinder<Scalar> bind(g, false);
    return g.value(detail::build_embed(g, embed, bind, g.constant(x)));
}

namespace detail {

template <typename Scalar>
Matrix<Scalar> padded_to_matrix(const Branch<Scalar>& branch, const MotionSequence& padded,
                                bool temporal) {
    const Index n = branch.decoder.adjacency.rows();
    const Matrix<Scalar> flat = padded.flat().template cast<Scalar>();
    if (temporal && flat.rows() != n)
        throw DimensionError("temporal branch expects " + std::to_string(n) + " padded frames, got " +
                             std::to_string(flat.rows()));
    if (!temporal && flat.cols() != n)
        throw DimensionError("spatial branch expects " + std::to_string(n) +
                             " joint coordinates, got " + std::to_string(flat.cols()));
    return flat;
}

}  // namespace detail

// Matrix-level branch forwards; `padded` is (T_p+T_f) x (J*D). These are the
// entry points for minimal-dimension traces where no valid pose exists.
template <typename Scalar>
std::vector<Matrix<Scalar>> temporal_forward_matrix(const Branch<Scalar>& branch,
                                                    const Matrix<Scalar>& padded) {
    ad::Graph<Scalar> g;
    ParamBinder<Scalar> bind(g, false);
    const int padded_node = g.constant(padded);
    std::vector<Matrix<Scalar>> out;
    for (const int id : detail::build_temporal(g, branch, bind, padded_node))
        out.push_back(g.value(id));
    return out;
}

template <typename Scalar>
std::vector<Matrix<Scalar>> spatial_forward_matrix(const Branch<Scalar>& branch,
                                                   const Matrix<Scalar>& padded) {
    const Index horizon = padded.rows();
    const Index coeffs = branch.decoder.weight.cols();
    const Matrix<Scalar> basis = dct_basis<Scalar>(horizon, coeffs);
    ad::Graph<Scalar> g;
    ParamBinder<Scalar> bind(g, false);
    const int padded_node = g.constant(padded);
    std::vector<Matrix<Scalar>> out;
    for (const int id : detail::build_spatial(g, branch, bind, padded_node, basis))
        out.push_back(g.value(id));
    return out;
}

template <typename Scalar>
std::vector<Matrix<Scalar>> temporal_forward(const Branch<Scalar>& branch,
                                             const MotionSequence& padded) {
    return temporal_forward_matrix(branch, detail::padded_to_matrix(branch, padded, true));
}

template <typename Scalar>
std::vector<Matrix<Scalar>> spatial_forward(const Branch<Scalar>& branch,
                                            const MotionSequence& padded) {
    return spatial_forward_matrix(branch, detail::padded_to_matrix(branch, padded, false));
}

// Full forward over a padded (T_p+T_f) x (J*D) matrix.
template <typename Scalar>
ForwardResult<Scalar> model_forward_padded(const StmsModel<Scalar>& model,
                                           const Matrix<Scalar>& padded) {
    ad::Graph<Scalar> g;
    ParamBinder<Scalar> bind(g, false);
    const ForwardNodes<Scalar> nodes = build_forward(g, model, bind, padded);
    ForwardResult<Scalar> result;
    for (const int id : nodes.temporal_preds) result.temporal_preds.push_back(g.value(id));
    for (const int id : nodes.spatial_preds) result.spatial_preds.push_back(g.value(id));
    result.final = g.value(nodes.final);
    return result;
}

// Pads the observation and runs both branches.
template <typename Scalar>
ForwardResult<Scalar> model_forward(const StmsModel<Scalar>& model,
                                    const MotionSequence& observed) {
    const ModelConfig& cfg = model.config();
    if (static_cast<Index>(observed.size()) != cfg.t_p)
        throw DimensionError("observed window has " + std::to_string(observed.size()) +
                             " frames, model expects T_p = " + std::to_string(cfg.t_p));
    if (observed.joint_count() != cfg.joints || observed.dims() != cfg.dims)
        throw DimensionError("observed window (J, D) does not match the model config");
    const MotionSequence padded = pad_observation(observed, static_cast<std::size_t>(cfg.t_f));
    return model_forward_padded(model, Matrix<Scalar>(padded.flat().template cast<Scalar>()));
}

}  // namespace stms
