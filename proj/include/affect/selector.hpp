#pragma once

#include "affect/image.hpp"
#include "affect/nn.hpp"

#include <array>
#include <string>
#include <vector>

namespace affect {

constexpr int kNumClasses = 7;
constexpr int kKeyFrames = 10;

/// Discretization of a (valence, arousal) level pair onto the affect wheel:
/// a neutral disc of radius 2.5 around the origin, then six 60-degree sectors
/// counted counterclockwise from the positive-valence axis.
int class_of(int valence, int arousal);

template <typename S>
struct FeatureGrid {
    MatX<S> descriptors;           // L x D
    std::array<int, 2> grid_shape;  // (H/16, W/16)
};

template <typename S>
struct AttentionWeights {
    MatX<S> weights;  // R_heads x L, rows nonnegative and summing to 1
};

struct FrameImportance {
    MatX<double> joint;            // C x F, sums to 1
    VecX<double> marginal;         // length F, column sums of joint
    std::vector<int> selected;     // K chronological frame indices
};

/// Ranked top-K by marginal (ties broken toward earlier frames), padded by
/// cycling through the ranked list when F < K, then re-sorted chronologically.
std::vector<int> select_top_k(const VecX<double>& marginal, int k);

template <typename S>
struct SelectorConfig {
    std::array<int, 4> channels{16, 32, 64, 128};  // stride-16 encoder, D = channels[3]
    int r_heads = 4;
    int attn_hidden = 64;
    uint64_t seed = 0;

    int feature_dim() const { return channels[3]; }
};

/// Training example: all face crops of one clip plus per-frame target classes.
template <typename S>
struct SelectorClip {
    std::string clip_id;
    MatX<S> frames;               // (F * 96 * 96) x 3 in [0, 1]
    std::vector<int> classes;     // length F
    int n_frames = 0;
};

struct SelectorTrainOptions {
    int epochs = 10;
    double lr = 1e-3;
    uint64_t seed = 0;
};

struct SelectorTrainTrace {
    std::vector<double> losses;                 // one entry per clip step
    std::vector<std::string> batch_clip_ids;    // clip id per step, for audit
};

/// Spatial self-attention key-frame scorer: a compact stride-16 convolutional
/// encoder over 96x96 crops, a two-layer attention network producing R_heads
/// weightings over the 6x6 descriptor grid, and a classifier whose per-frame
/// class scores feed a joint softmax over (class, frame).
template <typename S>
class Selector {
public:
    explicit Selector(const SelectorConfig<S>& cfg = {}) : cfg_(cfg) {
        Rng rng(Rng::mix(cfg.seed, 0xA11E));
        const int d = cfg_.feature_dim();
        int in = 3;
        for (int i = 0; i < 4; ++i) {
            conv_[i].init(in, cfg_.channels[i], /*stride=*/2, /*bias=*/true, rng);
            in = cfg_.channels[i];
        }
        attn1_.init(d, cfg_.attn_hidden, rng);
        attn2_.init(cfg_.attn_hidden, cfg_.r_heads, rng);
        w_sm_.init(cfg_.r_heads * d, kNumClasses, rng, 0.01);
    }

    const SelectorConfig<S>& config() const { return cfg_; }

    /// 96x96x3 crop (as a 9216 x 3 matrix in [0,1]) -> 36 local descriptors.
    FeatureGrid<S> extract_local_features(const MatX<S>& frame) const {
        if (frame.rows() != 96 * 96 || frame.cols() != 3)
            throw AffectError("extract_local_features: input must be 96x96x3");
        MatX<S> x = frame;
        nn::Shape<S> sh{1, 96, 96};
        for (int i = 0; i < 4; ++i) {
            MatX<S> y = conv_[i].forward(x, sh);
            sh = conv_[i].out_shape(sh);
            x = nn::relu(y);
        }
        if (!x.allFinite()) throw AffectError("extract_local_features: non-finite activations");
        return {std::move(x), {6, 6}};
    }

    /// Per-head softmax weights over the grid plus the weighted descriptor sums.
    std::pair<AttentionWeights<S>, MatX<S>> spatial_attention(const FeatureGrid<S>& grid) const {
        const MatX<S>& g = grid.descriptors;
        MatX<S> hidden = ((g * attn1_.weight.value).rowwise() +
                          attn1_.bias.value.col(0).transpose())
                             .array()
                             .tanh()
                             .matrix();
        MatX<S> scores = (hidden * attn2_.weight.value).rowwise() +
                         attn2_.bias.value.col(0).transpose();  // L x R
        if (!scores.allFinite()) throw AffectError("spatial_attention: non-finite activations");
        MatX<S> w = softmax_columns(scores).transpose();  // R x L
        MatX<S> aggregated = w * g;                       // R x D
        return {AttentionWeights<S>{std::move(w)}, std::move(aggregated)};
    }

    /// Per-frame class scores, joint softmax over (class, frame), marginal
    /// frame importances, and the ranked top-K selection. The softmax is
    /// evaluated in double so the joint sums to 1 at 1e-9 resolution even for
    /// single-precision models.
    FrameImportance temporal_softmax_pooling(const MatX<S>& per_frame_agg, int k = kKeyFrames) const {
        const int f = static_cast<int>(per_frame_agg.rows());
        if (f < 1) throw AffectError("temporal_softmax_pooling: need at least one frame");
        MatX<S> o = (per_frame_agg * w_sm_.weight.value).rowwise() +
                    w_sm_.bias.value.col(0).transpose();  // F x C
        MatX<double> od = o.template cast<double>();
        const double m = od.maxCoeff();
        MatX<double> e = (od.array() - m).exp();
        const double z = e.sum();
        FrameImportance out;
        out.joint = (e / z).transpose();  // C x F
        out.marginal = out.joint.colwise().sum().transpose();
        out.selected = select_top_k(out.marginal, k);
        return out;
    }

    /// Whole-clip scoring: frames (F*9216) x 3 -> importance over F frames.
    FrameImportance score_clip(const MatX<S>& frames, int n_frames, int k = kKeyFrames) const {
        MatX<S> agg = aggregate_frames(frames, n_frames);
        return temporal_softmax_pooling(agg, k);
    }

    /// Attention weights of a single frame, for heatmap rendering.
    AttentionWeights<S> frame_attention(const MatX<S>& frame) const {
        return spatial_attention(extract_local_features(frame)).first;
    }

    /// One training step on one clip; returns the clip loss
    /// -log sum_f p(c*_f, f | S).
    S train_step(const SelectorClip<S>& clip, nn::Adam<S>& opt) {
        nn::zero_grads(parameters());
        Cache cache;
        MatX<S> agg = forward_train(clip.frames, clip.n_frames, cache);
        MatX<S> o = w_sm_.forward(agg);  // F x C
        const S m = o.maxCoeff();
        MatX<S> e = (o.array() - m).exp();
        const S z = e.sum();
        S num = 0;
        for (int f = 0; f < clip.n_frames; ++f) num += e(f, clip.classes[f]);
        const S loss = std::log(z) - std::log(num);

        MatX<S> dout = e / z;
        for (int f = 0; f < clip.n_frames; ++f) dout(f, clip.classes[f]) -= e(f, clip.classes[f]) / num;
        MatX<S> dagg = w_sm_.backward(dout);
        backward_train(dagg, cache);
        opt.step(parameters());
        return loss;
    }

    std::vector<nn::Tensor<S>*> parameters() {
        std::vector<nn::Tensor<S>*> p;
        for (auto& c : conv_) {
            p.push_back(&c.weight);
            p.push_back(&c.bias);
        }
        p.push_back(&attn1_.weight);
        p.push_back(&attn1_.bias);
        p.push_back(&attn2_.weight);
        p.push_back(&attn2_.bias);
        p.push_back(&w_sm_.weight);
        p.push_back(&w_sm_.bias);
        return p;
    }

    static MatX<S> softmax_columns(const MatX<S>& scores) {
        MatX<S> out(scores.rows(), scores.cols());
        for (Eigen::Index c = 0; c < scores.cols(); ++c) {
            const S m = scores.col(c).maxCoeff();
            VecX<S> e = (scores.col(c).array() - m).exp();
            out.col(c) = e / e.sum();
        }
        return out;
    }

private:
    struct Cache {
        std::vector<MatX<S>> conv_in;   // inputs per conv layer
        std::vector<nn::Shape<S>> conv_shape;
        std::vector<MatX<S>> conv_out;  // post-relu outputs per conv layer
        MatX<S> grid;                    // (F*36) x D
        MatX<S> hidden;                  // (F*36) x hid
        MatX<S> attn;                    // (F*36) x R, per-frame column softmax
        int n_frames = 0;
    };

    MatX<S> backbone(const MatX<S>& frames, int n_frames, Cache* cache) const {
        MatX<S> x = frames;
        nn::Shape<S> sh{n_frames, 96, 96};
        for (int i = 0; i < 4; ++i) {
            if (cache) {
                cache->conv_in.push_back(x);
                cache->conv_shape.push_back(sh);
            }
            MatX<S> y = conv_[i].forward(x, sh);
            sh = conv_[i].out_shape(sh);
            x = nn::relu(y);
            if (cache) cache->conv_out.push_back(x);
        }
        return x;  // (F*36) x D
    }

    /// Attention-aggregated representation per frame: F x (R_heads * D).
    MatX<S> aggregate_frames(const MatX<S>& frames, int n_frames, Cache* cache = nullptr) const {
        const int d = cfg_.feature_dim();
        const int r = cfg_.r_heads;
        MatX<S> grid = backbone(frames, n_frames, cache);
        MatX<S> hidden = ((grid * attn1_.weight.value).rowwise() +
                          attn1_.bias.value.col(0).transpose())
                             .array()
                             .tanh()
                             .matrix();
        MatX<S> scores = (hidden * attn2_.weight.value).rowwise() +
                         attn2_.bias.value.col(0).transpose();  // (F*36) x R
        MatX<S> attn(scores.rows(), scores.cols());
        MatX<S> agg(n_frames, r * d);
        for (int f = 0; f < n_frames; ++f) {
            MatX<S> a = softmax_columns(MatX<S>(scores.middleRows(f * 36, 36)));  // 36 x R
            attn.middleRows(f * 36, 36) = a;
            MatX<S> agg_f = a.transpose() * grid.middleRows(f * 36, 36);  // R x D
            for (int h = 0; h < r; ++h) agg.block(f, h * d, 1, d) = agg_f.row(h);
        }
        if (cache) {
            cache->grid = std::move(grid);
            cache->hidden = std::move(hidden);
            cache->attn = std::move(attn);
            cache->n_frames = n_frames;
        }
        return agg;
    }

    MatX<S> forward_train(const MatX<S>& frames, int n_frames, Cache& cache) {
        return aggregate_frames(frames, n_frames, &cache);
    }

    void backward_train(const MatX<S>& dagg, Cache& cache) {
        const int d = cfg_.feature_dim();
        const int r = cfg_.r_heads;
        const int F = cache.n_frames;
        MatX<S> dgrid = MatX<S>::Zero(cache.grid.rows(), d);
        MatX<S> dscores = MatX<S>::Zero(cache.grid.rows(), r);
        for (int f = 0; f < F; ++f) {
            MatX<S> dagg_f(r, d);
            for (int h = 0; h < r; ++h) dagg_f.row(h) = dagg.block(f, h * d, 1, d);
            const auto a = cache.attn.middleRows(f * 36, 36);          // 36 x R
            const auto g = cache.grid.middleRows(f * 36, 36);          // 36 x D
            MatX<S> dat = dagg_f * g.transpose();                      // R x 36
            dgrid.middleRows(f * 36, 36) += a * dagg_f;                // 36 x D
            for (int h = 0; h < r; ++h) {
                VecX<S> ah = a.col(h);
                VecX<S> dah = dat.row(h).transpose();
                const S inner = ah.dot(dah);
                dscores.col(h).segment(f * 36, 36) =
                    (ah.array() * (dah.array() - inner)).matrix();
            }
        }
        // attention MLP
        attn2_.input = cache.hidden;
        MatX<S> dhidden = attn2_.backward(dscores);
        MatX<S> dpre = ((S(1) - cache.hidden.array().square()) * dhidden.array()).matrix();
        attn1_.input = cache.grid;
        dgrid += attn1_.backward(dpre);
        // backbone
        MatX<S> dy = dgrid;
        for (int i = 3; i >= 0; --i) {
            dy = nn::relu_backward(dy, cache.conv_out[i]);
            dy = conv_[i].backward(dy, cache.conv_in[i], cache.conv_shape[i]);
        }
    }

    SelectorConfig<S> cfg_;
    mutable std::array<nn::Conv3x3<S>, 4> conv_;
    mutable nn::Dense<S> attn1_, attn2_, w_sm_;

    template <typename T>
    friend struct SelectorIo;
};

/// Trains on the given clips only (single-threaded, deterministic in seed).
/// The loader form materializes one clip at a time so callers can keep the
/// corpus in compact storage.
template <typename S>
SelectorTrainTrace train_selector(Selector<S>& sel, int n_clips,
                                  const std::function<SelectorClip<S>(int)>& load_clip,
                                  const SelectorTrainOptions& opt) {
    if (n_clips < 1) throw AffectError("train_selector: empty training set");
    nn::Adam<S> adam(static_cast<S>(opt.lr));
    adam.init(sel.parameters());
    SelectorTrainTrace trace;
    std::vector<int> order(n_clips);
    for (int i = 0; i < n_clips; ++i) order[i] = i;
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        Rng rng(Rng::mix(opt.seed, 0xE50C + epoch));
        rng.shuffle(order);
        for (int idx : order) {
            SelectorClip<S> clip = load_clip(idx);
            trace.losses.push_back(static_cast<double>(sel.train_step(clip, adam)));
            trace.batch_clip_ids.push_back(clip.clip_id);
        }
    }
    return trace;
}

template <typename S>
SelectorTrainTrace train_selector(Selector<S>& sel, const std::vector<SelectorClip<S>>& clips,
                                  const SelectorTrainOptions& opt) {
    return train_selector<S>(
        sel, static_cast<int>(clips.size()), [&](int i) { return clips[i]; }, opt);
}

/// Converts a 96x96 crop image to the (9216 x 3) [0,1] matrix the selector
/// and the regression model consume.
template <typename S>
MatX<S> image_to_matrix(const Image& img) {
    if (img.channels != 3) throw AffectError("image_to_matrix expects RGB");
    MatX<S> m(static_cast<Eigen::Index>(img.width) * img.height, 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                m(static_cast<Eigen::Index>(y) * img.width + x, c) =
                    static_cast<S>(img.at(y, x, c)) / S(255);
    return m;
}

/// Max-combined per-head attention rendered as a smoothed red overlay.
Image render_heatmap(const Image& frame, const MatX<double>& weights,
                     std::array<int, 2> grid_shape);

}  // namespace affect
