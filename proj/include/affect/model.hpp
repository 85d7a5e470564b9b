#pragma once

#include "affect/dataset.hpp"
#include "affect/metrics.hpp"
#include "affect/nn.hpp"
#include "affect/temporal.hpp"

#include <array>
#include <string>
#include <vector>

namespace affect {

template <typename S>
struct ModelConfig {
    std::array<int, 5> channels{16, 32, 64, 128, 256};
    double dropout = 0.3;
    int f_bank = 3;
    int n_gauss = 4;
    std::array<int, 2> fc{256, 128};

    void validate() const {
        for (int i = 1; i < 5; ++i)
            if (channels[i] < channels[i - 1])
                throw AffectError("model channels must be nondecreasing");
        for (int c : channels)
            if (c < 1) throw AffectError("model channels must be positive");
        if (dropout < 0.0 || dropout >= 1.0) throw AffectError("dropout must lie in [0,1)");
        if (f_bank < 1 || n_gauss < 1) throw AffectError("filter bank sizes must be >= 1");
        if (fc[0] < 1 || fc[1] < 1) throw AffectError("fc widths must be positive");
    }
};

/// Inputs of one clip: the K selected key frames per stream, flattened to
/// (10 * 96 * 96) x 3 matrices in [0,1], plus normalized per-key-frame labels.
template <typename S>
struct ClipTensors {
    std::string clip_id;
    MatX<S> rgb, eye_flow, mouth_flow;
    MatX<S> labels;  // 10 x 2 (valence, arousal) in [0,1]
    std::array<int, 10> frame_indices{};
};

template <typename S>
struct Batch {
    MatX<S> rgb, eye_flow, mouth_flow;  // (B * 10 * 9216) x 3
    MatX<S> labels;                     // (B * 10) x 2
    std::vector<std::string> clip_ids;
    int n_clips = 0;
};

template <typename S>
Batch<S> make_batch(const std::vector<const ClipTensors<S>*>& clips) {
    if (clips.empty()) throw AffectError("make_batch: empty batch");
    Batch<S> b;
    b.n_clips = static_cast<int>(clips.size());
    const Eigen::Index rows_per_clip = clips[0]->rgb.rows();
    b.rgb.resize(rows_per_clip * b.n_clips, 3);
    b.eye_flow.resize(rows_per_clip * b.n_clips, 3);
    b.mouth_flow.resize(rows_per_clip * b.n_clips, 3);
    b.labels.resize(static_cast<Eigen::Index>(10) * b.n_clips, 2);
    for (int i = 0; i < b.n_clips; ++i) {
        const auto& c = *clips[i];
        if (c.rgb.rows() != rows_per_clip || c.eye_flow.rows() != rows_per_clip ||
            c.mouth_flow.rows() != rows_per_clip || c.labels.rows() != 10)
            throw AffectError("make_batch: clip " + c.clip_id + " has inconsistent shapes");
        b.rgb.middleRows(i * rows_per_clip, rows_per_clip) = c.rgb;
        b.eye_flow.middleRows(i * rows_per_clip, rows_per_clip) = c.eye_flow;
        b.mouth_flow.middleRows(i * rows_per_clip, rows_per_clip) = c.mouth_flow;
        b.labels.middleRows(i * 10, 10) = c.labels;
        b.clip_ids.push_back(c.clip_id);
    }
    return b;
}

struct AffectPrediction {
    std::string clip_id;
    std::array<int, 10> frame_indices{};
    MatX<double> va;              // 10 x 2 in (0,1)
    MatX<double> va_denormalized;  // 10 x 2 in [-10,10]
};

/// CCC loss (1 - mean of the two per-dimension CCCs) and its gradient with
/// respect to the predictions, with the loss-mode denominator guard.
template <typename S>
std::pair<S, MatX<S>> ccc_loss_with_grad(const MatX<S>& pred, const MatX<S>& target) {
    if (pred.rows() != target.rows() || pred.cols() != 2 || target.cols() != 2)
        throw AffectError("ccc_loss_with_grad: inputs must be equal-length n x 2");
    const Eigen::Index n = pred.rows();
    if (n < 2) throw AffectError("ccc_loss_with_grad: need at least 2 rows");
    MatX<S> grad(n, 2);
    S loss = S(1);
    for (int dim = 0; dim < 2; ++dim) {
        const auto x = pred.col(dim).array();
        const auto y = target.col(dim).array();
        const S mx = x.mean(), my = y.mean();
        const S sxx = (x - mx).square().sum() / S(n);
        const S syy = (y - my).square().sum() / S(n);
        const S sxy = ((x - mx) * (y - my)).sum() / S(n);
        const S md = mx - my;
        const S den = sxx + syy + md * md + S(kCccLossEps);
        const S rho = S(2) * sxy / den;
        loss -= rho / S(2);
        // d rho / d x_i = 2/(n den) * ((y_i - my) - rho ((x_i - mx) + md))
        grad.col(dim) =
            (S(-0.5) * S(2) / (S(n) * den) * ((y - my) - rho * ((x - mx) + md))).matrix();
    }
    return {loss, std::move(grad)};
}

/// Three-stream encoder/regressor: per stream five {conv3x3 - batch norm -
/// relu - 2x2 max pool} blocks, block-5 maps fused by element-wise averaging,
/// global average pooling per key frame, a bank of temporal Gaussian attention
/// filters summarizing the 10-frame sequence, and a per-key-frame fully
/// connected head with a 2-unit sigmoid output.
template <typename S>
class AffectNet {
public:
    AffectNet(const ModelConfig<S>& cfg, uint64_t seed) : cfg_(cfg), seed_(seed) {
        cfg_.validate();
        Rng rng(Rng::mix(seed, 0xAFFEC7));
        for (int s = 0; s < 3; ++s) {
            int in = 3;
            for (int b = 0; b < 5; ++b) {
                streams_[s].conv[b].init(in, cfg_.channels[b], 1, false, rng);
                streams_[s].bn[b].init(cfg_.channels[b]);
                in = cfg_.channels[b];
            }
        }
        auto bank = default_filter_bank<S>(cfg_.f_bank, cfg_.n_gauss);
        bank_params_.resize(cfg_.f_bank, 3);
        for (int f = 0; f < cfg_.f_bank; ++f) {
            bank_params_.value(f, 0) = bank.filters[f].g_hat;
            bank_params_.value(f, 1) = bank.filters[f].d_hat;
            bank_params_.value(f, 2) = bank.filters[f].s_hat;
        }
        const int d_f = cfg_.channels[4];
        const int concat = d_f + cfg_.f_bank * cfg_.n_gauss * d_f;
        fc1_.init(concat, cfg_.fc[0], rng);
        fc2_.init(cfg_.fc[0], cfg_.fc[1], rng);
        head_.init(cfg_.fc[1], 2, rng, 0.01);
    }

    const ModelConfig<S>& config() const { return cfg_; }
    uint64_t seed() const { return seed_; }

    FilterBankParams<S> filter_bank() const {
        FilterBankParams<S> bank;
        for (int f = 0; f < cfg_.f_bank; ++f) {
            FilterParams<S> p;
            p.g_hat = bank_params_.value(f, 0);
            p.d_hat = bank_params_.value(f, 1);
            p.s_hat = bank_params_.value(f, 2);
            p.n_gauss = cfg_.n_gauss;
            bank.filters.push_back(p);
        }
        return bank;
    }

    /// Forward pass. In train mode batch statistics drive the normalization
    /// (and are folded into the running averages) and dropout is active with
    /// the given seed; eval mode uses running statistics and no dropout.
    MatX<S> forward(const Batch<S>& batch, bool train, uint64_t dropout_seed = 0) {
        const int frames = batch.n_clips * 10;
        MatX<S> f_rgb = stream_forward(0, batch.rgb, frames, train);
        MatX<S> f_eye = stream_forward(1, batch.eye_flow, frames, train);
        MatX<S> f_mouth = stream_forward(2, batch.mouth_flow, frames, train);
        MatX<S> fused = (f_rgb + f_eye + f_mouth) / S(3);  // (frames * 9) x C5

        const int d_f = cfg_.channels[4];
        frame_feat_.resize(frames, d_f);
        for (int i = 0; i < frames; ++i)
            frame_feat_.row(i) = fused.middleRows(static_cast<Eigen::Index>(i) * 9, 9).colwise().mean();

        // Temporal attention summary per clip, shared across its 10 rows.
        const auto bank = filter_bank();
        sampling_.clear();
        for (const auto& p : bank.filters) sampling_.push_back(build_sampling_matrix(p, 10));
        const int fn = cfg_.f_bank * cfg_.n_gauss;
        MatX<S> x(frames, d_f + fn * d_f);
        x.leftCols(d_f) = frame_feat_;
        for (int b = 0; b < batch.n_clips; ++b) {
            const auto feats = frame_feat_.middleRows(b * 10, 10);
            int row = 0;
            VecX<S> summary(fn * d_f);
            for (int f = 0; f < cfg_.f_bank; ++f) {
                MatX<S> att = sampling_[f].matrix * feats;  // N x d_f
                for (int nrow = 0; nrow < cfg_.n_gauss; ++nrow)
                    summary.segment(static_cast<Eigen::Index>(row + nrow) * d_f, d_f) =
                        att.row(nrow).transpose();
                row += cfg_.n_gauss;
            }
            for (int t = 0; t < 10; ++t) x.block(b * 10 + t, d_f, 1, fn * d_f) = summary.transpose();
        }

        h1_ = nn::relu(MatX<S>(fc1_.forward(x, train)));
        apply_dropout(h1_, mask1_, train, Rng::mix(dropout_seed, 1));
        h2_ = nn::relu(MatX<S>(fc2_.forward(h1_, train)));
        apply_dropout(h2_, mask2_, train, Rng::mix(dropout_seed, 2));
        preds_ = nn::sigmoid(MatX<S>(head_.forward(h2_, train)));
        if (!preds_.allFinite()) throw AffectError("forward: non-finite activations");
        n_clips_ = batch.n_clips;
        return preds_;
    }

    /// Backward from d(loss)/d(predictions); accumulates parameter gradients.
    void backward(const Batch<S>& batch, const MatX<S>& dpreds) {
        const int frames = n_clips_ * 10;
        const int d_f = cfg_.channels[4];
        const int fn = cfg_.f_bank * cfg_.n_gauss;

        MatX<S> dz = (dpreds.array() * preds_.array() * (S(1) - preds_.array())).matrix();
        MatX<S> dh2 = head_.backward(dz);
        if (mask2_.size() > 0) dh2.array() *= mask2_.array();
        dh2 = nn::relu_backward(dh2, h2_);
        MatX<S> dh1 = fc2_.backward(dh2);
        if (mask1_.size() > 0) dh1.array() *= mask1_.array();
        dh1 = nn::relu_backward(dh1, h1_);
        MatX<S> dx = fc1_.backward(dh1);

        MatX<S> dframe = dx.leftCols(d_f);
        for (int b = 0; b < n_clips_; ++b) {
            // Sum the summary gradient over the clip's rows, route it through
            // the filter bank to the frame features and the filter parameters.
            VecX<S> dsummary = VecX<S>::Zero(fn * d_f);
            for (int t = 0; t < 10; ++t)
                dsummary += dx.block(b * 10 + t, d_f, 1, fn * d_f).transpose();
            const auto feats = frame_feat_.middleRows(b * 10, 10);
            int row = 0;
            for (int f = 0; f < cfg_.f_bank; ++f) {
                MatX<S> datt(cfg_.n_gauss, d_f);
                for (int nrow = 0; nrow < cfg_.n_gauss; ++nrow)
                    datt.row(nrow) =
                        dsummary.segment(static_cast<Eigen::Index>(row + nrow) * d_f, d_f)
                            .transpose();
                dframe.middleRows(b * 10, 10) += sampling_[f].matrix.transpose() * datt;
                MatX<S> dsm = datt * feats.transpose();  // N x 10
                FilterParams<S> p{bank_params_.value(f, 0), bank_params_.value(f, 1),
                                  bank_params_.value(f, 2), cfg_.n_gauss};
                auto g = filter_gradients(p, 10, dsm);
                bank_params_.grad(f, 0) += g[0];
                bank_params_.grad(f, 1) += g[1];
                bank_params_.grad(f, 2) += g[2];
                row += cfg_.n_gauss;
            }
        }

        // Global average pooling backward, then the fusion split.
        MatX<S> dfused(static_cast<Eigen::Index>(frames) * 9, d_f);
        for (int i = 0; i < frames; ++i)
            dfused.middleRows(static_cast<Eigen::Index>(i) * 9, 9) =
                (dframe.row(i) / S(9)).replicate(9, 1);
        dfused /= S(3);
        stream_backward(0, batch.rgb, dfused, frames);
        stream_backward(1, batch.eye_flow, dfused, frames);
        stream_backward(2, batch.mouth_flow, dfused, frames);
    }

    /// One optimizer update on a batch; returns the loss.
    S training_step(const Batch<S>& batch, nn::Adam<S>& opt, uint64_t step_seed) {
        nn::zero_grads(parameters());
        MatX<S> preds = forward(batch, true, step_seed);
        auto [loss, dpreds] = ccc_loss_with_grad(preds, batch.labels);
        backward(batch, dpreds);
        opt.step(parameters());
        return loss;
    }

    AffectPrediction predict_clip(const ClipTensors<S>& clip) {
        Batch<S> b = make_batch<S>({&clip});
        MatX<S> preds = forward(b, false);
        AffectPrediction out;
        out.clip_id = clip.clip_id;
        out.frame_indices = clip.frame_indices;
        out.va = preds.template cast<double>();
        out.va_denormalized = out.va.unaryExpr([](double v) { return denormalize_label(v); });
        return out;
    }

    std::vector<nn::Tensor<S>*> parameters() {
        std::vector<nn::Tensor<S>*> p;
        for (auto& s : streams_)
            for (int b = 0; b < 5; ++b) {
                p.push_back(&s.conv[b].weight);
                p.push_back(&s.bn[b].gamma);
                p.push_back(&s.bn[b].beta);
            }
        p.push_back(&bank_params_);
        for (auto* d : {&fc1_, &fc2_, &head_}) {
            p.push_back(&d->weight);
            p.push_back(&d->bias);
        }
        return p;
    }

    /// Running normalization statistics, in parameter-registry order.
    std::vector<VecX<S>*> norm_state() {
        std::vector<VecX<S>*> v;
        for (auto& s : streams_)
            for (int b = 0; b < 5; ++b) {
                v.push_back(&s.bn[b].running_mean);
                v.push_back(&s.bn[b].running_var);
            }
        return v;
    }

private:
    struct Stream {
        std::array<nn::Conv3x3<S>, 5> conv;
        std::array<nn::BatchNorm<S>, 5> bn;
        std::array<nn::MaxPool2<S>, 5> pool;
        std::array<MatX<S>, 5> inputs;
        std::array<nn::Shape<S>, 5> in_shapes;
    };

    MatX<S> stream_forward(int si, const MatX<S>& input, int frames, bool train) {
        if (input.rows() != static_cast<Eigen::Index>(frames) * 96 * 96 || input.cols() != 3)
            throw AffectError("stream input must be (frames*96*96) x 3");
        Stream& s = streams_[si];
        MatX<S> x = input;
        nn::Shape<S> sh{frames, 96, 96};
        for (int b = 0; b < 5; ++b) {
            if (train) {
                s.inputs[b] = x;
                s.in_shapes[b] = sh;
            }
            MatX<S> y = s.conv[b].forward(x, sh);
            y = s.bn[b].forward(y, train);
            y = nn::relu(y);
            nn::Shape<S> pooled;
            x = s.pool[b].forward(y, s.conv[b].out_shape(sh), pooled);
            sh = pooled;
        }
        return x;  // (frames * 9) x C5
    }

    void stream_backward(int si, const MatX<S>&, const MatX<S>& dtop, int) {
        Stream& s = streams_[si];
        MatX<S> dy = dtop;
        for (int b = 4; b >= 0; --b) {
            dy = s.pool[b].backward(dy);
            // relu mask recovered from the batch-norm cache
            for (Eigen::Index r = 0; r < dy.rows(); ++r)
                for (int c = 0; c < dy.cols(); ++c)
                    if (s.bn[b].pre_activation(r, c) <= S(0)) dy(r, c) = S(0);
            dy = s.bn[b].backward(dy);
            dy = s.conv[b].backward(dy, s.inputs[b], s.in_shapes[b]);
        }
    }

    void apply_dropout(MatX<S>& x, MatX<S>& mask, bool train, uint64_t seed) {
        const double rate = cfg_.dropout;
        if (!train || rate <= 0.0) {
            mask.resize(0, 0);
            return;
        }
        Rng rng(seed);
        mask.resize(x.rows(), x.cols());
        const S scale = S(1) / S(1 - rate);
        for (Eigen::Index i = 0; i < mask.size(); ++i)
            mask.data()[i] = rng.uniform() < rate ? S(0) : scale;
        x.array() *= mask.array();
    }

    ModelConfig<S> cfg_;
    uint64_t seed_ = 0;
    std::array<Stream, 3> streams_;
    nn::Tensor<S> bank_params_;  // f_bank x 3: (g_hat, d_hat, s_hat) per filter
    nn::Dense<S> fc1_, fc2_, head_;

    // forward caches
    MatX<S> frame_feat_;
    std::vector<SamplingMatrix<S>> sampling_;
    MatX<S> h1_, h2_, preds_, mask1_, mask2_;
    int n_clips_ = 0;

    template <typename T>
    friend struct ModelIo;
};

}  // namespace affect
