#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "iws/error.hpp"

namespace iws {

struct AdamConfig {
    int epochs = 200;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

inline double sigmoid(double z)
{
    if (z >= 0) {
        const double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + e^z) without overflow.
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

/// Fully connected ReLU network with a single sigmoid output unit, trained
/// full-batch with Adam on a weighted logarithmic loss. Soft targets in [0,1]
/// are allowed.
class Mlp {
public:
    Mlp() = default;

    /// `hidden` lists hidden-layer widths; weights are He-uniform, biases zero.
    Mlp(Eigen::Index input_dim, const std::vector<Eigen::Index>& hidden, std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        Eigen::Index fan_in = input_dim;
        std::vector<Eigen::Index> widths = hidden;
        widths.push_back(1);
        for (std::size_t l = 0; l < widths.size(); ++l) {
            const bool last = l + 1 == widths.size();
            const double bound = last ? std::sqrt(6.0 / static_cast<double>(fan_in + 1)) : std::sqrt(6.0 / static_cast<double>(fan_in));
            std::uniform_real_distribution<double> dist(-bound, bound);
            Eigen::MatrixXd w(fan_in, widths[l]);
            for (Eigen::Index c = 0; c < w.cols(); ++c)
                for (Eigen::Index r = 0; r < w.rows(); ++r)
                    w(r, c) = dist(rng);
            _weights.push_back(std::move(w));
            _biases.push_back(Eigen::RowVectorXd::Zero(widths[l]));
            fan_in = widths[l];
        }
    }

    Eigen::Index input_dim() const { return _weights.empty() ? 0 : _weights.front().rows(); }

    /// Pre-sigmoid outputs, one per row of X.
    Eigen::VectorXd logits(const Eigen::MatrixXd& X) const
    {
        check_width(X);
        Eigen::MatrixXd a = X;
        for (std::size_t l = 0; l < _weights.size(); ++l) {
            Eigen::MatrixXd z = (a * _weights[l]).rowwise() + _biases[l];
            if (l + 1 < _weights.size())
                z = z.cwiseMax(0.0);
            a = std::move(z);
        }
        return a.col(0);
    }

    /// Sigmoid outputs clamped into the open interval (0,1).
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const
    {
        Eigen::VectorXd z = logits(X);
        constexpr double lo = 1e-12, hi = 1.0 - 1e-12;
        for (Eigen::Index i = 0; i < z.size(); ++i)
            z(i) = std::min(hi, std::max(lo, sigmoid(z(i))));
        return z;
    }

    /// Mean over rows of weight_i * CE(target_i, sigmoid(logit_i)).
    double loss(const Eigen::MatrixXd& X, const Eigen::VectorXd& targets, const Eigen::VectorXd& weights) const
    {
        const Eigen::VectorXd z = logits(X);
        double s = 0.0;
        for (Eigen::Index i = 0; i < z.size(); ++i)
            s += weights(i) * (softplus(z(i)) - targets(i) * z(i));
        return z.size() ? s / static_cast<double>(z.size()) : 0.0;
    }

    /// Full-batch Adam. Returns the loss after the final step.
    double train(const Eigen::MatrixXd& X, const Eigen::VectorXd& targets, const Eigen::VectorXd& weights, const AdamConfig& cfg)
    {
        check_width(X);
        if (targets.size() != X.rows() || weights.size() != X.rows())
            throw ValidationError("training targets/weights do not match the number of rows");
        const std::size_t L = _weights.size();
        std::vector<Eigen::MatrixXd> mw(L), vw(L);
        std::vector<Eigen::RowVectorXd> mb(L), vb(L);
        for (std::size_t l = 0; l < L; ++l) {
            mw[l] = vw[l] = Eigen::MatrixXd::Zero(_weights[l].rows(), _weights[l].cols());
            mb[l] = vb[l] = Eigen::RowVectorXd::Zero(_biases[l].size());
        }
        const double inv_n = X.rows() ? 1.0 / static_cast<double>(X.rows()) : 0.0;
        std::vector<Eigen::MatrixXd> acts(L + 1);
        double b1t = 1.0, b2t = 1.0;
        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            acts[0] = X;
            for (std::size_t l = 0; l < L; ++l) {
                Eigen::MatrixXd z = (acts[l] * _weights[l]).rowwise() + _biases[l];
                if (l + 1 < L)
                    z = z.cwiseMax(0.0);
                acts[l + 1] = std::move(z);
            }
            Eigen::MatrixXd delta(X.rows(), 1);
            for (Eigen::Index i = 0; i < X.rows(); ++i)
                delta(i, 0) = weights(i) * (sigmoid(acts[L](i, 0)) - targets(i)) * inv_n;

            b1t *= cfg.beta1;
            b2t *= cfg.beta2;
            const double lr_t = cfg.learning_rate * std::sqrt(1.0 - b2t) / (1.0 - b1t);
            for (std::size_t l = L; l-- > 0;) {
                const Eigen::MatrixXd gw = acts[l].transpose() * delta;
                const Eigen::RowVectorXd gb = delta.colwise().sum();
                if (l > 0) {
                    Eigen::MatrixXd next = delta * _weights[l].transpose();
                    delta = next.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
                }
                mw[l] = cfg.beta1 * mw[l] + (1.0 - cfg.beta1) * gw;
                vw[l] = cfg.beta2 * vw[l] + (1.0 - cfg.beta2) * gw.cwiseProduct(gw);
                mb[l] = cfg.beta1 * mb[l] + (1.0 - cfg.beta1) * gb;
                vb[l] = cfg.beta2 * vb[l] + (1.0 - cfg.beta2) * gb.cwiseProduct(gb);
                _weights[l].array() -= lr_t * mw[l].array() / (vw[l].array().sqrt() + cfg.epsilon);
                _biases[l].array() -= lr_t * mb[l].array() / (vb[l].array().sqrt() + cfg.epsilon);
            }
        }
        return loss(X, targets, weights);
    }

    const std::vector<Eigen::MatrixXd>& weights() const { return _weights; }
    const std::vector<Eigen::RowVectorXd>& biases() const { return _biases; }

private:
    void check_width(const Eigen::MatrixXd& X) const
    {
        if (X.cols() != input_dim())
            throw ValidationError("feature width " + std::to_string(X.cols()) + " does not match network input " +
                                  std::to_string(input_dim()));
    }

    std::vector<Eigen::MatrixXd> _weights;  ///< layer l: in x out
    std::vector<Eigen::RowVectorXd> _biases;
};

} // namespace iws
