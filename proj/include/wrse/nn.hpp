#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wrse/errors.hpp"
#include "wrse/optim.hpp"
#include "wrse/rng.hpp"

namespace wrse {

/// Fully-connected net with ReLU hidden layers and a linear output layer.
/// Parameters live in one flat vector (per layer: weight matrix row-major,
/// then biases) so optimizers and serialization can treat them uniformly.
/// Gradients are computed by reverse-mode differentiation in backward().
class DenseNet {
public:
    DenseNet() = default;

    DenseNet(std::size_t n_inputs, const std::vector<std::size_t>& hidden,
             std::size_t n_outputs, std::uint64_t seed) {
        sizes_.push_back(n_inputs);
        for (std::size_t h : hidden) {
            if (h == 0) throw DomainError("hidden layer size must be positive");
            sizes_.push_back(h);
        }
        sizes_.push_back(n_outputs);
        std::size_t total = 0;
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l)
            total += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
        params_.assign(total, 0.0);
        // He-style init for the ReLU stack; biases start at zero.
        SplitMix64 rng = SplitMix64::stream(seed, 0x6e65746eULL);
        std::size_t off = 0;
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            const std::size_t fan_in = sizes_[l];
            const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
            for (std::size_t i = 0; i < sizes_[l] * sizes_[l + 1]; ++i)
                params_[off + i] = scale * rng.normal();
            off += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
        }
    }

    std::size_t n_inputs() const { return sizes_.front(); }
    std::size_t n_outputs() const { return sizes_.back(); }
    std::size_t n_layers() const { return sizes_.size() - 1; }
    const std::vector<std::size_t>& sizes() const { return sizes_; }
    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    /// Scratch buffers reused across rows of a batch.
    struct Workspace {
        std::vector<std::vector<double>> activations;  // post-ReLU per layer, last = raw output
        std::vector<std::vector<double>> deltas;
    };

    Workspace make_workspace() const {
        Workspace ws;
        ws.activations.resize(n_layers());
        ws.deltas.resize(n_layers());
        for (std::size_t l = 0; l < n_layers(); ++l) {
            ws.activations[l].assign(sizes_[l + 1], 0.0);
            ws.deltas[l].assign(sizes_[l + 1], 0.0);
        }
        return ws;
    }

    /// Forward pass; returns the raw (linear) outputs in ws.activations.back().
    std::span<const double> forward(std::span<const double> x, Workspace& ws) const {
        if (x.size() != sizes_.front()) throw DimensionMismatch("net input dimension mismatch");
        std::size_t off = 0;
        std::span<const double> in = x;
        for (std::size_t l = 0; l < n_layers(); ++l) {
            const std::size_t nin = sizes_[l], nout = sizes_[l + 1];
            const double* w = params_.data() + off;
            const double* b = w + nin * nout;
            auto& out = ws.activations[l];
            for (std::size_t j = 0; j < nout; ++j) {
                double z = b[j];
                const double* wj = w + j * nin;
                for (std::size_t i = 0; i < nin; ++i) z += wj[i] * in[i];
                out[j] = (l + 1 < n_layers() && z < 0.0) ? 0.0 : z;  // ReLU on hidden
            }
            in = out;
            off += nin * nout + nout;
        }
        return ws.activations.back();
    }

    /// Accumulates dLoss/dparams into grad (same layout as params) given
    /// dLoss/doutput for the forward pass that produced ws. forward() must be
    /// called with the same x immediately before.
    void backward(std::span<const double> x, std::span<const double> dout, Workspace& ws,
                  std::span<double> grad) const {
        if (grad.size() != params_.size()) throw LengthMismatch("net gradient size mismatch");
        const std::size_t L = n_layers();
        ws.deltas[L - 1].assign(dout.begin(), dout.end());
        // Layer parameter offsets.
        std::vector<std::size_t> offsets(L);
        std::size_t off = 0;
        for (std::size_t l = 0; l < L; ++l) {
            offsets[l] = off;
            off += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
        }
        for (std::size_t l = L; l-- > 0;) {
            const std::size_t nin = sizes_[l], nout = sizes_[l + 1];
            const double* w = params_.data() + offsets[l];
            double* gw = grad.data() + offsets[l];
            double* gb = gw + nin * nout;
            const std::vector<double>* input_vec = l == 0 ? nullptr : &ws.activations[l - 1];
            auto in_at = [&](std::size_t i) { return l == 0 ? x[i] : (*input_vec)[i]; };
            auto& delta = ws.deltas[l];
            for (std::size_t j = 0; j < nout; ++j) {
                const double dj = delta[j];
                if (dj == 0.0) continue;
                gb[j] += dj;
                double* gwj = gw + j * nin;
                for (std::size_t i = 0; i < nin; ++i) gwj[i] += dj * in_at(i);
            }
            if (l == 0) break;
            auto& prev = ws.deltas[l - 1];
            prev.assign(nin, 0.0);
            for (std::size_t j = 0; j < nout; ++j) {
                const double dj = delta[j];
                if (dj == 0.0) continue;
                const double* wj = w + j * nin;
                for (std::size_t i = 0; i < nin; ++i) prev[i] += dj * wj[i];
            }
            // ReLU mask of the producing layer.
            for (std::size_t i = 0; i < nin; ++i)
                if (ws.activations[l - 1][i] <= 0.0) prev[i] = 0.0;
        }
    }

    /// 0.5 * l2 * sum of squared weights (biases excluded); adds the matching
    /// gradient contribution when grad is non-empty.
    double l2_penalty(double l2, std::span<double> grad = {}) const {
        if (l2 == 0.0) return 0.0;
        double acc = 0.0;
        std::size_t off = 0;
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            const std::size_t nw = sizes_[l] * sizes_[l + 1];
            for (std::size_t i = 0; i < nw; ++i) {
                const double w = params_[off + i];
                acc += w * w;
                if (!grad.empty()) grad[off + i] += l2 * w;
            }
            off += nw + sizes_[l + 1];
        }
        return 0.5 * l2 * acc;
    }

private:
    std::vector<std::size_t> sizes_;
    std::vector<double> params_;
};

}  // namespace wrse
