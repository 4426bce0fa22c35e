#include "uaic/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace uaic::nc {

double scheduled_lr(const AdamConfig& cfg, std::size_t t) {
    if (cfg.warmup_steps > 0 && t <= cfg.warmup_steps) {
        return cfg.lr * static_cast<double>(t) / static_cast<double>(cfg.warmup_steps);
    }
    if (cfg.decay_interval == 0) {
        return cfg.lr;
    }
    const std::size_t after = t - std::min(t, cfg.warmup_steps);
    return cfg.lr * std::pow(cfg.decay_factor, static_cast<double>(after / cfg.decay_interval));
}

Adam::Adam(ParameterSet& params, AdamConfig cfg) : params_(params), cfg_(cfg) {
    for (const auto& p : params_) {
        m_.emplace_back(p.value.shape(), 0.0);
        v_.emplace_back(p.value.shape(), 0.0);
    }
}

void Adam::step(const Gradients& grads) {
    if (grads.size() != params_.size()) {
        throw std::invalid_argument("adam: gradient map has " + std::to_string(grads.size()) +
                                    " entries for " + std::to_string(params_.size()) + " parameters");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (grads[i].shape() != params_[i].value.shape()) {
            throw ShapeError("adam: gradient " + shape_str(grads[i].shape()) + " for parameter " +
                             params_[i].name + " " + shape_str(params_[i].value.shape()));
        }
        if (!grads[i].all_finite()) {
            throw NumericError("adam: non-finite gradient for parameter " + params_[i].name +
                               " at step " + std::to_string(step_ + 1));
        }
    }
    double clip = 1.0;
    if (cfg_.clip_norm > 0.0) {
        const double norm = grads.global_norm();
        if (norm > cfg_.clip_norm) {
            clip = cfg_.clip_norm / norm;
        }
    }
    ++step_;
    const double t = static_cast<double>(step_);
    const double lr = scheduled_lr(cfg_, step_);
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t);
    for (std::size_t i = 0; i < grads.size(); ++i) {
        auto p = params_[i].value.data();
        auto g = grads[i].data();
        auto m = m_[i].data();
        auto v = v_[i].data();
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double gj = g[j] * clip;
            m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * gj;
            v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * gj * gj;
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

double GradCheckReport::max_rel_error() const {
    double worst = 0.0;
    for (const auto& e : entries) {
        worst = std::max(worst, e.max_rel_error);
    }
    return worst;
}

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(ParameterSet& params, const LossBuilder& loss, double h,
                           std::size_t max_coords, std::uint64_t seed) {
    Gradients grads(params);
    {
        Graph g(&params);
        Var l = loss(g);
        g.backward(l, &grads);
    }
    auto eval = [&]() {
        Graph g(&params);
        return g.value(loss(g)).item();
    };

    Rng rng(seed);
    GradCheckReport report;
    for (std::size_t pid = 0; pid < params.size(); ++pid) {
        auto& p = params[pid];
        const std::size_t n = p.value.size();
        std::vector<std::size_t> coords(n);
        std::iota(coords.begin(), coords.end(), 0);
        if (max_coords > 0 && n > max_coords) {
            rng.shuffle(coords);
            coords.resize(max_coords);
            std::sort(coords.begin(), coords.end());
        }
        GradCheckEntry entry{p.name, coords.size(), 0.0};
        for (std::size_t j : coords) {
            const double orig = p.value[j];
            p.value[j] = orig + h;
            const double up = eval();
            p.value[j] = orig - h;
            const double down = eval();
            p.value[j] = orig;
            const double numeric = (up - down) / (2.0 * h);
            entry.max_rel_error = std::max(entry.max_rel_error, relative_error(grads[pid][j], numeric));
        }
        report.entries.push_back(std::move(entry));
    }
    return report;
}

} // namespace uaic::nc
