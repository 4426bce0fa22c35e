#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "uaic/graph.hpp"

namespace uaic::nc {

/// Adam hyperparameters plus the learning-rate schedule: linear warmup over
/// `warmup_steps`, then multiply by `decay_factor` every `decay_interval`
/// steps after warmup.
struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t warmup_steps = 0;
    double decay_factor = 1.0;
    std::size_t decay_interval = 0; // 0 disables decay
    double clip_norm = 0.0;         // 0 disables global-norm clipping
};

/// Effective learning rate at 1-based step t.
double scheduled_lr(const AdamConfig& cfg, std::size_t t);

class Adam {
  public:
    Adam(ParameterSet& params, AdamConfig cfg);

    /// Applies one update. Refuses (throws NumericError) when any gradient is
    /// NaN/Inf; the parameters and moments are left untouched in that case.
    void step(const Gradients& grads);

    std::size_t steps() const { return step_; }
    const AdamConfig& config() const { return cfg_; }
    double current_lr() const { return scheduled_lr(cfg_, step_ == 0 ? 1 : step_); }

    const std::vector<Tensor>& first_moments() const { return m_; }
    const std::vector<Tensor>& second_moments() const { return v_; }

  private:
    ParameterSet& params_;
    AdamConfig cfg_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    std::size_t step_ = 0;
};

// ---------------------------------------------------------------------------
// Finite-difference gradient checking.

struct GradCheckEntry {
    std::string name;
    std::size_t checked = 0;
    double max_rel_error = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_error() const;
    bool passed(double tolerance) const { return max_rel_error() < tolerance; }
};

/// Relative error |a - b| / max(|a|, |b|, 1e-8).
double relative_error(double analytic, double numeric);

/// Builds the scalar loss on a fresh graph over `params`.
using LossBuilder = std::function<Var(Graph&)>;

/// Compares analytic parameter gradients with central differences of step
/// `h`. At most `max_coords` coordinates per parameter are checked (sampled
/// with `seed` when the parameter is larger); 0 checks every coordinate.
GradCheckReport grad_check(ParameterSet& params, const LossBuilder& loss, double h = 1e-5,
                           std::size_t max_coords = 0, std::uint64_t seed = 1);

} // namespace uaic::nc
