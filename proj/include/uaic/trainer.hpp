#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "uaic/graph.hpp"
#include "uaic/optim.hpp"

namespace uaic::nc {

struct TrainLoopConfig {
    std::size_t epochs = 1;
    std::size_t batch_size = 16;
    AdamConfig adam;
    std::uint64_t seed = 1;
    /// Examples used for the before/after loss measurement (no dropout).
    std::size_t probe_examples = 256;
};

struct TrainLoopResult {
    double initial_loss = 0.0; // mean probe loss before the first update
    double final_loss = 0.0;   // mean probe loss after the last update
    std::vector<double> epoch_loss; // mean training loss per epoch
    std::size_t steps = 0;
};

/// Builds the scalar loss of one example on the given graph.
using ExampleLoss = std::function<Var(Graph&, std::size_t example)>;

/// Mini-batch Adam over `count` examples, shuffled per epoch from `seed`.
/// Gradients are averaged over the batch. A non-finite loss aborts with a
/// NumericError naming the step index.
TrainLoopResult train_loop(ParameterSet& params, std::size_t count, const ExampleLoss& loss,
                           const TrainLoopConfig& cfg, const std::string& tag);

/// Mean loss over the probe subset with dropout disabled.
double probe_loss(const ParameterSet& params, std::size_t count, const ExampleLoss& loss,
                  std::size_t probe_examples);

/// Rounds every parameter to the nearest 32-bit float, the checkpoint
/// storage precision.
void round_to_f32(ParameterSet& params);

} // namespace uaic::nc
