#include "uaic/trainer.hpp"

#include <cmath>
#include <numeric>

#include "uaic/log.hpp"

namespace uaic::nc {

namespace {

std::vector<std::size_t> probe_indices(std::size_t count, std::size_t probe) {
    std::vector<std::size_t> idx;
    if (probe == 0 || probe >= count) {
        idx.resize(count);
        std::iota(idx.begin(), idx.end(), 0);
        return idx;
    }
    for (std::size_t i = 0; i < probe; ++i) {
        idx.push_back(i * count / probe);
    }
    return idx;
}

} // namespace

double probe_loss(const ParameterSet& params, std::size_t count, const ExampleLoss& loss,
                  std::size_t probe_examples) {
    const auto idx = probe_indices(count, probe_examples);
    double total = 0.0;
    for (auto i : idx) {
        Graph g(&params);
        total += g.value(loss(g, i)).item();
    }
    return total / static_cast<double>(idx.size());
}

TrainLoopResult train_loop(ParameterSet& params, std::size_t count, const ExampleLoss& loss,
                           const TrainLoopConfig& cfg, const std::string& tag) {
    if (count == 0) {
        throw std::invalid_argument(tag + ": no training examples");
    }
    if (cfg.batch_size == 0) {
        throw std::invalid_argument(tag + ": batch size must be >= 1");
    }
    TrainLoopResult result;
    result.initial_loss = probe_loss(params, count, loss, cfg.probe_examples);
    log::info("{}: {} examples, {} parameters, initial loss {:.5f}", tag, count, params.scalar_count(),
              result.initial_loss);

    Adam adam(params, cfg.adam);
    Gradients grads(params);
    Rng order_rng(mix_seed(cfg.seed, 0x0d3e));
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        double epoch_total = 0.0;
        for (std::size_t start = 0; start < count; start += cfg.batch_size) {
            const std::size_t end = std::min(count, start + cfg.batch_size);
            grads.zero();
            for (std::size_t b = start; b < end; ++b) {
                Graph g(&params);
                g.set_training(true, mix_seed(cfg.seed, result.steps * cfg.batch_size + (b - start) + 1));
                Var l = loss(g, order[b]);
                const double lv = g.value(l).item();
                if (!std::isfinite(lv)) {
                    throw NumericError(tag + ": non-finite loss at step " + std::to_string(result.steps + 1) +
                                       " (example " + std::to_string(order[b]) + ")");
                }
                epoch_total += lv;
                g.backward(l, &grads);
            }
            grads.scale(1.0 / static_cast<double>(end - start));
            adam.step(grads);
            ++result.steps;
        }
        result.epoch_loss.push_back(epoch_total / static_cast<double>(count));
        log::info("{}: epoch {}/{} mean loss {:.5f} lr {:.2e}", tag, epoch + 1, cfg.epochs,
                  result.epoch_loss.back(), adam.current_lr());
    }
    result.final_loss = probe_loss(params, count, loss, cfg.probe_examples);
    log::info("{}: final loss {:.5f} after {} steps", tag, result.final_loss, result.steps);
    return result;
}

void round_to_f32(ParameterSet& params) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        for (double& v : params[i].value.data()) {
            v = static_cast<double>(static_cast<float>(v));
        }
    }
}

} // namespace uaic::nc
