// Randomized property checks with a fixed seed. Each property reports the
// number of cases tried and the first counterexample found.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fnmatch.h>
#include <fstream>
#include <functional>
#include <iostream>

#include <nlohmann/json.hpp>

#include "uaic/checkpoint.hpp"
#include "uaic/corpus.hpp"
#include "uaic/decode.hpp"
#include "uaic/errors.hpp"
#include "uaic/gradsuite.hpp"
#include "uaic/insertion_model.hpp"
#include "uaic/rng.hpp"
#include "uaic/staging.hpp"

using namespace uaic;
using nc::Tensor;

namespace {

struct Outcome {
    std::size_t cases = 0;
    std::string failure; // empty when the property held
};

struct Property {
    std::string name;
    std::function<Outcome(std::uint64_t seed)> run;
};

std::vector<double> random_u(Rng& rng, std::size_t n) {
    std::vector<double> u(n);
    for (auto& x : u) {
        x = rng.uniform();
    }
    return u;
}

Outcome dp_vs_oracle(std::uint64_t seed) {
    Rng rng(seed);
    Outcome o;
    for (; o.cases < 1000; ++o.cases) {
        const std::size_t t = 1 + rng.below(14);
        const auto u = random_u(rng, t);
        const auto dp = staging::dp_mask(u);
        const auto bf = staging::brute_force_mask(u);
        if (std::abs(dp.value - bf.value) > 1e-12 || !dp.non_adjacent()) {
            o.failure = "T=" + std::to_string(t) + " dp " + std::to_string(dp.value) + " oracle " +
                        std::to_string(bf.value);
            return o;
        }
        double sum = 0;
        for (std::size_t i = 0; i < t; ++i) {
            sum += dp.phi[i] ? u[i] : 0.0;
        }
        if (std::abs(sum - dp.value) > 1e-12) {
            o.failure = "reported value differs from the mask sum at T=" + std::to_string(t);
            return o;
        }
    }
    return o;
}

Outcome reconstruction(std::uint64_t seed) {
    const auto grammar = corpus::default_grammar();
    const auto scenes = corpus::generate_corpus(grammar, 5000, seed);
    const auto vocab = corpus::build_vocab(scenes, 1);
    Rng rng(mix_seed(seed, 5));
    Outcome o;
    for (const auto& s : scenes) {
        ++o.cases;
        const auto ids = vocab.encode(s.caption);
        const auto plan = staging::decompose(ids, random_u(rng, ids.size()));
        const auto t = static_cast<double>(ids.size());
        const auto k = static_cast<double>(plan.stage_count());
        if (!staging::reconstructs(plan) || staging::replay(plan) != ids) {
            o.failure = "replay mismatch for " + s.id;
            return o;
        }
        if (k < std::ceil(std::log2(t + 1.0)) || k > t) {
            o.failure = "stage count " + std::to_string(plan.stage_count()) + " outside bounds for " + s.id;
            return o;
        }
    }
    return o;
}

Outcome beam_size_grid(std::uint64_t) {
    Outcome o;
    for (std::size_t a = 1; a <= 100; ++a) {
        const double u_avg = static_cast<double>(a) / 100.0;
        int prev = 5;
        for (std::size_t k = 0; k < 100; ++k, ++o.cases) {
            const double u = 2.0 * static_cast<double>(k) / 99.0;
            const int b = decode::adaptive_beam_size(u, u_avg);
            if (b < 1 || b > 5 || b > prev) {
                o.failure = "B=" + std::to_string(b) + " at u=" + std::to_string(u) + " u_avg=" + std::to_string(u_avg);
                return o;
            }
            prev = b;
        }
        if (decode::adaptive_beam_size(u_avg, u_avg) != 3 || decode::adaptive_beam_size(0.0, u_avg) != 5 ||
            decode::adaptive_beam_size(2.0 * u_avg, u_avg) != 1) {
            o.failure = "anchor values wrong at u_avg=" + std::to_string(u_avg);
            return o;
        }
    }
    return o;
}

Outcome gradients(std::uint64_t seed) {
    Outcome o;
    for (const auto& r : nc::run_gradient_suite(seed)) {
        ++o.cases;
        if (!(r.max_rel_error < 1e-4)) {
            o.failure = r.name + " relative error " + std::to_string(r.max_rel_error);
            return o;
        }
    }
    return o;
}

/// Deterministic pseudo-random slot distributions keyed by the sequence.
class HashedScorer final : public decode::SlotScorer {
  public:
    HashedScorer(std::uint64_t seed, std::size_t width, std::size_t cap) : seed_(seed), width_(width), cap_(cap) {}
    Tensor slot_log_probs(const std::vector<corpus::TokenId>& framed) const override {
        std::uint64_t h = seed_;
        for (auto t : framed) {
            h = mix_seed(h, t);
        }
        Rng rng(h);
        Tensor t({framed.size() - 1, width_});
        for (std::size_t s = 0; s + 1 < framed.size(); ++s) {
            double z = 0;
            for (std::size_t c = 0; c < width_; ++c) {
                t.at(s, c) = rng.uniform(-2, 2) + (c == 0 ? 1.0 : 0.0) - (framed.size() >= cap_ && c > 0 ? 40.0 : 0.0);
                z += std::exp(t.at(s, c));
            }
            for (std::size_t c = 0; c < width_; ++c) {
                t.at(s, c) -= std::log(z);
            }
        }
        return t;
    }
    std::size_t max_len() const override { return 40; }

  private:
    std::uint64_t seed_;
    std::size_t width_;
    std::size_t cap_;
};

Outcome beam_one_is_greedy(std::uint64_t seed) {
    Outcome o;
    for (; o.cases < 300; ++o.cases) {
        const HashedScorer scorer(mix_seed(seed, o.cases), 3 + o.cases % 6, 4 + o.cases % 11);
        const auto g = decode::greedy_parallel_decode(scorer, 16);
        const auto b = decode::beam_decode(scorer, nullptr, decode::BeamConfig{false, 1, 0.5}, 16);
        if (g.caption != b.caption || g.evaluations != b.evaluations) {
            o.failure = "case " + std::to_string(o.cases) + " differs";
            return o;
        }
    }
    return o;
}

Outcome checkpoint_round_trip(std::uint64_t seed) {
    const auto grammar = corpus::default_grammar();
    const auto scenes = corpus::generate_corpus(grammar, 50, seed);
    const auto vocab = corpus::build_vocab(scenes, 1);
    const auto dir = std::filesystem::temp_directory_path() / ("uaic-prop-" + std::to_string(seed));
    std::filesystem::create_directories(dir);
    Rng rng(mix_seed(seed, 9));
    Outcome o;
    for (; o.cases < 20; ++o.cases) {
        model::ModelConfig cfg{8, 8 * (1 + rng.below(2)), 2, 16, 1 + rng.below(2), 24, 0.0};
        const model::InsertionModel m(cfg, vocab, rng.next());
        const auto path = dir / "m.ckpt";
        ckpt::save_checkpoint(model::to_checkpoint(m, {}), path);
        const auto back = model::insertion_from_checkpoint(ckpt::load_checkpoint(path, ckpt::ModelKind::Insertion));
        Tensor f({3, 8}, 0.0);
        for (auto& x : f.data()) {
            x = rng.uniform(-1, 1);
        }
        const decode::ModelSlotScorer s1(m, f), s2(back, f);
        const auto d1 = decode::greedy_parallel_decode(s1, 16);
        const auto d2 = decode::greedy_parallel_decode(s2, 16);
        if (d1.caption != d2.caption || d1.evaluations != d2.evaluations) {
            o.failure = "decode changed after reload in case " + std::to_string(o.cases);
            break;
        }
        // Flip one byte of the parameter blob.
        const auto size = std::filesystem::file_size(path);
        {
            std::fstream io(path, std::ios::in | std::ios::out | std::ios::binary);
            const auto at = static_cast<std::streamoff>(size - 1 - rng.below(64));
            io.seekg(at);
            char c = 0;
            io.get(c);
            io.seekp(at);
            io.put(static_cast<char>(c ^ 0x10));
        }
        try {
            ckpt::load_checkpoint(path);
            o.failure = "tampered checkpoint accepted in case " + std::to_string(o.cases);
            break;
        } catch (const DataError&) {
        }
    }
    std::filesystem::remove_all(dir);
    return o;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Property checks"};
    std::string filter = "*";
    std::uint64_t seed = 20240611;
    std::string json_out;
    bool list = false;
    app.add_option("--filter", filter, "Glob over property names");
    app.add_option("--seed", seed, "Base seed");
    app.add_option("--json", json_out, "Write a JSON report here");
    app.add_flag("--list", list, "List properties and exit");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Property> props = {
        {"dp-vs-oracle", dp_vs_oracle},
        {"reconstruction", reconstruction},
        {"beam-size-grid", beam_size_grid},
        {"gradients", gradients},
        {"beam-one-is-greedy", beam_one_is_greedy},
        {"checkpoint-round-trip", checkpoint_round_trip},
    };

    nlohmann::json report = {{"seed", seed}, {"properties", nlohmann::json::array()}};
    std::size_t run = 0, failed = 0;
    for (const auto& p : props) {
        if (fnmatch(filter.c_str(), p.name.c_str(), 0) != 0) {
            continue;
        }
        if (list) {
            std::cout << p.name << "\n";
            continue;
        }
        ++run;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = p.run(mix_seed(seed, run));
        } catch (const std::exception& e) {
            o.failure = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool ok = o.failure.empty();
        failed += ok ? 0 : 1;
        std::cout << (ok ? "PASS " : "FAIL ") << p.name << "  cases " << o.cases << "  " << secs << " s"
                  << (ok ? "" : "  " + o.failure) << "\n";
        report["properties"].push_back(
            {{"name", p.name}, {"passed", ok}, {"cases", o.cases}, {"seconds", secs}, {"failure", o.failure}});
    }
    if (!json_out.empty()) {
        std::ofstream(json_out) << report.dump(2) << "\n";
    }
    if (!list && run == 0) {
        std::cerr << "no property matches '" << filter << "'\n";
        return 1;
    }
    return failed == 0 ? 0 : 1;
}
