#include "uaic/evalbench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "uaic/errors.hpp"
#include "uaic/log.hpp"

namespace uaic::eval {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::array<std::pair<std::size_t, std::size_t>, 5> kBuckets = {
    {{0, 4}, {5, 8}, {9, 12}, {13, 16}, {17, 1000}}};

std::uint64_t median(std::vector<std::uint64_t> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

struct Cell {
    SentenceRow row;
    std::vector<TokenId> caption;
};

template <class F>
void parallel_for(std::size_t n, std::size_t workers, F&& body) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) {
                    body(i);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

std::string fmt_opt(const std::optional<double>& v, int precision = 3) {
    if (!v) {
        return "-";
    }
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << *v;
    return os.str();
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return j.at(key).get<double>();
}

} // namespace

// ---------------------------------------------------------------------------
// Benchmark

const ModeStats* BenchReport::find(const std::string& mode) const {
    for (const auto& m : modes) {
        if (m.mode == mode) {
            return &m;
        }
    }
    return nullptr;
}

BenchReport bench_decode(const BenchInput& input) {
    if (input.scenes.empty()) {
        throw std::invalid_argument("bench_decode: no scenes");
    }
    if (input.modes.empty()) {
        throw std::invalid_argument("bench_decode: no modes");
    }
    if (input.repeats == 0) {
        throw std::invalid_argument("bench_decode: repeats must be >= 1");
    }
    for (const auto& m : input.modes) {
        if (!m.decode) {
            throw std::invalid_argument("bench_decode: mode '" + m.name + "' has no model");
        }
    }
    const std::size_t n = input.scenes.size();
    const std::size_t modes = input.modes.size();
    std::vector<Cell> cells(n * modes);
    std::vector<std::uint64_t> encode_ns(n);

    parallel_for(n, input.workers, [&](std::size_t i) {
        const auto& scene = input.scenes[i];
        const auto t0 = Clock::now();
        const Tensor features = input.encode(scene);
        encode_ns[i] = static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count());
        for (std::size_t m = 0; m < modes; ++m) {
            std::vector<std::uint64_t> walls;
            Cell cell;
            for (std::size_t r = 0; r < input.repeats; ++r) {
                const auto tr = input.modes[m].decode(features);
                walls.push_back(tr.wall_ns);
                if (r == 0) {
                    cell.caption = tr.caption;
                    cell.row = SentenceRow{scene.id, input.modes[m].name, tr.evaluations, tr.insertion_stages(),
                                           tr.caption.size(), 0, 0};
                } else if (tr.evaluations != cell.row.evals || tr.caption != cell.caption) {
                    throw std::logic_error("bench_decode: mode '" + input.modes[m].name +
                                           "' is not deterministic on scene " + scene.id);
                }
            }
            cell.row.wall_ns = median(walls);
            cell.row.wall_min_ns = *std::min_element(walls.begin(), walls.end());
            cells[i * modes + m] = std::move(cell);
        }
    });

    BenchReport report;
    report.repeats = input.repeats;
    report.workers = input.workers;
    report.mean_encode_ms =
        std::accumulate(encode_ns.begin(), encode_ns.end(), 0.0) / static_cast<double>(n) / 1e6;
    std::vector<Sentence> refs;
    for (const auto& s : input.scenes) {
        refs.push_back(s.caption);
    }
    for (std::size_t m = 0; m < modes; ++m) {
        ModeStats st;
        st.mode = input.modes[m].name;
        st.sentences = n;
        std::vector<Sentence> cands;
        double evals = 0, stages = 0, length = 0, wall_min = 0, wall_med = 0;
        std::vector<LengthBucket> buckets;
        for (auto [lo, hi] : kBuckets) {
            buckets.push_back({lo, hi, 0, 0.0, 0.0, 0.0});
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto& c = cells[i * modes + m];
            cands.push_back(input.detokenize(c.caption));
            evals += static_cast<double>(c.row.evals);
            stages += static_cast<double>(c.row.stages);
            length += static_cast<double>(c.row.length);
            wall_min += static_cast<double>(c.row.wall_min_ns);
            wall_med += static_cast<double>(c.row.wall_ns);
            for (auto& b : buckets) {
                if (c.row.length >= b.lo && c.row.length <= b.hi) {
                    ++b.sentences;
                    b.mean_length += static_cast<double>(c.row.length);
                    b.mean_evals += static_cast<double>(c.row.evals);
                    b.mean_stages += static_cast<double>(c.row.stages);
                }
            }
            report.rows.push_back(c.row);
        }
        const double dn = static_cast<double>(n);
        st.mean_evals = evals / dn;
        st.mean_stages = stages / dn;
        st.mean_length = length / dn;
        st.mean_wall_ms_min = wall_min / dn / 1e6;
        st.mean_wall_ms_median = wall_med / dn / 1e6;
        st.bleu = corpus_bleu_all(cands, refs);
        for (auto& b : buckets) {
            if (b.sentences > 0) {
                const double k = static_cast<double>(b.sentences);
                b.mean_length /= k;
                b.mean_evals /= k;
                b.mean_stages /= k;
                st.buckets.push_back(b);
            }
        }
        report.modes.push_back(std::move(st));
    }
    if (const ModeStats* ar = report.find("ar")) {
        const double ar_evals = ar->mean_evals;
        const double ar_wall = ar->mean_wall_ms_median;
        for (auto& st : report.modes) {
            st.eval_speedup = ar_evals / st.mean_evals;
            st.wall_speedup = st.mean_wall_ms_median > 0 ? std::optional<double>(ar_wall / st.mean_wall_ms_median)
                                                         : std::nullopt;
        }
    }
    return report;
}

std::vector<ModeRunner> standard_modes(const BenchModels& mm) {
    std::vector<ModeRunner> out;
    if (mm.ar != nullptr) {
        out.push_back({"ar", [m = mm.ar, len = mm.ar_max_len](const Tensor& f) {
                           return decode::ar_decode(decode::ModelNextTokenScorer(*m, f), 1, len);
                       }});
    }
    if (mm.naic != nullptr) {
        out.push_back({"naic", [m = mm.naic](const Tensor& f) { return decode::naic_decode(*m, f); }});
    }
    if (mm.insertion != nullptr) {
        out.push_back({"uaic-greedy", [m = mm.insertion, stages = mm.max_stages](const Tensor& f) {
                           return decode::greedy_parallel_decode(decode::ModelSlotScorer(*m, f), stages);
                       }});
        if (mm.ue != nullptr && mm.bow != nullptr) {
            out.push_back({"uaic-adaptive", [mm](const Tensor& f) {
                               const auto start = Clock::now();
                               const auto u = decode::token_uncertainties(*mm.ue, *mm.bow,
                                                                          mm.insertion->vocab().size(), f);
                               auto tr = decode::beam_decode(decode::ModelSlotScorer(*mm.insertion, f), &u,
                                                             decode::BeamConfig{true, 1, mm.u_avg}, mm.max_stages);
                               tr.wall_ns = static_cast<std::uint64_t>(
                                   std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start)
                                       .count());
                               return tr;
                           }});
        }
    }
    return out;
}

json BenchReport::to_json() const {
    json jm = json::array();
    for (const auto& m : modes) {
        json jb = json::array();
        for (const auto& b : m.buckets) {
            jb.push_back({{"lo", b.lo},
                          {"hi", b.hi},
                          {"sentences", b.sentences},
                          {"mean_length", b.mean_length},
                          {"mean_evals", b.mean_evals},
                          {"mean_stages", b.mean_stages}});
        }
        jm.push_back({{"mode", m.mode},
                      {"sentences", m.sentences},
                      {"mean_length", m.mean_length},
                      {"mean_evals", m.mean_evals},
                      {"mean_stages", m.mean_stages},
                      {"mean_wall_ms_min", m.mean_wall_ms_min},
                      {"mean_wall_ms_median", m.mean_wall_ms_median},
                      {"bleu", m.bleu},
                      {"eval_speedup", opt_json(m.eval_speedup)},
                      {"wall_speedup", opt_json(m.wall_speedup)},
                      {"buckets", jb}});
    }
    json jr = json::array();
    for (const auto& r : rows) {
        jr.push_back({{"scene", r.scene},
                      {"mode", r.mode},
                      {"evals", r.evals},
                      {"stages", r.stages},
                      {"length", r.length},
                      {"wall_ns", r.wall_ns},
                      {"wall_min_ns", r.wall_min_ns}});
    }
    return {{"modes", jm},
            {"rows", jr},
            {"mean_encode_ms", mean_encode_ms},
            {"repeats", repeats},
            {"workers", workers}};
}

BenchReport BenchReport::from_json(const json& j) {
    BenchReport r;
    try {
        r.mean_encode_ms = j.at("mean_encode_ms").get<double>();
        r.repeats = j.at("repeats").get<std::size_t>();
        r.workers = j.at("workers").get<std::size_t>();
        for (const auto& jm : j.at("modes")) {
            ModeStats m;
            m.mode = jm.at("mode").get<std::string>();
            m.sentences = jm.at("sentences").get<std::size_t>();
            m.mean_length = jm.at("mean_length").get<double>();
            m.mean_evals = jm.at("mean_evals").get<double>();
            m.mean_stages = jm.at("mean_stages").get<double>();
            m.mean_wall_ms_min = jm.at("mean_wall_ms_min").get<double>();
            m.mean_wall_ms_median = jm.at("mean_wall_ms_median").get<double>();
            m.bleu = jm.at("bleu").get<std::array<double, 4>>();
            m.eval_speedup = opt_from(jm, "eval_speedup");
            m.wall_speedup = opt_from(jm, "wall_speedup");
            for (const auto& jb : jm.at("buckets")) {
                m.buckets.push_back({jb.at("lo").get<std::size_t>(), jb.at("hi").get<std::size_t>(),
                                     jb.at("sentences").get<std::size_t>(), jb.at("mean_length").get<double>(),
                                     jb.at("mean_evals").get<double>(), jb.at("mean_stages").get<double>()});
            }
            r.modes.push_back(std::move(m));
        }
        for (const auto& jr : j.at("rows")) {
            r.rows.push_back({jr.at("scene").get<std::string>(), jr.at("mode").get<std::string>(),
                              jr.at("evals").get<std::size_t>(), jr.at("stages").get<std::size_t>(),
                              jr.at("length").get<std::size_t>(), jr.at("wall_ns").get<std::uint64_t>(),
                              jr.at("wall_min_ns").get<std::uint64_t>()});
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("bench report: ") + e.what());
    }
    return r;
}

std::string BenchReport::to_text() const {
    std::ostringstream os;
    os << std::fixed;
    os << "mode            evals  stages  len    wall_ms(min/med)   speedup(evals/wall)  BLEU-1  BLEU-2  BLEU-3  BLEU-4\n";
    for (const auto& m : modes) {
        os << std::left << std::setw(15) << m.mode << std::right << std::setprecision(2) << std::setw(6)
           << m.mean_evals << std::setw(8) << m.mean_stages << std::setw(6) << m.mean_length << std::setprecision(3)
           << std::setw(10) << m.mean_wall_ms_min << "/" << std::left << std::setw(9) << m.mean_wall_ms_median
           << std::right << std::setw(8) << fmt_opt(m.eval_speedup, 2) << "/" << std::left << std::setw(12)
           << fmt_opt(m.wall_speedup, 2) << std::right << std::setprecision(4);
        for (double b : m.bleu) {
            os << std::setw(8) << b;
        }
        os << "\n";
    }
    os << std::setprecision(3) << "encoding (E): " << mean_encode_ms << " ms/sentence; repeats " << repeats
       << ", workers " << workers << "\n";
    for (const auto& m : modes) {
        os << m.mode << " by output length:";
        for (const auto& b : m.buckets) {
            os << "  [" << b.lo << "-" << (b.hi >= 1000 ? std::string("") : std::to_string(b.hi)) << "] n="
               << b.sentences << " evals=" << std::setprecision(2) << b.mean_evals;
        }
        os << "\n";
    }
    return os.str();
}

std::string BenchReport::to_csv() const {
    std::ostringstream os;
    os << "scene,mode,evals,wall_ns,length\n";
    for (const auto& r : rows) {
        os << r.scene << "," << r.mode << "," << r.evals << "," << r.wall_ns << "," << r.length << "\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Complexity table

double log_speedup(std::size_t n) {
    if (n < 2) {
        throw std::invalid_argument("log_speedup: N must be >= 2");
    }
    return static_cast<double>(n) / std::ceil(std::log2(static_cast<double>(n)));
}

ComplexityTable complexity_report(const BenchReport& report) {
    ComplexityTable t;
    const ModeStats* ar = report.find("ar");
    const ModeStats* naic = report.find("naic");
    const ModeStats* uaic = nullptr;
    for (const auto& m : report.modes) {
        if (m.mode.rfind("uaic", 0) == 0) {
            uaic = &m;
            break;
        }
    }
    const auto fill = [&](ComplexityRow& row, const ModeStats* m) {
        if (m == nullptr) {
            return;
        }
        row.mean_length = m->mean_length;
        row.mean_evals = m->mean_evals;
        row.dy_ms = m->mean_evals > 0 ? std::optional<double>(m->mean_wall_ms_median / m->mean_evals) : std::nullopt;
        row.e_ms = report.mean_encode_ms;
        if (ar != nullptr) {
            row.measured_ratio = ar->mean_evals / m->mean_evals;
        }
    };
    ComplexityRow aic{"AIC", "N(D+Y)+E", "1", {}, {}, {}, {}, {}};
    fill(aic, ar);
    ComplexityRow nr{"NAIC", "D+Y+E", "~N", {}, {}, {}, {}, {}};
    fill(nr, naic);
    ComplexityRow ir{"IR-NAIC", "K(D+Y)+E", "~N/K", {}, {}, {}, {}, {}};
    ComplexityRow ur{"UAIC", "logN(D+Y)+E", "~N/logN", {}, {}, {}, {}, {}};
    fill(ur, uaic);
    t.rows = {aic, nr, ir, ur};

    if (ar != nullptr && uaic != nullptr) {
        std::map<std::string, const SentenceRow*> uaic_rows;
        for (const auto& r : report.rows) {
            if (r.mode == uaic->mode) {
                uaic_rows[r.scene] = &r;
            }
        }
        std::map<std::size_t, ComplexityBucket> by_len;
        for (const auto& r : report.rows) {
            if (r.mode != "ar" || r.length < 2) {
                continue;
            }
            const auto it = uaic_rows.find(r.scene);
            if (it == uaic_rows.end()) {
                continue;
            }
            auto& b = by_len[r.length];
            b.length = r.length;
            ++b.sentences;
            b.ar_evals += static_cast<double>(r.evals);
            b.uaic_evals += static_cast<double>(it->second->evals);
        }
        for (auto& [len, b] : by_len) {
            b.ar_evals /= static_cast<double>(b.sentences);
            b.uaic_evals /= static_cast<double>(b.sentences);
            b.measured_ratio = b.ar_evals / b.uaic_evals;
            b.theoretical_ratio = log_speedup(len);
            t.buckets.push_back(b);
        }
    }
    return t;
}

std::string ComplexityTable::to_text() const {
    std::ostringstream os;
    os << std::left << std::setw(9) << "model" << std::setw(14) << "complexity" << std::setw(10) << "theory"
       << std::right << std::setw(8) << "N" << std::setw(8) << "evals" << std::setw(12) << "D+Y ms/ev" << std::setw(9)
       << "E ms" << std::setw(9) << "ratio" << "\n";
    for (const auto& r : rows) {
        os << std::left << std::setw(9) << r.model << std::setw(14) << r.formula << std::setw(10) << r.theoretical
           << std::right << std::setw(8) << fmt_opt(r.mean_length, 2) << std::setw(8) << fmt_opt(r.mean_evals, 2)
           << std::setw(12) << fmt_opt(r.dy_ms, 4) << std::setw(9) << fmt_opt(r.e_ms, 4) << std::setw(9)
           << fmt_opt(r.measured_ratio, 2) << "\n";
    }
    os << "Y (top-score search) is fused with D and reported jointly.\n";
    if (!buckets.empty()) {
        os << "\n   N  sentences  AR evals  UAIC evals  measured  N/ceil(log2 N)\n";
        for (const auto& b : buckets) {
            os << std::setw(4) << b.length << std::setw(11) << b.sentences << std::fixed << std::setprecision(2)
               << std::setw(10) << b.ar_evals << std::setw(12) << b.uaic_evals << std::setw(10) << b.measured_ratio
               << std::setw(16) << b.theoretical_ratio << "\n";
        }
    }
    return os.str();
}

json ComplexityTable::to_json() const {
    json jr = json::array();
    for (const auto& r : rows) {
        jr.push_back({{"model", r.model},
                      {"formula", r.formula},
                      {"theoretical", r.theoretical},
                      {"mean_length", opt_json(r.mean_length)},
                      {"mean_evals", opt_json(r.mean_evals)},
                      {"dy_ms", opt_json(r.dy_ms)},
                      {"e_ms", opt_json(r.e_ms)},
                      {"measured_ratio", opt_json(r.measured_ratio)}});
    }
    json jb = json::array();
    for (const auto& b : buckets) {
        jb.push_back({{"length", b.length},
                      {"sentences", b.sentences},
                      {"ar_evals", b.ar_evals},
                      {"uaic_evals", b.uaic_evals},
                      {"measured_ratio", b.measured_ratio},
                      {"theoretical_ratio", b.theoretical_ratio}});
    }
    return {{"rows", jr}, {"buckets", jb}};
}

ComplexityTable ComplexityTable::from_json(const json& j) {
    ComplexityTable t;
    try {
        for (const auto& r : j.at("rows")) {
            t.rows.push_back({r.at("model").get<std::string>(), r.at("formula").get<std::string>(),
                              r.at("theoretical").get<std::string>(), opt_from(r, "mean_length"),
                              opt_from(r, "mean_evals"), opt_from(r, "dy_ms"), opt_from(r, "e_ms"),
                              opt_from(r, "measured_ratio")});
        }
        for (const auto& b : j.at("buckets")) {
            t.buckets.push_back({b.at("length").get<std::size_t>(), b.at("sentences").get<std::size_t>(),
                                 b.at("ar_evals").get<double>(), b.at("uaic_evals").get<double>(),
                                 b.at("measured_ratio").get<double>(), b.at("theoretical_ratio").get<double>()});
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("complexity table: ") + e.what());
    }
    return t;
}

// ---------------------------------------------------------------------------
// Order ablation

double mean(const std::vector<double>& v) {
    if (v.empty()) {
        throw std::invalid_argument("mean of an empty list");
    }
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_stdev(const std::vector<double>& v) {
    if (v.size() < 2) {
        return 0.0;
    }
    const double mu = mean(v);
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mu) * (x - mu);
    }
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double heldout_bleu4(const model::InsertionModel& m, const pipeline::Dataset& data, std::size_t max_stages,
                     double* mean_stages) {
    if (data.heldout.empty()) {
        throw std::invalid_argument("heldout_bleu4: no held-out scenes");
    }
    std::vector<Sentence> cands, refs;
    double stages = 0.0;
    for (const auto& s : data.heldout) {
        const auto tr = decode::greedy_parallel_decode(decode::ModelSlotScorer(m, data.features.at(s.id)), max_stages);
        cands.push_back(data.vocab.decode(tr.caption));
        refs.push_back(s.caption);
        stages += static_cast<double>(tr.insertion_stages());
    }
    if (mean_stages != nullptr) {
        *mean_stages = stages / static_cast<double>(data.heldout.size());
    }
    return corpus_bleu(cands, refs, 4);
}

const OrderResult* OrderAblationTable::find(const std::string& order) const {
    for (const auto& r : rows) {
        if (r.order == order) {
            return &r;
        }
    }
    return nullptr;
}

OrderAblationTable run_order_ablation(const pipeline::Dataset& data, const pipeline::RunConfig& cfg,
                                      const OrderAblationConfig& ablation, pipeline::ModelCache& cache) {
    if (ablation.seeds.size() < 3) {
        throw std::invalid_argument("run_order_ablation: at least 3 seeds are required");
    }
    if (ablation.orders.empty()) {
        throw std::invalid_argument("run_order_ablation: no orders");
    }
    OrderAblationTable table;
    table.seeds = ablation.seeds;
    for (auto order : ablation.orders) {
        table.rows.push_back(OrderResult{pipeline::order_name(order), {}, {}, 0.0, 0.0});
    }
    for (auto seed : ablation.seeds) {
        auto run = cfg;
        run.apply_seed(seed);
        const auto ue = cache.ue(data, run);
        for (std::size_t o = 0; o < ablation.orders.size(); ++o) {
            const auto m = cache.insertion(data, run, ablation.orders[o], ue);
            double stages = 0.0;
            const double b = heldout_bleu4(m, data, run.decode.max_stages, &stages);
            log::info("ablate-order: {} seed {} BLEU-4 {:.4f}", table.rows[o].order, seed, b);
            table.rows[o].bleu4.push_back(b);
            table.rows[o].mean_stages.push_back(stages);
        }
    }
    for (auto& r : table.rows) {
        r.mean = mean(r.bleu4);
        r.stdev = sample_stdev(r.bleu4);
    }
    return table;
}

json OrderAblationTable::to_json() const {
    json jr = json::array();
    for (const auto& r : rows) {
        jr.push_back({{"order", r.order},
                      {"bleu4", r.bleu4},
                      {"mean_stages", r.mean_stages},
                      {"mean", r.mean},
                      {"stdev", r.stdev}});
    }
    return {{"seeds", seeds}, {"rows", jr}};
}

std::string OrderAblationTable::to_text() const {
    std::ostringstream os;
    os << std::left << std::setw(18) << "order" << "BLEU-4 mean +- stdev   per seed\n" << std::fixed;
    for (const auto& r : rows) {
        os << std::left << std::setw(18) << r.order << std::setprecision(4) << r.mean << " +- " << r.stdev << "   ";
        for (double b : r.bleu4) {
            os << " " << b;
        }
        os << "\n";
    }
    return os.str();
}

} // namespace uaic::eval
