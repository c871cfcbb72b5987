// ms: fit a windowed k-means codebook and neighbor-count prior over
// time-series data, sample token sequences with the naive / token-critic /
// critic-refined decoding pipelines, and evaluate the results.

#include "ms/config.hpp"
#include "ms/data.hpp"
#include "ms/errors.hpp"
#include "ms/eval.hpp"
#include "ms/prior.hpp"
#include "ms/quantizer.hpp"
#include "ms/sampler.hpp"
#include "ms/schedule.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>
#include <vector>

namespace {

using nlohmann::ordered_json;
using namespace ms;

int env_threads() {
    if (const char* v = std::getenv("MS_THREADS")) {
        const int t = std::atoi(v);
        if (t >= 1) return t;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 1;
}

// Run f(0..n-1) across workers. Chain i derives its own RNG from the root
// seed, and results land in index order, so the worker count never
// affects outputs.
template <typename F>
void run_indexed(int n, F&& f) {
    const int workers = std::min(env_threads(), std::max(n, 1));
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i; (i = next.fetch_add(1)) < n;) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(error_mu);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

SamplerConfig sampler_config_from(const Config& cfg, uint64_t seed) {
    SamplerConfig sc;
    sc.T = cfg.get_int("schedule.T", 10);
    sc.T_star = cfg.get_int("sampler.T_star", sc.T);
    sc.noise.base_magnitude = cfg.get_double("schedule.noise_base", 1.0);
    sc.ratio_window = cfg.get_int("sampler.ratio_window", 2);
    sc.tau = cfg.get_optional_double("sampler.tau");
    sc.use_ratio_stop = cfg.get_bool("sampler.use_ratio_stop", !sc.tau.has_value());
    sc.record_trace = cfg.get_bool("sampler.record_trace", true);
    sc.seed = seed;
    return sc;
}

ordered_json config_echo(const Config& cfg, const SamplerConfig& sc) {
    ordered_json j;
    j["schedule.T"] = sc.T;
    j["schedule.noise_base"] = sc.noise.base_magnitude;
    j["sampler.T_star"] = sc.T_star;
    if (sc.tau)
        j["sampler.tau"] = *sc.tau;
    j["sampler.use_ratio_stop"] = sc.use_ratio_stop;
    j["sampler.ratio_window"] = sc.ratio_window;
    for (const auto& [k, v] : cfg.entries())
        if (!j.contains(k)) j[k] = v;
    return j;
}

void save_tokens(const std::string& path, int k, int n,
                 const std::vector<TokenSeq>& seqs) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot open for write: " + path);
    os << k << ' ' << n << '\n';
    for (const auto& s : seqs) {
        for (int i = 0; i < s.size(); ++i)
            os << s.slots[i] << (i + 1 < s.size() ? " " : "");
        os << '\n';
    }
}

struct TokenFile {
    int k = 0;
    int n = 0;
    std::vector<TokenSeq> seqs;
};

TokenFile load_tokens(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open: " + path);
    TokenFile tf;
    if (!(is >> tf.k >> tf.n)) throw DataError(path + ": malformed token header");
    int32_t v = 0;
    while (is >> v) {
        TokenSeq s;
        s.slots.push_back(v);
        for (int i = 1; i < tf.n; ++i) {
            if (!(is >> v)) throw DataError(path + ": truncated token row");
            s.slots.push_back(v);
        }
        tf.seqs.push_back(std::move(s));
    }
    return tf;
}

// ---------------------------------------------------------------------------

int cmd_fit(const Config& cfg, const std::string& data_path, const std::string& out_dir) {
    const int window = cfg.get_int("vq.window", 8);
    const int k = cfg.get_int("vq.K", 16);
    const int iters = cfg.get_int("vq.iters", 50);
    const uint64_t seed = static_cast<uint64_t>(cfg.get_int("seed", 0));

    auto data = truncate_to_min_length(load_ucr_tsv(data_path));
    std::vector<Series> series;
    series.reserve(data.size());
    for (const auto& row : data) series.push_back(znormalize(row.values));

    const size_t len = series.front().size();
    if (len < static_cast<size_t>(window))
        throw UsageError("fit: series length " + std::to_string(len) +
                         " shorter than window " + std::to_string(window));
    if (len % window != 0)
        std::cerr << "note: series truncated from " << len << " to "
                  << len - len % window << " samples (window multiple)\n";

    VQSpec spec{window, k, iters, seed};
    const Codebook cb = fit_codebook(series, spec);

    std::vector<TokenSeq> tokens;
    tokens.reserve(series.size());
    for (const auto& s : series) {
        Series trunc(s.begin(), s.begin() + (s.size() - s.size() % window));
        tokens.push_back(encode(cb, trunc));
    }
    const CountPrior prior = CountPrior::fit(tokens, k);

    cb.save_file(out_dir + "/codebook.txt");
    prior.save_file(out_dir + "/prior.txt");

    ordered_json j;
    j["K"] = k;
    j["window"] = window;
    j["N"] = tokens.front().size();
    j["n_series"] = series.size();
    j["recon_error"] = reconstruction_mse(cb, series);
    j["codebook"] = out_dir + "/codebook.txt";
    j["prior"] = out_dir + "/prior.txt";
    std::cout << j.dump(2) << '\n';
    return 0;
}

struct ChainResult {
    TokenSeq tokens;
    RealismTrace trace;
    int t_star = -1;
};

std::vector<ChainResult> run_chains(const std::string& method, int n,
                                    const PriorModel& prior, const Codebook& cb,
                                    const MaskSchedule& sched, const SamplerConfig& sc) {
    std::vector<ChainResult> results(n);
    PseudoLikelihoodCritic critic(prior);
    run_indexed(n, [&](int i) {
        Rng rng(Rng::derive(sc.seed, static_cast<uint64_t>(i)));
        ChainResult& out = results[i];
        if (method == "naive") {
            out.tokens = naive_decode(prior, sched, sc, rng).seq;
        } else if (method == "tokencritic") {
            out.tokens = token_critic_decode(prior, critic, sched, sc, rng);
        } else if (method == "ess") {
            EssResult r = ess_sample(prior, cb, sched, sc, rng);
            out.tokens = std::move(r.seq);
            out.trace = std::move(r.trace);
            out.t_star = r.t_star;
        } else { // ablation-b
            SamplerConfig sb = sc;
            sb.stage3 = Stage3Confidence::PriorProb;
            sb.record_trace = false;
            EssResult r = ess_sample(prior, cb, sched, sb, rng);
            out.tokens = std::move(r.seq);
            out.t_star = r.t_star;
        }
    });
    return results;
}

int cmd_sample(const Config& cfg, const std::string& method, int n, uint64_t seed,
               const std::string& codebook_path, const std::string& prior_path,
               const std::string& out_prefix) {
    if (method != "naive" && method != "tokencritic" && method != "ess" &&
        method != "ablation-b")
        throw UsageError("unknown method '" + method + "'");

    const Codebook cb = Codebook::load_file(codebook_path);
    const CountPrior prior = CountPrior::load_file(prior_path);
    const SamplerConfig sc = sampler_config_from(cfg, seed);
    const MaskSchedule sched = cosine_mask_counts(prior.seq_len(), sc.T);

    const auto results = run_chains(method, n, prior, cb, sched, sc);

    std::vector<TokenSeq> tokens;
    std::vector<LabeledSeries> series;
    tokens.reserve(n);
    series.reserve(n);
    for (const auto& r : results) {
        tokens.push_back(r.tokens);
        series.push_back({-1, decode(cb, r.tokens)}); // -1: unconditional
    }
    save_tokens(out_prefix + ".tokens.txt", prior.vocab_size(), prior.seq_len(), tokens);
    write_ucr_tsv(out_prefix + ".series.tsv", series);

    std::map<int, int> tstar_hist;
    for (const auto& r : results)
        if (r.t_star >= 0) ++tstar_hist[r.t_star];

    ordered_json manifest;
    manifest["method"] = method;
    manifest["n"] = n;
    manifest["seed"] = seed;
    manifest["config"] = config_echo(cfg, sc);
    if (method == "ess" || method == "ablation-b") {
        manifest["stage3_confidence"] = method == "ess" ? "self-critic" : "prior-prob";
        ordered_json hist;
        for (const auto& [t, c] : tstar_hist) hist[std::to_string(t)] = c;
        manifest["tstar_histogram"] = hist;
    }
    manifest["codebook"] = codebook_path;
    manifest["prior"] = prior_path;
    {
        std::ofstream os(out_prefix + ".manifest.json");
        if (!os) throw DataError("cannot open for write: " + out_prefix + ".manifest.json");
        os << manifest.dump(2) << '\n';
    }

    if (method == "ess") {
        std::ofstream os(out_prefix + ".trace.csv");
        if (!os) throw DataError("cannot open for write: " + out_prefix + ".trace.csv");
        os << "chain,phase,step,realism_sum\n";
        char buf[32];
        for (int i = 0; i < n; ++i)
            for (const auto& e : results[i].trace.entries) {
                std::snprintf(buf, sizeof(buf), "%.17g", e.realism_sum);
                os << i << ',' << phase_name(e.phase) << ',' << e.step << ',' << buf << '\n';
            }
    }
    std::cout << "wrote " << out_prefix << ".{tokens.txt,series.tsv,manifest.json"
              << (method == "ess" ? ",trace.csv" : "") << "}\n";
    return 0;
}

EvalReport eval_feature_mode(std::vector<LabeledSeries> gen, std::vector<LabeledSeries> real,
                             bool znorm) {
    if (znorm) {
        for (auto& g : gen) g.values = znormalize(g.values);
        for (auto& r : real) r.values = znormalize(r.values);
    }

    EvalReport rep;
    rep.n_generated = static_cast<int>(gen.size());
    rep.n_real = static_cast<int>(real.size());

    std::vector<FeatureVector> gen_f, real_f;
    std::vector<Series> gen_series;
    for (const auto& g : gen) {
        gen_f.push_back(extract_features(g.values));
        gen_series.push_back(g.values);
    }
    for (const auto& r : real) real_f.push_back(extract_features(r.values));

    rep.frechet = frechet_feature_distance(gen_f, real_f);

    std::vector<int> real_labels;
    for (const auto& r : real) real_labels.push_back(r.label);
    std::vector<int> uniq = real_labels;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() >= 2) {
        SoftmaxClassifier clf;
        clf.fit(real_f, real_labels);
        rep.is_score = is_analogue(gen_series, clf);
    }

    std::vector<int> gen_labels;
    for (const auto& g : gen) gen_labels.push_back(g.label);
    std::vector<int> gen_uniq = gen_labels;
    std::sort(gen_uniq.begin(), gen_uniq.end());
    gen_uniq.erase(std::unique(gen_uniq.begin(), gen_uniq.end()), gen_uniq.end());
    if (gen_uniq.size() >= 2) rep.cas = cas_analogue(gen, real);

    return rep;
}

int cmd_eval(const std::string& gen_path, const std::string& real_path,
             const std::string& mode, const std::string& truth_path,
             const std::string& out_path, bool znorm) {
    EvalReport rep;
    if (mode == "feature") {
        rep = eval_feature_mode(load_ucr_tsv(gen_path), load_ucr_tsv(real_path), znorm);
    } else if (mode == "exact") {
        if (truth_path.empty())
            throw UsageError("eval --mode exact requires --truth <joint file>");
        const TabularExactPrior truth = TabularExactPrior::load_file(truth_path);
        const TokenFile tf = load_tokens(gen_path);
        if (tf.k != truth.vocab_size() || tf.n != truth.seq_len())
            throw UsageError("eval: token file shape does not match ground truth");
        const auto emp = empirical_distribution(tf.seqs, tf.k, tf.n);
        rep.tv = tv_distance(emp, truth.table());
        rep.kl = kl_divergence(emp, truth.table());
        rep.n_generated = static_cast<int>(tf.seqs.size());
    } else {
        throw UsageError("unknown eval mode '" + mode + "'");
    }

    const std::string text = rep.to_json();
    std::cout << text << '\n';
    if (!out_path.empty()) {
        std::ofstream os(out_path);
        if (!os) throw DataError("cannot open for write: " + out_path);
        os << text << '\n';
    }
    return 0;
}

int cmd_sweep(const Config& cfg, const std::string& methods_csv, const std::string& seeds_csv,
              int n, const std::string& codebook_path, const std::string& prior_path,
              const std::string& real_path, const std::string& out_path) {
    std::vector<std::string> methods;
    {
        std::string cur;
        for (char c : methods_csv + ",") {
            if (c == ',') {
                if (!cur.empty()) methods.push_back(cur);
                cur.clear();
            } else
                cur.push_back(c);
        }
    }
    std::vector<uint64_t> seeds;
    {
        std::string cur;
        for (char c : seeds_csv + ",") {
            if (c == ',') {
                if (!cur.empty()) seeds.push_back(std::strtoull(cur.c_str(), nullptr, 10));
                cur.clear();
            } else
                cur.push_back(c);
        }
    }
    if (methods.empty() || seeds.empty())
        throw UsageError("sweep: need at least one method and one seed");

    const Codebook cb = Codebook::load_file(codebook_path);
    const CountPrior prior = CountPrior::load_file(prior_path);
    const auto real = load_ucr_tsv(real_path);

    std::ofstream os(out_path);
    if (!os) throw DataError("cannot open for write: " + out_path);
    os << "method,seed,n," << EvalReport::csv_header() << '\n';

    for (const auto& method : methods) {
        if (method != "naive" && method != "tokencritic" && method != "ess" &&
            method != "ablation-b")
            throw UsageError("unknown method '" + method + "'");
        for (uint64_t seed : seeds) {
            SamplerConfig sc = sampler_config_from(cfg, seed);
            sc.record_trace = false;
            const MaskSchedule sched = cosine_mask_counts(prior.seq_len(), sc.T);
            const auto results = run_chains(method, n, prior, cb, sched, sc);

            std::vector<LabeledSeries> gen;
            gen.reserve(results.size());
            for (const auto& r : results) gen.push_back({-1, decode(cb, r.tokens)});

            const EvalReport rep = eval_feature_mode(gen, real, true);
            os << method << ',' << seed << ',' << n << ',' << rep.to_csv_row() << '\n';
        }
    }
    std::cout << "wrote " << out_path << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"masked token sampling over k-means codebooks"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "flat key = value config file")
        ->configurable(false);
    app.add_option("--set", overrides, "override a config key, e.g. --set schedule.T=10");

    auto* fit = app.add_subcommand("fit", "fit codebook and prior from a UCR-format TSV");
    std::string fit_data, fit_out = ".";
    fit->add_option("--data", fit_data, "training TSV")->required();
    fit->add_option("--out-dir", fit_out, "output directory (default .)");

    auto* sample = app.add_subcommand("sample", "sample token sequences and decode them");
    std::string s_method, s_codebook = "codebook.txt", s_prior = "prior.txt", s_out = "run";
    int s_n = 64;
    uint64_t s_seed = 0;
    sample->add_option("--method", s_method, "naive | tokencritic | ess | ablation-b")
        ->required();
    sample->add_option("--n", s_n, "number of samples");
    sample->add_option("--seed", s_seed, "root seed");
    sample->add_option("--codebook", s_codebook, "codebook file");
    sample->add_option("--prior", s_prior, "prior file");
    sample->add_option("--out", s_out, "output prefix");

    auto* eval = app.add_subcommand("eval", "evaluate generated against real data");
    std::string e_gen, e_real, e_mode = "feature", e_truth, e_out;
    bool e_no_znorm = false;
    eval->add_option("--gen", e_gen, "generated series TSV (or tokens file in exact mode)")
        ->required();
    eval->add_option("--real", e_real, "real series TSV (feature mode)");
    eval->add_option("--mode", e_mode, "feature | exact");
    eval->add_option("--truth", e_truth, "ground-truth joint file (exact mode)");
    eval->add_option("--out", e_out, "write the report JSON here too");
    eval->add_flag("--no-znorm", e_no_znorm, "skip per-series z-normalization");

    auto* sweep = app.add_subcommand("sweep", "methods x seeds cartesian, one CSV row each");
    std::string w_methods, w_seeds, w_codebook = "codebook.txt", w_prior = "prior.txt";
    std::string w_real, w_out = "sweep.csv";
    int w_n = 64;
    sweep->add_option("--methods", w_methods, "comma-separated methods")->required();
    sweep->add_option("--seeds", w_seeds, "comma-separated seeds")->required();
    sweep->add_option("--n", w_n, "samples per cell");
    sweep->add_option("--codebook", w_codebook, "codebook file");
    sweep->add_option("--prior", w_prior, "prior file");
    sweep->add_option("--real", w_real, "real series TSV")->required();
    sweep->add_option("--out", w_out, "output CSV");

    try {
        app.parse(argc, argv);

        ms::Config cfg;
        if (!config_path.empty()) cfg = ms::Config::from_file(config_path);
        for (const auto& pair : overrides) cfg.set_pair(pair);

        if (fit->parsed()) return cmd_fit(cfg, fit_data, fit_out);
        if (sample->parsed())
            return cmd_sample(cfg, s_method, s_n, s_seed, s_codebook, s_prior, s_out);
        if (eval->parsed()) {
            if (e_mode == "feature" && e_real.empty())
                throw ms::UsageError("eval --mode feature requires --real");
            return cmd_eval(e_gen, e_real, e_mode, e_truth, e_out, !e_no_znorm);
        }
        if (sweep->parsed())
            return cmd_sweep(cfg, w_methods, w_seeds, w_n, w_codebook, w_prior, w_real, w_out);
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ms::UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ms::DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
