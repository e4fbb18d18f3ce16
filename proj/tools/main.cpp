// spikedict command line: wires datasets, the spiking trainer, the SGD
// baseline, coding, denoising and reporting into reproducible experiments.
// Every subcommand is deterministic given (config, seed); the thread count
// must never change any output byte.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "spikedict/coding.hpp"
#include "spikedict/config.hpp"
#include "spikedict/data_io.hpp"
#include "spikedict/dlm.hpp"
#include "spikedict/engine.hpp"
#include "spikedict/learning.hpp"
#include "spikedict/metrics.hpp"
#include "spikedict/oracle.hpp"

namespace fs = std::filesystem;
using namespace spikedict;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitAbort = 2;

struct TrainSetup {
    RunConfig cfg;
    PatchSet dataset;
    std::optional<PatchSet> testset;
    Index patch_size = 0;  // 0 when the dataset rows are not image patches
    std::string out_dir = "out";
};

int env_threads() {
    const char* v = std::getenv("LCA_THREADS");
    if (!v) return 0;
    const int t = std::atoi(v);
    return t > 0 ? t : 0;
}

InitScheme parse_init_scheme(const std::string& s) {
    if (s == "consistent") return InitScheme::consistent;
    if (s == "asymmetric") return InitScheme::asymmetric;
    throw std::runtime_error("init_scheme must be 'consistent' or 'asymmetric', got " + s);
}

AvgReset parse_avg_reset(const std::string& s) {
    if (s == "reset_at_phase") return AvgReset::reset_at_phase;
    if (s == "cumulative") return AvgReset::cumulative;
    throw std::runtime_error("avg_reset must be 'reset_at_phase' or 'cumulative', got " + s);
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Reads the full training setup from a flat key=value config file.
/// Unknown keys are a hard error.
TrainSetup load_train_setup(const std::string& config_path) {
    ConfigMap cm = ConfigMap::parse_file(config_path);
    TrainSetup s;

    RunConfig& cfg = s.cfg;
    cfg.dt = cm.get_double("dt", cfg.dt);
    cfg.T_phase = cm.get_double("t_phase", cfg.T_phase);
    cfg.kappa = cm.get_double("kappa", cfg.kappa);
    cfg.eta_D = cm.get_double("eta_d", cfg.eta_D);
    cfg.eta_H = cm.get_double("eta_h", 15.0 * cfg.eta_D);
    cfg.lambda1 = cm.get_double("lambda1", cfg.lambda1);
    const std::string l2 = cm.get_string("lambda2", "auto");
    cfg.lambda2 = (l2 == "auto") ? -1.0 : std::stod(l2);
    cfg.n_atoms = cm.get_long("n_atoms", cfg.n_atoms);
    cfg.seed = cm.get_u64("seed", cfg.seed);
    cfg.init_scheme = parse_init_scheme(cm.get_string("init_scheme", "consistent"));
    cfg.current_bound = cm.get_double("current_bound", cfg.current_bound);
    cfg.theta_floor = cm.get_double("theta_floor", cfg.theta_floor);
    cfg.avg_reset = parse_avg_reset(cm.get_string("avg_reset", "reset_at_phase"));
    cfg.iterations = cm.get_long("iterations", cfg.iterations);
    cfg.metrics_every = cm.get_long("metrics_every", cfg.metrics_every);
    cfg.threads = static_cast<int>(cm.get_long("threads", 0));
    cfg.project_weights = cm.get_bool("project_weights", true);

    const std::string dataset_path = cm.get_string("dataset", "");
    const Index patch_size = cm.get_long("patch_size", 8);
    const Index patch_count = cm.get_long("patch_count", 10000);
    const Index test_count = cm.get_long("test_count", 500);
    s.out_dir = cm.get_string("out_dir", "out");
    cm.ensure_consumed();

    if (dataset_path.empty()) throw std::runtime_error("config is missing 'dataset'");
    if (!fs::exists(dataset_path))
        throw std::runtime_error("dataset file not found: " + dataset_path);

    if (ends_with(dataset_path, ".pst")) {
        s.dataset = load_pst(dataset_path);
        const Index p2 = s.dataset.dim() / 2;
        const auto r = static_cast<Index>(std::lround(std::sqrt(double(p2))));
        if (r * r == p2) s.patch_size = r;
    } else if (ends_with(dataset_path, ".idx") || ends_with(dataset_path, ".idx3") ||
               ends_with(dataset_path, "-ubyte")) {
        s.dataset = load_mnist_idx(dataset_path);
        const auto r = static_cast<Index>(std::lround(std::sqrt(double(s.dataset.dim()))));
        if (r * r == s.dataset.dim()) s.patch_size = r;
        if (test_count > 0 && test_count < s.dataset.count()) {
            // Keep the tail as the held-out surrogate set.
            PatchSet test;
            test.data = s.dataset.data.rightCols(test_count);
            test.provenance = s.dataset.provenance + " [test tail]";
            s.testset = std::move(test);
            s.dataset.data = Matrix(s.dataset.data.leftCols(s.dataset.count() - test_count));
        }
    } else if (ends_with(dataset_path, ".pgm")) {
        const Image img = load_pgm(dataset_path);
        const Matrix raw =
            sample_patches(img, patch_size, patch_count, Rng::mix(cfg.seed, 10));
        s.dataset = preprocess_split(raw).set;
        s.dataset.provenance = "pgm:" + dataset_path;
        s.patch_size = patch_size;
        if (test_count > 0) {
            const Matrix raw_test =
                sample_patches(img, patch_size, test_count, Rng::mix(cfg.seed, 11));
            s.testset = preprocess_split(raw_test).set;
        }
    } else {
        throw std::runtime_error("dataset must be .pgm, .pst or an IDX3 file: " +
                                 dataset_path);
    }
    if (s.dataset.count() < 1) throw std::runtime_error("dataset is empty");
    return s;
}

void resolve_threads(RunConfig& cfg, int flag_threads) {
    if (flag_threads > 0)
        cfg.threads = flag_threads;
    else if (cfg.threads <= 0)
        cfg.threads = env_threads() > 0 ? env_threads() : 1;
}

NetworkWeights load_weights_prefix(const std::string& prefix, double lambda1) {
    NetworkWeights w;
    w.F = read_dlm(prefix + "F.dlm");
    w.B = read_dlm(prefix + "B.dlm");
    w.H = read_dlm(prefix + "H.dlm");
    w.s = w.H.diagonal();
    w.lambda1 = lambda1;
    w.gamma = 0.0;
    const auto issues = validate(w);
    if (!issues.empty())
        throw std::runtime_error("invalid weights at " + prefix + ": " + issues.front());
    return w;
}

void write_weights_prefix(const std::string& prefix, const NetworkWeights& w) {
    write_dlm(prefix + "F.dlm", w.F);
    write_dlm(prefix + "B.dlm", w.B);
    write_dlm(prefix + "H.dlm", w.H);
}

Index infer_patch_size(Index input_dim) {
    const auto half = static_cast<Index>(std::lround(std::sqrt(double(input_dim) / 2.0)));
    if (2 * half * half == input_dim) return half;
    const auto full = static_cast<Index>(std::lround(std::sqrt(double(input_dim))));
    if (full * full == input_dim) return full;
    return 0;
}

Vector image_as_vector(const std::string& path) {
    const Image img = load_pgm(path);
    return img.pix;
}

struct WeightsArgs {
    std::string prefix;
    std::string dict_path;
    double lambda1 = 0.1;

    NetworkWeights load() const {
        if (!prefix.empty()) return load_weights_prefix(prefix, lambda1);
        if (!dict_path.empty())
            return weights_from_dictionary(Dictionary{read_dlm(dict_path)}, lambda1, 0.0);
        throw std::runtime_error("one of --weights or --dict is required");
    }
};

int cmd_train_snn(const std::string& config_path, int flag_threads,
                  std::optional<std::uint64_t> flag_seed, long flag_iterations,
                  const std::string& flag_out) {
    TrainSetup s = load_train_setup(config_path);
    resolve_threads(s.cfg, flag_threads);
    if (flag_seed) s.cfg.seed = *flag_seed;
    if (flag_iterations >= 0) s.cfg.iterations = flag_iterations;
    if (!flag_out.empty()) s.out_dir = flag_out;
    fs::create_directories(s.out_dir);

    const TrainResult result =
        train(s.dataset, s.cfg, s.testset ? &*s.testset : nullptr);

    const std::string prefix = s.out_dir + "/ckpt_";
    write_weights_prefix(prefix, result.weights);
    write_metrics_csv(s.out_dir + "/metrics.csv", result.log);
    write_metrics_jsonl(s.out_dir + "/metrics.jsonl", result.log);
    write_convergence_svg(s.out_dir + "/convergence.svg", result.log);
    if (s.patch_size > 0) {
        save_pgm(s.out_dir + "/atlas.pgm",
                 dictionary_atlas(Matrix(result.weights.F.transpose()), s.patch_size,
                                  s.patch_size));
    }

    std::cout << "train-snn: " << result.completed_iterations << " iterations, lambda2="
              << result.lambda2_used << ", checkpoints in " << s.out_dir << "\n";
    if (result.aborted) {
        std::cerr << "aborted: " << result.abort_reason << " (checkpoint retained)\n";
        return kExitAbort;
    }
    return kExitOk;
}

int cmd_train_sgd(const std::string& config_path, int flag_threads,
                  std::optional<std::uint64_t> flag_seed, long flag_iterations,
                  const std::string& flag_out) {
    TrainSetup s = load_train_setup(config_path);
    resolve_threads(s.cfg, flag_threads);
    if (flag_seed) s.cfg.seed = *flag_seed;
    if (flag_iterations >= 0) s.cfg.iterations = flag_iterations;
    if (!flag_out.empty()) s.out_dir = flag_out;
    fs::create_directories(s.out_dir);

    const SgdResult result = sgd_train(s.dataset, s.cfg, s.testset ? &*s.testset : nullptr);
    write_dlm(s.out_dir + "/ckpt_D.dlm", result.D);
    write_metrics_csv(s.out_dir + "/metrics.csv", result.log);
    write_metrics_jsonl(s.out_dir + "/metrics.jsonl", result.log);
    write_convergence_svg(s.out_dir + "/convergence.svg", result.log);
    if (s.patch_size > 0)
        save_pgm(s.out_dir + "/atlas.pgm",
                 dictionary_atlas(result.D, s.patch_size, s.patch_size));

    std::cout << "train-sgd: " << s.cfg.iterations << " iterations, checkpoints in "
              << s.out_dir << "\n";
    return kExitOk;
}

int cmd_sparse_code(const WeightsArgs& wa, const std::string& image_path, double gamma,
                    double T, double dt, bool use_oracle, bool compare, int threads) {
    const NetworkWeights w = wa.load();
    const Vector x = image_as_vector(image_path);
    if (x.size() != w.input_count())
        throw std::runtime_error("image has " + std::to_string(x.size()) +
                                 " pixels, weights expect " +
                                 std::to_string(w.input_count()));

    Vector a_net, a_or;
    if (!use_oracle || compare)
        a_net = sparse_code(w, x, T, dt, gamma, 100.0, threads).a;
    if (use_oracle || compare)
        a_or = solve_nn_lasso(LassoProblem{w.B, x, w.lambda1, w.s}, 1e-10, 100000).a;

    if (compare) {
        std::printf("linf_gap,%.17g\n", (a_net - a_or).lpNorm<Eigen::Infinity>());
        return kExitOk;
    }
    const Vector& a = use_oracle ? a_or : a_net;
    // Measured codes use the noise-floor support (one spike above 1.5/T);
    // oracle codes are exactly sparse.
    const double eps = use_oracle ? 0.0 : 1.5 / T;
    for (Index i = 0; i < a.size(); ++i)
        if (a[i] > eps) std::printf("%lld,%.17g\n", static_cast<long long>(i), a[i]);
    return kExitOk;
}

int cmd_denoise(const WeightsArgs& wa, const std::string& image_path, double sigma,
                std::uint64_t seed, DenoiseOptions opt, Index patch_flag,
                const std::string& out_dir) {
    const NetworkWeights w = wa.load();
    const Image clean = load_pgm(image_path);
    Index patch = patch_flag > 0 ? patch_flag : infer_patch_size(w.input_count());
    if (patch <= 0)
        throw std::runtime_error("cannot infer patch size from weights, pass --patch");

    const Image noisy = add_gaussian_noise(clean, sigma, seed);
    const DenoiseResult res = denoise(w, noisy, patch, opt);

    fs::create_directories(out_dir);
    save_pgm(out_dir + "/noisy.pgm", noisy);
    save_pgm(out_dir + "/denoised.pgm", res.image);

    std::printf("psnr_noisy,psnr_denoised,mean_l0\n%.4f,%.4f,%.4f\n", psnr(clean, noisy),
                psnr(clean, res.image), res.mean_l0);
    return kExitOk;
}

int cmd_raster(const WeightsArgs& wa, const std::string& image_path, double T, double dt,
               double kappa, const std::string& out_path, int threads) {
    const NetworkWeights w = wa.load();
    const Vector x = image_as_vector(image_path);
    if (x.size() != w.input_count())
        throw std::runtime_error("image has " + std::to_string(x.size()) +
                                 " pixels, weights expect " +
                                 std::to_string(w.input_count()));

    NetworkSim sim(w, x, AvgReset::reset_at_phase, 100.0, threads);
    sim.enable_spike_log();
    sim.run_phase(0.0, T, dt);
    sim.run_phase(kappa, T, dt);
    write_raster_csv(out_path, sim.spike_log());
    std::cout << "raster: " << sim.spike_log().size() << " spikes -> " << out_path << "\n";
    return kExitOk;
}

int cmd_metrics(const std::string& prefix, const std::string& dataset_path,
                double lambda1, int threads) {
    const NetworkWeights w = load_weights_prefix(prefix, lambda1);
    std::printf("consistency,%.17g\n", consistency(w.H, w.F, w.B));
    std::printf("symmetry,%.17g\n", symmetry(w.F, w.B));
    double norm_sum = 0.0;
    for (Index i = 0; i < w.coding_count(); ++i) norm_sum += w.F.row(i).norm();
    std::printf("mean_atom_norm,%.17g\n", norm_sum / double(w.coding_count()));
    if (!dataset_path.empty()) {
        const PatchSet set = load_pst(dataset_path);
        std::printf("surrogate,%.17g\n",
                    surrogate_objective(Matrix(w.F.transpose()), set, lambda1, 1e-8,
                                        threads));
    }
    return kExitOk;
}

int cmd_gen_data(const std::string& out_path, Index size, std::uint64_t seed) {
    save_pgm(out_path, synthetic_scene(size, seed));
    std::cout << "gen-data: " << size << "x" << size << " -> " << out_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spiking sparse-coding network: dictionary learning and evaluation"};
    app.require_subcommand(1);

    // train-snn / train-sgd
    std::string config_path, out_flag;
    int threads_flag = 0;
    long iterations_flag = -1;
    std::uint64_t seed_flag = 0;
    bool seed_set = false;

    auto add_train_flags = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key = value config file")->required();
        sub->add_option("--threads", threads_flag, "worker threads (results identical)");
        sub->add_option("--iterations", iterations_flag, "override iteration count");
        sub->add_option("--seed", seed_flag, "override RNG seed")
            ->each([&](const std::string&) { seed_set = true; });
        sub->add_option("--out", out_flag, "override output directory");
    };
    CLI::App* train_snn = app.add_subcommand("train-snn", "train the spiking network");
    add_train_flags(train_snn);
    CLI::App* train_sgd = app.add_subcommand("train-sgd", "train the SGD baseline");
    add_train_flags(train_sgd);

    // shared weight-source flags
    WeightsArgs wa;
    auto add_weight_flags = [&](CLI::App* sub) {
        sub->add_option("--weights", wa.prefix, "checkpoint prefix (expects <prefix>F.dlm/B.dlm/H.dlm)");
        sub->add_option("--dict", wa.dict_path, "DLM1 dictionary file");
        sub->add_option("--lambda1", wa.lambda1, "sparsity weight");
    };

    // sparse-code
    std::string image_path;
    double gamma = 0.0, T = 200.0, dt = 1.0 / 32.0, kappa = 0.7;
    bool use_oracle = false, compare = false;
    CLI::App* sc = app.add_subcommand("sparse-code", "code one image, print index,value");
    add_weight_flags(sc);
    sc->add_option("--image", image_path, "PGM image")->required();
    sc->add_option("--gamma", gamma, "feedback strength");
    sc->add_option("--T", T, "phase length");
    sc->add_option("--dt", dt, "time step");
    sc->add_flag("--oracle", use_oracle, "print the coordinate-descent code instead");
    sc->add_flag("--compare", compare, "print the l-inf gap between network and oracle");
    sc->add_option("--threads", threads_flag, "worker threads");

    // denoise
    double sigma = 0.1;
    std::uint64_t noise_seed = 1;
    DenoiseOptions dn_opt;
    Index patch_flag = 0;
    std::string dn_out = "out";
    CLI::App* dn = app.add_subcommand("denoise", "add noise to a clean image and denoise it");
    add_weight_flags(dn);
    dn->add_option("--image", image_path, "clean PGM image")->required();
    dn->add_option("--sigma", sigma, "Gaussian noise level");
    dn->add_option("--seed", noise_seed, "noise seed");
    dn->add_option("--stride", dn_opt.stride, "patch stride");
    dn->add_option("--patch", patch_flag, "patch size (inferred from weights by default)");
    dn->add_flag("--network", dn_opt.use_network, "code patches with the spiking network");
    dn->add_option("--T", dn_opt.T, "network coder phase length");
    dn->add_option("--dt", dn_opt.dt, "network coder time step");
    dn->add_option("--out", dn_out, "output directory");
    dn->add_option("--threads", threads_flag, "worker threads");

    // raster
    std::string raster_out = "raster.csv";
    CLI::App* ra = app.add_subcommand("raster", "spike raster of one contrastive pair");
    add_weight_flags(ra);
    ra->add_option("--image", image_path, "PGM image")->required();
    ra->add_option("--T", T, "phase length");
    ra->add_option("--dt", dt, "time step");
    ra->add_option("--kappa", kappa, "second-phase feedback strength");
    ra->add_option("--out", raster_out, "output CSV path");
    ra->add_option("--threads", threads_flag, "worker threads");

    // metrics
    std::string metrics_prefix, metrics_dataset;
    double metrics_lambda1 = 0.1;
    CLI::App* me = app.add_subcommand("metrics", "recompute metrics from checkpoints");
    me->add_option("--weights", metrics_prefix, "checkpoint prefix")->required();
    me->add_option("--dataset", metrics_dataset, "PST1 test set for the surrogate");
    me->add_option("--lambda1", metrics_lambda1, "sparsity weight");
    me->add_option("--threads", threads_flag, "worker threads");

    // gen-data
    std::string gen_out = "scene.pgm";
    Index gen_size = 256;
    std::uint64_t gen_seed = 7;
    CLI::App* gd = app.add_subcommand("gen-data", "write a synthetic grayscale PGM scene");
    gd->add_option("--out", gen_out, "output PGM path");
    gd->add_option("--size", gen_size, "image side length");
    gd->add_option("--seed", gen_seed, "generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    const int threads = threads_flag > 0 ? threads_flag
                                         : (env_threads() > 0 ? env_threads() : 1);
    dn_opt.threads = threads;
    dn_opt.lambda1 = wa.lambda1;

    try {
        if (train_snn->parsed())
            return cmd_train_snn(config_path, threads_flag,
                                 seed_set ? std::optional<std::uint64_t>(seed_flag)
                                          : std::nullopt,
                                 iterations_flag, out_flag);
        if (train_sgd->parsed())
            return cmd_train_sgd(config_path, threads_flag,
                                 seed_set ? std::optional<std::uint64_t>(seed_flag)
                                          : std::nullopt,
                                 iterations_flag, out_flag);
        if (sc->parsed())
            return cmd_sparse_code(wa, image_path, gamma, T, dt, use_oracle, compare,
                                   threads);
        if (dn->parsed())
            return cmd_denoise(wa, image_path, sigma, noise_seed, dn_opt, patch_flag,
                               dn_out);
        if (ra->parsed()) return cmd_raster(wa, image_path, T, dt, kappa, raster_out, threads);
        if (me->parsed())
            return cmd_metrics(metrics_prefix, metrics_dataset, metrics_lambda1, threads);
        if (gd->parsed()) return cmd_gen_data(gen_out, gen_size, gen_seed);
    } catch (const EngineAbort& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAbort;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
