#include "spikedict/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "spikedict/coding.hpp"
#include "spikedict/oracle.hpp"
#include "spikedict/parallel.hpp"

namespace spikedict {

double consistency(const Matrix& H, const Matrix& F, const Matrix& B) {
    if (F.rows() != H.rows() || B.cols() != H.cols() || F.cols() != B.rows())
        throw std::invalid_argument("consistency: dimension mismatch");
    const double hn = H.norm();
    if (hn == 0.0) throw std::invalid_argument("consistency: zero H");
    return 1.0 - (H - F * B).norm() / hn;
}

double symmetry(const Matrix& F, const Matrix& B) {
    if (F.rows() != B.cols() || F.cols() != B.rows())
        throw std::invalid_argument("symmetry: dimension mismatch");
    const Index n = F.rows();
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double fn = F.row(i).norm();
        const double bn = B.col(i).norm();
        if (fn == 0.0 || bn == 0.0) continue;  // degenerate pair contributes 0
        total += F.row(i).dot(B.col(i).transpose()) / (fn * bn);
    }
    return total / static_cast<double>(n);
}

double psnr(const Image& clean, const Image& test) {
    if (clean.width != test.width || clean.height != test.height)
        throw std::invalid_argument("psnr: dimension mismatch");
    const double mse = (clean.pix - test.pix).squaredNorm() /
                       static_cast<double>(clean.pix.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

DenoiseResult denoise(const NetworkWeights& w, const Image& noisy, Index patch_size,
                      const DenoiseOptions& opt) {
    const Index p = patch_size;
    const Index area = p * p;
    const Index m = w.input_count();
    const bool split = (m == 2 * area);
    if (!split && m != area)
        throw std::invalid_argument("denoise: weights expect input dim " +
                                    std::to_string(m) + ", patch gives " +
                                    std::to_string(area) + " or " + std::to_string(2 * area));
    if (noisy.width < p || noisy.height < p)
        throw std::invalid_argument("denoise: image smaller than patch");
    if (opt.stride < 1) throw std::invalid_argument("denoise: stride must be >= 1");

    std::vector<std::pair<Index, Index>> origins;
    for (Index y = 0; y + p <= noisy.height; y += opt.stride)
        for (Index x = 0; x + p <= noisy.width; x += opt.stride) origins.emplace_back(y, x);
    const Index npatch = static_cast<Index>(origins.size());

    const NnLassoSolver solver(w.B);
    const double support_eps = 1.5 / opt.T;

    Matrix recon(area, npatch);
    std::vector<double> l0(static_cast<std::size_t>(npatch), 0.0);
    std::vector<char> failed(static_cast<std::size_t>(npatch), 0);

    parallel_for(npatch, opt.threads, [&](Index begin, Index end) {
        Vector raw(area), y_split;
        for (Index k = begin; k < end; ++k) {
            const auto [oy, ox] = origins[static_cast<std::size_t>(k)];
            Index idx = 0;
            for (Index dy = 0; dy < p; ++dy)
                for (Index dx = 0; dx < p; ++dx) raw[idx++] = noisy.at(oy + dy, ox + dx);

            Vector coded_input;
            PatchTransform t;
            if (split) {
                t = split_patch(raw, y_split);
                if (t.degenerate) {
                    recon.col(k).setConstant(t.mean);
                    continue;
                }
                coded_input = y_split;
            } else {
                coded_input = raw;
            }

            Vector a;
            if (opt.use_network) {
                NetworkWeights wc = w;
                wc.lambda1 = opt.lambda1;
                a = sparse_code(wc, coded_input, opt.T, opt.dt, 0.0, opt.current_bound, 1).a;
                for (Index i = 0; i < a.size(); ++i)
                    if (a[i] > support_eps) l0[static_cast<std::size_t>(k)] += 1.0;
            } else {
                const LassoSolution sol =
                    solver.solve(coded_input, w.s, opt.lambda1, opt.oracle_tol, 100000);
                if (!sol.converged) failed[static_cast<std::size_t>(k)] = 1;
                a = sol.a;
                for (Index i = 0; i < a.size(); ++i)
                    if (a[i] > 0.0) l0[static_cast<std::size_t>(k)] += 1.0;
            }

            const Vector y_hat = w.B * a;
            recon.col(k) = split ? unsplit_patch(y_hat, t) : y_hat;
        }
    });
    for (std::size_t k = 0; k < failed.size(); ++k)
        if (failed[k])
            throw std::runtime_error("denoise: solver not converged on patch " +
                                     std::to_string(k));

    // Serial accumulation in patch order keeps the output independent of the
    // thread count.
    Vector sum = Vector::Zero(noisy.pix.size());
    Vector cover = Vector::Zero(noisy.pix.size());
    for (Index k = 0; k < npatch; ++k) {
        const auto [oy, ox] = origins[static_cast<std::size_t>(k)];
        Index idx = 0;
        for (Index dy = 0; dy < p; ++dy)
            for (Index dx = 0; dx < p; ++dx) {
                const Index pix = (oy + dy) * noisy.width + (ox + dx);
                sum[pix] += recon(idx++, k);
                cover[pix] += 1.0;
            }
    }

    DenoiseResult out;
    out.image = noisy;  // pixels no patch covers keep their noisy value
    for (Index i = 0; i < sum.size(); ++i)
        if (cover[i] > 0.0) out.image.pix[i] = std::clamp(sum[i] / cover[i], 0.0, 1.0);
    double l0_total = 0.0;
    for (double v : l0) l0_total += v;
    out.mean_l0 = npatch > 0 ? l0_total / static_cast<double>(npatch) : 0.0;
    out.patches = npatch;
    return out;
}

Image dictionary_atlas(const Matrix& D, Index tile_h, Index tile_w) {
    const Index area = tile_h * tile_w;
    const bool split = (D.rows() == 2 * area);
    if (!split && D.rows() != area)
        throw std::invalid_argument("dictionary_atlas: shape mismatch");
    const Index n = D.cols();
    const Index grid_cols = static_cast<Index>(std::ceil(std::sqrt(double(n))));
    const Index grid_rows = (n + grid_cols - 1) / grid_cols;

    Image img;
    img.width = grid_cols * tile_w;
    img.height = grid_rows * tile_h;
    img.pix = Vector::Zero(img.width * img.height);

    for (Index j = 0; j < n; ++j) {
        Vector atom = split ? Vector(D.col(j).head(area) - D.col(j).tail(area))
                            : Vector(D.col(j));
        const double lo = atom.minCoeff();
        const double hi = atom.maxCoeff();
        if (hi > lo) atom = (atom.array() - lo) / (hi - lo);
        else atom.setZero();
        const Index ty = (j / grid_cols) * tile_h;
        const Index tx = (j % grid_cols) * tile_w;
        for (Index dy = 0; dy < tile_h; ++dy)
            for (Index dx = 0; dx < tile_w; ++dx)
                img.at(ty + dy, tx + dx) = atom[dy * tile_w + dx];
    }
    return img;
}

namespace {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string metrics_csv_string(const std::vector<MetricsRecord>& log) {
    std::string out =
        "iteration,objective,surrogate,consistency,symmetry,mean_atom_norm,"
        "max_abs_current,g_h_norm,max_s\n";
    for (const auto& r : log) {
        out += std::to_string(r.iteration);
        for (double v : {r.objective, r.surrogate, r.consistency, r.symmetry,
                         r.mean_atom_norm, r.max_abs_current, r.g_h_norm, r.max_s}) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& log) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << metrics_csv_string(log);
    if (!f) throw std::runtime_error("write failed: " + path);
}

void write_metrics_jsonl(const std::string& path, const std::vector<MetricsRecord>& log) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& r : log) {
        nlohmann::json j{{"iteration", r.iteration},
                         {"objective", r.objective},
                         {"surrogate", r.surrogate},
                         {"consistency", r.consistency},
                         {"symmetry", r.symmetry},
                         {"mean_atom_norm", r.mean_atom_norm},
                         {"max_abs_current", r.max_abs_current},
                         {"g_h_norm", r.g_h_norm},
                         {"max_s", r.max_s}};
        f << j.dump() << "\n";
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

void write_convergence_svg(const std::string& path, const std::vector<MetricsRecord>& log) {
    const int width = 840, height = 420, pad = 40;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    struct Series {
        const char* name;
        const char* color;
        double (*pick)(const MetricsRecord&);
    };
    const Series series[] = {
        {"surrogate", "#d62728", [](const MetricsRecord& r) { return r.surrogate; }},
        {"objective", "#7f7f7f", [](const MetricsRecord& r) { return r.objective; }},
        {"consistency", "#1f77b4", [](const MetricsRecord& r) { return r.consistency; }},
        {"symmetry", "#2ca02c", [](const MetricsRecord& r) { return r.symmetry; }},
    };

    const double x0 = pad, x1 = width - pad, y0 = height - pad, y1 = pad;
    long max_iter = 1;
    for (const auto& r : log) max_iter = std::max(max_iter, r.iteration);

    int legend_y = y1 + 4;
    for (const auto& s : series) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& r : log) {
            const double v = s.pick(r);
            if (std::isfinite(v)) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        if (!(hi > -std::numeric_limits<double>::infinity())) continue;
        if (hi == lo) hi = lo + 1.0;
        std::string points;
        char buf[64];
        for (const auto& r : log) {
            const double v = s.pick(r);
            if (!std::isfinite(v)) continue;
            const double px = x0 + (x1 - x0) * double(r.iteration) / double(max_iter);
            const double py = y0 - (y0 - y1) * (v - lo) / (hi - lo);
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px, py);
            points += buf;
        }
        if (points.empty()) continue;
        f << "<polyline fill=\"none\" stroke=\"" << s.color
          << "\" stroke-width=\"1.5\" points=\"" << points << "\"/>\n";
        f << "<text x=\"" << (x1 - 130) << "\" y=\"" << legend_y
          << "\" font-size=\"12\" fill=\"" << s.color << "\">" << s.name
          << " (each scaled to its own range)</text>\n";
        legend_y += 16;
    }
    f << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
      << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << (width / 2 - 30) << "\" y=\"" << (height - 10)
      << "\" font-size=\"12\">iteration (0.." << max_iter << ")</text>\n</svg>\n";
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace spikedict
