// Acceptance suite: runs every criterion end to end at its stated tolerance
// and prints one PASS/FAIL line per criterion. Exit code 0 only when all
// criteria hold.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "idcap/baselines.hpp"
#include "idcap/checkpoint.hpp"
#include "idcap/config.hpp"
#include "idcap/experiment.hpp"
#include "idcap/ggd.hpp"
#include "idcap/metrics.hpp"
#include "idcap/model.hpp"
#include "idcap/ood.hpp"
#include "idcap/special_functions.hpp"
#include "idcap/synth_data.hpp"
#include "idcap/tensor_io.hpp"
#include "idcap/train.hpp"

using namespace idcap;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int number = 0;
    std::string label;
    bool passed = true;
    double seconds = 0.0;
    std::vector<std::string> failures;
};

struct Suite {
    std::vector<Criterion> done;

    bool run(int number, const std::string& label, double budget_seconds,
             const std::function<void(Criterion&)>& body) {
        Criterion c;
        c.number = number;
        c.label = label;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            body(c);
        } catch (const std::exception& e) {
            c.passed = false;
            c.failures.push_back(std::string("exception: ") + e.what());
        }
        c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (budget_seconds > 0.0 && c.seconds > budget_seconds) {
            c.passed = false;
            c.failures.push_back("runtime " + std::to_string(c.seconds) + " s exceeds budget " +
                                 std::to_string(budget_seconds) + " s");
        }
        std::printf("[%2d/10] %s %s (%.1f s)\n", number, c.passed ? "PASS" : "FAIL",
                    label.c_str(), c.seconds);
        for (const std::string& f : c.failures) {
            std::printf("        - %s\n", f.c_str());
        }
        std::fflush(stdout);
        done.push_back(std::move(c));
        return done.back().passed;
    }

    int finish() const {
        int passed = 0;
        for (const Criterion& c : done) passed += c.passed;
        std::printf("RESULT: %d/%zu criteria passed\n", passed, done.size());
        return passed == static_cast<int>(done.size()) ? 0 : 1;
    }
};

void expect(Criterion& c, bool cond, const std::string& what) {
    if (!cond) {
        c.passed = false;
        c.failures.push_back(what);
    }
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return {};
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                   double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double flm = f(0.5 * (a + m)), frm = f(0.5 * (m + b));
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    return simpson_rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), 1e-10, 60);
}

const char* kAcceptanceConfig =
    "seed = 4242\n"
    "[dataset]\n"
    "family = A\n"
    "size = 16\n"
    "count = 200\n"
    "degradation = gauss_noise\n"
    "noise_sigma = 0.1\n"
    "train_frac = 0.7\n"
    "val_frac = 0.15\n"
    "test_frac = 0.15\n"
    "[train-base]\n"
    "epochs = 40\n"
    "[train-cap]\n"
    "epochs = 60\n"
    "[train-scratch]\n"
    "epochs = 60\n"
    "[train-ae]\n"
    "epochs = 30\n"
    "[sweep]\n"
    "fractions = 0.5, 1.0\n"
    "[ood]\n"
    "count = 60\n";

ExperimentConfig acceptance_config(const std::string& out_dir) {
    ExperimentConfig cfg = parse_config_text(kAcceptanceConfig);
    cfg.config_hash = fnv1a64(kAcceptanceConfig);
    cfg.out_dir = out_dir;
    return cfg;
}

const CalibrationReport& report_of(const std::vector<CalibrationReport>& reports,
                                   const std::string& method) {
    for (const CalibrationReport& r : reports) {
        if (r.method == method) return r;
    }
    throw std::runtime_error("missing report row: " + method);
}

}  // namespace

int main() {
    Suite suite;

    // ---------------------------------------------------------------- 1
    suite.run(1, "GGD correctness suite", 30.0, [](Criterion& c) {
        Rng rng(11111);
        for (int t = 0; t < 400; ++t) {
            const double mu = rng.uniform(-3, 3);
            const double sigma = rng.uniform(0.1, 2.0);
            const double y = rng.uniform(-6, 6);
            const double g = ggd_log_pdf(y, GGDParams(mu, sigma * std::numbers::sqrt2, 2.0));
            const double g_ref = -0.5 * std::log(2 * std::numbers::pi * sigma * sigma) -
                                 (y - mu) * (y - mu) / (2 * sigma * sigma);
            expect(c, std::abs(g - g_ref) < 1e-10, "Gaussian reduction beyond 1e-10");
            const double b = rng.uniform(0.1, 2.0);
            const double l = ggd_log_pdf(y, GGDParams(mu, b, 1.0));
            const double l_ref = -std::log(2 * b) - std::abs(y - mu) / b;
            expect(c, std::abs(l - l_ref) < 1e-10, "Laplace reduction beyond 1e-10");
        }

        for (const double beta : {0.7, 1.0, 1.5, 2.0, 3.0}) {
            const GGDParams p(0.1, 1.0, beta);
            const auto pdf = [&](double y) { return std::exp(ggd_log_pdf(y, p)); };
            const double span = std::pow(50.0, 1.0 / beta);
            const double integral =
                integrate(pdf, p.mu - span, p.mu) + integrate(pdf, p.mu, p.mu + span);
            expect(c, std::abs(integral - 1.0) <= 1e-6,
                   "normalization off at beta=" + std::to_string(beta));
        }

        Rng mc(22222);
        for (const double beta : {0.7, 1.0, 1.5, 2.0, 3.0}) {
            for (const double alpha : {0.5, 1.0, 2.0}) {
                const GGDParams p(0.0, alpha, beta);
                const std::size_t n = 200000;
                double sum = 0.0, sumsq = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = ggd_sample(p, mc);
                    sum += d;
                    sumsq += d * d;
                }
                const double mean = sum / n;
                const double var = sumsq / n - mean * mean;
                const double formula = ggd_variance(alpha, beta);
                expect(c, std::abs(var - formula) / formula < 0.02,
                       "MC variance beyond 2% at beta=" + std::to_string(beta) +
                           " alpha=" + std::to_string(alpha));
            }
        }
    });

    // ---------------------------------------------------------------- 2
    suite.run(2, "gradient suite (analytic vs central differences)", 60.0, [](Criterion& c) {
        Rng rng(33333);
        const double h = 1e-5;
        for (int t = 0; t < 100; ++t) {
            const double mu = rng.uniform(-1, 1);
            const double alpha = rng.uniform(0.3, 2.5);
            const double beta = rng.uniform(1.0, 4.0);
            const double y = mu + rng.uniform(0.05, 2.0) * (rng.uniform01() < 0.5 ? -1 : 1);
            const GGDGrad g = ggd_nll_grad(y, GGDParams(mu, alpha, beta));
            const auto rel = [](double a, double b) {
                return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
            };
            const double fmu = (ggd_nll_term(y, GGDParams(mu + h, alpha, beta)) -
                                ggd_nll_term(y, GGDParams(mu - h, alpha, beta))) /
                               (2 * h);
            const double fal = (ggd_nll_term(y, GGDParams(mu, alpha + h, beta)) -
                                ggd_nll_term(y, GGDParams(mu, alpha - h, beta))) /
                               (2 * h);
            const double fbe = (ggd_nll_term(y, GGDParams(mu, alpha, beta + h)) -
                                ggd_nll_term(y, GGDParams(mu, alpha, beta - h))) /
                               (2 * h);
            expect(c, rel(g.d_mu, fmu) < 1e-4, "d_mu beyond 1e-4");
            expect(c, rel(g.d_alpha, fal) < 1e-4, "d_alpha beyond 1e-4");
            expect(c, rel(g.d_beta, fbe) < 1e-4, "d_beta beyond 1e-4");
        }

        int nets_checked = 0;
        for (const uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull, 6ull}) {
            struct Def {
                Network net;
                std::vector<std::size_t> shape;
                bool stochastic;
            };
            std::vector<Def> defs;
            {
                Def d{{}, {1, 5, 5}, false};
                d.net.layers.push_back(make_conv(3, 1, 2));
                d.net.layers.push_back(make_leaky_relu(0.1));
                d.net.layers.push_back(make_conv(3, 2, 2));
                d.net.layers.push_back(make_leaky_relu(0.2));
                d.net.layers.push_back(make_conv(1, 2, 1));
                defs.push_back(std::move(d));
            }
            {
                Def d{{}, {8}, false};
                d.net.layers.push_back(make_dense(8, 6));
                d.net.layers.push_back(make_softplus(0.2, 10.0));
                d.net.layers.push_back(make_dense(6, 3));
                defs.push_back(std::move(d));
            }
            {
                Def d{{}, {1, 4, 4}, false};
                d.net.layers.push_back(make_conv(3, 1, 2));
                d.net.layers.push_back(make_leaky_relu(0.1));
                d.net.layers.push_back(make_conv(1, 2, 1));
                d.net.layers.push_back(make_exp_clamped(1e-4, 1e4));
                defs.push_back(std::move(d));
            }
            {
                Def d{{}, {1, 4, 4}, true};
                d.net.layers.push_back(make_conv(3, 1, 2));
                d.net.layers.push_back(make_dropout(0.4));
                d.net.layers.push_back(make_conv(1, 2, 1));
                defs.push_back(std::move(d));
            }
            for (Def& d : defs) {
                Rng init(seed * 17 + 3);
                init_params(d.net, init);
                Rng data(seed * 31 + 7);
                Tensor x(d.shape);
                for (std::size_t i = 0; i < x.size(); ++i) x[i] = data.uniform(-0.9, 0.9);
                const double err = finite_diff_check(d.net, x, 1e-4, d.stochastic, seed);
                expect(c, err < 1e-3,
                       "network gradient error " + std::to_string(err) + " at seed " +
                           std::to_string(seed));
                ++nets_checked;
            }
        }
        expect(c, nets_checked >= 20, "insufficient network configurations");
    });

    // ---------------------------------------------------------------- 3
    suite.run(3, "metric oracles (UCE, AUROC, variance scaling)", 0.0, [](Criterion& c) {
        Rng rng(44444);
        for (int t = 0; t < 50; ++t) {
            const std::size_t n = 2 + rng.uniform_index(150);
            const std::size_t bins = 1 + rng.uniform_index(10);
            std::vector<double> sq(n), var(n);
            for (std::size_t i = 0; i < n; ++i) {
                sq[i] = rng.uniform(0.0, 2.0);
                var[i] = rng.uniform(0.0, 1.5);
            }
            const UceResult r = uce(sq, var, bins);
            // brute-force double loop
            const double lo = *std::min_element(var.begin(), var.end());
            const double hi = *std::max_element(var.begin(), var.end());
            double naive = 0.0;
            for (std::size_t m = 0; m < bins; ++m) {
                double se = 0, sv = 0;
                std::size_t count = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    std::size_t bin = 0;
                    if (hi > lo) {
                        bin = std::min(
                            static_cast<std::size_t>((var[i] - lo) / (hi - lo) * bins),
                            bins - 1);
                    }
                    if (bin == m) {
                        se += sq[i];
                        sv += var[i];
                        ++count;
                    }
                }
                if (count) {
                    naive += static_cast<double>(count) / n * std::abs(se / count - sv / count);
                }
            }
            expect(c, std::abs(r.uce - naive) < 1e-12, "UCE oracle mismatch");
        }

        for (int t = 0; t < 50; ++t) {
            const std::size_t n = 4 + rng.uniform_index(40);
            std::vector<double> s(n);
            std::vector<int> l(n);
            for (std::size_t i = 0; i < n; ++i) {
                s[i] = std::floor(rng.uniform(0.0, 8.0)) / 8.0;
                l[i] = rng.uniform01() < 0.5;
            }
            l[0] = 0;
            l[n - 1] = 1;
            double wins = 0.0;
            std::size_t pairs = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (!l[i]) continue;
                for (std::size_t j = 0; j < n; ++j) {
                    if (l[j]) continue;
                    ++pairs;
                    wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
                }
            }
            expect(c, std::abs(roc_auroc(s, l).auroc - wins / pairs) < 1e-12,
                   "AUROC oracle mismatch");
        }

        // variance scaling: closed form vs 1-D grid, plus the exact post-condition
        const std::size_t n = 64;
        std::vector<double> e(n), v(n);
        for (std::size_t i = 0; i < n; ++i) {
            e[i] = 0.4 * rng.normal();
            v[i] = rng.uniform(0.05, 0.8);
        }
        const double s_star = variance_scaling_fit(e, v);
        double q = 0.0;
        for (std::size_t i = 0; i < n; ++i) q += e[i] * e[i] / v[i];
        double best = 0.0, best_obj = std::numeric_limits<double>::infinity();
        for (double cand = 1e-4; cand <= 10.0; cand += 1e-4) {
            const double obj = 2.0 * n * std::log(cand) + q / (cand * cand);
            if (obj < best_obj) {
                best_obj = obj;
                best = cand;
            }
        }
        expect(c, std::abs(s_star - best) < 1e-3, "closed form disagrees with the grid search");
        expect(c, std::abs(q / (s_star * s_star) - static_cast<double>(n)) < 1e-12 * n,
               "post-scaling standardized residuals not equal to N");
    });

    // ------------------------------------------------------------ shared pipeline
    const std::string run_dir = "acceptance_run";
    fs::remove_all(run_dir);
    const ExperimentConfig cfg = acceptance_config(run_dir);

    std::vector<CalibrationReport> reports;
    Dataset dataset;
    Checkpoint base_ckpt;

    // ---------------------------------------------------------------- 4
    suite.run(4, "toy end-to-end calibration ordering", 600.0, [&](Criterion& c) {
        cmd_gen_data(cfg);
        cmd_train(cfg, Role::base);
        cmd_train(cfg, Role::cap);
        cmd_train(cfg, Role::scratch_gauss);
        cmd_train(cfg, Role::scratch_ggd);
        reports = cmd_evaluate(cfg, Split::test);

        dataset = load_dataset(OutPaths(run_dir).manifest);
        base_ckpt = load_checkpoint(OutPaths(run_dir).checkpoint("base"));

        // base must beat the degraded input
        double psnr_in = 0.0;
        std::size_t n_test = 0;
        std::vector<double> sq_err;
        for (const Sample& s : dataset.samples) {
            if (s.split != Split::test) continue;
            psnr_in += psnr(s.x, s.y, 1.0);
            const Tensor y_hat = base_forward(base_ckpt.model.trunk(), s.x);
            for (std::size_t k = 0; k < y_hat.size(); ++k) {
                const double err = y_hat[k] - s.y[k];
                sq_err.push_back(err * err);
            }
            ++n_test;
        }
        psnr_in /= static_cast<double>(n_test);

        const CalibrationReport& base_row = report_of(reports, "base");
        const CalibrationReport& cap_row = report_of(reports, "cap");
        expect(c, base_row.psnr > psnr_in,
               "denoiser does not beat its input: " + std::to_string(base_row.psnr) + " vs " +
                   std::to_string(psnr_in));
        expect(c, cap_row.psnr == base_row.psnr, "cap must report the base point estimate");
        expect(c, cap_row.ssim_recon >= 0.9,
               "cap reconstruction SSIM " + std::to_string(cap_row.ssim_recon) + " < 0.9");

        const double uce_const_half = uce(sq_err, std::vector<double>(sq_err.size(), 0.5),
                                          cfg.metrics.bins)
                                          .uce;
        expect(c, cap_row.uce < uce_const_half, "cap UCE not below the const-0.5 control");
        const CalibrationReport& pac = report_of(reports, "ttda-pac");
        expect(c, cap_row.uce < pac.uce, "cap UCE not below combined TTDA");

        expect(c, cap_row.c_coeff >= 0.2,
               "cap correlation " + std::to_string(cap_row.c_coeff) + " < 0.2");
        for (const char* rival : {"ttda-p", "ttda-a", "ttda-c", "ttda-pac", "do", "dopac"}) {
            const CalibrationReport& r = report_of(reports, rival);
            expect(c, cap_row.c_coeff > r.c_coeff,
                   std::string("cap correlation not above ") + rival);
        }
    });

    // ---------------------------------------------------------------- 5
    suite.run(5, "identity-degradation monotone trends", 0.0, [&](Criterion& c) {
        const auto rows = cmd_degrade_sweep(cfg);
        expect(c, rows.size() >= 4, "kappa grid too small");
        for (std::size_t i = 1; i < rows.size(); ++i) {
            expect(c, rows[i].ssim_recon < rows[i - 1].ssim_recon,
                   "cap SSIM not strictly decreasing at kappa=" + std::to_string(rows[i].kappa));
            expect(c, rows[i].uce_cap > rows[i - 1].uce_cap,
                   "cap UCE not strictly increasing at kappa=" + std::to_string(rows[i].kappa));
            expect(c, rows[i].uce_const_low > rows[i - 1].uce_const_low,
                   "const-low UCE not increasing at kappa=" + std::to_string(rows[i].kappa));
            expect(c, rows[i].uce_const_high < rows[i - 1].uce_const_high,
                   "const-high UCE not decreasing at kappa=" + std::to_string(rows[i].kappa));
        }
    });

    // ---------------------------------------------------------------- 6
    suite.run(6, "no-identity ablation direction", 0.0, [&](Criterion& c) {
        const auto rows = cmd_ablate_no_identity(cfg);
        double cap_uce = 0, cap_cc = 0, noid_uce = 0, noid_cc = 0;
        for (const AblateRow& r : rows) {
            if (r.model == "cap") {
                cap_uce = r.uce;
                cap_cc = r.c_coeff;
            } else {
                noid_uce = r.uce;
                noid_cc = r.c_coeff;
            }
        }
        expect(c, noid_uce > cap_uce, "identity-free cap should be less calibrated");
        expect(c, noid_cc < cap_cc, "identity-free cap should correlate worse");
    });

    // ---------------------------------------------------------------- 7
    suite.run(7, "variance-scaling recalibration direction", 0.0, [&](Criterion& c) {
        const auto rows = cmd_recalibrate(cfg, Split::val);
        double cap_pre = 0, sg_pre = 0, sg_post = 0;
        for (const RecalibrateRow& r : rows) {
            if (r.model == "cap") cap_pre = r.uce_pre;
            if (r.model == "scratch-gauss") {
                sg_pre = r.uce_pre;
                sg_post = r.uce_post;
            }
        }
        expect(c, sg_post < sg_pre, "scaling did not reduce the scratch test UCE");
        expect(c, cap_pre < sg_post, "cap UCE not below the rescaled scratch UCE");
    });

    // ---------------------------------------------------------------- 8
    suite.run(8, "OOD detection ordering and AUROC", 180.0, [&](Criterion& c) {
        const auto summary = cmd_ood(cfg);
        double unc_avc = 0.0, feat_avc = 0.0;
        for (const OodSummaryRow& r : summary) {
            if (r.split != "a_vs_c") continue;
            if (r.detector == "mean-uncertainty") unc_avc = r.auroc;
            if (r.detector == "pretrained-feature") feat_avc = r.auroc;
        }
        expect(c, unc_avc >= 0.8,
               "mean-uncertainty AUROC " + std::to_string(unc_avc) + " < 0.8");
        expect(c, unc_avc >= feat_avc, "mean-uncertainty AUROC below the pretrained-feature one");

        // family ordering of the mean uncertainty score
        const std::string csv = slurp(OutPaths(run_dir).report("ood_family_means.csv"));
        double mean_a = 0, mean_b = 0, mean_c2 = 0;
        std::istringstream in(csv);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            std::istringstream row(line);
            std::string fam, det, val;
            std::getline(row, fam, ',');
            std::getline(row, det, ',');
            std::getline(row, val, ',');
            if (det != "mean-uncertainty") continue;
            const double v = std::stod(val);
            if (fam == "A") mean_a = v;
            if (fam == "B") mean_b = v;
            if (fam == "C") mean_c2 = v;
        }
        expect(c, mean_a < mean_b && mean_b < mean_c2,
               "family means not ordered: " + std::to_string(mean_a) + ", " +
                   std::to_string(mean_b) + ", " + std::to_string(mean_c2));
    });

    // ---------------------------------------------------------------- 9
    suite.run(9, "data efficiency of the cap vs GGD scratch", 0.0, [&](Criterion& c) {
        const auto rows = cmd_data_efficiency(cfg);
        double cap_full = 0, cap_half = 0;
        double scratch_full = 0, scratch_half = 0;
        for (const DataEfficiencyRow& r : rows) {
            if (r.model == "cap" && r.fraction == 1.0) cap_full = r.ssim_vs_target;
            if (r.model == "cap" && r.fraction == 0.5) cap_half = r.ssim_vs_target;
            if (r.model == "scratch-ggd" && r.fraction == 1.0) scratch_full = r.ssim_vs_target;
            if (r.model == "scratch-ggd" && r.fraction == 0.5) scratch_half = r.ssim_vs_target;
        }
        const double cap_drop = cap_full - cap_half;
        const double scratch_drop = scratch_full - scratch_half;
        expect(c, cap_drop < scratch_drop,
               "cap SSIM drop " + std::to_string(cap_drop) + " not below scratch drop " +
                   std::to_string(scratch_drop));
    });

    // ---------------------------------------------------------------- 10
    suite.run(10, "determinism and on-disk formats", 0.0, [&](Criterion& c) {
        const OutPaths first(run_dir);

        // identical config and seed: byte-identical dataset and checkpoints
        const std::string second_dir = "acceptance_rerun";
        fs::remove_all(second_dir);
        ExperimentConfig cfg2 = cfg;
        cfg2.out_dir = second_dir;
        cmd_gen_data(cfg2);
        const OutPaths second(second_dir);
        expect(c, slurp(first.manifest) == slurp(second.manifest),
               "manifest differs between identical runs");
        expect(c, slurp(first.dataset_dir + "/data/0_x.tnsr") ==
                       slurp(second.dataset_dir + "/data/0_x.tnsr"),
               "tensor files differ between identical runs");
        cmd_train(cfg2, Role::base);
        expect(c, slurp(first.checkpoint("base")) == slurp(second.checkpoint("base")),
               "base checkpoints differ between identical runs");
        cmd_train(cfg2, Role::cap);
        expect(c, slurp(first.checkpoint("cap")) == slurp(second.checkpoint("cap")),
               "cap checkpoints differ between identical runs");

        // evaluation reruns are byte-identical
        const std::string eval_before = slurp(first.report("evaluate.csv"));
        cmd_evaluate(cfg, Split::test);
        expect(c, slurp(first.report("evaluate.csv")) == eval_before,
               "evaluate.csv differs across reruns");

        // committed golden files: decode and re-encode bit-exactly
        const std::string golden = IDCAP_GOLDEN_DIR;
        {
            const Tensor t = load_tensor(golden + "/golden.tnsr");
            const std::string out = run_dir + "/golden_tensor_recode.tnsr";
            save_tensor(out, t);
            expect(c, slurp(out) == slurp(golden + "/golden.tnsr"),
                   "tensor golden re-encode differs");
        }
        {
            Tensor img({1, 2, 2});
            img[0] = 0.0;
            img[1] = 1.0;
            img[2] = 0.5;
            img[3] = 0.2499;
            const std::string out = run_dir + "/golden_pgm_recode.pgm";
            export_pgm(out, img);
            expect(c, slurp(out) == slurp(golden + "/golden.pgm"), "pgm golden differs");
        }
        {
            const Checkpoint ck = load_checkpoint(golden + "/golden.ckpt");
            const std::string out = run_dir + "/golden_ckpt_recode.ckpt";
            save_checkpoint(out, ck);
            expect(c, slurp(out) == slurp(golden + "/golden.ckpt"),
                   "checkpoint golden re-encode differs");
        }
    });

    return suite.finish();
}
