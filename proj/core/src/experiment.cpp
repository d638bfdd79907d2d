#include "idcap/experiment.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "idcap/baselines.hpp"
#include "idcap/checkpoint.hpp"
#include "idcap/errors.hpp"
#include "idcap/format.hpp"
#include "idcap/ggd.hpp"
#include "idcap/ood.hpp"
#include "idcap/parallel.hpp"
#include "idcap/tensor_io.hpp"
#include "idcap/train.hpp"

namespace idcap {

namespace {
namespace fs = std::filesystem;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kVarFloor = 1e-12;  // keeps degenerate variance maps usable for ECE/NLL

/// Index of the base encoder's penultimate conv; its flattened output is the
/// pretrained-feature tag for OOD scoring.
constexpr std::size_t kBaseFeatureLayer = 2;

uint64_t sample_seed(uint64_t tag_seed, std::size_t index) {
    uint64_t state = tag_seed ^ (0x9e3779b97f4a7c15ull * (static_cast<uint64_t>(index) + 1));
    splitmix64_next(state);
    return splitmix64_next(state);
}

std::string hash_hex(uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw io_error("cannot open '" + path + "' for writing");
    }
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) {
        throw io_error("write failed for '" + path + "'");
    }
}

}  // namespace

const char* role_name(Role r) {
    switch (r) {
        case Role::base: return "base";
        case Role::cap: return "cap";
        case Role::scratch_gauss: return "scratch-gauss";
        case Role::scratch_ggd: return "scratch-ggd";
    }
    return "?";
}

Role role_from_name(const std::string& name) {
    if (name == "base") return Role::base;
    if (name == "cap") return Role::cap;
    if (name == "scratch-gauss") return Role::scratch_gauss;
    if (name == "scratch-ggd") return Role::scratch_ggd;
    throw config_error("unknown training role '" + name + "'");
}

OutPaths::OutPaths(const std::string& root_in) : root(root_in) {
    dataset_dir = (fs::path(root) / "dataset").string();
    manifest = (fs::path(dataset_dir) / "manifest.csv").string();
    checkpoints_dir = (fs::path(root) / "checkpoints").string();
    logs_dir = (fs::path(root) / "logs").string();
    reports_dir = (fs::path(root) / "reports").string();
}

std::string OutPaths::checkpoint(const std::string& name) const {
    return (fs::path(checkpoints_dir) / (name + ".ckpt")).string();
}

std::string OutPaths::train_log(const std::string& name) const {
    return (fs::path(logs_dir) / ("train_" + name + ".csv")).string();
}

std::string OutPaths::report(const std::string& name) const {
    return (fs::path(reports_dir) / name).string();
}

namespace {

DatasetSpec dataset_spec_for(const ExperimentConfig& cfg) {
    DatasetSpec spec = cfg.dataset;
    spec.seed = derive_seed(cfg.seed, "dataset");
    return spec;
}

Dataset load_experiment_dataset(const ExperimentConfig& cfg, const OutPaths& paths) {
    return load_dataset(paths.manifest);
}

Checkpoint load_role_checkpoint(const OutPaths& paths, const std::string& name, ModelKind kind) {
    Checkpoint ckpt = load_checkpoint(paths.checkpoint(name));
    if (ckpt.model.kind != kind) {
        throw io_error("checkpoint '" + name + "' holds a " +
                       model_kind_name(ckpt.model.kind) + " model");
    }
    return ckpt;
}

/// Inputs, targets and frozen-base outputs for one split.
struct SplitData {
    std::vector<std::size_t> positions;
    std::vector<Tensor> xs;
    std::vector<Tensor> ys;
    std::vector<Tensor> y_hats;
};

SplitData collect_split(const Dataset& ds, const Network& base, Split split) {
    SplitData d;
    d.positions = ds.positions_of(split);
    if (d.positions.empty()) {
        throw config_error(std::string("split '") + split_name(split) + "' is empty");
    }
    d.xs.resize(d.positions.size());
    d.ys.resize(d.positions.size());
    d.y_hats.resize(d.positions.size());
    parallel_for(d.positions.size(), [&](std::size_t i) {
        const Sample& s = ds.samples[d.positions[i]];
        d.xs[i] = s.x;
        d.ys[i] = s.y;
        d.y_hats[i] = base_forward(base, s.x);
    });
    return d;
}

/// Pixel streams feeding the calibration metrics of one method.
struct MethodStreams {
    std::vector<double> sq_err;    // squared error of the reported point estimate
    std::vector<double> var;       // predicted variance
    std::vector<double> residual;  // y - distribution center
    std::vector<double> alpha;     // distribution scale per pixel
    std::vector<double> beta;      // distribution shape per pixel
    NllConvention conv = NllConvention::gaussian;
    bool has_uncertainty = true;
    double psnr = kNaN;
    double ssim = kNaN;
    double ssim_recon = kNaN;
};

void push_gaussian_params(MethodStreams& s) {
    s.alpha.reserve(s.var.size());
    s.beta.assign(s.var.size(), 2.0);
    for (double v : s.var) {
        s.alpha.push_back(std::sqrt(2.0 * std::max(v, kVarFloor)));
    }
}

CalibrationReport make_report(const std::string& method, Split split, const MethodStreams& s,
                              const MetricOptions& opts, UceResult* bins_out) {
    CalibrationReport r;
    r.method = method;
    r.split = split_name(split);
    r.psnr = s.psnr;
    r.ssim = s.ssim;
    r.ssim_recon = s.ssim_recon;
    r.n_pixels = s.sq_err.size();
    if (!s.has_uncertainty) {
        r.uce = r.c_coeff = r.ece = r.sharpness = r.nll = kNaN;
        r.nll_convention = "none";
        r.n_bins = 0;
        return r;
    }
    const UceResult u = uce(s.sq_err, s.var, opts.bins);
    if (bins_out) *bins_out = u;
    r.uce = u.uce;
    r.n_bins = opts.bins;
    r.c_coeff = pearson_corr(s.sq_err, s.var);
    r.sharpness = sharpness(s.var);
    r.nll_convention = nll_convention_name(s.conv);

    const std::size_t n = s.residual.size();
    double nll_acc = 0.0;
    if (s.conv == NllConvention::ggd) {
        for (std::size_t i = 0; i < n; ++i) {
            nll_acc += ggd_nll_term(s.residual[i], GGDParams(0.0, s.alpha[i], s.beta[i]));
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double v = std::max(s.var[i], kVarFloor);
            nll_acc += s.residual[i] * s.residual[i] / (2.0 * v) + 0.5 * std::log(v);
        }
    }
    r.nll = nll_acc / static_cast<double>(n);

    const Tensor res({n}, s.residual);
    PredictiveMap pred = make_predictive_map(Tensor({n}), Tensor({n}, s.alpha),
                                             Tensor({n}, s.beta));
    const auto levels = default_ece_levels();
    r.ece = ece_quantile(res, pred, levels);
    return r;
}

double mean_image_psnr(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += psnr(a[i], b[i], 1.0);
    return acc / static_cast<double>(a.size());
}

double mean_image_ssim(const std::vector<Tensor>& a, const std::vector<Tensor>& b,
                       std::size_t window) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += ssim(a[i], b[i], window, 1.0);
    return acc / static_cast<double>(a.size());
}

std::vector<double> squared_errors(const std::vector<Tensor>& pred,
                                   const std::vector<Tensor>& target) {
    std::vector<double> out;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        for (std::size_t k = 0; k < pred[i].size(); ++k) {
            const double e = pred[i][k] - target[i][k];
            out.push_back(e * e);
        }
    }
    return out;
}

/// Base-centered streams of a variance-map method. Pixels whose pass count
/// is below `full_passes` (affine warps) are excluded everywhere.
MethodStreams variance_method_streams(const SplitData& data,
                                      const std::vector<UncertaintyMaps>& maps,
                                      std::size_t full_passes, double base_psnr,
                                      double base_ssim) {
    MethodStreams s;
    s.conv = NllConvention::gaussian;
    s.psnr = base_psnr;
    s.ssim = base_ssim;
    for (std::size_t i = 0; i < data.ys.size(); ++i) {
        for (std::size_t k = 0; k < data.ys[i].size(); ++k) {
            if (maps[i].valid[k] < static_cast<double>(full_passes)) continue;
            const double e = data.y_hats[i][k] - data.ys[i][k];
            s.sq_err.push_back(e * e);
            s.var.push_back(maps[i].var[k]);
            s.residual.push_back(data.ys[i][k] - data.y_hats[i][k]);
        }
    }
    push_gaussian_params(s);
    return s;
}

AugmentSpec augment_spec_for(const BaselineOptions& b, AugmentSpec::Kind kind) {
    AugmentSpec spec;
    spec.kind = kind;
    spec.passes = b.passes;
    spec.noise_sigma = b.noise_sigma;
    spec.shift_max = b.shift_max;
    spec.flip_allowed = b.flip;
    spec.blur_max = b.blur_max;
    spec.contrast_lo = b.contrast_lo;
    spec.contrast_hi = b.contrast_hi;
    spec.jitter = b.jitter;
    return spec;
}

std::vector<UncertaintyMaps> ttda_maps(const Network& base, const SplitData& data,
                                       const AugmentSpec& spec, uint64_t tag_seed) {
    std::vector<UncertaintyMaps> maps(data.xs.size());
    parallel_for(data.xs.size(), [&](std::size_t i) {
        Rng rng(sample_seed(tag_seed, data.positions[i]));
        maps[i] = ttda(base, data.xs[i], spec, rng);
    });
    return maps;
}

std::vector<UncertaintyMaps> dropout_maps(const Network& base, const SplitData& data,
                                          std::size_t passes, double p, uint64_t tag_seed) {
    std::vector<UncertaintyMaps> maps(data.xs.size());
    parallel_for(data.xs.size(), [&](std::size_t i) {
        Rng rng(sample_seed(tag_seed, data.positions[i]));
        maps[i] = mc_dropout(base, data.xs[i], passes, p, rng);
    });
    return maps;
}

std::vector<UncertaintyMaps> dopac_maps(const Network& base, const SplitData& data,
                                        const AugmentSpec& spec, double p, uint64_t tag_seed) {
    std::vector<UncertaintyMaps> maps(data.xs.size());
    parallel_for(data.xs.size(), [&](std::size_t i) {
        Rng rng(sample_seed(tag_seed, data.positions[i]));
        maps[i] = mc_dropout_ttda(base, data.xs[i], spec, p, rng);
    });
    return maps;
}

uint64_t tensors_digest(const std::vector<Tensor>& ts) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const Tensor& t : ts) {
        for (double v : t.values()) {
            uint64_t bits;
            std::memcpy(&bits, &v, 8);
            for (int i = 0; i < 8; ++i) {
                h ^= (bits >> (8 * i)) & 0xff;
                h *= 0x100000001b3ull;
            }
        }
    }
    return h;
}

std::size_t epochs_to_plateau(const TrainLog& log) {
    if (log.empty()) return 0;
    double lo = log.front().loss;
    for (const EpochLogRow& r : log) lo = std::min(lo, r.loss);
    const double range = log.front().loss - lo;
    if (range <= 0.0) return 0;
    for (const EpochLogRow& r : log) {
        if (r.loss - lo <= 0.02 * range) return r.epoch;
    }
    return log.back().epoch;
}

std::string provenance_header() { return "config_hash,seed"; }

std::string provenance_row(const ExperimentConfig& cfg) {
    return hash_hex(cfg.config_hash) + ',' + std::to_string(cfg.seed);
}

}  // namespace

void cmd_gen_data(const ExperimentConfig& cfg) {
    const OutPaths paths(cfg.out_dir);
    const DatasetSpec spec = dataset_spec_for(cfg);
    const Dataset ds = generate_dataset(spec);
    write_dataset(paths.dataset_dir, ds);
    const std::size_t previews = std::min<std::size_t>(4, ds.samples.size());
    for (std::size_t i = 0; i < previews; ++i) {
        Tensor clipped_x = ds.samples[i].x;
        for (std::size_t k = 0; k < clipped_x.size(); ++k) {
            clipped_x[k] = std::clamp(clipped_x[k], 0.0, 1.0);
        }
        export_pgm((fs::path(paths.dataset_dir) / ("preview_" + std::to_string(i) + "_x.pgm"))
                       .string(),
                   clipped_x);
        export_pgm((fs::path(paths.dataset_dir) / ("preview_" + std::to_string(i) + "_y.pgm"))
                       .string(),
                   ds.samples[i].y);
    }
}

std::string cmd_train(const ExperimentConfig& cfg, Role role) {
    const OutPaths paths(cfg.out_dir);
    fs::create_directories(paths.checkpoints_dir);
    fs::create_directories(paths.logs_dir);
    const Dataset ds = load_experiment_dataset(cfg, paths);

    TrainResult result;
    std::string name;
    switch (role) {
        case Role::base: {
            TrainConfig tc = cfg.train_base_cfg;
            tc.seed = derive_seed(cfg.seed, "train-base");
            result = train_base(ds, tc);
            name = "base";
            break;
        }
        case Role::cap: {
            const Checkpoint base = load_role_checkpoint(paths, "base", ModelKind::base);
            TrainConfig tc = cfg.train_cap_cfg;
            tc.seed = derive_seed(cfg.seed, "train-cap");
            result = train_cap(base, ds, tc);
            name = "cap";
            break;
        }
        case Role::scratch_gauss: {
            TrainConfig tc = cfg.train_scratch_cfg;
            tc.seed = derive_seed(cfg.seed, "train-scratch-gauss");
            result = train_scratch(ds, tc, false);
            name = "scratch_gauss";
            break;
        }
        case Role::scratch_ggd: {
            TrainConfig tc = cfg.train_scratch_cfg;
            tc.seed = derive_seed(cfg.seed, "train-scratch-ggd");
            result = train_scratch(ds, tc, true);
            name = "scratch_ggd";
            break;
        }
    }
    const std::string ckpt_path = paths.checkpoint(name);
    save_checkpoint(ckpt_path, result.checkpoint);
    write_train_log_csv(paths.train_log(name), result.log);
    return ckpt_path;
}

std::vector<CalibrationReport> cmd_evaluate(const ExperimentConfig& cfg, Split split) {
    const OutPaths paths(cfg.out_dir);
    fs::create_directories(paths.reports_dir);
    const Dataset ds = load_experiment_dataset(cfg, paths);
    const Checkpoint base = load_role_checkpoint(paths, "base", ModelKind::base);
    const Checkpoint cap = load_role_checkpoint(paths, "cap", ModelKind::cap);
    const Checkpoint sg = load_role_checkpoint(paths, "scratch_gauss", ModelKind::scratch_gauss);
    const Checkpoint sggd = load_role_checkpoint(paths, "scratch_ggd", ModelKind::scratch_ggd);

    const SplitData data = collect_split(ds, base.model.trunk(), split);
    const uint64_t point_digest = tensors_digest(data.y_hats);
    const std::size_t n_img = data.xs.size();
    const MetricOptions& mo = cfg.metrics;

    const double base_psnr = mean_image_psnr(data.y_hats, data.ys);
    const double base_ssim = mean_image_ssim(data.y_hats, data.ys, mo.ssim_window);

    std::vector<std::pair<std::string, MethodStreams>> methods;

    {
        MethodStreams s;
        s.has_uncertainty = false;
        s.psnr = base_psnr;
        s.ssim = base_ssim;
        s.sq_err = squared_errors(data.y_hats, data.ys);
        methods.emplace_back("base", std::move(s));
    }

    {
        std::vector<PredictiveMap> maps(n_img);
        parallel_for(n_img, [&](std::size_t i) {
            maps[i] = cap_forward(cap.model, data.y_hats[i]);
        });
        MethodStreams s;
        s.conv = NllConvention::ggd;
        s.psnr = base_psnr;
        s.ssim = base_ssim;
        std::vector<Tensor> recon(n_img);
        for (std::size_t i = 0; i < n_img; ++i) recon[i] = maps[i].y_tilde;
        s.ssim_recon = mean_image_ssim(recon, data.y_hats, mo.ssim_window);
        for (std::size_t i = 0; i < n_img; ++i) {
            for (std::size_t k = 0; k < data.ys[i].size(); ++k) {
                const double e = data.y_hats[i][k] - data.ys[i][k];
                s.sq_err.push_back(e * e);
                s.var.push_back(maps[i].variance[k]);
                s.residual.push_back(data.ys[i][k] - maps[i].y_tilde[k]);
                s.alpha.push_back(maps[i].alpha[k]);
                s.beta.push_back(maps[i].beta[k]);
            }
        }
        methods.emplace_back("cap", std::move(s));
    }

    for (const bool ggd_head : {false, true}) {
        const Checkpoint& ck = ggd_head ? sggd : sg;
        std::vector<PredictiveMap> maps(n_img);
        parallel_for(n_img, [&](std::size_t i) {
            maps[i] = scratch_forward(ck.model, data.xs[i]);
        });
        MethodStreams s;
        s.conv = ggd_head ? NllConvention::ggd : NllConvention::gaussian;
        std::vector<Tensor> own(n_img);
        for (std::size_t i = 0; i < n_img; ++i) own[i] = maps[i].y_tilde;
        s.psnr = mean_image_psnr(own, data.ys);
        s.ssim = mean_image_ssim(own, data.ys, mo.ssim_window);
        for (std::size_t i = 0; i < n_img; ++i) {
            for (std::size_t k = 0; k < data.ys[i].size(); ++k) {
                const double e = maps[i].y_tilde[k] - data.ys[i][k];
                s.sq_err.push_back(e * e);
                s.var.push_back(maps[i].variance[k]);
                s.residual.push_back(data.ys[i][k] - maps[i].y_tilde[k]);
                s.alpha.push_back(maps[i].alpha[k]);
                s.beta.push_back(maps[i].beta[k]);
            }
        }
        methods.emplace_back(ggd_head ? "scratch-ggd" : "scratch-gauss", std::move(s));
    }

    const BaselineOptions& bo = cfg.baselines;
    const struct {
        const char* name;
        AugmentSpec::Kind kind;
        const char* tag;
    } ttda_defs[] = {
        {"ttda-p", AugmentSpec::Kind::pixel_noise, "ttda-p"},
        {"ttda-a", AugmentSpec::Kind::affine, "ttda-a"},
        {"ttda-c", AugmentSpec::Kind::corrupt, "ttda-c"},
        {"ttda-pac", AugmentSpec::Kind::combined, "ttda-pac"},
    };
    for (const auto& def : ttda_defs) {
        const AugmentSpec spec = augment_spec_for(bo, def.kind);
        const auto maps = ttda_maps(base.model.trunk(), data, spec, derive_seed(cfg.seed, def.tag));
        methods.emplace_back(def.name,
                             variance_method_streams(data, maps, bo.passes, base_psnr, base_ssim));
    }
    {
        const auto maps = dropout_maps(base.model.trunk(), data, bo.passes, bo.dropout_p,
                                       derive_seed(cfg.seed, "do"));
        methods.emplace_back("do",
                             variance_method_streams(data, maps, bo.passes, base_psnr, base_ssim));
    }
    {
        const AugmentSpec spec = augment_spec_for(bo, AugmentSpec::Kind::combined);
        const auto maps = dopac_maps(base.model.trunk(), data, spec, bo.dropout_p,
                                     derive_seed(cfg.seed, "dopac"));
        methods.emplace_back("dopac",
                             variance_method_streams(data, maps, bo.passes, base_psnr, base_ssim));
    }
    for (const double c : {bo.const_low, bo.const_high}) {
        MethodStreams s;
        s.conv = NllConvention::gaussian;
        s.psnr = base_psnr;
        s.ssim = base_ssim;
        s.sq_err = squared_errors(data.y_hats, data.ys);
        s.var.assign(s.sq_err.size(), c);
        for (std::size_t i = 0; i < n_img; ++i) {
            for (std::size_t k = 0; k < data.ys[i].size(); ++k) {
                s.residual.push_back(data.ys[i][k] - data.y_hats[i][k]);
            }
        }
        push_gaussian_params(s);
        char name[32];
        std::snprintf(name, sizeof(name), "const(%g)", c);
        methods.emplace_back(name, std::move(s));
    }

    if (tensors_digest(data.y_hats) != point_digest) {
        throw std::logic_error("evaluate: a post-hoc method altered the base point estimates");
    }

    std::vector<CalibrationReport> reports;
    std::ostringstream csv;
    csv << "method,split,psnr,ssim,ssim_recon,uce,c_coeff,ece,sharpness,nll,nll_convention,"
           "n_pixels,n_bins,"
        << provenance_header() << '\n';
    for (const auto& [name, streams] : methods) {
        UceResult bins;
        const CalibrationReport r = make_report(name, split, streams, mo,
                                                streams.has_uncertainty ? &bins : nullptr);
        reports.push_back(r);
        csv << r.method << ',' << r.split << ',' << fmt_double(r.psnr) << ','
            << fmt_double(r.ssim) << ',' << fmt_double(r.ssim_recon) << ',' << fmt_double(r.uce)
            << ',' << fmt_double(r.c_coeff) << ',' << fmt_double(r.ece) << ','
            << fmt_double(r.sharpness) << ',' << fmt_double(r.nll) << ',' << r.nll_convention
            << ',' << r.n_pixels << ',' << r.n_bins << ',' << provenance_row(cfg) << '\n';
        if (streams.has_uncertainty) {
            std::ostringstream bcsv;
            bcsv << "bin,lo,hi,count,err,uncer\n";
            for (const BinStats& b : bins.bins) {
                bcsv << b.bin << ',' << fmt_double(b.lo) << ',' << fmt_double(b.hi) << ','
                     << b.count << ',' << fmt_double(b.err) << ',' << fmt_double(b.uncer) << '\n';
            }
            std::string fname = "bins_" + r.method + ".csv";
            for (char& ch : fname) {
                if (ch == '(' || ch == ')') ch = '_';
            }
            write_file(paths.report(fname), bcsv.str());
        }
    }
    write_file(paths.report("evaluate.csv"), csv.str());
    return reports;
}

std::vector<DegradeSweepRow> cmd_degrade_sweep(const ExperimentConfig& cfg) {
    const OutPaths paths(cfg.out_dir);
    fs::create_directories(paths.reports_dir);
    const Dataset ds = load_experiment_dataset(cfg, paths);
    const Checkpoint base = load_role_checkpoint(paths, "base", ModelKind::base);
    const Checkpoint cap = load_role_checkpoint(paths, "cap", ModelKind::cap);
    for (double k : cfg.sweep.kappas) {
        if (k < 0.0) {
            throw config_error("degrade-sweep: negative kappa");
        }
    }

    const SplitData data = collect_split(ds, base.model.trunk(), Split::test);
    const std::size_t n_img = data.xs.size();
    const BaselineOptions& bo = cfg.baselines;

    // Combined-TTDA uncertainty does not depend on kappa; same stream as evaluate.
    const AugmentSpec pac = augment_spec_for(bo, AugmentSpec::Kind::combined);
    const auto pac_maps = ttda_maps(base.model.trunk(), data, pac, derive_seed(cfg.seed, "ttda-pac"));

    const uint64_t noise_tag = derive_seed(cfg.seed, "sweep-noise");
    std::vector<DegradeSweepRow> rows;
    for (std::size_t ki = 0; ki < cfg.sweep.kappas.size(); ++ki) {
        const double kappa = cfg.sweep.kappas[ki];
        std::vector<Tensor> degraded(n_img);
        std::vector<PredictiveMap> maps(n_img);
        parallel_for(n_img, [&](std::size_t i) {
            Tensor noisy = data.y_hats[i];
            if (kappa > 0.0) {
                Rng rng(sample_seed(noise_tag ^ (0xbf58476d1ce4e5b9ull * (ki + 1)),
                                    data.positions[i]));
                for (std::size_t p = 0; p < noisy.size(); ++p) {
                    noisy[p] += kappa * rng.normal();
                }
            }
            degraded[i] = noisy;
            maps[i] = cap_forward(cap.model, noisy);
        });

        DegradeSweepRow row;
        row.kappa = kappa;
        std::vector<Tensor> recon(n_img);
        for (std::size_t i = 0; i < n_img; ++i) recon[i] = maps[i].y_tilde;
        row.ssim_recon = mean_image_ssim(recon, data.y_hats, cfg.metrics.ssim_window);

        std::vector<double> sq_err;
        std::vector<double> cap_var;
        for (std::size_t i = 0; i < n_img; ++i) {
            for (std::size_t k = 0; k < data.ys[i].size(); ++k) {
                const double e = degraded[i][k] - data.ys[i][k];
                sq_err.push_back(e * e);
                cap_var.push_back(maps[i].variance[k]);
            }
        }
        row.uce_cap = uce(sq_err, cap_var, cfg.metrics.bins).uce;

        std::vector<double> pac_err, pac_var;
        for (std::size_t i = 0; i < n_img; ++i) {
            for (std::size_t k = 0; k < data.ys[i].size(); ++k) {
                if (pac_maps[i].valid[k] < static_cast<double>(bo.passes)) continue;
                const double e = degraded[i][k] - data.ys[i][k];
                pac_err.push_back(e * e);
                pac_var.push_back(pac_maps[i].var[k]);
            }
        }
        row.uce_ttda_pac = uce(pac_err, pac_var, cfg.metrics.bins).uce;

        const std::vector<double> lo_var(sq_err.size(), bo.const_low);
        const std::vector<double> hi_var(sq_err.size(), bo.const_high);
        row.uce_const_low = uce(sq_err, lo_var, cfg.metrics.bins).uce;
        row.uce_const_high = uce(sq_err, hi_var, cfg.metrics.bins).uce;
        rows.push_back(row);
    }

    std::ostringstream csv;
    csv << "kappa,ssim_recon,uce_cap,uce_ttda_pac,uce_const_low,uce_const_high,"
        << provenance_header() << '\n';
    for (const DegradeSweepRow& r : rows) {
        csv << fmt_double(r.kappa) << ',' << fmt_double(r.ssim_recon) << ','
            << fmt_double(r.uce_cap) << ',' << fmt_double(r.uce_ttda_pac) << ','
            << fmt_double(r.uce_const_low) << ',' << fmt_double(r.uce_const_high) << ','
            << provenance_row(cfg) << '\n';
    }
    write_file(paths.report("degrade_sweep.csv"), csv.str());
    return rows;
}

std::vector<DataEfficiencyRow> cmd_data_efficiency(const ExperimentConfig& cfg) {
    const OutPaths paths(cfg.out_dir);
    fs::create_directories(paths.reports_dir);
    const Dataset ds = load_experiment_dataset(cfg, paths);
    const Checkpoint base = load_role_checkpoint(paths, "base", ModelKind::base);

    for (double f : cfg.sweep.fractions) {
        if (!(f > 0.0) || f > 1.0) {
            throw config_error("data-efficiency: fractions must lie in (0, 1]");
        }
    }

    const SplitData test = collect_split(ds, base.model.trunk(), Split::test);
    const std::size_t n_img = test.xs.size();
    const auto train_pos = ds.positions_of(Split::train);

    std::vector<DataEfficiencyRow> rows;
    for (const double fraction : cfg.sweep.fractions) {
        const std::size_t keep = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(train_pos.size()))));

        Dataset sub;
        sub.spec = ds.spec;
        for (std::size_t i = 0; i < std::min(keep, train_pos.size()); ++i) {
            sub.samples.push_back(ds.samples[train_pos[i]]);
        }
        for (const Sample& s : ds.samples) {
            if (s.split != Split::train) sub.samples.push_back(s);
        }

        {
            TrainConfig tc = cfg.train_cap_cfg;
            tc.seed = derive_seed(cfg.seed, "train-cap");
            const TrainResult r = train_cap(base, sub, tc);
            std::vector<PredictiveMap> maps(n_img);
            parallel_for(n_img, [&](std::size_t i) {
                maps[i] = cap_forward(r.checkpoint.model, test.y_hats[i]);
            });
            DataEfficiencyRow row;
            row.fraction = fraction;
            row.model = "cap";
            std::vector<Tensor> recon(n_img);
            for (std::size_t i = 0; i < n_img; ++i) recon[i] = maps[i].y_tilde;
            row.ssim_vs_target = mean_image_ssim(recon, test.ys, cfg.metrics.ssim_window);
            row.ssim_recon = mean_image_ssim(recon, test.y_hats, cfg.metrics.ssim_window);
            std::vector<double> sq_err, var;
            for (std::size_t i = 0; i < n_img; ++i) {
                for (std::size_t k = 0; k < test.ys[i].size(); ++k) {
                    const double e = test.y_hats[i][k] - test.ys[i][k];
                    sq_err.push_back(e * e);
                    var.push_back(maps[i].variance[k]);
                }
            }
            row.uce = uce(sq_err, var, cfg.metrics.bins).uce;
            row.epochs_to_plateau = epochs_to_plateau(r.log);
            rows.push_back(row);
        }
        {
            TrainConfig tc = cfg.train_scratch_cfg;
            tc.seed = derive_seed(cfg.seed, "train-scratch-ggd");
            const TrainResult r = train_scratch(sub, tc, true);
            std::vector<PredictiveMap> maps(n_img);
            parallel_for(n_img, [&](std::size_t i) {
                maps[i] = scratch_forward(r.checkpoint.model, test.xs[i]);
            });
            DataEfficiencyRow row;
            row.fraction = fraction;
            row.model = "scratch-ggd";
            std::vector<Tensor> own(n_img);
            for (std::size_t i = 0; i < n_img; ++i) own[i] = maps[i].y_tilde;
            row.ssim_vs_target = mean_image_ssim(own, test.ys, cfg.metrics.ssim_window);
            row.ssim_recon = kNaN;
            std::vector<double> sq_err, var;
            for (std::size_t i = 0; i < n_img; ++i) {
                for (std::size_t k = 0; k < test.ys[i].size(); ++k) {
                    const double e = maps[i].y_tilde[k] - test.ys[i][k];
                    sq_err.push_back(e * e);
                    var.push_back(maps[i].variance[k]);
                }
            }
            row.uce = uce(sq_err, var, cfg.metrics.bins).uce;
            row.epochs_to_plateau = epochs_to_plateau(r.log);
            rows.push_back(row);
        }
    }

    std::ostringstream csv;
    csv << "fraction,model,ssim_vs_target,ssim_recon,uce,epochs_to_plateau,"
        << provenance_header() << '\n';
    for (const DataEfficiencyRow& r : rows) {
        csv << fmt_double(r.fraction) << ',' << r.model << ',' << fmt_double(r.ssim_vs_target)
            << ',' << fmt_double(r.ssim_recon) << ',' << fmt_double(r.uce) << ','
            << r.epochs_to_plateau << ',' << provenance_row(cfg) << '\n';
    }
    write_file(paths.report("data_efficiency.csv"), csv.str());
    return rows;
}

std::vector<OodSummaryRow> cmd_ood(const ExperimentConfig& cfg) {
    const OutPaths paths(cfg.out_dir);
    fs::create_directories(paths.reports_dir);
    fs::create_directories(paths.checkpoints_dir);
    const Dataset ds = load_experiment_dataset(cfg, paths);
    const Checkpoint base = load_role_checkpoint(paths, "base", ModelKind::base);
    const Checkpoint cap = load_role_checkpoint(paths, "cap", ModelKind::cap);
    const Network& base_net = base.model.trunk();

    // Autoencoder over in-distribution base outputs (train split).
    const auto train_pos = ds.positions_of(Split::train);
    if (train_pos.empty()) {
        throw config_error("ood: train split is empty");
    }
    std::vector<Tensor> train_outputs(train_pos.size());
    parallel_for(train_pos.size(), [&](std::size_t i) {
        train_outputs[i] = base_forward(base_net, ds.samples[train_pos[i]].x);
    });
    TrainConfig ae_cfg = cfg.train_ae_cfg;
    ae_cfg.seed = derive_seed(cfg.seed, "train-ae");
    const TrainResult ae = train_autoencoder(train_outputs, cfg.ood.bottleneck, ae_cfg);
    save_checkpoint(paths.checkpoint("ae"), ae.checkpoint);
    write_train_log_csv(paths.train_log("ae"), ae.log);

    // Validation means for the two feature detectors.
    const auto val_pos = ds.positions_of(Split::val);
    if (val_pos.empty()) {
        throw config_error("ood: val split is empty");
    }
    std::vector<Tensor> val_xs(val_pos.size());
    std::vector<Tensor> val_outputs(val_pos.size());
    parallel_for(val_pos.size(), [&](std::size_t i) {
        val_xs[i] = ds.samples[val_pos[i]].x;
        val_outputs[i] = base_forward(base_net, val_xs[i]);
    });
    const Tensor pretrained_mean = feature_mean(base_net, kBaseFeatureLayer, val_xs);
    const Tensor ae_mean = ae_feature_mean(ae.checkpoint.model, val_outputs);

    // Inference pool: in-distribution test split plus generated B and C sets.
    struct Item {
        Tensor x;
        Family family;
    };
    std::vector<Item> items;
    for (std::size_t pos : ds.positions_of(Split::test)) {
        items.push_back({ds.samples[pos].x, ds.spec.family});
    }
    for (const Family fam : {Family::B, Family::C}) {
        DatasetSpec spec = cfg.dataset;
        spec.family = fam;
        spec.count = std::max<std::size_t>(10, cfg.ood.count);
        spec.train_frac = 0.0;
        spec.val_frac = 0.0;
        spec.test_frac = 1.0;
        spec.seed = derive_seed(cfg.seed, fam == Family::B ? "ood-b" : "ood-c");
        const Dataset ood_ds = generate_dataset(spec);
        for (const Sample& s : ood_ds.samples) {
            items.push_back({s.x, fam});
        }
    }

    struct Scores {
        double pretrained = 0.0;
        double ae_feat = 0.0;
        double uncertainty = 0.0;
    };
    std::vector<Scores> scores(items.size());
    parallel_for(items.size(), [&](std::size_t i) {
        const Tensor& x = items[i].x;
        scores[i].pretrained = feature_distance_score(base_net, kBaseFeatureLayer,
                                                      pretrained_mean, x);
        scores[i].ae_feat = ae_feature_score(ae.checkpoint.model, ae_mean, base_forward(base_net, x));
        scores[i].uncertainty = mean_uncertainty_score(base_net, cap.model, x);
    });

    const struct {
        const char* name;
        double Scores::* member;
    } detectors[] = {
        {"pretrained-feature", &Scores::pretrained},
        {"ae-feature", &Scores::ae_feat},
        {"mean-uncertainty", &Scores::uncertainty},
    };

    std::ostringstream scores_csv;
    scores_csv << "id,detector,score,label," << provenance_header() << '\n';
    for (std::size_t i = 0; i < items.size(); ++i) {
        for (const auto& det : detectors) {
            scores_csv << i << ',' << det.name << ',' << fmt_double(scores[i].*(det.member))
                       << ',' << (items[i].family == Family::A ? "in" : "out") << ','
                       << provenance_row(cfg) << '\n';
        }
    }
    write_file(paths.report("ood_scores.csv"), scores_csv.str());

    std::ostringstream family_csv;
    family_csv << "family,detector,mean_score," << provenance_header() << '\n';
    for (const Family fam : {Family::A, Family::B, Family::C}) {
        for (const auto& det : detectors) {
            double acc = 0.0;
            std::size_t n = 0;
            for (std::size_t i = 0; i < items.size(); ++i) {
                if (items[i].family != fam) continue;
                acc += scores[i].*(det.member);
                ++n;
            }
            family_csv << family_letter(fam) << ',' << det.name << ','
                       << fmt_double(n ? acc / static_cast<double>(n) : kNaN) << ','
                       << provenance_row(cfg) << '\n';
        }
    }
    write_file(paths.report("ood_family_means.csv"), family_csv.str());

    std::vector<OodSummaryRow> summary;
    std::ostringstream auroc_csv;
    auroc_csv << "detector,split,auroc," << provenance_header() << '\n';
    for (const auto& det : detectors) {
        for (const bool include_b : {true, false}) {
            std::vector<double> s;
            std::vector<int> labels;
            for (std::size_t i = 0; i < items.size(); ++i) {
                if (!include_b && items[i].family == Family::B) continue;
                s.push_back(scores[i].*(det.member));
                labels.push_back(items[i].family == Family::A ? 0 : 1);
            }
            const RocCurve curve = roc_auroc(s, labels);
            const std::string split = include_b ? "a_vs_bc" : "a_vs_c";
            std::ostringstream roc_csv;
            roc_csv << "fpr,tpr\n";
            for (const RocPoint& p : curve.points) {
                roc_csv << fmt_double(p.fpr) << ',' << fmt_double(p.tpr) << '\n';
            }
            write_file(paths.report("ood_roc_" + std::string(det.name) + "_" + split + ".csv"),
                       roc_csv.str());
            auroc_csv << det.name << ',' << split << ',' << fmt_double(curve.auroc) << ','
                      << provenance_row(cfg) << '\n';
            summary.push_back({det.name, split, curve.auroc});
        }
    }
    write_file(paths.report("ood_auroc.csv"), auroc_csv.str());
    return summary;
}

std::vector<AblateRow> cmd_ablate_no_identity(const ExperimentConfig& cfg) {
    const OutPaths paths(cfg.out_dir);
    fs::create_directories(paths.reports_dir);
    fs::create_directories(paths.checkpoints_dir);
    fs::create_directories(paths.logs_dir);
    const Dataset ds = load_experiment_dataset(cfg, paths);
    const Checkpoint base = load_role_checkpoint(paths, "base", ModelKind::base);
    const Checkpoint cap = load_role_checkpoint(paths, "cap", ModelKind::cap);

    TrainConfig tc = cfg.train_cap_cfg;
    tc.seed = derive_seed(cfg.seed, "train-cap-noid");
    tc.lambda0 = 0.0;  // removes the identity mapping term
    const TrainResult noid = train_cap(base, ds, tc);
    save_checkpoint(paths.checkpoint("cap_noid"), noid.checkpoint);
    write_train_log_csv(paths.train_log("cap_noid"), noid.log);

    const SplitData data = collect_split(ds, base.model.trunk(), Split::test);
    const std::size_t n_img = data.xs.size();

    const auto eval_cap = [&](const Model& model, const std::string& name) {
        std::vector<PredictiveMap> maps(n_img);
        parallel_for(n_img, [&](std::size_t i) {
            maps[i] = cap_forward(model, data.y_hats[i]);
        });
        std::vector<double> sq_err, var;
        std::vector<Tensor> recon(n_img);
        for (std::size_t i = 0; i < n_img; ++i) {
            recon[i] = maps[i].y_tilde;
            for (std::size_t k = 0; k < data.ys[i].size(); ++k) {
                const double e = data.y_hats[i][k] - data.ys[i][k];
                sq_err.push_back(e * e);
                var.push_back(maps[i].variance[k]);
            }
        }
        AblateRow row;
        row.model = name;
        row.uce = uce(sq_err, var, cfg.metrics.bins).uce;
        row.c_coeff = pearson_corr(sq_err, var);
        row.ssim_recon = mean_image_ssim(recon, data.y_hats, cfg.metrics.ssim_window);
        return row;
    };

    std::vector<AblateRow> rows{eval_cap(cap.model, "cap"),
                                eval_cap(noid.checkpoint.model, "cap-noid")};

    std::ostringstream csv;
    csv << "model,uce,c_coeff,ssim_recon," << provenance_header() << '\n';
    for (const AblateRow& r : rows) {
        csv << r.model << ',' << fmt_double(r.uce) << ',' << fmt_double(r.c_coeff) << ','
            << fmt_double(r.ssim_recon) << ',' << provenance_row(cfg) << '\n';
    }
    write_file(paths.report("ablate.csv"), csv.str());
    return rows;
}

std::vector<RecalibrateRow> cmd_recalibrate(const ExperimentConfig& cfg, Split fit_split) {
    const OutPaths paths(cfg.out_dir);
    fs::create_directories(paths.reports_dir);
    const Dataset ds = load_experiment_dataset(cfg, paths);
    const Checkpoint base = load_role_checkpoint(paths, "base", ModelKind::base);
    const Checkpoint cap = load_role_checkpoint(paths, "cap", ModelKind::cap);
    const Checkpoint sg = load_role_checkpoint(paths, "scratch_gauss", ModelKind::scratch_gauss);
    const Checkpoint sggd = load_role_checkpoint(paths, "scratch_ggd", ModelKind::scratch_ggd);

    const SplitData fit = collect_split(ds, base.model.trunk(), fit_split);
    const SplitData test = collect_split(ds, base.model.trunk(), Split::test);

    struct ModelStreams {
        std::vector<double> residual;
        std::vector<double> var;
        std::vector<double> sq_err;
    };

    const auto collect = [&](const SplitData& data, const std::string& model) {
        ModelStreams out;
        const std::size_t n_img = data.xs.size();
        std::vector<PredictiveMap> maps(n_img);
        if (model == "cap") {
            parallel_for(n_img, [&](std::size_t i) {
                maps[i] = cap_forward(cap.model, data.y_hats[i]);
            });
        } else {
            const Checkpoint& ck = model == "scratch-gauss" ? sg : sggd;
            parallel_for(n_img, [&](std::size_t i) {
                maps[i] = scratch_forward(ck.model, data.xs[i]);
            });
        }
        for (std::size_t i = 0; i < n_img; ++i) {
            const Tensor& point = model == "cap" ? data.y_hats[i] : maps[i].y_tilde;
            for (std::size_t k = 0; k < data.ys[i].size(); ++k) {
                const double e = point[k] - data.ys[i][k];
                out.residual.push_back(e);
                out.sq_err.push_back(e * e);
                out.var.push_back(std::max(maps[i].variance[k], kVarFloor));
            }
        }
        return out;
    };

    std::vector<RecalibrateRow> rows;
    for (const std::string model : {"cap", "scratch-gauss", "scratch-ggd"}) {
        const ModelStreams f = collect(fit, model);
        const ModelStreams t = collect(test, model);
        RecalibrateRow row;
        row.model = model;
        row.s_star = variance_scaling_fit(f.residual, f.var);
        row.uce_pre = uce(t.sq_err, t.var, cfg.metrics.bins).uce;
        std::vector<double> scaled = t.var;
        for (double& v : scaled) v *= row.s_star * row.s_star;
        row.uce_post = uce(t.sq_err, scaled, cfg.metrics.bins).uce;
        rows.push_back(row);
    }

    std::ostringstream csv;
    csv << "model,fit_split,s_star,uce_pre,uce_post," << provenance_header() << '\n';
    for (const RecalibrateRow& r : rows) {
        csv << r.model << ',' << split_name(fit_split) << ',' << fmt_double(r.s_star) << ','
            << fmt_double(r.uce_pre) << ',' << fmt_double(r.uce_post) << ','
            << provenance_row(cfg) << '\n';
    }
    write_file(paths.report("recalibrate.csv"), csv.str());
    return rows;
}

}  // namespace idcap
