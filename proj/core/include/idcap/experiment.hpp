#pragma once

#include <string>

#include "idcap/config.hpp"
#include "idcap/metrics.hpp"
#include "idcap/synth_data.hpp"

namespace idcap {

enum class Role { base, cap, scratch_gauss, scratch_ggd };
const char* role_name(Role r);
Role role_from_name(const std::string& name);

/// Output locations under the experiment directory.
struct OutPaths {
    explicit OutPaths(const std::string& root);
    std::string root;
    std::string dataset_dir;
    std::string manifest;
    std::string checkpoints_dir;
    std::string logs_dir;
    std::string reports_dir;
    std::string checkpoint(const std::string& name) const;
    std::string train_log(const std::string& name) const;
    std::string report(const std::string& name) const;
};

/// Per-(method, split) evaluation result; one CSV row.
struct CalibrationReport {
    std::string method;
    std::string split;
    double psnr = 0.0;
    double ssim = 0.0;
    double ssim_recon = 0.0;  // cap reconstruction vs base output; NaN elsewhere
    double uce = 0.0;
    double c_coeff = 0.0;
    double ece = 0.0;
    double sharpness = 0.0;
    double nll = 0.0;
    std::string nll_convention;
    std::size_t n_pixels = 0;
    std::size_t n_bins = 0;
};

/// Materializes the dataset (tensor files, manifest, preview images).
void cmd_gen_data(const ExperimentConfig& cfg);

/// Trains one role and saves checkpoint plus training-log CSV. Returns the
/// checkpoint path. The cap and scratch roles require artifacts produced by
/// earlier commands and throw missing_artifact_error otherwise.
std::string cmd_train(const ExperimentConfig& cfg, Role role);

/// Writes one CalibrationReport row per method to reports/evaluate.csv and
/// per-bin reliability CSVs per method.
std::vector<CalibrationReport> cmd_evaluate(const ExperimentConfig& cfg, Split split);

/// Identity-degradation sweep: inference-time noise of magnitude kappa on
/// the cap inputs; records reconstruction SSIM and the UCE of cap, combined
/// TTDA and the two constant controls against the degraded-prediction
/// errors. Writes reports/degrade_sweep.csv.
struct DegradeSweepRow {
    double kappa = 0.0;
    double ssim_recon = 0.0;
    double uce_cap = 0.0;
    double uce_ttda_pac = 0.0;
    double uce_const_low = 0.0;
    double uce_const_high = 0.0;
};
std::vector<DegradeSweepRow> cmd_degrade_sweep(const ExperimentConfig& cfg);

/// Retrains cap and GGD-scratch on nested fractions of the train split.
/// Writes reports/data_efficiency.csv.
struct DataEfficiencyRow {
    double fraction = 0.0;
    std::string model;
    double ssim_vs_target = 0.0;
    double ssim_recon = 0.0;  // cap only
    double uce = 0.0;
    std::size_t epochs_to_plateau = 0;
};
std::vector<DataEfficiencyRow> cmd_data_efficiency(const ExperimentConfig& cfg);

/// Scores the three OOD detectors over the in-distribution test split and
/// two generated OOD families; writes score, ROC, AUROC and family-mean
/// CSVs.
struct OodSummaryRow {
    std::string detector;
    std::string split;  // a_vs_bc or a_vs_c
    double auroc = 0.0;
};
std::vector<OodSummaryRow> cmd_ood(const ExperimentConfig& cfg);

/// Trains a cap with the identity term disabled (lambda == 0) and compares
/// it against the full cap. Writes reports/ablate.csv.
struct AblateRow {
    std::string model;
    double uce = 0.0;
    double c_coeff = 0.0;
    double ssim_recon = 0.0;
};
std::vector<AblateRow> cmd_ablate_no_identity(const ExperimentConfig& cfg);

/// Fits the variance-scaling factor on the given split and reports test UCE
/// before and after rescaling for every variance-producing model. Writes
/// reports/recalibrate.csv.
struct RecalibrateRow {
    std::string model;
    double s_star = 1.0;
    double uce_pre = 0.0;
    double uce_post = 0.0;
};
std::vector<RecalibrateRow> cmd_recalibrate(const ExperimentConfig& cfg, Split fit_split);

}  // namespace idcap
