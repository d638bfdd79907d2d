// idcap: dataset generation, training, evaluation and the ablation sweeps
// for the post-hoc uncertainty cap, driven by a key=value config file.
//
// Exit codes: 0 ok, 2 config error, 3 missing artifact, 4 numerical
// divergence, 1 anything else.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "idcap/config.hpp"
#include "idcap/errors.hpp"
#include "idcap/experiment.hpp"
#include "idcap/format.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<uint64_t> seed_override;
    std::optional<std::string> out_override;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config file")->required();
    cmd->add_option("--seed", args.seed_override, "override the master seed");
    cmd->add_option("--out", args.out_override, "override the output directory");
}

idcap::ExperimentConfig load(const CommonArgs& args) {
    idcap::ExperimentConfig cfg = idcap::parse_config_file(args.config_path);
    if (args.seed_override) cfg.seed = *args.seed_override;
    if (args.out_override) cfg.out_dir = *args.out_override;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"post-hoc uncertainty cap experiments"};
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, eval_args, sweep_args, frac_args, ood_args, ablate_args,
        recal_args;
    std::string train_role = "base";
    std::string eval_split = "test";
    std::string recal_split = "val";

    CLI::App* gen = app.add_subcommand("gen-data", "materialize the synthetic dataset");
    add_common(gen, gen_args);

    CLI::App* train = app.add_subcommand("train", "train one model role");
    add_common(train, train_args);
    train->add_option("--role", train_role, "base | cap | scratch-gauss | scratch-ggd")
        ->required();

    CLI::App* evaluate = app.add_subcommand("evaluate", "calibration report for all methods");
    add_common(evaluate, eval_args);
    evaluate->add_option("--split", eval_split, "train | val | test");

    CLI::App* sweep = app.add_subcommand("degrade-sweep", "identity-degradation sweep");
    add_common(sweep, sweep_args);

    CLI::App* frac = app.add_subcommand("data-efficiency", "training-set fraction sweep");
    add_common(frac, frac_args);

    CLI::App* ood = app.add_subcommand("ood", "out-of-distribution detection");
    add_common(ood, ood_args);

    CLI::App* ablate = app.add_subcommand("ablate-no-identity", "cap without the identity term");
    add_common(ablate, ablate_args);

    CLI::App* recal = app.add_subcommand("recalibrate", "variance-scaling recalibration");
    add_common(recal, recal_args);
    recal->add_option("--split", recal_split, "split used to fit the scale (train | val | test)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            idcap::cmd_gen_data(load(gen_args));
            std::printf("dataset written\n");
        } else if (train->parsed()) {
            const std::string path =
                idcap::cmd_train(load(train_args), idcap::role_from_name(train_role));
            std::printf("checkpoint: %s\n", path.c_str());
        } else if (evaluate->parsed()) {
            const auto reports =
                idcap::cmd_evaluate(load(eval_args), idcap::split_from_name(eval_split));
            for (const auto& r : reports) {
                std::printf("%-14s psnr %7.3f ssim %6.4f uce %s c.coeff %s\n", r.method.c_str(),
                            r.psnr, r.ssim, idcap::fmt_double(r.uce).c_str(),
                            idcap::fmt_double(r.c_coeff).c_str());
            }
        } else if (sweep->parsed()) {
            const auto rows = idcap::cmd_degrade_sweep(load(sweep_args));
            for (const auto& r : rows) {
                std::printf("kappa %.4f ssim %.4f uce(cap) %s\n", r.kappa, r.ssim_recon,
                            idcap::fmt_double(r.uce_cap).c_str());
            }
        } else if (frac->parsed()) {
            const auto rows = idcap::cmd_data_efficiency(load(frac_args));
            for (const auto& r : rows) {
                std::printf("fraction %.2f %-12s ssim %.4f uce %s\n", r.fraction,
                            r.model.c_str(), r.ssim_vs_target,
                            idcap::fmt_double(r.uce).c_str());
            }
        } else if (ood->parsed()) {
            const auto rows = idcap::cmd_ood(load(ood_args));
            for (const auto& r : rows) {
                std::printf("%-20s %-8s auroc %.4f\n", r.detector.c_str(), r.split.c_str(),
                            r.auroc);
            }
        } else if (ablate->parsed()) {
            const auto rows = idcap::cmd_ablate_no_identity(load(ablate_args));
            for (const auto& r : rows) {
                std::printf("%-9s uce %s c.coeff %s\n", r.model.c_str(),
                            idcap::fmt_double(r.uce).c_str(),
                            idcap::fmt_double(r.c_coeff).c_str());
            }
        } else if (recal->parsed()) {
            const auto rows = idcap::cmd_recalibrate(load(recal_args),
                                                     idcap::split_from_name(recal_split));
            for (const auto& r : rows) {
                std::printf("%-14s s* %.4f uce %s -> %s\n", r.model.c_str(), r.s_star,
                            idcap::fmt_double(r.uce_pre).c_str(),
                            idcap::fmt_double(r.uce_post).c_str());
            }
        }
    } catch (const idcap::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const idcap::missing_artifact_error& e) {
        std::fprintf(stderr, "missing artifact: %s\n", e.what());
        return 3;
    } catch (const idcap::numeric_error& e) {
        std::fprintf(stderr, "numerical divergence: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
