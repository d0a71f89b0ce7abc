#include "alignaudit/common/error.hpp"
#include "alignaudit/ftalign/alignment.hpp"
#include "alignaudit/metrics/agreement.hpp"
#include "alignaudit/metrics/divergence.hpp"
#include "alignaudit/metrics/hypothesis.hpp"
#include "alignaudit/report/commands.hpp"
#include "alignaudit/report/config.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace alignaudit;

namespace {

metrics::ProbDist dist(const std::vector<double>& mass) {
    return metrics::ProbDist(metrics::letter_labels(mass.size()), mass);
}

std::vector<ftalign::AlignmentExample> examples_of(const std::map<std::string, std::vector<double>>& targets) {
    std::vector<ftalign::AlignmentExample> out;
    for (const auto& [key, mass] : targets) out.push_back({key, dist(mass)});
    return out;
}

ftalign::EvalMode eval_mode(const std::string& s) {
    for (auto m : {ftalign::EvalMode::ZS, ftalign::EvalMode::FT, ftalign::EvalMode::ZS_ctrl, ftalign::EvalMode::FT_ctrl})
        if (ftalign::to_string(m) == s) return m;
    throw ConfigError("unknown evaluation mode '" + s + "'");
}

py::dict train_and_evaluate(const std::map<std::string, std::vector<double>>& targets, double learning_rate,
                            int max_epochs, std::uint64_t seed, const std::vector<std::string>& modes) {
    const auto ex = examples_of(targets);
    ftalign::TrainConfig cfg;
    cfg.learning_rate = learning_rate;
    cfg.max_epochs = max_epochs;
    cfg.seed = seed;
    const auto initial = ftalign::initial_model(ex, seed);
    const auto res = ftalign::train(initial, ex, cfg);
    py::dict scores;
    for (const auto& m : modes) {
        const auto mode = eval_mode(m);
        const bool zero_shot = mode == ftalign::EvalMode::ZS || mode == ftalign::EvalMode::ZS_ctrl;
        scores[py::str(m)] = ftalign::evaluate(zero_shot ? initial : res.model, ex, {mode, seed}).mean;
    }
    py::dict out;
    out["initial_loss"] = res.initial_loss;
    out["loss"] = res.loss_history.empty() ? res.initial_loss : res.loss_history.back();
    out["epochs"] = res.epochs;
    out["converged"] = res.converged;
    out["scores"] = scores;
    return out;
}

int run_command(const std::string& command, const std::string& config_path, const std::string& out_dir,
                std::optional<std::uint64_t> seed, std::optional<std::string> backend, bool resume) {
    std::ostringstream err;
    int code = report::kExitOk;
    try {
        const auto cfg = report::load_run_config(config_path, {seed, backend});
        py::gil_scoped_release release;
        code = report::run_command(command, cfg, {out_dir, resume, nullptr}, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        code = report::exit_code_for(e);
    }
    if (code != report::kExitOk) {
        py::print(err.str(), py::arg("end") = "", py::arg("file") = py::module_::import("sys").attr("stderr"));
    }
    return code;
}

py::tuple verify_report(const std::string& out_dir) {
    std::ostringstream out, err;
    const int code = report::verify_report(out_dir, out, err);
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_alignaudit, m) {
    m.doc() = "Cross-cultural value alignment audits: metrics, toy alignment and report commands";

    py::register_exception<Error>(m, "AlignAuditError");

    m.def("kl_divergence", [](const std::vector<double>& p, const std::vector<double>& q, double epsilon) {
        return metrics::kl_divergence(dist(p), dist(q), epsilon);
    }, py::arg("p"), py::arg("q"), py::arg("epsilon") = metrics::kDefaultKlEpsilon, "KL(p || q) in nats.");
    m.def("jensen_shannon", [](const std::vector<double>& p, const std::vector<double>& q) {
        return metrics::jensen_shannon(dist(p), dist(q));
    }, py::arg("p"), py::arg("q"), "Jensen-Shannon divergence, base 2.");
    m.def("emd_ordinal", [](const std::vector<double>& p, const std::vector<double>& q) {
        return metrics::emd_ordinal(dist(p), dist(q));
    }, py::arg("p"), py::arg("q"), "Earth mover's distance over ordered options, scaled to [0, 1].");
    m.def("cohens_kappa", [](const metrics::ConfusionMatrix& confusion) {
        const auto r = metrics::cohens_kappa(confusion);
        py::dict d;
        d["kappa"] = r.kappa;
        d["observed_agreement"] = r.observed_agreement;
        d["chance_agreement"] = r.chance_agreement;
        d["degenerate"] = r.degenerate;
        return d;
    }, py::arg("confusion"));
    m.def("two_sample_t", [](double mean_a, double sem_a, std::size_t n_a, double mean_b, double sem_b, std::size_t n_b) {
        const auto r = metrics::two_sample_t(metrics::TwoSampleSummary::from_sem(mean_a, sem_a, n_a),
                                             metrics::TwoSampleSummary::from_sem(mean_b, sem_b, n_b));
        py::dict d;
        d["t"] = r.t;
        d["df"] = r.df;
        d["sed"] = r.sed;
        return d;
    }, py::arg("mean_a"), py::arg("sem_a"), py::arg("n_a"), py::arg("mean_b"), py::arg("sem_b"), py::arg("n_b"));
    m.def("wilcoxon_signed_rank", [](const std::vector<double>& diffs) {
        const auto r = metrics::wilcoxon_signed_rank(diffs);
        py::dict d;
        d["statistic"] = r.statistic;
        d["w_plus"] = r.w_plus;
        d["w_minus"] = r.w_minus;
        d["n"] = r.n;
        d["p_value"] = r.p_value;
        d["exact"] = r.exact;
        return d;
    }, py::arg("diffs"));

    m.def("relative_gain", &ftalign::relative_gain, py::arg("zs_mean"), py::arg("ft_mean"));
    m.def("relative_gain_cell", &report::relative_gain_cell, py::arg("zs_mean"), py::arg("ft_mean"));
    m.def("train_and_evaluate", &train_and_evaluate, py::arg("targets"), py::arg("learning_rate") = 0.5,
          py::arg("max_epochs") = 500, py::arg("seed") = 0,
          py::arg("modes") = std::vector<std::string>{"ZS", "FT", "FT [ctrl]"},
          "Fits the toy model to {\"question|country\": option masses} and scores the requested protocols.");

    m.def("run_command", &run_command, py::arg("command"), py::arg("config"), py::arg("out_dir"),
          py::arg("seed") = py::none(), py::arg("backend") = py::none(), py::arg("resume") = false,
          "Runs survey, dilemma, align or mark; returns the CLI exit code.");
    m.def("verify_report", &verify_report, py::arg("out_dir"), "Returns (exit code, stdout, stderr).");
    m.attr("DATA_DIR") = ALIGNAUDIT_DATA_DIR;
}
