#pragma once

#include "alignaudit/backend/backend.hpp"
#include "alignaudit/common/error.hpp"
#include "alignaudit/report/artifacts.hpp"
#include "alignaudit/report/config.hpp"

#include <iosfwd>
#include <memory>
#include <string>

namespace alignaudit::report {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,  // internal or data error outside the categories below
    kExitConfig = 2,
    kExitBackend = 3,
    kExitPartial = 4,  // backend failed after progress was checkpointed; rerun with --resume
};

/// Backend failure after some work was checkpointed.
class PartialRunError : public BackendError {
public:
    PartialRunError(const std::string& what, std::string checkpoint)
        : BackendError(what, true), checkpoint_(std::move(checkpoint)) {}
    const std::string& checkpoint() const noexcept { return checkpoint_; }

private:
    std::string checkpoint_;
};

struct CommandContext {
    std::string out_dir;
    bool resume = false;                        // reuse out_dir/checkpoint
    std::shared_ptr<backend::Backend> backend;  // replaces the configured backend when set
};

/// Survey simulation per persona culture: KL per question and dimension,
/// FF/CV rates, variation map, demographic mismatch composition.
AuditReport cmd_survey(const RunConfig& config, const CommandContext& ctx);
/// Every corpus sequence with and without consequences: preference, flip,
/// agreement and MFT rank volatility.
AuditReport cmd_dilemma(const RunConfig& config, const CommandContext& ctx);
/// Toy first-token alignment: ZS/FT/ctrl table, relative gain, training
/// curve, training-data export (alone when align.export_only is set).
AuditReport cmd_align(const RunConfig& config, const CommandContext& ctx);
/// Four-stage simulations, single-prompt baselines, scores per pairing
/// setting and deltas.
AuditReport cmd_mark(const RunConfig& config, const CommandContext& ctx);

/// "34.3%": relative gain of ft over zs, in percent with one decimal.
std::string relative_gain_cell(double zs_mean, double ft_mean);

int exit_code_for(const std::exception& e);

/// Takes the output lock, runs `command` (survey|dilemma|align|mark), writes
/// the report, and records timestamps in run_meta.json (outside the
/// manifest). Errors are printed to `err` and mapped to an exit code.
int run_command(const std::string& command, const RunConfig& config, const CommandContext& ctx, std::ostream& err);

/// Verifies out_dir/manifest.json and re-renders the figures from
/// report.json, checking they match the stored SVG bytes.
int verify_report(const std::string& out_dir, std::ostream& out, std::ostream& err);

}  // namespace alignaudit::report
