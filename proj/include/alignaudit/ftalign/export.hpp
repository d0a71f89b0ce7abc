#pragma once

#include "alignaudit/ftalign/alignment.hpp"
#include "alignaudit/survey/question.hpp"

#include <string>
#include <vector>

namespace alignaudit::ftalign {

/// Reads "question_id,country,option_index,proportion" rows (option_index
/// 0-based, optional "demographic" column) into examples keyed
/// "question_id|country[|demographic]". Labels come from `questions`.
std::vector<AlignmentExample> load_country_distributions(const std::string& path,
                                                         const std::vector<survey::SurveyQuestion>& questions);

std::string default_export_template();

struct ExportOptions {
    std::string prompt_template = default_export_template();  // {question} {options} {country} {demographic}
    std::string option_token_prefix = " ";
};

struct ExportRecord {
    std::string context_key;
    std::string prompt;
    std::vector<std::string> option_tokens;
    metrics::ProbDist target;
};

struct ExportManifest {
    std::string data_file;  // file name relative to the output directory
    std::string sha256;
    std::size_t records = 0;
    std::string template_sha256;
};

/// Renders every example and writes `<out_dir>/train.jsonl` (one JSON object
/// per line: context_key, prompt, option_tokens, target_distribution) and
/// `<out_dir>/manifest.json`. All examples are checked first: labels must be
/// single alphanumeric characters and the template must render; every
/// offending context is listed in one ConfigError before anything is written.
ExportManifest export_training_data(const std::vector<AlignmentExample>& examples,
                                    const std::vector<survey::SurveyQuestion>& questions, const std::string& out_dir,
                                    const ExportOptions& options = {});

std::vector<ExportRecord> read_training_data(const std::string& path);

}  // namespace alignaudit::ftalign
