#include "alignaudit/report/commands.hpp"

#include "alignaudit/common/hash.hpp"
#include "alignaudit/common/parallel.hpp"
#include "alignaudit/common/text.hpp"
#include "alignaudit/dilemma/runner.hpp"
#include "alignaudit/dilemma/scenario.hpp"
#include "alignaudit/dilemma/statistics.hpp"
#include "alignaudit/ftalign/alignment.hpp"
#include "alignaudit/ftalign/export.hpp"
#include "alignaudit/mark/scoring.hpp"
#include "alignaudit/mark/simulate.hpp"
#include "alignaudit/report/backends.hpp"
#include "alignaudit/survey/analysis.hpp"
#include "alignaudit/survey/insensitivity.hpp"
#include "alignaudit/survey/persona.hpp"
#include "alignaudit/survey/runner.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace alignaudit::report {

namespace {

// Collects configuration problems so they are reported together before any
// backend call.
class Preflight {
public:
    explicit Preflight(const RunConfig& cfg) : cfg_(cfg) {}

    std::string path(const nlohmann::json& section, const std::string& section_name, const std::string& key,
                     bool required, const std::string& fallback = {}) {
        std::string raw;
        try {
            raw = get_or<std::string>(section, key, fallback);
        } catch (const ConfigError& e) {
            problems_.push_back(section_name + "." + key + ": " + e.what());
            return {};
        }
        if (raw.empty()) {
            if (required) problems_.push_back(section_name + "." + key + ": required path missing");
            return {};
        }
        std::string resolved = cfg_.resolve(raw);
        if (!fs::exists(resolved)) problems_.push_back(section_name + "." + key + ": no such file: " + resolved);
        return resolved;
    }

    template <typename Fn>
    void check(const std::string& what, Fn&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            problems_.push_back(what + ": " + e.what());
        } catch (const nlohmann::json::exception& e) {
            problems_.push_back(what + ": " + e.what());
        }
    }

    void finish() const {
        if (!problems_.empty()) {
            throw ConfigError("configuration invalid (" + std::to_string(problems_.size()) + " problem(s)):\n  " +
                              join(problems_, "\n  "));
        }
    }

private:
    const RunConfig& cfg_;
    std::vector<std::string> problems_;
};

std::shared_ptr<backend::Backend> backend_for(const RunConfig& cfg, const CommandContext& ctx) {
    return ctx.backend ? ctx.backend : make_backend(cfg);
}

std::string checkpoint_path(const CommandContext& ctx, const std::string& name) {
    return (fs::path(ctx.out_dir) / "checkpoint" / name).string();
}

// Appends JSON lines; a torn final line from a crash is ignored on reload.
class Checkpoint {
public:
    Checkpoint(std::string path, bool resume) : path_(std::move(path)) {
        fs::create_directories(fs::path(path_).parent_path());
        if (!resume) {
            std::error_code ec;
            fs::remove(path_, ec);
        }
    }

    std::vector<nlohmann::json> load() const {
        std::vector<nlohmann::json> out;
        std::ifstream in(path_);
        std::string line;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            try {
                out.push_back(nlohmann::json::parse(line));
            } catch (const nlohmann::json::exception&) {
                break;
            }
        }
        return out;
    }

    void append(const std::vector<nlohmann::json>& items) {
        std::lock_guard lock(mu_);
        std::ofstream out(path_, std::ios::app);
        for (const auto& j : items) out << j.dump() << '\n';
        out.flush();
        if (!out) throw BackendError("cannot write checkpoint " + path_, false);
        written_ += items.size();
    }

    std::size_t written() const { return written_; }
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::mutex mu_;
    std::size_t written_ = 0;
};

std::vector<std::string> backend_ids(const backend::Backend& b) { return {b.id()}; }

void add_figure(AuditReport& r, FigureSpec spec) { r.figures.push_back(std::move(spec)); }

// ---------------------------------------------------------------- survey

survey::DiversityConfig diversity_from(const nlohmann::json& j) {
    survey::DiversityConfig d;
    d.location_pool = get_or<std::vector<std::string>>(j, "location_pool", d.location_pool);
    d.paraphrase_count = get_or<int>(j, "paraphrase_count", d.paraphrase_count);
    for (const char* key : {"temperature", "max_tokens"}) {
        if (j.contains(key)) {
            auto range = get_or<std::vector<double>>(j, key, {});
            if (range.size() != 2) throw ConfigError(std::string("diversity.") + key + " must be [min, max]");
            d.generation_param_ranges[key] = {range[0], range[1]};
        }
    }
    const auto policy = get_or<std::string>(j, "memory_policy", "stateless");
    if (policy == "stateless") {
        d.memory_policy = survey::MemoryPolicy::Stateless;
    } else if (policy == "sliding_window") {
        d.memory_policy = survey::MemoryPolicy::SlidingWindow;
    } else {
        throw ConfigError("diversity.memory_policy must be stateless|sliding_window");
    }
    d.memory_window = get_or<int>(j, "memory_window", d.memory_window);
    d.invalid_retry_limit = get_or<int>(j, "invalid_retry_limit", d.invalid_retry_limit);
    d.detect_conflicts = get_or<bool>(j, "detect_conflicts", d.detect_conflicts);
    d.concurrency = get_or<std::size_t>(j, "concurrency", d.concurrency);
    survey::validate(d);
    return d;
}

survey::PersonaMarginals marginals_from(const nlohmann::json& j) {
    survey::PersonaMarginals m;
    if (j.contains("gender")) {
        auto g = get_or<std::vector<double>>(j, "gender", {});
        if (g.size() != 2) throw ConfigError("personas.marginals.gender needs 2 weights");
        m.gender = {g[0], g[1]};
    }
    if (j.contains("age")) {
        auto a = get_or<std::vector<double>>(j, "age", {});
        if (a.size() != 3) throw ConfigError("personas.marginals.age needs 3 weights");
        m.age = {a[0], a[1], a[2]};
    }
    return m;
}

}  // namespace

AuditReport cmd_survey(const RunConfig& cfg, const CommandContext& ctx) {
    const auto& s = cfg.section("survey");
    Preflight pre(cfg);
    const auto questions_path = pre.path(s, "survey", "questions", true);
    const auto human_path = pre.path(s, "survey", "human", true);
    const auto template_path = pre.path(s, "survey", "prompt_template", false);
    survey::DiversityConfig diversity;
    survey::PersonaMarginals marginals;
    std::size_t persona_count = 0;
    std::vector<survey::Culture> cultures;
    survey::DistributionMode mode = survey::DistributionMode::Hard;
    survey::AlignmentOptions align_opts;
    int likert_tolerance = 1;
    pre.check("survey.diversity", [&] { diversity = diversity_from(s.value("diversity", nlohmann::json::object())); });
    pre.check("survey.personas", [&] {
        const auto p = s.value("personas", nlohmann::json::object());
        persona_count = get_or<std::size_t>(p, "count", 20);
        if (persona_count == 0) throw ConfigError("count must be > 0");
        marginals = marginals_from(p.value("marginals", nlohmann::json::object()));
    });
    pre.check("survey.cultures", [&] {
        for (const auto& c : get_or<std::vector<std::string>>(s, "cultures", {"US", "CN"})) {
            cultures.push_back(survey::parse_culture(c));
        }
        if (cultures.empty()) throw ConfigError("at least one culture");
    });
    pre.check("survey.distribution_mode", [&] {
        const auto m = get_or<std::string>(s, "distribution_mode", "hard");
        if (m == "hard") {
            mode = survey::DistributionMode::Hard;
        } else if (m == "soft") {
            mode = survey::DistributionMode::Soft;
        } else {
            throw ConfigError("expected hard|soft");
        }
    });
    pre.check("survey.kl_direction", [&] {
        const auto d = get_or<std::string>(s, "kl_direction", "human_to_model");
        if (d == "human_to_model") {
            align_opts.direction = survey::KlDirection::HumanToModel;
        } else if (d == "model_to_human") {
            align_opts.direction = survey::KlDirection::ModelToHuman;
        } else {
            throw ConfigError("expected human_to_model|model_to_human");
        }
        align_opts.epsilon = get_or<double>(s, "kl_epsilon", align_opts.epsilon);
    });
    pre.check("survey.likert_tolerance", [&] { likert_tolerance = get_or<int>(s, "likert_tolerance", 1); });
    std::vector<survey::SurveyQuestion> questions;
    survey::HumanDataset human;
    std::string prompt_template;
    pre.finish();
    questions = survey::load_questions(questions_path);
    human = survey::load_human_distributions(human_path, questions);
    if (!template_path.empty()) prompt_template = read_file(template_path);

    auto be = backend_for(cfg, ctx);
    AuditReport report;
    report.command = "survey";
    report.config_digest = cfg.digest();
    report.backends = backend_ids(*be);

    Table kl_q{"kl_by_question", {"culture", "question_id", "value_dimension", "kl"}, {}};
    Table kl_d{"kl_by_dimension", {"culture", "value_dimension", "kl"}, {}};
    Table kl_o{"kl_overall", {"culture", "kl", "questions", "missing_human", "missing_model"}, {}};
    Table ins{"insensitivity", {"culture", "measure", "rate", "count", "evaluated"}, {}};
    Table flags{"insensitivity_flags", {"culture", "persona_index", "question_id", "kind", "evidence"}, {}};
    Table vmap{"variation_map", {"persona_culture", "kl_to_us", "kl_to_cn"}, {}};
    Table mism{"mismatch_summary", {"culture", "evaluated", "mismatches", "excluded", "mismatch_rate"}, {}};
    Table by_gender{"mismatch_by_gender", {"culture", "male", "female"}, {}};
    Table by_age{"mismatch_by_age", {"culture", "under_29", "30_49", "50_plus"}, {}};
    Table counts{"run_counts", {"culture", "personas", "records", "dropped", "retries"}, {}};
    Table dists{"model_distributions", {"culture", "question_id", "option", "model_p", "human_p"}, {}};

    std::map<survey::Culture, survey::VariationPoint> points;
    std::size_t checkpointed = 0;
    std::string last_checkpoint;
    for (auto culture : cultures) {
        auto m = marginals;
        m.culture = culture == survey::Culture::US ? std::array<double, 2>{1.0, 0.0} : std::array<double, 2>{0.0, 1.0};
        const auto seed = mix_seed(cfg.seed(), static_cast<std::uint64_t>(culture));
        auto personas = survey::generate_personas(m, persona_count, seed, diversity.location_pool);

        Checkpoint cp(checkpoint_path(ctx, "survey_" + survey::to_string(culture) + ".jsonl"), ctx.resume);
        survey::SurveyRunOptions opts;
        opts.prompt_template = prompt_template;
        if (ctx.resume) {
            for (const auto& j : cp.load()) opts.resume_records.push_back(survey::record_from_json(j));
            // Only personas whose records are complete count as done.
            std::map<std::size_t, std::size_t> per;
            for (const auto& r : opts.resume_records) ++per[r.persona_index];
            std::size_t expected_per_persona = 0;
            for (const auto& q : questions) {
                if (q.in_scope(culture)) expected_per_persona += static_cast<std::size_t>(diversity.paraphrase_count);
            }
            std::erase_if(opts.resume_records, [&](const survey::ResponseRecord& r) {
                return r.persona_index >= personas.size() || per[r.persona_index] != expected_per_persona;
            });
        }
        opts.on_persona_complete = [&cp](const std::vector<survey::ResponseRecord>& recs) {
            std::vector<nlohmann::json> lines;
            for (const auto& r : recs) lines.push_back(survey::to_json(r));
            cp.append(lines);
        };
        survey::SurveyRun run;
        try {
            run = survey::run_survey(*be, questions, personas, diversity, seed, opts);
        } catch (const BackendError& e) {
            checkpointed += cp.written() + opts.resume_records.size();
            last_checkpoint = cp.path();
            if (checkpointed > 0) throw PartialRunError(e.what(), last_checkpoint);
            throw;
        }
        // Earlier cultures count as saved progress if a later one fails.
        checkpointed += cp.written() + opts.resume_records.size();

        const auto cname = survey::to_string(culture);
        std::string records_jsonl;
        for (const auto& r : run.records) records_jsonl += survey::to_json(r).dump() + "\n";
        report.artifacts["records/survey_" + cname + ".jsonl"] = records_jsonl;
        counts.add_row({cname, std::to_string(personas.size()), std::to_string(run.records.size()),
                        std::to_string(run.drop_count), std::to_string(run.retry_count)});

        auto model = survey::model_distributions(run.records, questions, mode, culture);
        auto ca = survey::cultural_alignment(model, human, questions, culture, align_opts);
        for (const auto& q : questions) {
            auto it = ca.per_question.find(q.id);
            if (it != ca.per_question.end()) kl_q.add_row({cname, q.id, q.value_dimension, num(it->second)});
        }
        for (const auto& [dim, kl] : ca.per_dimension) kl_d.add_row({cname, dim, num(kl)});
        kl_o.add_row({cname, ca.per_question.empty() ? "NA" : num(ca.overall), std::to_string(ca.per_question.size()),
                      join(ca.missing_human, ";"), join(ca.missing_model, ";")});
        const auto pop = human.population(culture);
        for (const auto& q : questions) {
            auto mi = model.find(q.id);
            if (mi == model.end()) continue;
            auto hi = pop.find(q.id);
            for (std::size_t k = 0; k < mi->second.size(); ++k) {
                dists.add_row({cname, q.id, mi->second.labels()[k], num(mi->second[k]),
                               hi == pop.end() ? "NA" : num(hi->second[k])});
            }
        }

        auto ir = survey::insensitivity_report(run.records, questions, likert_tolerance);
        std::size_t ff = 0, cv = 0;
        for (const auto& f : ir.flagged) {
            const bool is_ff = f.kind == survey::InsensitivityKind::FalseFact;
            (is_ff ? ff : cv) += 1;
            flags.add_row({cname, std::to_string(f.persona_index), f.question_id, is_ff ? "FF" : "CV", f.evidence});
        }
        ins.add_row({cname, "FF", num(ir.ff_rate), std::to_string(ff), std::to_string(ir.ff_evaluated)});
        ins.add_row({cname, "CV", num(ir.cv_rate), std::to_string(cv), std::to_string(ir.cv_evaluated)});

        try {
            auto p = survey::variation_map_point(model, human, questions, align_opts);
            points[culture] = p;
            vmap.add_row({cname, num(p.kl_to_us), num(p.kl_to_cn)});
        } catch (const DegenerateInputError& e) {
            report.notes.push_back("variation map point for " + cname + " personas unavailable: " + e.what());
        }

        auto mp = survey::demographic_mismatch_profile(run.records, human);
        mism.add_row({cname, std::to_string(mp.evaluated), std::to_string(mp.mismatches), std::to_string(mp.excluded),
                      mp.evaluated ? num(static_cast<double>(mp.mismatches) / static_cast<double>(mp.evaluated))
                                   : "NA"});
        if (mp.mismatches > 0) {
            auto share = [](const std::map<std::string, double>& m, const std::string& k) {
                auto it = m.find(k);
                return num(it == m.end() ? 0.0 : it->second);
            };
            by_gender.add_row({cname, share(mp.gender_share, "male"), share(mp.gender_share, "female")});
            by_age.add_row({cname, share(mp.age_share, "under_29"), share(mp.age_share, "30_49"),
                            share(mp.age_share, "50_plus")});
        }
    }

    Table sep{"variation_separation", {"separation"}, {}};
    if (points.count(survey::Culture::US) && points.count(survey::Culture::CN)) {
        sep.add_row({num(survey::variation_separation(points[survey::Culture::US], points[survey::Culture::CN]))});
    }

    for (auto* t : {&kl_q, &kl_d, &kl_o, &ins, &flags, &vmap, &sep, &mism, &by_gender, &by_age, &counts, &dists}) {
        report.add_table(std::move(*t));
    }
    add_figure(report, {"kl_by_dimension.svg", FigureKind::Bar, "Mean KL per value dimension", "kl_by_dimension",
                        {"culture", "value_dimension"}, {"kl"}, "", "KL"});
    add_figure(report, {"insensitivity.svg", FigureKind::Bar, "Insensitivity rates", "insensitivity",
                        {"culture", "measure"}, {"rate"}, "", "rate"});
    add_figure(report, {"variation_map.svg", FigureKind::Scatter, "Variation map", "variation_map",
                        {"persona_culture"}, {"kl_to_us", "kl_to_cn"}, "KL to US", "KL to CN"});
    add_figure(report, {"mismatch_by_gender.svg", FigureKind::StackedBar, "Mismatch composition by gender",
                        "mismatch_by_gender", {"culture"}, {"male", "female"}, "", ""});
    add_figure(report, {"mismatch_by_age.svg", FigureKind::StackedBar, "Mismatch composition by age",
                        "mismatch_by_age", {"culture"}, {"under_29", "30_49", "50_plus"}, "", ""});
    return report;
}

// ---------------------------------------------------------------- dilemma

AuditReport cmd_dilemma(const RunConfig& cfg, const CommandContext& ctx) {
    const auto& d = cfg.section("dilemma");
    Preflight pre(cfg);
    const auto corpus_path = pre.path(d, "dilemma", "corpus", false);
    std::vector<std::string> variant_paths;
    pre.check("dilemma.variants", [&] {
        for (const auto& v : get_or<std::vector<std::string>>(d, "variants", {})) {
            variant_paths.push_back(cfg.resolve(v));
            if (!fs::exists(variant_paths.back())) throw ConfigError("no such file: " + variant_paths.back());
        }
    });
    bool carry_history = true;
    double temperature = 0.0;
    std::size_t concurrency = 4;
    pre.check("dilemma", [&] {
        carry_history = get_or<bool>(d, "carry_history", true);
        temperature = get_or<double>(d, "temperature", 0.0);
        concurrency = get_or<std::size_t>(d, "concurrency", 4);
        if (concurrency == 0) throw ConfigError("concurrency must be >= 1");
    });
    pre.finish();
    auto corpus = corpus_path.empty() ? dilemma::synthetic_corpus() : dilemma::load_corpus(corpus_path);
    std::vector<std::string> variants = dilemma::default_variants();
    if (!variant_paths.empty()) {
        variants.clear();
        for (const auto& p : variant_paths) variants.push_back(read_file(p));
    }

    auto be = backend_for(cfg, ctx);
    AuditReport report;
    report.command = "dilemma";
    report.config_digest = cfg.digest();
    report.backends = backend_ids(*be);

    // One task per (sequence, framing); done tasks come from the checkpoint.
    Checkpoint cp(checkpoint_path(ctx, "dilemma.jsonl"), ctx.resume);
    std::map<std::pair<std::string, bool>, dilemma::ChoiceTrajectory> done;
    if (ctx.resume) {
        for (const auto& j : cp.load()) {
            auto t = dilemma::trajectory_from_json(j);
            done.emplace(std::pair{t.sequence_id, t.consequence}, std::move(t));
        }
    }
    const std::size_t resumed = done.size();
    std::vector<std::pair<std::size_t, bool>> tasks;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        for (bool consequence : {false, true}) {
            if (!done.count({corpus[i].id, consequence})) tasks.emplace_back(i, consequence);
        }
    }
    std::vector<std::optional<dilemma::ChoiceTrajectory>> fresh(tasks.size());
    try {
        parallel_for(tasks.size(), std::min(concurrency, be->max_concurrency()), [&](std::size_t k) {
            const auto& seq = corpus[tasks[k].first];
            dilemma::RunSequenceOptions opts;
            opts.carry_history = carry_history;
            opts.consequence = tasks[k].second;
            opts.generation.temperature = temperature;
            opts.generation.seed = mix_seed(cfg.seed(), string_seed(seq.id), tasks[k].second ? 1 : 0);
            auto t = dilemma::run_sequence(*be, seq, variants, opts);
            cp.append({dilemma::to_json(t)});
            fresh[k] = std::move(t);
        });
    } catch (const BackendError& e) {
        if (cp.written() + resumed > 0) throw PartialRunError(e.what(), cp.path());
        throw;
    }
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        done.emplace(std::pair{corpus[tasks[k].first].id, tasks[k].second}, std::move(*fresh[k]));
    }

    std::vector<dilemma::ChoiceTrajectory> baseline, consequence;
    std::string traj_jsonl;
    for (const auto& seq : corpus) {
        for (bool c : {false, true}) {
            const auto& t = done.at({seq.id, c});
            (c ? consequence : baseline).push_back(t);
            traj_jsonl += dilemma::to_json(t).dump() + "\n";
        }
    }
    report.artifacts["trajectories/dilemma.jsonl"] = traj_jsonl;

    Table pref{"preference_rate",
               {"value_pair", "first_pole", "second_pole", "rate", "valid", "invalid", "stage1_rate", "stage1_valid"},
               {}};
    Table split{"preference_split", {"value_pair", "first_pole", "second_pole"}, {}};
    Table flip{"flip_rate", {"value_pair", "rate", "pairs", "flips", "excluded"}, {}};
    std::set<dilemma::ValuePair> present;
    for (const auto& s : corpus) present.insert(s.value_pair);
    for (auto vp : dilemma::kValuePairs) {
        if (!present.count(vp)) continue;
        const auto [a, b] = dilemma::poles(vp);
        const auto name = dilemma::to_string(vp);
        std::vector<std::string> row{name, a, b};
        try {
            auto r = dilemma::preference_rate(baseline, vp);
            row.insert(row.end(), {num(r.rate), std::to_string(r.valid), std::to_string(r.invalid)});
            split.add_row({name, num(r.rate), num(1.0 - r.rate)});
        } catch (const DegenerateInputError&) {
            row.insert(row.end(), {"NA", "0", "NA"});
        }
        try {
            auto r1 = dilemma::preference_rate(baseline, vp, 0);
            row.insert(row.end(), {num(r1.rate), std::to_string(r1.valid)});
        } catch (const DegenerateInputError&) {
            row.insert(row.end(), {"NA", "0"});
        }
        if (row[5] == "NA") {
            std::size_t invalid = 0;
            for (const auto& t : baseline) {
                if (t.value_pair == vp) invalid += t.entries.size();
            }
            row[5] = std::to_string(invalid);
        }
        pref.add_row(row);

        std::vector<dilemma::ChoiceTrajectory> bp, cp2;
        for (const auto& t : baseline) {
            if (t.value_pair == vp) bp.push_back(t);
        }
        for (const auto& t : consequence) {
            if (t.value_pair == vp) cp2.push_back(t);
        }
        auto f = dilemma::flip_rate(bp, cp2);
        flip.add_row({name, f.pairs ? num(f.rate) : "NA", std::to_string(f.pairs), std::to_string(f.flips),
                      std::to_string(f.excluded)});
    }
    auto fall = dilemma::flip_rate(baseline, consequence);
    flip.add_row({"all", fall.pairs ? num(fall.rate) : "NA", std::to_string(fall.pairs), std::to_string(fall.flips),
                  std::to_string(fall.excluded)});

    Table agree{"agreement_ratio", {"condition", "ratio", "cells", "excluded"}, {}};
    for (auto* set : {&baseline, &consequence}) {
        auto a = dilemma::agreement_ratio(*set);
        agree.add_row({set == &baseline ? "baseline" : "consequence", a.cells ? num(a.ratio) : "NA",
                       std::to_string(a.cells), std::to_string(a.excluded)});
    }

    Table vol{"rank_volatility", {"source", "dimension", "volatility", "transitions"}, {}};
    Table ranks{"mft_rankings", {"source", "stage", "dimension", "rank"}, {}};
    const std::map<std::string, std::vector<std::optional<dilemma::MftRanking>>> sources{
        {"choices:" + be->id(), dilemma::mft_rankings_from_choices(corpus, baseline)},
        {"corpus_tags", dilemma::mft_rankings_from_tags(corpus)}};
    for (const auto& [source, rk] : sources) {
        for (std::size_t st = 0; st < rk.size(); ++st) {
            if (!rk[st]) continue;
            for (std::size_t di = 0; di < dilemma::kMftDimensions.size(); ++di) {
                ranks.add_row({source, std::to_string(st + 1), dilemma::to_string(dilemma::kMftDimensions[di]),
                               std::to_string((*rk[st])[di])});
            }
        }
        auto v = dilemma::rank_volatility({{source, rk}});
        const auto tr = v.transitions.count(source) ? v.transitions.at(source) : 0;
        for (auto dim : dilemma::kMftDimensions) {
            auto it = v.volatility.find(dim);
            vol.add_row({source, dilemma::to_string(dim), it == v.volatility.end() ? "NA" : num(it->second),
                         std::to_string(tr)});
        }
    }

    std::size_t decisions = 0, invalid = 0;
    for (auto* set : {&baseline, &consequence}) {
        for (const auto& t : *set) {
            for (const auto& e : t.entries) {
                ++decisions;
                if (e.choice == dilemma::Choice::Invalid) ++invalid;
            }
        }
    }
    Table counts{"run_counts", {"sequences", "trajectories", "decisions", "invalid"}, {}};
    counts.add_row({std::to_string(corpus.size()), std::to_string(baseline.size() + consequence.size()),
                    std::to_string(decisions), std::to_string(invalid)});

    for (auto* t : {&pref, &split, &flip, &agree, &vol, &ranks, &counts}) report.add_table(std::move(*t));
    add_figure(report, {"preference.svg", FigureKind::StackedBar, "Preference per value pair", "preference_split",
                        {"value_pair"}, {"first_pole", "second_pole"}, "", ""});
    add_figure(report, {"flip_rate.svg", FigureKind::Bar, "Flip rate under consequences", "flip_rate",
                        {"value_pair"}, {"rate"}, "", "flip rate"});
    add_figure(report, {"agreement_ratio.svg", FigureKind::Bar, "Agreement across prompt variants",
                        "agreement_ratio", {"condition"}, {"ratio"}, "", "agreement"});
    add_figure(report, {"rank_volatility.svg", FigureKind::Bar, "MFT rank volatility", "rank_volatility",
                        {"source", "dimension"}, {"volatility"}, "", "mean |rank change|"});
    return report;
}

// ---------------------------------------------------------------- align

std::string relative_gain_cell(double zs_mean, double ft_mean) {
    return percent(ftalign::relative_gain(zs_mean, ft_mean), 1);
}

AuditReport cmd_align(const RunConfig& cfg, const CommandContext& ctx) {
    const auto& a = cfg.section("align");
    Preflight pre(cfg);
    const auto questions_path = pre.path(a, "align", "questions", true);
    const auto dist_path = pre.path(a, "align", "distributions", true);
    const auto export_cfg = a.value("export", nlohmann::json::object());
    const auto template_path = pre.path(export_cfg, "align.export", "template", false);
    ftalign::TrainConfig train_cfg;
    double init_scale = 1.0;
    bool export_only = false, export_enabled = true;
    std::uint64_t ctrl_seed = cfg.seed();
    std::vector<std::tuple<std::string, double, double>> references;
    pre.check("align.train", [&] {
        const auto t = a.value("train", nlohmann::json::object());
        train_cfg.learning_rate = get_or<double>(t, "learning_rate", train_cfg.learning_rate);
        train_cfg.max_epochs = get_or<int>(t, "max_epochs", train_cfg.max_epochs);
        train_cfg.convergence_tol = get_or<double>(t, "convergence_tol", train_cfg.convergence_tol);
        train_cfg.divergence_patience = get_or<int>(t, "divergence_patience", train_cfg.divergence_patience);
        train_cfg.seed = cfg.seed();
        ftalign::validate(train_cfg);
    });
    pre.check("align", [&] {
        init_scale = get_or<double>(a, "init_scale", 1.0);
        export_only = get_or<bool>(a, "export_only", false);
        export_enabled = get_or<bool>(export_cfg, "enabled", true) || export_only;
        if (a.contains("ctrl_seed")) ctrl_seed = a.at("ctrl_seed").get<std::uint64_t>();
        for (const auto& r : a.value("reference", nlohmann::json::array())) {
            references.emplace_back(r.at("label").get<std::string>(), r.at("zs").get<double>(),
                                    r.at("ft").get<double>());
        }
    });
    pre.finish();
    auto questions = survey::load_questions(questions_path);
    auto examples = ftalign::load_country_distributions(dist_path, questions);

    AuditReport report;
    report.command = "align";
    report.config_digest = cfg.digest();
    report.backends = {"toy-alignment"};

    if (export_enabled) {
        ftalign::ExportOptions eo;
        if (!template_path.empty()) eo.prompt_template = read_file(template_path);
        eo.option_token_prefix = get_or<std::string>(export_cfg, "option_token_prefix", eo.option_token_prefix);
        const auto dir = fs::path(ctx.out_dir) / "export";
        auto m = ftalign::export_training_data(examples, questions, dir.string(), eo);
        report.artifacts["export/" + m.data_file] = read_file((dir / m.data_file).string());
        report.artifacts["export/manifest.json"] = read_file((dir / "manifest.json").string());
        Table ex{"export", {"file", "sha256", "records", "prompt_template_sha256"}, {}};
        ex.add_row({"export/" + m.data_file, m.sha256, std::to_string(m.records), m.template_sha256});
        report.add_table(std::move(ex));
    }
    if (export_only) {
        report.notes.push_back("export-only run: no training or evaluation");
        return report;
    }

    auto zs_model = ftalign::initial_model(examples, cfg.seed(), init_scale);
    auto trained = ftalign::train(zs_model, examples, train_cfg);
    report.artifacts["models/zs_model.json"] = zs_model.to_json().dump(2) + "\n";
    report.artifacts["models/ft_model.json"] = trained.model.to_json().dump(2) + "\n";

    using ftalign::EvalMode;
    std::map<EvalMode, ftalign::EvalResult> results;
    bool ctrl_available = true;
    try {
        ftalign::country_permutation(examples, ctrl_seed);
    } catch (const ConfigError& e) {
        ctrl_available = false;
        report.notes.push_back(std::string("ctrl rows omitted: ") + e.what());
    }
    for (auto mode : {EvalMode::ZS_ctrl, EvalMode::ZS, EvalMode::FT_ctrl, EvalMode::FT}) {
        if (ftalign::is_ctrl(mode) && !ctrl_available) continue;
        const auto& model = (mode == EvalMode::ZS || mode == EvalMode::ZS_ctrl) ? zs_model : trained.model;
        results[mode] = ftalign::evaluate(model, examples, {mode, ctrl_seed});
    }

    std::vector<std::string> cols{"method"};
    for (const auto& e : examples) cols.push_back(e.context_key);
    cols.push_back("Avg");
    Table comparison{"protocol_comparison", cols, {}};
    Table means{"method_means", {"method", "mean_one_minus_jsd"}, {}};
    for (auto mode : {EvalMode::ZS_ctrl, EvalMode::ZS, EvalMode::FT_ctrl, EvalMode::FT}) {
        auto it = results.find(mode);
        if (it == results.end()) continue;
        std::vector<std::string> row{ftalign::to_string(mode)};
        for (double v : it->second.one_minus_jsd) row.push_back(num(v, 4));
        row.push_back(num(it->second.mean, 4));
        comparison.add_row(row);
        means.add_row({ftalign::to_string(mode), num(it->second.mean, 4)});
    }
    Table gain{"relative_gain", {"label", "zs_avg", "ft_avg", "relative_gain"}, {}};
    const double zs = results.at(EvalMode::ZS).mean, ft = results.at(EvalMode::FT).mean;
    gain.add_row({"this run", num(zs, 4), num(ft, 4), relative_gain_cell(zs, ft)});
    for (const auto& [label, rzs, rft] : references) {
        gain.add_row({label, num(rzs, 3), num(rft, 3), relative_gain_cell(rzs, rft)});
    }

    Table training{"training", {"epochs", "initial_loss", "final_loss", "converged", "learning_rate"}, {}};
    training.add_row({std::to_string(trained.epochs), num(trained.initial_loss, 9),
                      num(trained.loss_history.empty() ? trained.initial_loss : trained.loss_history.back(), 9),
                      trained.converged ? "true" : "false", num(train_cfg.learning_rate, 6)});
    Table curve{"loss_history", {"epoch", "loss"}, {}};
    for (std::size_t i = 0; i < trained.loss_history.size(); ++i) {
        curve.add_row({std::to_string(i + 1), num(trained.loss_history[i], 12)});
    }
    Table perm{"country_permutation", {"country", "shown_as"}, {}};
    if (ctrl_available) {
        for (const auto& [from, to] : ftalign::country_permutation(examples, ctrl_seed)) perm.add_row({from, to});
    }

    for (auto* t : {&comparison, &means, &gain, &training, &curve, &perm}) report.add_table(std::move(*t));
    add_figure(report, {"method_means.svg", FigureKind::Bar, "Mean 1-JSD per method", "method_means", {"method"},
                        {"mean_one_minus_jsd"}, "", "1-JSD"});
    return report;
}

// ---------------------------------------------------------------- mark

AuditReport cmd_mark(const RunConfig& cfg, const CommandContext& ctx) {
    const auto& m = cfg.section("mark");
    Preflight pre(cfg);
    const auto questions_path = pre.path(m, "mark", "questions", true);
    const auto respondents_path = pre.path(m, "mark", "respondents", true);
    const auto templates_dir = pre.path(m, "mark", "templates", false);
    const auto dynamics_path = pre.path(m, "mark", "type_dynamics", false);
    std::vector<mark::PairingSetting> settings;
    std::vector<mark::BaselineKind> baselines;
    std::size_t limit = 0, concurrency = 4;
    pre.check("mark", [&] {
        for (const auto& s : get_or<std::vector<std::string>>(m, "settings", {"sampled", "global"})) {
            settings.push_back(mark::parse_pairing_setting(s));
        }
        for (const auto& b : get_or<std::vector<std::string>>(m, "baselines", {"Demo+Ideo", "Demo+Ideo+Opinion"})) {
            if (b == "Demo+Ideo") {
                baselines.push_back(mark::BaselineKind::DemoIdeo);
            } else if (b == "Demo+Ideo+Opinion") {
                baselines.push_back(mark::BaselineKind::DemoIdeoOpinion);
            } else {
                throw ConfigError("unknown baseline '" + b + "'");
            }
        }
        limit = get_or<std::size_t>(m, "limit", 0);
        concurrency = get_or<std::size_t>(m, "concurrency", 4);
        if (concurrency == 0) throw ConfigError("concurrency must be >= 1");
    });
    pre.finish();
    auto questions = survey::load_questions(questions_path);
    auto humans = mark::load_respondents(respondents_path, questions);
    const auto templates = templates_dir.empty() ? mark::bundled_templates() : mark::load_stage_templates(templates_dir);
    const auto dynamics = dynamics_path.empty() ? mark::TypeDynamics::bundled() : mark::TypeDynamics::load(dynamics_path);

    auto be = backend_for(cfg, ctx);
    AuditReport report;
    report.command = "mark";
    report.config_digest = cfg.digest();
    report.backends = backend_ids(*be);

    auto tasks = mark::tasks_for(humans, questions, false);
    if (limit > 0 && tasks.size() > limit) tasks.resize(limit);
    auto traces = mark::run_simulations(*be, tasks, templates, dynamics, cfg.seed(), concurrency);
    report.artifacts["traces/mark_traces.jsonl"] = mark::traces_jsonl(traces);

    std::vector<std::pair<std::string, std::vector<mark::SimulatedAnswer>>> methods{{"MARK", mark::answers_of(traces)}};
    for (auto kind : baselines) {
        auto btasks = mark::tasks_for(humans, questions, kind == mark::BaselineKind::DemoIdeoOpinion);
        if (limit > 0 && btasks.size() > limit) btasks.resize(limit);
        methods.emplace_back(mark::to_string(kind),
                             mark::run_baseline(*be, btasks, mix_seed(cfg.seed(), static_cast<std::uint64_t>(kind) + 1),
                                                concurrency));
    }

    Table scores{"method_scores", {"method", "setting", "acc_pct", "one_minus_jsd", "emd", "kappa", "answers"}, {}};
    Table deltas{"deltas", {"setting", "method", "delta_acc", "delta_one_minus_jsd", "delta_emd", "delta_kappa"}, {}};
    Table pairing{"pairing", {"setting", "rule", "digest", "answers"}, {}};
    Table perq{"per_question", {"method", "setting", "question_id", "acc", "one_minus_jsd", "emd", "kappa"}, {}};
    for (auto setting : settings) {
        std::vector<mark::MethodScore> scored;
        for (const auto& [name, answers] : methods) {
            scored.push_back({name, mark::score_simulations(answers, humans, questions, setting)});
        }
        const auto sname = mark::to_string(setting);
        for (const auto& ms : scored) {
            const auto& sc = ms.result.score;
            scores.add_row({ms.method, sname, num(sc.acc * 100.0, 2), num(sc.one_minus_jsd, 4), num(sc.emd, 4),
                        num(sc.kappa, 4), std::to_string(sc.answers)});
            for (const auto& [qid, q] : ms.result.per_question) {
                perq.add_row({ms.method, sname, qid, num(q.acc, 4), num(q.one_minus_jsd, 4), num(q.emd, 4),
                              num(q.kappa, 4)});
            }
        }
        pairing.add_row({sname, mark::pairing_rule(setting), scored.front().result.pairing_digest,
                         std::to_string(scored.front().result.score.answers)});
        auto rows = mark::compare_baselines(scored.front(),
                                            std::vector<mark::MethodScore>(scored.begin() + 1, scored.end()));
        for (std::size_t i = 1; i < rows.size(); ++i) {
            deltas.add_row({sname, rows[i].method, num(rows[i].delta_acc, 4), num(rows[i].delta_one_minus_jsd, 4),
                            num(rows[i].delta_emd, 4), num(rows[i].delta_kappa, 4)});
        }
    }

    std::size_t reprompts = 0;
    std::map<std::string, std::size_t> types;
    for (const auto& t : traces) {
        reprompts += t.reprompts();
        ++types[t.predicted_type.code];
    }
    Table summary{"trace_summary", {"traces", "reprompts", "template_version", "type_table_digest"}, {}};
    summary.add_row({std::to_string(traces.size()), std::to_string(reprompts), templates.version(), dynamics.digest()});
    Table type_counts{"predicted_types", {"type", "count", "function_stack"}, {}};
    for (const auto& [code, n] : types) {
        type_counts.add_row({code, std::to_string(n), mark::describe_stack(dynamics.resolve(code).function_stack)});
    }

    for (auto* t : {&scores, &deltas, &pairing, &perq, &summary, &type_counts}) report.add_table(std::move(*t));
    add_figure(report, {"accuracy.svg", FigureKind::Bar, "Simulation accuracy (%)", "method_scores", {"method", "setting"},
                        {"acc_pct"}, "", "ACC (%)"});
    return report;
}

// ---------------------------------------------------------------- driver

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const PartialRunError*>(&e)) return kExitPartial;
    if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
    if (dynamic_cast<const BackendError*>(&e)) return kExitBackend;
    if (dynamic_cast<const ParseError*>(&e)) return kExitBackend;
    return kExitFailure;
}

namespace {

std::string utc_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

int run_command(const std::string& command, const RunConfig& config, const CommandContext& ctx, std::ostream& err) {
    try {
        if (ctx.out_dir.empty()) throw ConfigError("no output directory");
        OutputLock lock(ctx.out_dir);
        const auto started = utc_now();
        AuditReport report;
        if (command == "survey") {
            report = cmd_survey(config, ctx);
        } else if (command == "dilemma") {
            report = cmd_dilemma(config, ctx);
        } else if (command == "align") {
            report = cmd_align(config, ctx);
        } else if (command == "mark") {
            report = cmd_mark(config, ctx);
        } else {
            throw ConfigError("unknown command '" + command + "'");
        }
        write_report(ctx.out_dir, report);
        std::error_code ec;
        fs::remove_all(fs::path(ctx.out_dir) / "checkpoint", ec);
        nlohmann::json meta = {{"command", command},
                               {"config_digest", report.config_digest},
                               {"backends", report.backends},
                               {"resumed", ctx.resume},
                               {"started_at", started},
                               {"finished_at", utc_now()}};
        write_file_atomic((fs::path(ctx.out_dir) / "run_meta.json").string(), meta.dump(2) + "\n");
        return kExitOk;
    } catch (const PartialRunError& e) {
        err << "error: " << e.what() << "\npartial progress saved in " << e.checkpoint()
            << "; rerun with --resume to continue\n";
        return kExitPartial;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
}

int verify_report(const std::string& out_dir, std::ostream& out, std::ostream& err) {
    try {
        auto problems = verify_manifest(out_dir);
        auto report = report_from_json(nlohmann::json::parse(read_file((fs::path(out_dir) / "report.json").string())));
        auto figures = render_figures(report);
        for (const auto& [file, svg] : figures.files) {
            const auto path = fs::path(out_dir) / "figures" / file;
            if (!fs::exists(path) || read_file(path.string()) != svg) {
                problems.push_back("figures/" + file + ": does not match its table");
            }
        }
        if (!problems.empty()) {
            err << "report in " << out_dir << " failed verification:\n";
            for (const auto& p : problems) err << "  " << p << "\n";
            return kExitConfig;
        }
        out << "report ok: command=" << report.command << " config_digest=" << report.config_digest
            << " tables=" << report.tables.size() << " figures=" << figures.files.size() << "\n";
        for (const auto& t : report.tables) out << "  " << t.name << ": " << t.rows.size() << " rows\n";
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e) == kExitFailure ? kExitConfig : exit_code_for(e);
    }
}

}  // namespace alignaudit::report
