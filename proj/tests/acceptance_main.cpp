// Acceptance checks: one PASS/FAIL line per criterion, each within its time budget.

#include "alignaudit/backend/scripted.hpp"
#include "alignaudit/common/error.hpp"
#include "alignaudit/common/hash.hpp"
#include "alignaudit/common/text.hpp"
#include "alignaudit/dilemma/runner.hpp"
#include "alignaudit/dilemma/scenario.hpp"
#include "alignaudit/dilemma/statistics.hpp"
#include "alignaudit/ftalign/alignment.hpp"
#include "alignaudit/mark/scoring.hpp"
#include "alignaudit/mark/simulate.hpp"
#include "alignaudit/mark/type_dynamics.hpp"
#include "alignaudit/metrics/agreement.hpp"
#include "alignaudit/metrics/divergence.hpp"
#include "alignaudit/metrics/hypothesis.hpp"
#include "alignaudit/report/backends.hpp"
#include "alignaudit/report/commands.hpp"
#include "alignaudit/report/config.hpp"
#include "alignaudit/report/table.hpp"
#include "alignaudit/survey/analysis.hpp"
#include "alignaudit/survey/insensitivity.hpp"
#include "alignaudit/survey/persona.hpp"
#include "alignaudit/survey/runner.hpp"
#include "alignaudit/ftalign/export.hpp"
#include "test_support.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace alignaudit;
namespace fs = std::filesystem;
using metrics::ProbDist;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

report::RunConfig bundled_config(const std::string& name) {
    const auto path = fixtures::data_path("configs/" + name);
    return report::parse_run_config(read_file(path), fs::path(path).parent_path().string());
}

// ------------------------------------------------------------------ 1, 2

Outcome relative_gain_reproduction() {
    Outcome o;
    const double gain = ftalign::relative_gain(0.613, 0.823) * 100.0;
    const auto cell = report::relative_gain_cell(0.613, 0.823);
    o.require(std::abs(gain - 34.3) <= 0.1, "gain " + format_fixed(gain, 4));
    o.require(cell == "34.3%", "cell " + cell);
    o.detail = o.ok ? "relative gain cell " + cell + " (" + format_fixed(gain, 3) + "%)" : o.detail;
    return o;
}

Outcome sed_df_reproduction() {
    Outcome o;
    const auto a = metrics::TwoSampleSummary::from_sem(1.28, 0.10, 27);
    const auto b = metrics::TwoSampleSummary::from_sem(0.93, 0.07, 27);
    const auto t = metrics::two_sample_t(a, b);
    o.require(format_fixed(t.sed, 2) == "0.12", "sed " + format_fixed(t.sed, 6));
    o.require(t.df == 52, "df " + std::to_string(t.df));
    o.require(27 + 27 - 2 == t.df, "df identity");
    if (o.ok) o.detail = "SED " + format_fixed(t.sed, 4) + " -> 0.12, DF " + std::to_string(t.df);
    return o;
}

// ------------------------------------------------------------------ 3

Outcome metric_properties() {
    Outcome o;
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> width(2, 10);
    for (int i = 0; i < 1000 && o.ok; ++i) {
        const auto labels = metrics::letter_labels(static_cast<std::size_t>(width(rng)));
        auto draw = [&] {
            std::vector<double> m(labels.size());
            for (double& x : m) x = u(rng) < 0.1 ? 0.0 : u(rng);
            m[0] += 1e-3;
            return ProbDist(labels, m);
        };
        const auto p = draw(), q = draw(), r = draw();
        const double kl = metrics::kl_divergence(p, q);
        const double j1 = metrics::jensen_shannon(p, q), j2 = metrics::jensen_shannon(q, p);
        o.require(kl >= 0.0, "KL < 0 at pair " + std::to_string(i));
        o.require(std::abs(j1 - j2) <= 1e-12, "JSD asymmetric at pair " + std::to_string(i));
        o.require(j1 >= 0.0 && j1 <= 1.0, "JSD out of [0,1] at pair " + std::to_string(i));
        o.require(metrics::emd_ordinal(p, r) <= metrics::emd_ordinal(p, q) + metrics::emd_ordinal(q, r) + 1e-12,
                  "EMD triangle at pair " + std::to_string(i));
        metrics::ConfusionMatrix diag(labels.size(), std::vector<double>(labels.size(), 0.0));
        for (std::size_t k = 0; k < labels.size(); ++k) diag[k][k] = 1.0 + std::floor(u(rng) * 20);
        o.require(std::abs(metrics::cohens_kappa(diag).kappa - 1.0) <= 1e-12, "kappa diagonal");
    }
    const double kl = metrics::kl_divergence(ProbDist({"A", "B"}, {0.5, 0.5}), ProbDist({"A", "B"}, {0.25, 0.75}));
    const auto l5 = metrics::letter_labels(5);
    const double emd = metrics::emd_ordinal(ProbDist::delta(l5, 0), ProbDist::delta(l5, 1));
    const double kappa = metrics::cohens_kappa({{40, 10}, {5, 45}}).kappa;
    o.require(std::abs(kl - 0.1438) <= 1e-3, "KL hand value " + format_fixed(kl, 6));
    o.require(std::abs(emd - 0.25) <= 1e-3, "EMD hand value " + format_fixed(emd, 6));
    o.require(std::abs(kappa - 0.70) <= 1e-3, "kappa hand value " + format_fixed(kappa, 6));
    if (o.ok) {
        o.detail = "1000 pairs; KL " + format_fixed(kl, 4) + ", EMD " + format_fixed(emd, 2) + ", kappa " +
                   format_fixed(kappa, 2);
    }
    return o;
}

// ------------------------------------------------------------------ 4, 5

std::vector<ftalign::AlignmentExample> bundled_align_examples() {
    const auto qs = survey::load_questions(fixtures::data_path("survey/questions.jsonl"));
    return ftalign::load_country_distributions(fixtures::data_path("align/country_distributions.csv"), qs);
}

Outcome alignment_convergence() {
    Outcome o;
    const auto ex = bundled_align_examples();
    const auto res = ftalign::train(ftalign::initial_model(ex, 3), ex, ftalign::TrainConfig{0.5, 500, 1e-12, 3, 5});
    const double loss = ftalign::alignment_loss(res.model, ex);
    const double fit = ftalign::evaluate(res.model, ex, {ftalign::EvalMode::FT, 0}).mean;
    o.require(res.epochs <= 500, "epochs");
    o.require(loss < 1e-6, "final loss " + std::to_string(loss));
    o.require(fit > 0.999, "mean 1-JSD " + format_fixed(fit, 6));

    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::uniform_int_distribution<int> kd(2, 7), cd(1, 6);
    double worst = 0.0;
    const double h = 1e-6;
    for (int inst = 0; inst < 100; ++inst) {
        const auto labels = metrics::letter_labels(static_cast<std::size_t>(kd(rng)));
        std::vector<ftalign::AlignmentExample> fx;
        const int n = cd(rng);
        for (int c = 0; c < n; ++c) {
            std::vector<double> m(labels.size());
            for (double& x : m) x = u(rng);
            fx.push_back({"q|C" + std::to_string(c % 4), ProbDist(labels, m)});
        }
        auto model = ftalign::initial_model(fx, static_cast<std::uint64_t>(inst), 2.0);
        const auto g = ftalign::loss_gradient(model, fx);
        double diff = 0, norm = 0;
        for (std::size_t r = 0; r < g.size(); ++r) {
            for (std::size_t c = 0; c < g[r].size(); ++c) {
                auto plus = model, minus = model;
                plus.mutable_logits()[r][c] += h;
                minus.mutable_logits()[r][c] -= h;
                const double fd = (ftalign::alignment_loss(plus, fx) - ftalign::alignment_loss(minus, fx)) / (2 * h);
                diff += (fd - g[r][c]) * (fd - g[r][c]);
                norm += g[r][c] * g[r][c];
            }
        }
        worst = std::max(worst, std::sqrt(diff) / std::max(std::sqrt(norm), 1e-8));
    }
    o.require(worst < 1e-5, "finite-difference relative error " + std::to_string(worst));
    if (o.ok) {
        std::ostringstream s;
        s << "loss " << loss << " after " << res.epochs << " epochs, 1-JSD " << format_fixed(fit, 6)
          << ", worst FD rel. error " << worst;
        o.detail = s.str();
    }
    return o;
}

Outcome ctrl_direction() {
    Outcome o;
    const auto ex = bundled_align_examples();
    const auto model = ftalign::train(ftalign::initial_model(ex, 3), ex, {}).model;
    const double ft = ftalign::evaluate(model, ex, {ftalign::EvalMode::FT, 0}).mean;
    double worst_ctrl = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const double ctrl = ftalign::evaluate(model, ex, {ftalign::EvalMode::FT_ctrl, seed}).mean;
        o.require(ctrl < ft, "FT_ctrl " + format_fixed(ctrl, 4) + " >= FT " + format_fixed(ft, 4));
        worst_ctrl = std::max(worst_ctrl, ctrl);
    }
    if (o.ok) o.detail = "FT " + format_fixed(ft, 4) + " > max FT [ctrl] " + format_fixed(worst_ctrl, 4) + " over 10 seeds";
    return o;
}

// ------------------------------------------------------------------ 6

using dilemma::Choice;
using dilemma::ChoiceTrajectory;

// Straight-line recomputation of the dilemma statistics over the raw trajectories.
struct BruteStats {
    std::map<dilemma::ValuePair, std::pair<std::size_t, std::size_t>> pref;  // (A, valid)
    std::size_t flips = 0, pairs = 0;
    double agreement = 0.0;
    std::array<double, 5> volatility{};
};

BruteStats brute_force(const std::vector<dilemma::ScenarioSequence>& corpus, const std::vector<ChoiceTrajectory>& base,
                       const std::vector<ChoiceTrajectory>& framed) {
    BruteStats b;
    for (const auto& t : base) {
        for (const auto& e : t.entries) {
            if (e.choice == Choice::Invalid) continue;
            auto& [a, valid] = b.pref[t.value_pair];
            ++valid;
            if (e.choice == Choice::A) ++a;
        }
    }
    for (const auto& t : base) {
        for (const auto& u : framed) {
            if (u.sequence_id != t.sequence_id) continue;
            for (const auto& e : t.entries) {
                for (const auto& f : u.entries) {
                    if (f.stage != e.stage || f.variant != e.variant) continue;
                    if (e.choice == Choice::Invalid || f.choice == Choice::Invalid) continue;
                    ++b.pairs;
                    if (e.choice != f.choice) ++b.flips;
                }
            }
        }
    }
    // Agreement: cells in (sequence id, stage) order.
    std::vector<const ChoiceTrajectory*> sorted;
    for (const auto& t : base) sorted.push_back(&t);
    std::sort(sorted.begin(), sorted.end(), [](auto* x, auto* y) { return x->sequence_id < y->sequence_id; });
    double sum = 0.0;
    std::size_t cells = 0;
    for (const auto* t : sorted) {
        std::size_t max_stage = 0;
        for (const auto& e : t->entries) max_stage = std::max(max_stage, e.stage);
        for (std::size_t s = 0; s <= max_stage; ++s) {
            std::size_t na = 0, nb = 0;
            for (const auto& e : t->entries) {
                if (e.stage != s) continue;
                na += e.choice == Choice::A;
                nb += e.choice == Choice::B;
            }
            if (na + nb < 2) continue;
            ++cells;
            sum += static_cast<double>(std::max(na, nb)) / static_cast<double>(na + nb);
        }
    }
    b.agreement = cells ? sum / static_cast<double>(cells) : std::nan("");
    // Rankings from choices, then mean absolute rank change between consecutive stages.
    std::size_t stages = 0;
    for (const auto& s : corpus) stages = std::max(stages, s.stages.size());
    std::vector<std::optional<std::array<int, 5>>> ranks(stages);
    for (std::size_t k = 0; k < stages; ++k) {
        std::array<double, 5> wins{}, seen{};
        bool any = false;
        for (const auto& t : base) {
            const dilemma::ScenarioSequence* seq = nullptr;
            for (const auto& s : corpus)
                if (s.id == t.sequence_id) seq = &s;
            if (!seq || !seq->mft_tags.count(k)) continue;
            for (const auto& e : t.entries) {
                if (e.stage != k || e.choice == Choice::Invalid) continue;
                for (const auto& tag : seq->mft_tags.at(k)) {
                    const auto d = static_cast<std::size_t>(tag.dimension);
                    seen[d] += 1.0;
                    wins[d] += e.choice == tag.pole ? 1.0 : 0.0;
                    any = true;
                }
            }
        }
        if (!any) continue;
        std::array<double, 5> score{};
        for (std::size_t d = 0; d < 5; ++d) score[d] = seen[d] > 0 ? wins[d] / seen[d] : -1.0;
        std::array<int, 5> r{};
        for (std::size_t d = 0; d < 5; ++d) {
            int above = 0;
            for (std::size_t e = 0; e < 5; ++e)
                if (score[e] > score[d] || (score[e] == score[d] && e < d)) ++above;
            r[d] = above + 1;
        }
        ranks[k] = r;
    }
    std::array<double, 5> moved{};
    std::size_t transitions = 0;
    for (std::size_t k = 0; k + 1 < stages; ++k) {
        if (!ranks[k] || !ranks[k + 1]) continue;
        ++transitions;
        for (std::size_t d = 0; d < 5; ++d) moved[d] += std::abs((*ranks[k + 1])[d] - (*ranks[k])[d]);
    }
    for (std::size_t d = 0; d < 5; ++d) b.volatility[d] = transitions ? moved[d] / static_cast<double>(transitions) : std::nan("");
    return b;
}

Outcome dilemma_oracle() {
    Outcome o;
    const auto corpus = dilemma::load_corpus(fixtures::data_path("dilemma/synthetic_dilemmas.jsonl"));
    o.require(corpus.size() == 24, "corpus size " + std::to_string(corpus.size()));
    const std::vector<std::pair<std::string, std::shared_ptr<backend::Backend>>> backends{
        {"always:A", report::scripted_behaviour("always:A")},
        {"consequence-following", report::scripted_behaviour("consequence-following")},
        {"consequence-insensitive", report::scripted_behaviour("consequence-insensitive")},
        {"history-sensitive", report::scripted_behaviour("history-sensitive")},
        {"mixed", std::make_shared<backend::ScriptedBackend>("mixed", [](const backend::Request& r, std::size_t) {
             const auto h = string_seed(r.prompt) % 5;
             return h < 2 ? std::string("A") : h < 4 ? std::string("B") : std::string("unsure");
         })}};
    std::map<std::string, double> flip_by_name;
    for (const auto& [name, be] : backends) {
        std::vector<ChoiceTrajectory> base, framed;
        for (const auto& seq : corpus) {
            dilemma::RunSequenceOptions opts;
            base.push_back(dilemma::run_sequence(*be, seq, dilemma::default_variants(), opts));
            opts.consequence = true;
            framed.push_back(dilemma::run_sequence(*be, seq, dilemma::default_variants(), opts));
        }
        const auto oracle = brute_force(corpus, base, framed);
        for (auto vp : dilemma::kValuePairs) {
            const auto r = dilemma::preference_rate(base, vp);
            const auto [a, valid] = oracle.pref.at(vp);
            o.require(r.rate == static_cast<double>(a) / static_cast<double>(valid) && r.valid == valid,
                      name + ": preference " + dilemma::to_string(vp));
        }
        const auto f = dilemma::flip_rate(base, framed);
        o.require(f.flips == oracle.flips && f.pairs == oracle.pairs &&
                      f.rate == static_cast<double>(oracle.flips) / static_cast<double>(oracle.pairs),
                  name + ": flip rate");
        o.require(dilemma::agreement_ratio(base).ratio == oracle.agreement, name + ": agreement ratio");
        const auto vol = dilemma::rank_volatility({{name, dilemma::mft_rankings_from_choices(corpus, base)}});
        for (std::size_t d = 0; d < 5; ++d)
            o.require(vol.volatility.at(dilemma::kMftDimensions[d]) == oracle.volatility[d], name + ": volatility");
        flip_by_name[name] = f.rate;
    }
    o.require(flip_by_name.at("consequence-insensitive") == 0.0, "insensitive flip " + format_fixed(flip_by_name.at("consequence-insensitive"), 6));
    o.require(flip_by_name.at("consequence-following") == 1.0, "following flip " + format_fixed(flip_by_name.at("consequence-following"), 6));
    if (o.ok) {
        o.detail = "5 scripted backends exact; flip insensitive 0, following 1, mixed " +
                   format_fixed(flip_by_name.at("mixed"), 4);
    }
    return o;
}

// ------------------------------------------------------------------ 7

Outcome identity_fixture() {
    Outcome o;
    const auto qs = survey::load_questions(fixtures::data_path("survey/identity/questions.jsonl"));
    const auto human = survey::load_human_distributions(fixtures::data_path("survey/identity/human_distributions.csv"), qs);

    // Model distributions set to the human ones: exact zeros.
    for (auto culture : survey::kCultures) {
        const auto model = human.population(culture);
        const auto ca = survey::cultural_alignment(model, human, qs, culture);
        o.require(!ca.per_dimension.empty(), "no dimensions scored");
        for (const auto& [dim, kl] : ca.per_dimension) o.require(kl == 0.0, "KL(" + dim + ") = " + std::to_string(kl));
        const auto pt = survey::variation_map_point(model, human, qs);
        o.require(pt.kl_to_us == 0.0 && pt.kl_to_cn == 0.0, "variation point not at the origin");
    }

    // The same fixture answered through a backend that mirrors the human
    // distributions; log-probabilities round-trip through exp, so KL is zero
    // up to rounding.
    auto be = report::human_mirror_backend(human, qs);
    survey::DiversityConfig cfg;
    cfg.paraphrase_count = 2;
    double worst = 0.0;
    for (auto culture : survey::kCultures) {
        survey::PersonaMarginals m;
        m.culture = culture == survey::Culture::US ? std::array<double, 2>{1, 0} : std::array<double, 2>{0, 1};
        const auto run = survey::run_survey(*be, qs, survey::generate_personas(m, 12, 1), cfg, 1);
        const auto model = survey::model_distributions(run.records, qs, survey::DistributionMode::Soft, culture);
        const auto ca = survey::cultural_alignment(model, human, qs, culture);
        for (const auto& [dim, kl] : ca.per_dimension) worst = std::max(worst, std::abs(kl));
        o.require(survey::insensitivity_report(run.records, qs).flagged.empty(), "FF/CV flags present");
        const auto mm = survey::demographic_mismatch_profile(run.records, human);
        o.require(mm.mismatches == 0 && mm.evaluated > 0, "mismatches " + std::to_string(mm.mismatches));
        const auto pt = survey::variation_map_point(model, human, qs);
        worst = std::max({worst, std::abs(pt.kl_to_us), std::abs(pt.kl_to_cn)});
    }
    o.require(worst <= 1e-12, "mirrored KL " + std::to_string(worst));

    // And through the report command.
    fixtures::TempDir dir("identity");
    const auto rep = report::cmd_survey(bundled_config("survey_identity.json"), {dir.str(), false, nullptr});
    const auto& kd = rep.table("kl_by_dimension");
    for (const auto& row : kd.rows) o.require(row[kd.column("kl")] == "0.000000", "report KL " + row[kd.column("kl")]);
    o.require(rep.table("insensitivity_flags").empty(), "report flags");
    const auto& vm = rep.table("variation_map");
    for (const auto& row : vm.rows)
        o.require(row[vm.column("kl_to_us")] == "0.000000" && row[vm.column("kl_to_cn")] == "0.000000", "report map point");
    const auto& ms = rep.table("mismatch_summary");
    for (const auto& row : ms.rows) o.require(row[ms.column("mismatches")] == "0", "report mismatches");
    if (o.ok) {
        std::ostringstream s;
        s << "exact KL 0 and point (0, 0); mirrored backend max |KL| " << worst << "; no FF/CV/mismatch";
        o.detail = s.str();
    }
    return o;
}

// ------------------------------------------------------------------ 8

// Function stack from the four letters: the judging function leads outward for
// J types, the perceiving one for P types; introverts lead with the inward one.
mark::FunctionStack derived_stack(const std::string& code) {
    const std::string perceive(1, code[1]), judge(1, code[2]);
    const bool extravert = code[0] == 'E', judging = code[3] == 'J';
    const std::string outward = judging ? judge : perceive, inward = judging ? perceive : judge;
    std::string dom, aux;
    if (extravert) {
        dom = outward + "e";
        aux = inward + "i";
    } else {
        dom = inward + "i";
        aux = outward + "e";
    }
    auto flip = [](const std::string& f) {
        static const std::map<char, char> opp{{'S', 'N'}, {'N', 'S'}, {'T', 'F'}, {'F', 'T'}};
        return std::string(1, opp.at(f[0])) + (f[1] == 'e' ? "i" : "e");
    };
    return {dom, aux, flip(aux), flip(dom)};
}

Outcome mark_integrity() {
    Outcome o;
    const auto qs = survey::load_questions(fixtures::data_path("mark/questions.jsonl"));
    const auto data = mark::load_respondents(fixtures::data_path("mark/respondents.csv"), qs);
    const auto tasks = mark::tasks_for(data, qs);
    o.require(tasks.size() == 50, "task count " + std::to_string(tasks.size()));
    const auto cfg = bundled_config("mark_toy.json");
    const auto& dyn = mark::TypeDynamics::bundled();
    for (const auto& code : mark::all_type_codes()) o.require(dyn.resolve(code).function_stack == derived_stack(code), "stack of " + code);

    std::vector<std::string> digests;
    for (int run = 0; run < 2; ++run) {
        auto be = report::make_backend(cfg);
        const auto traces = mark::run_simulations(*be, tasks, mark::bundled_templates(), dyn, cfg.seed());
        o.require(traces.size() == 50, "trace count");
        for (const auto& t : traces) {
            for (std::size_t s = 0; s < mark::kStageCount; ++s) {
                o.require(!t.stages[s].prompt.empty() && !t.stages[s].output().empty(), "empty stage in " + t.respondent_id);
                for (std::size_t prev = 0; prev < s; ++prev)
                    o.require(t.stages[s].prompt.find(t.stages[prev].output()) != std::string::npos,
                              "stage " + std::to_string(s + 1) + " lost stage " + std::to_string(prev + 1) + " output");
            }
            o.require(mark::is_type_code(t.predicted_type.code), "invalid type " + t.predicted_type.code);
            o.require(t.predicted_type.function_stack == derived_stack(t.predicted_type.code), "wrong stack " + t.predicted_type.code);
            o.require(t.stages[2].prompt.find(mark::describe_stack(t.predicted_type.function_stack)) != std::string::npos,
                      "stage 3 lacks the function stack");
        }
        std::string scores;
        for (auto setting : {mark::PairingSetting::Sampled, mark::PairingSetting::Global}) {
            const auto r = mark::score_simulations(mark::answers_of(traces), data, qs, setting);
            std::ostringstream s;
            s.precision(17);
            s << r.score.acc << ' ' << r.score.one_minus_jsd << ' ' << r.score.emd << ' ' << r.score.kappa << ' '
              << r.pairing_digest << '\n';
            scores += s.str();
        }
        digests.push_back(sha256_hex(mark::traces_jsonl(traces) + scores));
    }
    o.require(digests[0] == digests[1], "scores differ across seeded runs");

    // Confusion [sim][human] = [[40,10],[5,45]] over 100 respondents.
    mark::RespondentData fixture;
    std::vector<mark::SimulatedAnswer> answers;
    survey::SurveyQuestion q;
    q.id = "k";
    q.text = "fixture";
    q.options = {"yes", "no"};
    q.value_dimension = "d";
    const int cells[2][2] = {{40, 10}, {5, 45}};
    int idx = 0;
    for (std::size_t sim = 0; sim < 2; ++sim)
        for (std::size_t hum = 0; hum < 2; ++hum)
            for (int n = 0; n < cells[sim][hum]; ++n) {
                const auto id = "p" + std::to_string(idx++);
                fixture.respondents[id] = {};
                fixture.responses.push_back({id, "k", hum});
                answers.push_back({id, "k", sim});
            }
    const double kappa = mark::score_simulations(answers, fixture, {q}, mark::PairingSetting::Sampled).score.kappa;
    o.require(std::abs(kappa - 0.70) <= 1e-3, "kappa fixture " + format_fixed(kappa, 6));
    if (o.ok) o.detail = "50 traces x 2 runs, chaining and stacks intact, scores bit-identical, kappa " + format_fixed(kappa, 2);
    return o;
}

// ------------------------------------------------------------------ 9

// Forwards to the configured backend and counts calls.
class CountingBackend : public backend::Backend {
public:
    explicit CountingBackend(std::shared_ptr<backend::Backend> inner) : inner_(std::move(inner)) {}
    std::string id() const override { return inner_->id(); }
    std::string model() const override { return inner_->model(); }
    bool supports_logprobs() const override { return inner_->supports_logprobs(); }
    std::size_t max_concurrency() const override { return inner_->max_concurrency(); }
    backend::Completion complete(const backend::Request& request) override {
        ++calls_;
        return inner_->complete(request);
    }
    std::size_t calls() const { return calls_; }

private:
    std::shared_ptr<backend::Backend> inner_;
    std::atomic<std::size_t> calls_{0};
};

std::map<std::string, std::string> snapshot(const std::string& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), dir).string();
        if (rel == "run_meta.json") continue;
        files[rel] = read_file(e.path().string());
    }
    return files;
}

std::string first_difference(const std::map<std::string, std::string>& a, const std::map<std::string, std::string>& b) {
    for (const auto& [k, v] : a) {
        auto it = b.find(k);
        if (it == b.end()) return k + " missing";
        if (it->second != v) return k + " differs";
    }
    for (const auto& [k, v] : b)
        if (!a.count(k)) return k + " unexpected";
    return {};
}

Outcome end_to_end_determinism() {
    Outcome o;
    std::size_t compared = 0;
    for (const auto& [command, file] : {std::pair{"survey", "survey_toy.json"}, std::pair{"dilemma", "dilemma_toy.json"}}) {
        const auto cfg = bundled_config(file);
        fixtures::TempDir first(std::string(command) + "_a"), second(std::string(command) + "_b"),
            resumed(std::string(command) + "_r");
        std::ostringstream err;
        auto counted = std::make_shared<CountingBackend>(report::make_backend(cfg));
        o.require(report::run_command(command, cfg, {first.str(), false, counted}, err) == 0, std::string(command) + " run 1: " + err.str());
        o.require(report::run_command(command, cfg, {second.str(), false, nullptr}, err) == 0, std::string(command) + " run 2: " + err.str());
        const auto a = snapshot(first.str()), b = snapshot(second.str());
        const auto d12 = first_difference(a, b);
        o.require(d12.empty(), std::string(command) + " repeat: " + d12);

        auto flaky = report::failing_after(report::make_backend(cfg), counted->calls() / 2);
        const int code = report::run_command(command, cfg, {resumed.str(), false, flaky}, err);
        o.require(code == report::kExitPartial, std::string(command) + " interrupted exit " + std::to_string(code) + ": " + err.str());
        o.require(fs::exists(resumed / "checkpoint"), std::string(command) + " no checkpoint");
        o.require(report::run_command(command, cfg, {resumed.str(), true, nullptr}, err) == 0, std::string(command) + " resume: " + err.str());
        const auto r = snapshot(resumed.str());
        const auto d1r = first_difference(a, r);
        o.require(d1r.empty(), std::string(command) + " resume: " + d1r);
        std::size_t svgs = 0;
        for (const auto& [k, v] : a) svgs += k.ends_with(".svg");
        o.require(svgs > 0, std::string(command) + " produced no figures");
        compared += a.size();
    }
    if (o.ok) o.detail = std::to_string(compared) + " files byte-identical across repeat and interrupt-resume";
    return o;
}

struct Criterion {
    int id;
    std::string name;
    double budget_s;
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "relative gain reproduction", 1.0, relative_gain_reproduction},
        {2, "SED and DF reproduction", 1.0, sed_df_reproduction},
        {3, "metric property suite", 5.0, metric_properties},
        {4, "alignment convergence", 30.0, alignment_convergence},
        {5, "ctrl protocol direction", 10.0, ctrl_direction},
        {6, "dilemma statistics oracle", 10.0, dilemma_oracle},
        {7, "survey identity fixture", 5.0, identity_fixture},
        {8, "MARK trace integrity", 20.0, mark_integrity},
        {9, "end-to-end determinism", 60.0, end_to_end_determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.ok = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (o.ok && secs >= c.budget_s) {
            o.ok = false;
            o.detail = "over time budget";
        }
        if (!o.ok) ++failures;
        std::cout << (o.ok ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail << " ("
                  << format_fixed(secs, 3) << " s / " << format_fixed(c.budget_s, 0) << " s)\n";
    }
    std::cout << (failures ? "FAILED " : "ALL PASSED ") << criteria.size() - static_cast<std::size_t>(failures) << "/"
              << criteria.size() << "\n";
    return failures ? 1 : 0;
}
