#include "alignaudit/mark/scoring.hpp"

#include "alignaudit/common/error.hpp"
#include "alignaudit/common/hash.hpp"
#include "alignaudit/common/parallel.hpp"
#include "alignaudit/common/text.hpp"
#include "alignaudit/metrics/agreement.hpp"
#include "alignaudit/metrics/divergence.hpp"
#include "alignaudit/survey/runner.hpp"

#include <algorithm>
#include <tuple>

namespace alignaudit::mark {

std::vector<SimulatedAnswer> answers_of(const std::vector<ReasoningTrace>& traces) {
    std::vector<SimulatedAnswer> out;
    out.reserve(traces.size());
    for (const auto& t : traces) out.push_back({t.respondent_id, t.question_id, t.final_index});
    return out;
}

std::string to_string(PairingSetting s) { return s == PairingSetting::Sampled ? "sampled" : "global"; }

PairingSetting parse_pairing_setting(const std::string& s) {
    if (s == "sampled") return PairingSetting::Sampled;
    if (s == "global") return PairingSetting::Global;
    throw ConfigError("unknown pairing setting '" + s + "' (expected sampled|global)");
}

std::string pairing_rule(PairingSetting s) {
    if (s == PairingSetting::Sampled) {
        return "each simulated answer is paired with the human answer of the same respondent to the same question";
    }
    return "each simulated answer is paired with the question's population distribution over all respondents; "
           "accuracy and the confusion matrix are expectations over a respondent drawn from it";
}

ScoreResult score_simulations(const std::vector<SimulatedAnswer>& answers, const RespondentData& humans,
                              const std::vector<survey::SurveyQuestion>& questions, PairingSetting setting) {
    if (answers.empty()) throw DegenerateInputError("score_simulations: empty pairing");
    std::map<std::string, const survey::SurveyQuestion*> by_id;
    for (const auto& q : questions) by_id[q.id] = &q;

    // Canonical order keeps every floating-point sum independent of input order.
    std::vector<SimulatedAnswer> sorted = answers;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        return std::tie(a.question_id, a.respondent_id, a.choice) < std::tie(b.question_id, b.respondent_id, b.choice);
    });

    std::map<std::pair<std::string, std::string>, std::size_t> human_choice_of;
    for (const auto& r : humans.responses) human_choice_of.emplace(std::pair{r.respondent_id, r.question_id}, r.choice);

    std::string pairs;
    std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> grouped;  // qid -> (sim, human)
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const auto& a = sorted[i];
        if (i > 0 && sorted[i - 1].question_id == a.question_id && sorted[i - 1].respondent_id == a.respondent_id) {
            throw StructuralError("score_simulations: duplicate answer for " + a.respondent_id + "/" + a.question_id);
        }
        auto q = by_id.find(a.question_id);
        if (q == by_id.end()) throw StructuralError("score_simulations: unknown question '" + a.question_id + "'");
        if (a.choice >= q->second->options.size()) throw StructuralError("score_simulations: choice out of range");
        std::size_t human_choice = 0;
        if (setting == PairingSetting::Sampled) {
            auto h = human_choice_of.find({a.respondent_id, a.question_id});
            if (h == human_choice_of.end()) {
                throw StructuralError("score_simulations: no human answer for " + a.respondent_id + "/" +
                                      a.question_id);
            }
            human_choice = h->second;
        }
        grouped[a.question_id].push_back({a.choice, human_choice});
        pairs += a.question_id + '\x1f' + a.respondent_id + '\n';
    }

    ScoreResult out;
    out.setting = setting;
    out.pairing_digest = sha256_hex(to_string(setting) + '\n' + pairs);
    double hits = 0.0;
    for (const auto& [qid, rows] : grouped) {
        const auto& q = *by_id.at(qid);
        const std::size_t k = q.options.size();
        const auto labels = q.labels();
        std::vector<double> sim_counts(k, 0.0), human_counts(k, 0.0);
        metrics::ConfusionMatrix confusion(k, std::vector<double>(k, 0.0));
        QuestionScore qs;
        qs.answers = rows.size();
        for (const auto& [sim, hum] : rows) sim_counts[sim] += 1.0;

        if (setting == PairingSetting::Sampled) {
            double q_hits = 0.0;
            for (const auto& [sim, hum] : rows) {
                human_counts[hum] += 1.0;
                confusion[sim][hum] += 1.0;
                if (sim == hum) q_hits += 1.0;
            }
            qs.acc = q_hits / static_cast<double>(rows.size());
            hits += q_hits;
        } else {
            for (const auto& r : humans.responses) {
                if (r.question_id == qid) human_counts[r.choice] += 1.0;
            }
            if (std::all_of(human_counts.begin(), human_counts.end(), [](double c) { return c == 0.0; })) {
                throw StructuralError("score_simulations: no human answers for question '" + qid + "'");
            }
            auto population = metrics::ProbDist::from_counts(labels, human_counts);
            double q_hits = 0.0;
            for (const auto& [sim, hum] : rows) {
                q_hits += population[sim];
                for (std::size_t h = 0; h < k; ++h) confusion[sim][h] += population[h];
            }
            qs.acc = q_hits / static_cast<double>(rows.size());
            hits += q_hits;
        }
        auto sim_dist = metrics::ProbDist::from_counts(labels, sim_counts);
        auto human_dist = metrics::ProbDist::from_counts(labels, human_counts);
        qs.one_minus_jsd = 1.0 - metrics::jensen_shannon(sim_dist, human_dist);
        qs.emd = metrics::emd_ordinal(sim_dist, human_dist);
        auto kappa = metrics::cohens_kappa(confusion);
        qs.kappa = kappa.kappa;
        qs.kappa_degenerate = kappa.degenerate;
        out.per_question[qid] = qs;
        out.score.one_minus_jsd += qs.one_minus_jsd;
        out.score.emd += qs.emd;
        out.score.kappa += qs.kappa;
    }
    const double nq = static_cast<double>(grouped.size());
    out.score.one_minus_jsd /= nq;
    out.score.emd /= nq;
    out.score.kappa /= nq;
    out.score.acc = hits / static_cast<double>(sorted.size());
    out.score.answers = sorted.size();
    out.score.questions = grouped.size();
    return out;
}

std::string to_string(BaselineKind k) { return k == BaselineKind::DemoIdeo ? "Demo+Ideo" : "Demo+Ideo+Opinion"; }

std::string default_baseline_template() {
    return "You are simulating one survey respondent.\n"
           "Respondent: {persona}\n"
           "Survey question:\n"
           "{question}\n\n"
           "Answer as this respondent would. End with a line of the form \"Answer: <letter>\".";
}

std::vector<SimulatedAnswer> run_baseline(backend::Backend& backend, const std::vector<SimulationTask>& tasks,
                                          std::uint64_t seed, std::size_t concurrency,
                                          const std::string& prompt_template) {
    std::vector<SimulatedAnswer> out(tasks.size());
    parallel_for(tasks.size(), std::min(concurrency, backend.max_concurrency()), [&](std::size_t i) {
        const auto& task = tasks[i];
        const auto& q = *task.question;
        const auto labels = q.labels();
        backend::Request req;
        req.prompt = render_template(prompt_template, {{"persona", task.persona}, {"question", question_block(q)}});
        req.config.seed = mix_seed(seed, string_seed(task.respondent_id), string_seed(q.id));
        req.context_key = "baseline|" + q.id;
        req.option_tokens = labels;
        auto text = backend.complete(req).text;
        auto ans = survey::parse_survey_answer(text, labels.size());
        if (ans.kind != survey::SurveyAnswer::Kind::Valid) {
            req.prompt += "\n\nYour previous reply was:\n" + text +
                          "\n\nThat reply could not be used. End with a line \"Answer: <letter>\" naming one of " +
                          join(labels, ", ") + ".";
            req.config.seed = mix_seed(*req.config.seed, 1);
            text = backend.complete(req).text;
            ans = survey::parse_survey_answer(text, labels.size());
        }
        if (ans.kind != survey::SurveyAnswer::Kind::Valid) {
            throw ParseError("baseline: no valid answer after reprompt (" + q.id + ", " + task.respondent_id + ")");
        }
        out[i] = {task.respondent_id, q.id, ans.index};
    });
    return out;
}

std::vector<ComparisonRow> compare_baselines(const MethodScore& reference, const std::vector<MethodScore>& baselines) {
    std::vector<ComparisonRow> rows;
    rows.push_back({reference.method, reference.result.score, 0.0, 0.0, 0.0, 0.0});
    for (const auto& b : baselines) {
        if (b.result.setting != reference.result.setting || b.result.pairing_digest != reference.result.pairing_digest) {
            throw StructuralError("compare_baselines: pairing mismatch between '" + reference.method + "' and '" +
                                  b.method + "'");
        }
        const auto& r = reference.result.score;
        const auto& s = b.result.score;
        rows.push_back({b.method, s, r.acc - s.acc, r.one_minus_jsd - s.one_minus_jsd, r.emd - s.emd,
                        r.kappa - s.kappa});
    }
    return rows;
}

}  // namespace alignaudit::mark
