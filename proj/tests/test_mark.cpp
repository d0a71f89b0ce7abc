#include "alignaudit/backend/scripted.hpp"
#include "alignaudit/backend/toy_lm.hpp"
#include "alignaudit/common/error.hpp"
#include "alignaudit/common/text.hpp"
#include "alignaudit/mark/scoring.hpp"
#include "alignaudit/mark/simulate.hpp"
#include "alignaudit/mark/type_dynamics.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace alignaudit;
using namespace alignaudit::mark;

namespace {

survey::SurveyQuestion binary_question(const std::string& id = "q") {
    survey::SurveyQuestion q;
    q.id = id;
    q.text = "Do you agree?";
    q.options = {"yes", "no"};
    q.value_dimension = "d";
    return q;
}

// Respondents r000..r099 answering question `q` with the given human choices.
RespondentData respondents(const std::vector<std::size_t>& human, const std::string& qid = "q") {
    RespondentData d;
    for (std::size_t i = 0; i < human.size(); ++i) {
        char id[8];
        std::snprintf(id, sizeof id, "r%03zu", i);
        d.respondents[id] = survey::PersonaProfile{};
        d.responses.push_back({id, qid, human[i]});
    }
    return d;
}

std::vector<SimulatedAnswer> answers(const RespondentData& d, const std::vector<std::size_t>& choices) {
    std::vector<SimulatedAnswer> out;
    for (std::size_t i = 0; i < choices.size(); ++i) out.push_back({d.responses[i].respondent_id, d.responses[i].question_id, choices[i]});
    return out;
}

// Human and simulated choices with confusion [sim][human] = [[40,10],[5,45]].
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> kappa_fixture() {
    std::vector<std::size_t> sim, human;
    auto add = [&](std::size_t s, std::size_t h, int n) {
        for (int i = 0; i < n; ++i) {
            sim.push_back(s);
            human.push_back(h);
        }
    };
    add(0, 0, 40);
    add(0, 1, 10);
    add(1, 0, 5);
    add(1, 1, 45);
    return {sim, human};
}

std::shared_ptr<backend::Backend> toy() {
    return std::make_shared<backend::ToyBackend>(
        std::make_shared<backend::ToyCategoricalLM>(backend::ToyCategoricalLM::zeros({"none"}, {"A"})));
}

}  // namespace

TEST(TypeDynamics, BundledTableIsComplete) {
    const auto& t = TypeDynamics::bundled();
    EXPECT_EQ(t.table().size(), 16u);
    EXPECT_EQ(describe_stack(t.resolve("INTJ").function_stack), "Ni, Te, Fi, Se");
    EXPECT_EQ(describe_stack(t.resolve("ESFP").function_stack), "Se, Fi, Te, Ni");
    EXPECT_EQ(describe_stack(t.resolve("ISTJ").function_stack), "Si, Te, Fi, Ne");
    EXPECT_THROW(t.resolve("ABCD"), ParseError);
    EXPECT_EQ(t.digest().size(), 64u);
}

TEST(TypeDynamics, ParseRejectsIncompleteTables) {
    EXPECT_THROW(TypeDynamics::parse(R"({"types": {"INTJ": ["Ni","Te","Fi","Se"]}})"), ConfigError);
    auto j = nlohmann::json::parse(read_file(fixtures::data_path("mark/mbti_type_dynamics.json")));
    j["types"]["INTJ"] = {"Ni", "Ni", "Fi", "Se"};
    EXPECT_THROW(TypeDynamics::parse(j.dump()), ConfigError);
}

TEST(TypeDynamics, FindsDelimitedCodes) {
    EXPECT_EQ(find_type_code("Most likely intj."), "INTJ");
    EXPECT_EQ(find_type_code("Type: ENFP, maybe INFP"), "ENFP");
    EXPECT_FALSE(find_type_code("XINTJX").has_value());
    EXPECT_FALSE(find_type_code("XXXX").has_value());
}

TEST(Templates, BundledAreValid) {
    const auto& t = bundled_templates();
    EXPECT_NO_THROW(t.validate());
    EXPECT_EQ(t.version().size(), 16u);
    StageTemplates broken = t;
    broken.text[2] = "no history here {persona}";
    EXPECT_THROW(broken.validate(), ConfigError);
    broken = t;
    broken.text[0] += " {unknown}";
    EXPECT_THROW(broken.validate(), ConfigError);
}

TEST(Simulate, RepromptOnBadType) {
    auto be = backend::ScriptedBackend::sequence("script", {"stressed about rent", "XXXX", "INTJ", "careful analysis", "Answer: B"});
    const auto q = binary_question();
    const auto t = simulate(*be, "a persona", q, bundled_templates(), TypeDynamics::bundled());
    EXPECT_EQ(t.predicted_type.code, "INTJ");
    EXPECT_EQ(t.predicted_type.function_stack, (FunctionStack{"Ni", "Te", "Fi", "Se"}));
    EXPECT_EQ(t.reprompts(), 1u);
    EXPECT_EQ(t.final_choice, "B");
    EXPECT_EQ(t.final_index, 1u);
    EXPECT_EQ(be->calls(), 5u);
    const auto prompts = be->prompts();
    EXPECT_NE(prompts[3].find("Ni, Te, Fi, Se"), std::string::npos);
}

TEST(Simulate, VerbatimChaining) {
    auto be = backend::ScriptedBackend::sequence("script", {"S1 output text", "ENFP", "S3 reasoning text", "Answer: A"});
    const auto t = simulate(*be, "a persona", binary_question(), bundled_templates(), TypeDynamics::bundled());
    EXPECT_EQ(t.stress_summary, "S1 output text");
    EXPECT_EQ(t.cognitive_analysis, "S3 reasoning text");
    for (std::size_t s = 1; s < kStageCount; ++s)
        for (std::size_t prev = 0; prev < s; ++prev)
            EXPECT_NE(t.stages[s].prompt.find(t.stages[prev].output()), std::string::npos) << s << " " << prev;
    EXPECT_EQ(trace_from_json(to_json(t)).stages[2].prompt, t.stages[2].prompt);
}

TEST(Simulate, SecondFailureIsParseError) {
    auto bad_type = backend::ScriptedBackend::sequence("script", {"s", "none", "still none"});
    EXPECT_THROW(simulate(*bad_type, "p", binary_question(), bundled_templates(), TypeDynamics::bundled()), ParseError);
    auto bad_answer = backend::ScriptedBackend::sequence("script", {"s", "ISTP", "r", "hmm", "Z?"});
    EXPECT_THROW(simulate(*bad_answer, "p", binary_question(), bundled_templates(), TypeDynamics::bundled()), ParseError);
}

TEST(Simulate, ToyRunsAreReproducible) {
    const auto qs = survey::load_questions(fixtures::data_path("mark/questions.jsonl"));
    const auto data = load_respondents(fixtures::data_path("mark/respondents.csv"), qs);
    const auto tasks = tasks_for(data, qs);
    ASSERT_EQ(tasks.size(), 50u);
    auto be = toy();
    const auto a = run_simulations(*be, tasks, bundled_templates(), TypeDynamics::bundled(), 9);
    const auto b = run_simulations(*be, tasks, bundled_templates(), TypeDynamics::bundled(), 9, 1);
    EXPECT_EQ(traces_jsonl(a), traces_jsonl(b));
    for (const auto& t : a) {
        EXPECT_TRUE(is_type_code(t.predicted_type.code));
        EXPECT_EQ(t.predicted_type, TypeDynamics::bundled().resolve(t.predicted_type.code));
    }
}

TEST(Respondents, OpinionOnlyWhenRequested) {
    const auto qs = survey::load_questions(fixtures::data_path("mark/questions.jsonl"));
    const auto data = load_respondents(fixtures::data_path("mark/respondents.csv"), qs);
    const auto& p = data.respondents.at("r001");
    EXPECT_EQ(persona_text(p).find("inequality"), std::string::npos);
    EXPECT_NE(persona_text(p, true).find("inequality"), std::string::npos);
    EXPECT_NE(persona_text(p).find("liberal"), std::string::npos);
}

TEST(Scoring, KappaFixture) {
    const auto [sim, human] = kappa_fixture();
    const auto data = respondents(human);
    const auto r = score_simulations(answers(data, sim), data, {binary_question()}, PairingSetting::Sampled);
    EXPECT_NEAR(r.score.kappa, 0.70, 1e-12);
    EXPECT_NEAR(r.score.acc, 0.85, 1e-12);
    EXPECT_EQ(r.score.answers, 100u);
}

TEST(Scoring, PerfectSimulation) {
    const std::vector<std::size_t> human{0, 1, 1, 0, 1};
    const auto data = respondents(human);
    const auto r = score_simulations(answers(data, human), data, {binary_question()}, PairingSetting::Sampled);
    EXPECT_DOUBLE_EQ(r.score.acc, 1.0);
    EXPECT_DOUBLE_EQ(r.score.one_minus_jsd, 1.0);
    EXPECT_DOUBLE_EQ(r.score.emd, 0.0);
    EXPECT_DOUBLE_EQ(r.score.kappa, 1.0);
}

TEST(Scoring, OrderIndependent) {
    const auto [sim, human] = kappa_fixture();
    const auto data = respondents(human);
    auto ans = answers(data, sim);
    const auto a = score_simulations(ans, data, {binary_question()}, PairingSetting::Global);
    std::reverse(ans.begin(), ans.end());
    const auto b = score_simulations(ans, data, {binary_question()}, PairingSetting::Global);
    EXPECT_EQ(a.score.acc, b.score.acc);
    EXPECT_EQ(a.pairing_digest, b.pairing_digest);
    EXPECT_EQ(a.score.kappa, 0.0);
    // 50 simulated answers each for options 0 and 1; population shares 0.45 and 0.55.
    EXPECT_NEAR(a.score.acc, (50 * 0.45 + 50 * 0.55) / 100.0, 1e-12);
}

TEST(Scoring, Degenerate) {
    const auto data = respondents({0, 1});
    EXPECT_THROW(score_simulations({}, data, {binary_question()}, PairingSetting::Sampled), DegenerateInputError);
    std::vector<SimulatedAnswer> dup{{"r000", "q", 0}, {"r000", "q", 1}};
    EXPECT_THROW(score_simulations(dup, data, {binary_question()}, PairingSetting::Sampled), StructuralError);
    std::vector<SimulatedAnswer> stranger{{"nobody", "q", 0}};
    EXPECT_THROW(score_simulations(stranger, data, {binary_question()}, PairingSetting::Sampled), StructuralError);
}

TEST(Comparison, DeltaAgainstBaseline) {
    std::vector<std::size_t> human(100, 0), mark(100, 1), base(100, 1);
    for (std::size_t i = 0; i < 46; ++i) mark[i] = 0;
    for (std::size_t i = 0; i < 31; ++i) base[i] = 0;
    const auto data = respondents(human);
    const auto q = binary_question();
    MethodScore ref{"MARK", score_simulations(answers(data, mark), data, {q}, PairingSetting::Sampled)};
    MethodScore b{"Demo+Ideo", score_simulations(answers(data, base), data, {q}, PairingSetting::Sampled)};
    EXPECT_NEAR(ref.result.score.acc, 0.46, 1e-12);
    EXPECT_NEAR(b.result.score.acc, 0.31, 1e-12);
    const auto rows = compare_baselines(ref, {b});
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].method, "MARK");
    EXPECT_EQ(rows[0].delta_acc, 0.0);
    EXPECT_NEAR(rows[1].delta_acc, 0.15, 1e-12);
    const auto same = compare_baselines(ref, {MethodScore{"copy", ref.result}});
    EXPECT_EQ(same[1].delta_acc, 0.0);
    EXPECT_EQ(same[1].delta_kappa, 0.0);
    EXPECT_EQ(same[1].delta_emd, 0.0);
}

TEST(Comparison, PairingMismatch) {
    const std::vector<std::size_t> human{0, 1, 0, 1};
    const auto data = respondents(human);
    const auto q = binary_question();
    MethodScore ref{"MARK", score_simulations(answers(data, human), data, {q}, PairingSetting::Sampled)};
    auto fewer = answers(data, human);
    fewer.pop_back();
    MethodScore partial{"b", score_simulations(fewer, data, {q}, PairingSetting::Sampled)};
    EXPECT_THROW(compare_baselines(ref, {partial}), StructuralError);
    MethodScore global{"g", score_simulations(answers(data, human), data, {q}, PairingSetting::Global)};
    EXPECT_THROW(compare_baselines(ref, {global}), StructuralError);
}

TEST(Baseline, OneRepromptThenError) {
    const auto q = binary_question();
    std::vector<SimulationTask> tasks{{"r0", "persona", &q}};
    auto recovering = backend::ScriptedBackend::sequence("s", {"unsure", "Answer: B"});
    const auto got = run_baseline(*recovering, tasks, 1);
    EXPECT_EQ(got[0].choice, 1u);
    auto stubborn = backend::ScriptedBackend::constant("s", "unsure");
    EXPECT_THROW(run_baseline(*stubborn, tasks, 1), ParseError);
    EXPECT_EQ(stubborn->calls(), 2u);
}
