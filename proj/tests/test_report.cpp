#include "alignaudit/backend/scripted.hpp"
#include "alignaudit/common/error.hpp"
#include "alignaudit/common/text.hpp"
#include "alignaudit/dilemma/scenario.hpp"
#include "alignaudit/report/artifacts.hpp"
#include "alignaudit/report/backends.hpp"
#include "alignaudit/report/commands.hpp"
#include "alignaudit/report/config.hpp"
#include "alignaudit/report/svg.hpp"
#include "alignaudit/report/table.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <regex>
#include <sstream>

using namespace alignaudit;
using namespace alignaudit::report;
namespace fs = std::filesystem;

namespace {

RunConfig bundled_config(const std::string& name) {
    const auto path = fixtures::data_path("configs/" + name);
    return parse_run_config(read_file(path), fs::path(path).parent_path().string());
}

RunConfig inline_config(const std::string& text) { return parse_run_config(text, fixtures::data_path("configs")); }

double cell(const AuditReport& r, const std::string& table, const std::string& key_col, const std::string& key,
            const std::string& col) {
    const auto& t = r.table(table);
    const auto k = t.column(key_col), c = t.column(col);
    for (const auto& row : t.rows)
        if (row[k] == key) return std::stod(row[c]);
    throw std::runtime_error("no row " + key + " in " + table);
}

std::string golden_text(const AuditReport& report, const std::string& out_dir) {
    std::string text;
    for (const auto& t : report.tables) text += "## " + t.name + "\n" + t.to_csv();
    text += "## manifest\n";
    const auto manifest = nlohmann::json::parse(read_file(out_dir + "/manifest.json"));
    for (const auto& f : manifest.at("files")) {
        text += f.at("path").get<std::string>() + "," + f.at("sha256").get<std::string>() + "\n";
    }
    return text;
}

class CountingBackend : public backend::Backend {
public:
    explicit CountingBackend(std::shared_ptr<backend::Backend> inner) : inner_(std::move(inner)) {}
    std::string id() const override { return inner_->id(); }
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

}  // namespace

TEST(Svg, ScatterTransformCorners) {
    const auto tr = scatter_transform({{"a", 0.0, 0.0}, {"b", 0.2, 0.5}});
    EXPECT_DOUBLE_EQ(tr.x_max, 0.2);
    EXPECT_DOUBLE_EQ(tr.y_max, 0.5);
    EXPECT_DOUBLE_EQ(tr.px(0.0), 50.0);
    EXPECT_DOUBLE_EQ(tr.py(0.0), 310.0);
    EXPECT_DOUBLE_EQ(tr.px(0.2), 430.0);
    EXPECT_DOUBLE_EQ(tr.py(0.5), 50.0);
    const auto svg = scatter_svg("map", "x", "y", {{"a", 0.0, 0.0}, {"b", 0.2, 0.5}});
    EXPECT_NE(svg.find("cx=\"50.00\" cy=\"310.00\""), std::string::npos);
    EXPECT_NE(svg.find("cx=\"430.00\" cy=\"50.00\""), std::string::npos);
    const std::regex circle("<circle");
    EXPECT_EQ(std::distance(std::sregex_iterator(svg.begin(), svg.end(), circle), std::sregex_iterator()), 2);
}

TEST(Svg, AxisMaxRoundsUp) {
    EXPECT_DOUBLE_EQ(axis_max(0.0), 0.1);
    EXPECT_DOUBLE_EQ(axis_max(0.2), 0.2);
    EXPECT_NEAR(axis_max(0.21), 0.3, 1e-12);
}

TEST(Svg, EscapesText) { EXPECT_EQ(xml_escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;"); }

TEST(Figures, EmptyTableIsSkippedWithNote) {
    AuditReport r;
    r.add_table(Table{"empty", {"k", "v"}, {}});
    r.figures.push_back({"e.svg", FigureKind::Bar, "Empty", "empty", {"k"}, {"v"}, "", ""});
    r.figures.push_back({"m.svg", FigureKind::Bar, "Missing", "absent", {"k"}, {"v"}, "", ""});
    const auto out = render_figures(r);
    EXPECT_TRUE(out.files.empty());
    EXPECT_EQ(out.skipped.size(), 2u);
}

TEST(Figures, RenderingIsByteStable) {
    AuditReport r;
    r.config_digest = "abc";
    Table t{"vals", {"k", "v"}, {}};
    t.add_row({"x", num(0.25)});
    t.add_row({"y", "NA"});
    r.add_table(t);
    r.figures.push_back({"v.svg", FigureKind::Bar, "Vals", "vals", {"k"}, {"v"}, "", "v"});
    const auto a = render_figures(r), b = render_figures(r);
    ASSERT_EQ(a.files.size(), 1u);
    EXPECT_EQ(a.files, b.files);
    EXPECT_NE(a.files.at("v.svg").find("abc"), std::string::npos);
}

TEST(Table, WidthChecked) {
    Table t{"t", {"a", "b"}, {}};
    EXPECT_THROW(t.add_row({"1"}), StructuralError);
    t.add_row({"1", "x,y"});
    EXPECT_EQ(t.to_csv(), "a,b\n1,\"x,y\"\n");
    EXPECT_EQ(percent(0.3425775), "34.3%");
}

TEST(Config, EnvInterpolation) {
    ::setenv("ALIGNAUDIT_T_HOST", "example.org", 1);
    ::unsetenv("ALIGNAUDIT_T_MISSING1");
    ::unsetenv("ALIGNAUDIT_T_MISSING2");
    EXPECT_EQ(interpolate_env("https://${ALIGNAUDIT_T_HOST}/v1 costs $$5"), "https://example.org/v1 costs $5");
    try {
        interpolate_env("${ALIGNAUDIT_T_MISSING1} ${ALIGNAUDIT_T_MISSING2}");
        FAIL();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("ALIGNAUDIT_T_MISSING1"), std::string::npos);
        EXPECT_NE(msg.find("ALIGNAUDIT_T_MISSING2"), std::string::npos);
    }
}

TEST(Config, OverridesAndDigest) {
    const auto a = parse_run_config(R"({"seed": 1, "output_dir": "x"})", ".");
    const auto b = parse_run_config(R"({"seed": 1, "output_dir": "y"})", "/elsewhere");
    EXPECT_EQ(a.digest(), b.digest());
    ConfigOverrides o;
    o.seed = 9;
    o.backend = "scripted:always:A";
    const auto c = parse_run_config(R"({"seed": 1})", ".", o);
    EXPECT_EQ(c.seed(), 9u);
    EXPECT_NE(c.digest(), a.digest());
    EXPECT_EQ(make_backend(c)->id(), "scripted:always:A");
    EXPECT_THROW(parse_run_config("{not json", "."), ConfigError);
    EXPECT_THROW(parse_backend_spec("teleport"), ConfigError);
}

TEST(Lock, SecondHolderIsRejected) {
    fixtures::TempDir dir("lock");
    {
        OutputLock first(dir.str());
        EXPECT_THROW(OutputLock second(dir.str()), ConfigError);
        std::ostringstream err;
        EXPECT_EQ(run_command("dilemma", inline_config(R"({"dilemma": {}})"), {dir.str(), false, nullptr}, err), kExitConfig);
    }
    EXPECT_NO_THROW(OutputLock again(dir.str()));
}

TEST(Preflight, MissingHumanFileNamedBeforeAnyCall) {
    fixtures::TempDir dir("pre");
    auto counting = backend::ScriptedBackend::constant("count", "A");
    const auto cfg = inline_config(R"({"survey": {"questions": "../survey/questions.jsonl", "human": "nowhere.csv"}})");
    try {
        cmd_survey(cfg, {dir.str(), false, counting});
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("nowhere.csv"), std::string::npos);
    }
    EXPECT_EQ(counting->calls(), 0u);
    std::ostringstream err;
    EXPECT_EQ(run_command("survey", cfg, {dir.str(), false, counting}, err), kExitConfig);
    EXPECT_NE(err.str().find("nowhere.csv"), std::string::npos);
}

TEST(ExitCodes, Mapping) {
    EXPECT_EQ(exit_code_for(ConfigError("x")), kExitConfig);
    EXPECT_EQ(exit_code_for(BackendError("x", true)), kExitBackend);
    EXPECT_EQ(exit_code_for(PartialRunError("x", "cp")), kExitPartial);
    EXPECT_EQ(exit_code_for(ParseError("x")), kExitBackend);
    EXPECT_EQ(exit_code_for(std::runtime_error("x")), kExitFailure);
}

TEST(DilemmaCommand, AlwaysAPrefersFirstPole) {
    fixtures::TempDir dir("always");
    const auto r = cmd_dilemma(inline_config(R"({"dilemma": {}})"), {dir.str(), false, scripted_behaviour("always:A")});
    for (auto vp : dilemma::kValuePairs) EXPECT_DOUBLE_EQ(cell(r, "preference_rate", "value_pair", dilemma::to_string(vp), "rate"), 1.0);
    EXPECT_DOUBLE_EQ(cell(r, "agreement_ratio", "condition", "baseline", "ratio"), 1.0);
}

TEST(DilemmaCommand, ConsequenceBehaviours) {
    fixtures::TempDir dir("conseq");
    const auto cfg = inline_config(R"({"dilemma": {}})");
    const auto following = cmd_dilemma(cfg, {dir.str(), false, scripted_behaviour("consequence-following")});
    EXPECT_DOUBLE_EQ(cell(following, "flip_rate", "value_pair", "all", "rate"), 1.0);
    const auto insensitive = cmd_dilemma(cfg, {dir.str(), false, scripted_behaviour("consequence-insensitive")});
    EXPECT_DOUBLE_EQ(cell(insensitive, "flip_rate", "value_pair", "all", "rate"), 0.0);
    EXPECT_GT(cell(insensitive, "flip_rate", "value_pair", "all", "pairs"), 0.0);
}

TEST(DilemmaCommand, MatchesGolden) {
    fixtures::TempDir dir("golden");
    const auto cfg = bundled_config("dilemma_toy.json");
    const auto report = cmd_dilemma(cfg, {dir.str(), false, nullptr});
    write_report(dir.str(), report);
    const auto text = golden_text(report, dir.str());
    const std::string golden = std::string(ALIGNAUDIT_TEST_DIR) + "/golden/dilemma_toy.txt";
    if (std::getenv("ALIGNAUDIT_UPDATE_GOLDEN")) write_file_atomic(golden, text);
    ASSERT_TRUE(fs::exists(golden));
    EXPECT_EQ(text, read_file(golden));
}

TEST(AlignCommand, ExportOnly) {
    fixtures::TempDir dir("export_only");
    auto cfg = bundled_config("align_toy.json");
    cfg.doc["align"]["export_only"] = true;
    const auto r = cmd_align(cfg, {dir.str(), false, nullptr});
    EXPECT_FALSE(r.table("export").empty());
    EXPECT_THROW(r.table("protocol_comparison"), StructuralError);
    EXPECT_EQ(r.artifacts.count("export/train.jsonl"), 1u);
    EXPECT_EQ(r.artifacts.count("models/ft_model.json"), 0u);
}

TEST(AlignCommand, ReferenceGainCell) {
    fixtures::TempDir dir("align");
    const auto r = cmd_align(bundled_config("align_toy.json"), {dir.str(), false, nullptr});
    const auto& g = r.table("relative_gain");
    bool found = false;
    for (const auto& row : g.rows)
        if (row[0] == "reference") {
            EXPECT_EQ(row[g.column("relative_gain")], "34.3%");
            found = true;
        }
    EXPECT_TRUE(found);
    EXPECT_EQ(relative_gain_cell(0.613, 0.823), "34.3%");
    // FT dominates ZS in every column; ctrl never beats its non-ctrl row.
    const auto& comparison = r.table("protocol_comparison");
    auto row_of = [&](const std::string& m) {
        for (const auto& row : comparison.rows)
            if (row[0] == m) return row;
        throw std::runtime_error(m);
    };
    const auto zs = row_of("ZS"), ft = row_of("FT"), ftc = row_of("FT [ctrl]");
    for (std::size_t c = 1; c < comparison.columns.size(); ++c) {
        EXPECT_GE(std::stod(ft[c]), std::stod(zs[c])) << comparison.columns[c];
        EXPECT_LE(std::stod(ftc[c]), std::stod(ft[c])) << comparison.columns[c];
    }
}

TEST(Artifacts, ManifestDetectsTampering) {
    fixtures::TempDir dir("manifest");
    AuditReport r;
    r.command = "test";
    r.config_digest = "d";
    Table t{"vals", {"k", "v"}, {}};
    t.add_row({"x", "1"});
    r.add_table(t);
    r.artifacts["extra/a.txt"] = "hello\n";
    write_report(dir.str(), r);
    EXPECT_TRUE(verify_manifest(dir.str()).empty());
    EXPECT_EQ(read_file(dir / "tables/vals.csv").rfind("# config_digest=d\n", 0), 0u);
    write_file_atomic(dir / "extra/a.txt", "tampered\n");
    EXPECT_FALSE(verify_manifest(dir.str()).empty());
    const auto back = report_from_json(nlohmann::json::parse(read_file(dir / "report.json")));
    EXPECT_EQ(back.table("vals").rows, r.table("vals").rows);
}

TEST(SurveyCommand, OutageBetweenCulturesIsPartial) {
    const auto cfg = bundled_config("survey_identity.json");
    fixtures::TempDir full("survey_full"), cut("survey_cut");
    auto counted = std::make_shared<CountingBackend>(make_backend(cfg));
    std::ostringstream err;
    ASSERT_EQ(run_command("survey", cfg, {full.str(), false, counted}, err), kExitOk) << err.str();
    // Both cultures make the same number of calls; the outage hits the first call of the second.
    auto flaky = failing_after(make_backend(cfg), counted->calls() / 2);
    EXPECT_EQ(run_command("survey", cfg, {cut.str(), false, flaky}, err), kExitPartial) << err.str();
    EXPECT_EQ(run_command("survey", cfg, {cut.str(), true, nullptr}, err), kExitOk) << err.str();
    EXPECT_EQ(read_file(cut / "report.json"), read_file(full / "report.json"));
}

TEST(Backends, HumanMirrorAndFailingWrapper) {
    auto inner = backend::ScriptedBackend::constant("s", "A");
    auto flaky = failing_after(inner, 2);
    EXPECT_EQ(backend::complete(*flaky, "1", {}).text, "A");
    EXPECT_EQ(backend::complete(*flaky, "2", {}).text, "A");
    try {
        backend::complete(*flaky, "3", {});
        FAIL();
    } catch (const BackendError& e) {
        EXPECT_TRUE(e.retryable());
    }
    EXPECT_EQ(scripted_behaviours().size(), 5u);
    EXPECT_THROW(scripted_behaviour("unknown"), ConfigError);
}
