#include "alignaudit/backend/backend.hpp"
#include "alignaudit/backend/cache.hpp"
#include "alignaudit/backend/remote.hpp"
#include "alignaudit/backend/scripted.hpp"
#include "alignaudit/backend/toy_lm.hpp"
#include "alignaudit/common/error.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <thread>

using namespace alignaudit;
using namespace alignaudit::backend;

namespace {

// Local chat-completions stand-in answering every POST through `handler`.
class StubServer {
public:
    explicit StubServer(httplib::Server::Handler handler) {
        server_.Post("/v1/chat/completions", [this, handler](const httplib::Request& req, httplib::Response& res) {
            ++hits_;
            last_body_ = req.body;
            handler(req, res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
    int hits() const { return hits_; }
    const std::string& last_body() const { return last_body_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> hits_{0};
    std::string last_body_;
};

RemoteConfig stub_config(const std::string& url) {
    RemoteConfig cfg;
    cfg.base_url = url;
    cfg.model = "stub-model";
    cfg.max_attempts = 3;
    cfg.initial_backoff = std::chrono::milliseconds(1);
    cfg.timeout = std::chrono::seconds(5);
    return cfg;
}

const char* kAbcPayload = R"({"choices":[{"message":{"content":"A"},"logprobs":{"content":[
  {"token":"A","logprob":-0.5,"top_logprobs":[{"token":"A","logprob":-0.5},{"token":" B","logprob":-1.5},
  {"token":"C","logprob":-2.0}]}]}}]})";

}  // namespace

TEST(FirstToken, RenormalizesOverOptions) {
    Completion c;
    c.first_token_logprobs = std::map<std::string, double>{{"A", -0.1}, {"B", -2.3}, {"Z", -0.5}};
    const auto d = restrict_first_token(c, {"A", "B"});
    const double a = std::exp(-0.1), b = std::exp(-2.3);
    EXPECT_NEAR(d[0], a / (a + b), 1e-12);
    EXPECT_NEAR(d[0], 0.9002495108803148, 1e-12);
    EXPECT_NEAR(d[1], b / (a + b), 1e-12);
}

TEST(FirstToken, LeadingSpaceMerges) {
    Completion c;
    c.first_token_logprobs = std::map<std::string, double>{{" A", std::log(0.2)}, {"A", std::log(0.2)}, {"B", std::log(0.4)}};
    const auto d = restrict_first_token(c, {"A", "B"});
    EXPECT_NEAR(d[0], 0.5, 1e-12);
}

TEST(FirstToken, MissingOptionIsCoverageError) {
    Completion c;
    c.first_token_logprobs = std::map<std::string, double>{{"A", -0.1}, {"B", -2.3}, {"C", -3.0}};
    EXPECT_THROW(restrict_first_token(c, {"A", "B", "C", "D"}), CoverageError);
    const auto partial = restrict_first_token(c, {"A", "B", "C", "D"}, true);
    EXPECT_EQ(partial[3], 0.0);
    Completion none;
    EXPECT_THROW(restrict_first_token(none, {"A"}), UnsupportedCapabilityError);
}

TEST(ToyBackend, DistributionIsSoftmaxOfRow) {
    auto lm = std::make_shared<ToyCategoricalLM>(std::vector<std::string>{"q1|US"}, std::vector<std::string>{"A", "B"},
                                                 std::vector<std::vector<double>>{{std::log(3.0), 0.0}});
    ToyBackend be(lm);
    const auto d = first_token_distribution(be, "prompt", {"A", "B"}, "q1|US");
    EXPECT_NEAR(d[0], 0.75, 1e-12);
    const auto backed_off = first_token_distribution(be, "prompt", {"A", "B"}, "q1|US|male|18-29");
    EXPECT_EQ(backed_off, d);
}

TEST(ToyBackend, SeededSamplingIsReproducible) {
    auto lm = std::make_shared<ToyCategoricalLM>(ToyCategoricalLM::zeros({"q"}, {"A", "B", "C"}));
    ToyBackend be(lm);
    Request r{"prompt", {}, "q", {"A", "B", "C"}, false};
    r.config.temperature = 1.0;
    std::vector<std::string> first, second;
    for (std::uint64_t s = 0; s < 20; ++s) {
        r.config.seed = s;
        first.push_back(be.complete(r).text);
    }
    for (std::uint64_t s = 0; s < 20; ++s) {
        r.config.seed = s;
        second.push_back(be.complete(r).text);
    }
    EXPECT_EQ(first, second);
    EXPECT_GT(std::set<std::string>(first.begin(), first.end()).size(), 1u);
}

TEST(ToyModel, JsonRoundTrip) {
    ToyCategoricalLM lm({"a", "b"}, {"X", "Y"}, {{0.1, -0.2}, {1.5, 0.0}});
    const auto back = ToyCategoricalLM::from_json(lm.to_json());
    EXPECT_EQ(back.logits(), lm.logits());
    EXPECT_EQ(back.contexts(), lm.contexts());
    EXPECT_THROW(lm.require("zzz"), StructuralError);
}

TEST(Cache, SecondCallIsHit) {
    fixtures::TempDir dir("cache");
    auto inner = ScriptedBackend::constant("s", "B");
    auto cache = std::make_shared<ResponseCache>(dir.str());
    CachingBackend be(inner, cache);
    Request r{"hello", {}, "", {}, false};
    const auto first = be.complete(r);
    const auto second = be.complete(r);
    EXPECT_FALSE(first.cached);
    EXPECT_TRUE(second.cached);
    EXPECT_EQ(first.text, second.text);
    EXPECT_EQ(inner->calls(), 1u);
    EXPECT_EQ(cache->hits(), 1u);

    // A fresh cache over the same directory still hits.
    auto reopened = std::make_shared<ResponseCache>(dir.str());
    CachingBackend be2(inner, reopened);
    EXPECT_TRUE(be2.complete(r).cached);
    EXPECT_EQ(inner->calls(), 1u);

    r.config.temperature = 0.5;
    EXPECT_FALSE(be.complete(r).cached);
}

TEST(Cache, DigestCoversMetadata) {
    Request a{"p", {}, "k1", {"A"}, false};
    Request b = a;
    b.context_key = "k2";
    EXPECT_NE(cache_digest("x", "m", a), cache_digest("x", "m", b));
    EXPECT_EQ(cache_digest("x", "m", a), cache_digest("x", "m", a));
}

TEST(Scripted, SequenceRepeatsLastReply) {
    auto be = ScriptedBackend::sequence("seq", {"one", "two"});
    EXPECT_EQ(complete(*be, "p1", {}).text, "one");
    EXPECT_EQ(complete(*be, "p2", {}).text, "two");
    EXPECT_EQ(complete(*be, "p3", {}).text, "two");
    EXPECT_EQ(be->prompts(), (std::vector<std::string>{"p1", "p2", "p3"}));
}

TEST(Remote, ParsesLogprobsFromStub) {
    StubServer stub([](const httplib::Request&, httplib::Response& res) {
        res.set_content(kAbcPayload, "application/json");
    });
    RemoteBackend be(stub_config(stub.url()), "key");
    const auto d = first_token_distribution(be, "question", {"A", "B", "C"});
    const double a = std::exp(-0.5), b = std::exp(-1.5), c = std::exp(-2.0);
    EXPECT_NEAR(d[1], b / (a + b + c), 1e-12);
    const auto sent = nlohmann::json::parse(stub.last_body());
    EXPECT_EQ(sent["model"], "stub-model");
    EXPECT_EQ(sent["logprobs"], true);
}

TEST(Remote, MissingOptionRaisesCoverage) {
    StubServer stub([](const httplib::Request&, httplib::Response& res) {
        res.set_content(kAbcPayload, "application/json");
    });
    RemoteBackend be(stub_config(stub.url()), "key");
    try {
        first_token_distribution(be, "question", {"A", "B", "C", "D"});
        FAIL() << "expected CoverageError";
    } catch (const CoverageError& e) {
        EXPECT_NE(std::string(e.what()).find("D"), std::string::npos);
    }
}

TEST(Remote, ServerErrorRetriesThenFails) {
    StubServer stub([](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    RemoteBackend be(stub_config(stub.url()), "key");
    try {
        complete(be, "question", {});
        FAIL() << "expected BackendError";
    } catch (const BackendError& e) {
        EXPECT_TRUE(e.retryable());
    }
    EXPECT_EQ(stub.hits(), 3);
}

TEST(Remote, RecoversAfterTransientError) {
    std::atomic<int> calls{0};
    StubServer stub([&](const httplib::Request&, httplib::Response& res) {
        if (calls++ == 0) {
            res.status = 503;
            return;
        }
        res.set_content(kAbcPayload, "application/json");
    });
    RemoteBackend be(stub_config(stub.url()), "key");
    EXPECT_EQ(complete(be, "question", {}).text, "A");
    EXPECT_EQ(stub.hits(), 2);
}

TEST(Remote, AuthFailureIsImmediate) {
    StubServer stub([](const httplib::Request&, httplib::Response& res) { res.status = 401; });
    RemoteBackend be(stub_config(stub.url()), "key");
    EXPECT_THROW(complete(be, "question", {}), AuthenticationError);
    EXPECT_EQ(stub.hits(), 1);
}

TEST(Remote, MalformedBodyKeepsPayload) {
    StubServer stub([](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"nope\":1}", "application/json");
    });
    RemoteBackend be(stub_config(stub.url()), "key");
    try {
        complete(be, "question", {});
        FAIL() << "expected MalformedPayloadError";
    } catch (const MalformedPayloadError& e) {
        EXPECT_EQ(e.payload(), "{\"nope\":1}");
    }
}

TEST(Remote, MissingKeyVariable) {
    RemoteConfig cfg = stub_config("http://127.0.0.1:1/v1");
    cfg.api_key_env = "ALIGNAUDIT_TEST_UNSET_KEY";
    ::unsetenv("ALIGNAUDIT_TEST_UNSET_KEY");
    EXPECT_THROW(RemoteBackend{cfg}, AuthenticationError);
}
