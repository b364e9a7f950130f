// Drives the built cloakcatch binary and checks output and exit codes.

#include "cloakcatch/json_io.hpp"
#include "cloakcatch/simhash.hpp"
#include "cloakcatch/server/http_api.hpp"
#include "support/fake_fetcher.hpp"
#include "support/pages.hpp"

#include <gtest/gtest.h>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

using namespace cloakcatch;
namespace fs = std::filesystem;
using namespace std::chrono_literals;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& s)
{
    std::ofstream(p, std::ios::binary) << s;
}

std::string quote(const std::string& s)
{
    std::string q = "'";
    for (const char c : s) {
        if (c == '\'') {
            q += "'\\''";
        } else {
            q += c;
        }
    }
    return q + "'";
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() /
               ("cloakcatch_cli_" + std::to_string(::getpid()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }

    void TearDown() override { fs::remove_all(dir_); }

    CliResult run(const std::vector<std::string>& args) const
    {
        std::string cmd = quote(CLOAKCATCH_CLI);
        for (const auto& a : args) cmd += " " + quote(a);
        const auto out = dir_ / "stdout.txt";
        const auto err = dir_ / "stderr.txt";
        cmd += " >" + quote(out.string()) + " 2>" + quote(err.string());
        const int status = std::system(cmd.c_str());
        CliResult r;
        r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    fs::path file(const std::string& name, const std::string& content) const
    {
        const auto p = dir_ / name;
        spit(p, content);
        return p;
    }

    fs::path dir_;
};

const fs::path kCorpus = fs::path(CLOAKCATCH_FIXTURE_DIR) / "corpus";

/// An ephemeral port that was free a moment ago; the socket is closed again.
int free_port()
{
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    socklen_t len = sizeof addr;
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    ::close(fd);
    return ntohs(addr.sin_port);
}

}  // namespace

TEST_F(Cli, FingerprintMatchesLibrary)
{
    const auto path = kCorpus / "25_blog_article.html";
    const auto r = run({"fingerprint", path.string()});
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto j = Json::parse(r.out);
    const auto fp = fingerprint(PageDocument{slurp(path), std::nullopt, ""});
    EXPECT_EQ(j["text"], fp.text.hex());
    EXPECT_EQ(j["tag"], fp.tag.hex());
    EXPECT_EQ(j["text_features"], fp.text_feature_count);
    EXPECT_EQ(j["tag_features"], fp.tag_feature_count);
}

TEST_F(Cli, FingerprintOfEmptyFileIsZero)
{
    const auto r = run({"fingerprint", file("empty.html", "").string()});
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto j = Json::parse(r.out);
    EXPECT_EQ(j["text"], "0000000000000000");
    EXPECT_EQ(j["tag"], "0000000000000000");
    EXPECT_EQ(j["text_features"], 0);
}

TEST_F(Cli, FingerprintManyFilesGivesArray)
{
    const auto r = run({"fingerprint", (kCorpus / "01_cloaker.html").string(), (kCorpus / "02_minimal_dom.html").string()});
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto j = Json::parse(r.out);
    ASSERT_TRUE(j.is_array());
    EXPECT_EQ(j.size(), 2u);
}

TEST_F(Cli, MissingFileIsExit2)
{
    const auto r = run({"fingerprint", (dir_ / "nope.html").string()});
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("nope.html"), std::string::npos);
    EXPECT_TRUE(r.out.empty());
}

TEST_F(Cli, UsageErrorsAreExit2)
{
    EXPECT_EQ(run({}).exit_code, 2);
    EXPECT_EQ(run({"frobnicate"}).exit_code, 2);
    EXPECT_EQ(run({"detect", "--url", "http://a.example/"}).exit_code, 2);
    EXPECT_EQ(run({"eval", "--churn", "1.5"}).exit_code, 2);
    EXPECT_EQ(run({"--help"}).exit_code, 0);
}

TEST_F(Cli, BuildThenDetect)
{
    const auto spider = file("spider.html", pages::blog_page(pages::vocabulary("spider", 500)));
    const auto model = dir_ / "model.json";
    std::vector<std::string> args = {"build", "--url", "http://blog.example/post?id=3", "--out", model.string()};
    for (int i = 0; i < 6; ++i) args.push_back(spider.string());
    auto r = run(args);
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto m = parse_model(slurp(model));
    EXPECT_EQ(m.url_key, "blog.example/post?id");
    EXPECT_EQ(m.observation_count, 6u);

    // Same page as the spiders saw: clean.
    r = run({"detect", "--url", "http://blog.example/post?id=3", "--html", spider.string(), "--model", model.string()});
    EXPECT_EQ(r.exit_code, 0) << r.out << r.err;
    auto v = Json::parse(r.out);
    EXPECT_EQ(v["is_cloaking"], false);
    EXPECT_EQ(v["url_key"], "blog.example/post?id");

    // Different skeleton and different words: both channels reject.
    const auto user = file("user.html", pages::shop_page(pages::vocabulary("user", 500)));
    const auto verdict_path = dir_ / "verdict.json";
    r = run({"detect", "--url", "http://blog.example/post?id=3", "--html", user.string(), "--model", model.string(),
             "--out", verdict_path.string()});
    EXPECT_EQ(r.exit_code, 3) << r.out << r.err;
    v = Json::parse(r.out);
    EXPECT_EQ(v["is_cloaking"], true);
    EXPECT_EQ(v["channel_results"]["text"]["rejected"], true);
    EXPECT_EQ(v["channel_results"]["tag"]["rejected"], true);
    EXPECT_EQ(Json::parse(slurp(verdict_path)), v);

    // A params file that only requires the text channel still flags it.
    const auto params = file("params.json", R"({"combiner":"text-only"})");
    r = run({"detect", "--url", "http://blog.example/post?id=3", "--html", user.string(), "--model", model.string(),
             "--params", params.string()});
    EXPECT_EQ(r.exit_code, 3);
}

TEST_F(Cli, BuildRejectsTooManyViews)
{
    const auto page = file("p.html", "<p>x</p>");
    std::vector<std::string> args = {"build", "--url", "http://a.example/"};
    for (int i = 0; i < 7; ++i) args.push_back(page.string());
    const auto r = run(args);
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("exceed"), std::string::npos);
}

TEST_F(Cli, DetectNeedsExactlyOneModelSource)
{
    const auto page = file("p.html", "<p>x</p>");
    EXPECT_EQ(run({"detect", "--url", "http://a.example/", "--html", page.string()}).exit_code, 2);
    EXPECT_EQ(run({"detect", "--url", "http://a.example/", "--html", page.string(), "--model", "m.json", "--server",
                   "http://127.0.0.1:1"})
                  .exit_code,
              2);
    const auto bad = file("bad.json", "{\"url_key\": 1}");
    EXPECT_EQ(run({"detect", "--url", "http://a.example/", "--html", page.string(), "--model", bad.string()}).exit_code,
              2);
}

TEST_F(Cli, DetectAgainstServer)
{
    server::ManualClock clock(*parse_rfc3339("2025-05-01T00:00:00Z"));
    server::MemoryStore store;
    fakes::ScriptedFetcher fetcher(clock);
    server::CrawlService service(store, fetcher, clock);
    server::ApiServer api(service, clock);
    const int port = api.bind("127.0.0.1", 0);
    api.start();
    const std::string address = "http://127.0.0.1:" + std::to_string(port);
    const std::string url = "http://served.example/page?x=1";

    // The first request schedules a crawl.
    const auto same = file("same.html", fetcher.fetch_page(url, server::AgentProfile::googlebot).raw_bytes);
    auto r = run({"detect", "--url", url, "--html", same.string(), "--server", address});
    EXPECT_EQ(r.exit_code, 4) << r.err;
    EXPECT_NE(r.err.find("pending"), std::string::npos);

    for (int h = 0; h < 5; ++h) {
        service.run_due_jobs(clock.now());
        clock.advance(1h);
    }
    r = run({"detect", "--url", url, "--html", same.string(), "--server", address});
    EXPECT_EQ(r.exit_code, 0) << r.out << r.err;

    const auto other = file("other.html", pages::shop_page(pages::vocabulary("user", 400)));
    r = run({"detect", "--url", url, "--html", other.string(), "--server", address});
    EXPECT_EQ(r.exit_code, 3) << r.out << r.err;

    service.upsert_list(normalize("http://listed.example/"), server::ListKind::black);
    r = run({"detect", "--url", "http://listed.example/", "--html", same.string(), "--server", address});
    EXPECT_EQ(r.exit_code, 3);
    EXPECT_EQ(Json::parse(r.out)["listed"], "black");

    api.stop();
    r = run({"detect", "--url", url, "--html", same.string(), "--server", address});
    EXPECT_EQ(r.exit_code, 2);
}

TEST_F(Cli, EvalIsDeterministic)
{
    const std::vector<std::string> args = {"eval", "--sites", "40", "--churn", "0.05", "--cloak-fraction", "0.25",
                                           "--seed", "9"};
    const auto a = run(args);
    const auto b = run(args);
    ASSERT_EQ(a.exit_code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out.find("combined"), std::string::npos);
    EXPECT_NE(a.out.find("radius,text_tpr"), std::string::npos);

    const auto csv = dir_ / "roc.csv";
    auto with_out = args;
    with_out.insert(with_out.end(), {"--out", csv.string()});
    const auto c = run(with_out);
    ASSERT_EQ(c.exit_code, 0);
    EXPECT_EQ(c.out.find("radius,text_tpr"), std::string::npos);
    EXPECT_EQ(slurp(csv).rfind("radius,text_tpr", 0), 0u);
    EXPECT_NE(a.out.find(slurp(csv)), std::string::npos);
}

TEST_F(Cli, EvalWithoutPositivesPrintsNa)
{
    const auto r = run({"eval", "--sites", "20", "--cloak-fraction", "0", "--seed", "1"});
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("n/a"), std::string::npos);
}

TEST_F(Cli, ServeRejectsMalformedConfig)
{
    auto r = run({"serve", "--config", file("bad.json", "{ not json").string()});
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_FALSE(r.err.empty());
    r = run({"serve", "--config", file("unknown.json", R"({"colour": "blue"})").string()});
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("colour"), std::string::npos);
}

TEST_F(Cli, ServeReportsPortInUse)
{
    httplib::Server blocker;
    blocker.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    const int port = blocker.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    const auto cfg = file("cfg.json", R"({"listen": "127.0.0.1:)" + std::to_string(port) + R"(", "store": ":memory:"})");
    const auto r = run({"serve", "--config", cfg.string()});
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find(std::to_string(port)), std::string::npos);
}

TEST_F(Cli, ServeAnswersHealth)
{
    const int port = free_port();
    const auto cfg = file("cfg.json", R"({"listen": "127.0.0.1:)" + std::to_string(port) +
                                          R"(", "store": ")" + (dir_ / "models.db").string() + R"("})");
    const pid_t pid = fork();
    ASSERT_GE(pid, 0);
    if (pid == 0) {
        const auto log = (dir_ / "serve.log").string();
        if (!freopen(log.c_str(), "w", stderr)) _exit(126);
        execl(CLOAKCATCH_CLI, CLOAKCATCH_CLI, "serve", "--config", cfg.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }

    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(2s);
    client.set_read_timeout(5s);
    httplib::Result res;
    for (int attempt = 0; attempt < 100 && !res; ++attempt) {
        std::this_thread::sleep_for(50ms);
        res = client.Get("/v1/health");
    }
    ASSERT_TRUE(res) << slurp(dir_ / "serve.log");
    EXPECT_EQ(res->status, 200);
    const auto params = client.Get("/v1/params");
    ASSERT_TRUE(params);
    EXPECT_EQ(params_from_json(Json::parse(params->body)), DetectionParams{});

    kill(pid, SIGTERM);
    int status = 0;
    waitpid(pid, &status, 0);
    EXPECT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), 0);
    EXPECT_TRUE(fs::exists(dir_ / "models.db"));
}
