// cloakcatch: operator entry point.
//
// Exit codes: 0 clean / success, 2 usage or I/O error, 3 cloaking detected, 4 model pending.

#include "cloakcatch/detector.hpp"
#include "cloakcatch/eval.hpp"
#include "cloakcatch/json_io.hpp"
#include "cloakcatch/simhash.hpp"
#include "cloakcatch/swm.hpp"
#include "cloakcatch/urlnorm.hpp"
#include "cloakcatch/server/config.hpp"
#include "cloakcatch/server/fetcher.hpp"
#include "cloakcatch/server/http_api.hpp"
#include "cloakcatch/server/scheduler.hpp"
#include "cloakcatch/server/store.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

namespace {

using namespace cloakcatch;

constexpr int kExitClean = 0;
constexpr int kExitUsage = 2;
constexpr int kExitCloaking = 3;
constexpr int kExitPending = 4;

/// Raised for anything the operator has to fix: missing files, bad JSON, unreachable server.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw UsageError("error reading '" + path + "'");
    return ss.str();
}

void write_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write '" + path + "'");
    out << content;
    if (!out) throw UsageError("error writing '" + path + "'");
}

DetectionParams load_params(const std::string& path, DetectionParams base = {})
{
    if (path.empty()) return base;
    try {
        return params_from_json(Json::parse(read_file(path)), base);
    } catch (const Json::parse_error& e) {
        throw UsageError("params file '" + path + "' is not JSON: " + e.what());
    } catch (const ParseError& e) {
        throw UsageError("params file '" + path + "': " + e.what());
    }
}

PageDocument load_page(const std::string& path)
{
    return PageDocument{read_file(path), std::nullopt, path};
}

Json fingerprint_json(const std::string& label, const PageFingerprints& fp)
{
    Json j;
    j["file"] = label;
    j["text"] = fp.text.hex();
    j["tag"] = fp.tag.hex();
    j["text_features"] = fp.text_feature_count;
    j["tag_features"] = fp.tag_feature_count;
    return j;
}

// ---------------------------------------------------------------------------

struct FingerprintArgs {
    std::vector<std::string> files;
};

int cmd_fingerprint(const FingerprintArgs& a)
{
    Json out = Json::array();
    for (const auto& f : a.files) out.push_back(fingerprint_json(f, fingerprint(load_page(f))));
    std::cout << (a.files.size() == 1 ? out[0] : out).dump(2) << "\n";
    return kExitClean;
}

struct BuildArgs {
    std::string url;
    std::vector<std::string> files;
    std::string params_path;
    std::string out;
    std::size_t max_observations = 6;
};

int cmd_build(const BuildArgs& a)
{
    const auto params = load_params(a.params_path);
    std::vector<Observation> text;
    std::vector<Observation> tag;
    const auto now = now_utc();
    for (const auto& f : a.files) {
        const auto fp = fingerprint(load_page(f));
        text.push_back({fp.text, now, fp.text_feature_count});
        tag.push_back({fp.tag, now, fp.tag_feature_count});
    }
    const auto model = build_model(normalize(a.url).key, text, tag, params.build_params(a.max_observations), now);
    const std::string json = dump_model(model);
    if (a.out.empty()) {
        std::cout << json << "\n";
    } else {
        write_file(a.out, json + "\n");
    }
    std::cerr << "model for " << model.url_key << ": " << model.text_clusters.size() << " text / "
              << model.tag_clusters.size() << " tag clusters from " << model.observation_count << " views\n";
    return kExitClean;
}

struct CrawlArgs {
    std::string url;
    int visits = 5;
    double interval_seconds = 0;
    std::string profile = "googlebot";
    std::string referer;
    double timeout_seconds = 30;
    int redirect_cap = 10;
    std::string params_path;
    std::string out;
    std::size_t max_observations = 6;
};

int cmd_crawl(const CrawlArgs& a)
{
    const auto profile = server::agent_profile_from_string(a.profile);
    if (!profile) throw UsageError("unknown profile '" + a.profile + "' (googlebot, adsbot, chrome_user)");
    if (!parse_url(a.url)) throw InvalidUrl(a.url);
    const auto params = load_params(a.params_path);

    server::FetchOptions options;
    if (!a.referer.empty()) options.referer = a.referer;
    options.timeout = std::chrono::milliseconds(static_cast<long long>(a.timeout_seconds * 1000));
    options.redirect_cap = a.redirect_cap;
    server::HttpFetcher fetcher(options);

    std::vector<Observation> text;
    std::vector<Observation> tag;
    for (int i = 0; i < a.visits; ++i) {
        if (i > 0 && a.interval_seconds > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long long>(a.interval_seconds * 1000)));
        }
        try {
            const auto doc = fetcher.fetch_page(a.url, *profile);
            const auto fp = fingerprint(doc);
            const auto at = now_utc();
            text.push_back({fp.text, at, fp.text_feature_count});
            tag.push_back({fp.tag, at, fp.tag_feature_count});
            std::cerr << "visit " << i + 1 << "/" << a.visits << ": " << doc.final_url << " text=" << fp.text.hex()
                      << " tag=" << fp.tag.hex() << "\n";
        } catch (const server::FetchError& e) {
            std::cerr << "visit " << i + 1 << "/" << a.visits << " failed: " << e.what() << "\n";
        }
    }
    if (text.empty()) throw UsageError("every visit failed; no model built");
    if (text.size() > a.max_observations) {
        text.erase(text.begin(), text.end() - static_cast<std::ptrdiff_t>(a.max_observations));
        tag.erase(tag.begin(), tag.end() - static_cast<std::ptrdiff_t>(a.max_observations));
    }
    const auto model =
        build_model(normalize(a.url).key, text, tag, params.build_params(a.max_observations), now_utc());
    const std::string json = dump_model(model);
    if (a.out.empty()) {
        std::cout << json << "\n";
    } else {
        write_file(a.out, json + "\n");
    }
    return kExitClean;
}

struct DetectArgs {
    std::string url;
    std::string html;
    std::string server;
    std::string model;
    std::string params_path;
    std::string out;
};

/// Outcome of asking the server for a model.
struct ServerAnswer {
    std::optional<WebsiteModel> model;
    std::optional<std::string> listed;
    bool pending = false;
    DetectionParams params;
};

ServerAnswer ask_server(const std::string& address, const std::string& url)
{
    httplib::Client client(address);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(30, 0);

    ServerAnswer answer;
    auto params_res = client.Get("/v1/params");
    if (!params_res) {
        throw UsageError("server " + address + " unreachable: " + httplib::to_string(params_res.error()));
    }
    if (params_res->status == 200) {
        try {
            answer.params = params_from_json(Json::parse(params_res->body));
        } catch (const std::exception& e) {
            throw UsageError(std::string("server returned unusable params: ") + e.what());
        }
    }

    auto res = client.Get("/v1/swm", httplib::Params{{"url", url}}, httplib::Headers{});
    if (!res) throw UsageError("server " + address + " unreachable: " + httplib::to_string(res.error()));
    if (res->status == 202) {
        answer.pending = true;
        return answer;
    }
    if (res->status != 200) {
        throw UsageError("server answered HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    Json body;
    try {
        body = Json::parse(res->body);
    } catch (const Json::parse_error& e) {
        throw UsageError(std::string("server sent invalid JSON: ") + e.what());
    }
    if (body.is_object() && body.contains("listed")) {
        answer.listed = body["listed"].get<std::string>();
        return answer;
    }
    answer.model = model_from_json(body);
    return answer;
}

int cmd_detect(const DetectArgs& a)
{
    if (a.server.empty() == a.model.empty()) throw UsageError("detect needs exactly one of --server or --model");
    if (!parse_url(a.url)) throw InvalidUrl(a.url);
    const auto page = load_page(a.html);

    WebsiteModel model;
    DetectionParams params;
    if (!a.server.empty()) {
        const auto answer = ask_server(a.server, a.url);
        if (answer.pending) {
            std::cerr << "model pending for " << normalize(a.url).key << "; the server is crawling it\n";
            return kExitPending;
        }
        if (answer.listed) {
            const Json j{{"url_key", normalize(a.url).key}, {"listed", *answer.listed}};
            std::cout << j.dump(2) << "\n";
            if (!a.out.empty()) write_file(a.out, j.dump() + "\n");
            return *answer.listed == "black" ? kExitCloaking : kExitClean;
        }
        model = *answer.model;
        params = answer.params;
    } else {
        try {
            model = parse_model(read_file(a.model));
        } catch (const ParseError& e) {
            throw UsageError("model file '" + a.model + "': " + e.what());
        }
    }
    params = load_params(a.params_path, params);

    const std::string key = normalize(a.url).key;
    if (model.url_key != key) {
        std::cerr << "warning: model is for '" << model.url_key << "' but the URL normalizes to '" << key << "'\n";
    }

    const auto verdict = detect(fingerprint(page), model, params, now_utc());
    const std::string json = to_json(verdict).dump(2);
    std::cout << json << "\n";
    if (!a.out.empty()) write_file(a.out, to_json(verdict).dump() + "\n");
    return verdict.is_cloaking ? kExitCloaking : kExitClean;
}

struct EvalArgs {
    eval::EvalCorpusSpec spec;
    std::string params_path;
    std::string out;
};

int cmd_eval(const EvalArgs& a)
{
    const auto params = load_params(a.params_path);
    const auto report = eval::run_eval(a.spec, params);
    std::cout << eval::format_table(report);
    if (a.out.empty()) {
        std::cout << "\n" << eval::format_csv(report);
    } else {
        write_file(a.out, eval::format_csv(report));
    }
    return kExitClean;
}

struct ServeArgs {
    std::string config_path;
};

int cmd_serve(const ServeArgs& a)
{
    const auto config = a.config_path.empty() ? server::config_from_json(Json::object())
                                              : server::load_config(a.config_path);

    // Handle SIGINT/SIGTERM synchronously on this thread; every worker inherits the mask.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    std::unique_ptr<server::ModelStore> store;
    if (config.store_path == ":memory:") {
        store = std::make_unique<server::MemoryStore>();
    } else {
        store = std::make_unique<server::SqliteStore>(config.store_path);
    }
    server::SystemClock clock;
    server::HttpFetcher fetcher(config.fetch);
    server::CrawlService service(*store, fetcher, clock, config.crawl);
    server::ApiServer api(service, clock);
    int port = 0;
    try {
        port = api.bind(config.host, config.port);
    } catch (const std::runtime_error& e) {
        throw UsageError(e.what());
    }
    service.start();
    api.start();
    std::cerr << "cloakcatch serving on " << config.host << ":" << port << " (store " << config.store_path << ")\n";

    int sig = 0;
    sigwait(&signals, &sig);
    std::cerr << "shutting down\n";
    api.stop();
    service.stop();
    return kExitClean;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Cloaking detection: fingerprints, website models, detection, crawl server and evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "cloakcatch 0.1.0");

    FingerprintArgs fp_args;
    auto* fp = app.add_subcommand("fingerprint", "Print text and tag Simhash64 fingerprints of HTML files");
    fp->add_option("files", fp_args.files, "HTML files")->required();

    BuildArgs build_args;
    auto* build = app.add_subcommand("build", "Build a website model from saved spider views");
    build->add_option("--url", build_args.url, "URL the views were fetched from")->required();
    build->add_option("files", build_args.files, "Spider-view HTML files (one per visit)")->required();
    build->add_option("--params", build_args.params_path, "JSON file overriding detection params");
    build->add_option("--max-observations", build_args.max_observations, "Observation cap")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    build->add_option("--out", build_args.out, "Write the model JSON here instead of stdout");

    CrawlArgs crawl_args;
    auto* crawl = app.add_subcommand("crawl", "Fetch a URL repeatedly with a spider agent and build its model");
    crawl->add_option("--url", crawl_args.url, "URL to crawl")->required();
    crawl->add_option("--visits", crawl_args.visits, "Number of visits")->capture_default_str()->check(
        CLI::PositiveNumber);
    crawl->add_option("--interval", crawl_args.interval_seconds, "Seconds between visits")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    crawl->add_option("--profile", crawl_args.profile, "googlebot, adsbot or chrome_user")->capture_default_str();
    crawl->add_option("--referer", crawl_args.referer, "Referer header to send");
    crawl->add_option("--timeout", crawl_args.timeout_seconds, "Fetch timeout in seconds")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    crawl->add_option("--redirect-cap", crawl_args.redirect_cap, "Maximum redirects followed")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    crawl->add_option("--params", crawl_args.params_path, "JSON file overriding detection params");
    crawl->add_option("--max-observations", crawl_args.max_observations, "Observation cap")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    crawl->add_option("--out", crawl_args.out, "Write the model JSON here instead of stdout");

    DetectArgs detect_args;
    auto* det = app.add_subcommand("detect", "Compare a user-view page against the site's model");
    det->add_option("--url", detect_args.url, "URL of the page")->required();
    det->add_option("--html", detect_args.html, "User-view HTML file")->required();
    auto* srv_opt = det->add_option("--server", detect_args.server, "Server base address, e.g. http://127.0.0.1:8080");
    auto* model_opt = det->add_option("--model", detect_args.model, "Model JSON file");
    srv_opt->excludes(model_opt);
    det->add_option("--params", detect_args.params_path, "JSON file overriding detection params");
    det->add_option("--out", detect_args.out, "Also write the verdict JSON here");

    EvalArgs eval_args;
    auto* ev = app.add_subcommand("eval", "Synthetic TPR/FPR evaluation with an R sweep");
    ev->add_option("--sites", eval_args.spec.n_sites, "Number of synthetic sites")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    ev->add_option("--churn", eval_args.spec.churn, "Fraction of words rewritten per crawl")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    ev->add_option("--cloak-fraction", eval_args.spec.cloak_fraction, "Fraction of cloaked sites")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    ev->add_option("--seed", eval_args.spec.seed, "Corpus seed")->capture_default_str();
    ev->add_option("--params", eval_args.params_path, "JSON file overriding detection params");
    ev->add_option("--out", eval_args.out, "Write the ROC CSV here (default: after the table on stdout)");

    ServeArgs serve_args;
    auto* serve = app.add_subcommand("serve", "Run the model server");
    serve->add_option("--config", serve_args.config_path, "Server config JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitClean : kExitUsage;
    }

    try {
        if (fp->parsed()) return cmd_fingerprint(fp_args);
        if (build->parsed()) return cmd_build(build_args);
        if (crawl->parsed()) return cmd_crawl(crawl_args);
        if (det->parsed()) return cmd_detect(detect_args);
        if (ev->parsed()) return cmd_eval(eval_args);
        if (serve->parsed()) return cmd_serve(serve_args);
    } catch (const std::exception& e) {
        std::cerr << "cloakcatch: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
