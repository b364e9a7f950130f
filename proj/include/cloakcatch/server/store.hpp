#pragma once

#include "cloakcatch/error.hpp"
#include "cloakcatch/json_io.hpp"
#include "cloakcatch/swm.hpp"
#include "cloakcatch/time.hpp"
#include "cloakcatch/urlnorm.hpp"
#include "cloakcatch/server/agents.hpp"

#include <sqlite3.h>

#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace cloakcatch::server {

enum class ListKind { black, white };

inline std::string_view to_string(ListKind k)
{
    return k == ListKind::black ? "black" : "white";
}

inline std::optional<ListKind> list_kind_from_string(std::string_view s)
{
    if (s == "black") return ListKind::black;
    if (s == "white") return ListKind::white;
    return std::nullopt;
}

struct ListEntry {
    UrlKey url_key;
    ListKind list = ListKind::black;
    Timestamp added_at{};
};

enum class JobState { pending, running, done, failed };

inline std::string_view to_string(JobState s)
{
    switch (s) {
    case JobState::pending: return "pending";
    case JobState::running: return "running";
    case JobState::done: return "done";
    case JobState::failed: return "failed";
    }
    return "pending";
}

inline std::optional<JobState> job_state_from_string(std::string_view s)
{
    if (s == "pending") return JobState::pending;
    if (s == "running") return JobState::running;
    if (s == "done") return JobState::done;
    if (s == "failed") return JobState::failed;
    return std::nullopt;
}

struct CrawlJob {
    UrlKey url_key;
    std::string target_url;
    int remaining_visits = 0;
    std::chrono::milliseconds interval{0};
    AgentProfile agent_profile = AgentProfile::googlebot;
    Timestamp next_due{};
    JobState state = JobState::pending;
    int successful_visits = 0;
    int failed_visits = 0;
    std::string last_error;

    bool active() const { return state == JobState::pending || state == JobState::running; }
};

enum class RecordStatus { absent, crawling, ready };

inline std::string_view to_string(RecordStatus s)
{
    switch (s) {
    case RecordStatus::absent: return "absent";
    case RecordStatus::crawling: return "crawling";
    case RecordStatus::ready: return "ready";
    }
    return "absent";
}

struct ModelRecord {
    UrlKey url_key;
    RecordStatus status = RecordStatus::absent;
    std::optional<WebsiteModel> model;
    std::vector<Observation> text_observations;
    std::vector<Observation> tag_observations;
};

struct StoredReport {
    std::int64_t id = 0;
    std::string url_key;
    Timestamp received_at{};
    std::string body;  // the verdict JSON as received
};

/// Persistence contract behind the crawl service and the HTTP API.
///
/// Implementations are safe for concurrent use. `insert_job_if_idle` is the
/// single dedup point: it succeeds only when no active job exists for the key.
class ModelStore {
public:
    virtual ~ModelStore() = default;

    virtual std::optional<ModelRecord> get_record(const UrlKey& key) const = 0;
    virtual void put_record(const ModelRecord& record) = 0;
    virtual void erase_record(const UrlKey& key) = 0;

    virtual void upsert_list(const ListEntry& entry) = 0;
    virtual std::optional<ListEntry> check_lists(const UrlKey& key) const = 0;

    virtual bool insert_job_if_idle(const CrawlJob& job) = 0;
    virtual void update_job(const CrawlJob& job) = 0;
    virtual std::optional<CrawlJob> get_job(const UrlKey& key) const = 0;
    virtual std::vector<CrawlJob> jobs() const = 0;

    virtual std::int64_t add_report(const std::string& url_key, Timestamp received_at, const std::string& body) = 0;
    virtual std::vector<StoredReport> reports() const = 0;
};

namespace detail {

using cloakcatch::detail::require;
using cloakcatch::detail::require_time;

inline Json record_observations_to_json(const ModelRecord& r)
{
    Json j;
    j["text"] = Json::array();
    for (const auto& o : r.text_observations) j["text"].push_back(to_json(o));
    j["tag"] = Json::array();
    for (const auto& o : r.tag_observations) j["tag"].push_back(to_json(o));
    return j;
}

inline void record_observations_from_json(const Json& j, ModelRecord& r)
{
    for (const auto& o : require(j, "text")) r.text_observations.push_back(observation_from_json(o));
    for (const auto& o : require(j, "tag")) r.tag_observations.push_back(observation_from_json(o));
}

inline Json job_to_json(const CrawlJob& job)
{
    Json j;
    j["url_key"] = job.url_key.key;
    j["target_url"] = job.target_url;
    j["remaining_visits"] = job.remaining_visits;
    j["interval_ms"] = job.interval.count();
    j["agent_profile"] = std::string(to_string(job.agent_profile));
    j["next_due"] = format_rfc3339(job.next_due);
    j["state"] = std::string(to_string(job.state));
    j["successful_visits"] = job.successful_visits;
    j["failed_visits"] = job.failed_visits;
    j["last_error"] = job.last_error;
    return j;
}

inline CrawlJob job_from_json(const Json& j)
{
    CrawlJob job;
    job.url_key = UrlKey{require(j, "url_key").get<std::string>()};
    job.target_url = require(j, "target_url").get<std::string>();
    job.remaining_visits = require(j, "remaining_visits").get<int>();
    job.interval = std::chrono::milliseconds(require(j, "interval_ms").get<std::int64_t>());
    const auto profile = agent_profile_from_string(require(j, "agent_profile").get<std::string>());
    const auto state = job_state_from_string(require(j, "state").get<std::string>());
    if (!profile || !state) throw ParseError("stored crawl job has an unknown profile or state");
    job.agent_profile = *profile;
    job.state = *state;
    job.next_due = require_time(j, "next_due");
    job.successful_visits = require(j, "successful_visits").get<int>();
    job.failed_visits = require(j, "failed_visits").get<int>();
    job.last_error = require(j, "last_error").get<std::string>();
    return job;
}

}  // namespace detail

class MemoryStore final : public ModelStore {
public:
    std::optional<ModelRecord> get_record(const UrlKey& key) const override
    {
        std::shared_lock lock(mutex_);
        const auto it = records_.find(key.key);
        if (it == records_.end()) return std::nullopt;
        return it->second;
    }

    void put_record(const ModelRecord& record) override
    {
        std::unique_lock lock(mutex_);
        records_[record.url_key.key] = record;
    }

    void erase_record(const UrlKey& key) override
    {
        std::unique_lock lock(mutex_);
        records_.erase(key.key);
    }

    void upsert_list(const ListEntry& entry) override
    {
        std::unique_lock lock(mutex_);
        lists_[entry.url_key.key] = entry;
    }

    std::optional<ListEntry> check_lists(const UrlKey& key) const override
    {
        std::shared_lock lock(mutex_);
        const auto it = lists_.find(key.key);
        if (it == lists_.end()) return std::nullopt;
        return it->second;
    }

    bool insert_job_if_idle(const CrawlJob& job) override
    {
        std::unique_lock lock(mutex_);
        const auto it = jobs_.find(job.url_key.key);
        if (it != jobs_.end() && it->second.active()) return false;
        jobs_[job.url_key.key] = job;
        return true;
    }

    void update_job(const CrawlJob& job) override
    {
        std::unique_lock lock(mutex_);
        jobs_[job.url_key.key] = job;
    }

    std::optional<CrawlJob> get_job(const UrlKey& key) const override
    {
        std::shared_lock lock(mutex_);
        const auto it = jobs_.find(key.key);
        if (it == jobs_.end()) return std::nullopt;
        return it->second;
    }

    std::vector<CrawlJob> jobs() const override
    {
        std::shared_lock lock(mutex_);
        std::vector<CrawlJob> out;
        for (const auto& [k, j] : jobs_) out.push_back(j);
        return out;
    }

    std::int64_t add_report(const std::string& url_key, Timestamp received_at, const std::string& body) override
    {
        std::unique_lock lock(mutex_);
        reports_.push_back({static_cast<std::int64_t>(reports_.size() + 1), url_key, received_at, body});
        return reports_.back().id;
    }

    std::vector<StoredReport> reports() const override
    {
        std::shared_lock lock(mutex_);
        return reports_;
    }

private:
    mutable std::shared_mutex mutex_;
    std::map<std::string, ModelRecord> records_;
    std::map<std::string, ListEntry> lists_;
    std::map<std::string, CrawlJob> jobs_;
    std::vector<StoredReport> reports_;
};

/// SQLite-backed store: one row per url_key, models stored in their JSON wire format.
class SqliteStore final : public ModelStore {
public:
    explicit SqliteStore(const std::string& path)
    {
        sqlite3* db = nullptr;
        const int rc = sqlite3_open_v2(path.c_str(), &db,
                                       SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX, nullptr);
        db_ = db;
        if (rc != SQLITE_OK) {
            const std::string msg = db ? sqlite3_errmsg(db) : "out of memory";
            sqlite3_close(db);
            db_ = nullptr;
            throw StoreUnavailable("cannot open model store '" + path + "': " + msg);
        }
        sqlite3_busy_timeout(db_, 5000);
        exec("PRAGMA journal_mode=WAL");
        exec("CREATE TABLE IF NOT EXISTS models ("
             " url_key TEXT PRIMARY KEY, status TEXT NOT NULL, model TEXT, observations TEXT NOT NULL)");
        exec("CREATE TABLE IF NOT EXISTS lists (url_key TEXT PRIMARY KEY, list TEXT NOT NULL, added_at TEXT NOT NULL)");
        exec("CREATE TABLE IF NOT EXISTS jobs (url_key TEXT PRIMARY KEY, active INTEGER NOT NULL, job TEXT NOT NULL)");
        exec("CREATE TABLE IF NOT EXISTS reports ("
             " id INTEGER PRIMARY KEY AUTOINCREMENT, url_key TEXT NOT NULL, received_at TEXT NOT NULL, body TEXT NOT NULL)");
    }

    SqliteStore(const SqliteStore&) = delete;
    SqliteStore& operator=(const SqliteStore&) = delete;

    ~SqliteStore() override { sqlite3_close(db_); }

    std::optional<ModelRecord> get_record(const UrlKey& key) const override
    {
        std::lock_guard lock(mutex_);
        Statement st(db_, "SELECT status, model, observations FROM models WHERE url_key = ?1");
        st.bind(1, key.key);
        if (!st.step()) return std::nullopt;
        ModelRecord r;
        r.url_key = key;
        const std::string status = st.text(0);
        r.status = status == "ready" ? RecordStatus::ready
                   : status == "crawling" ? RecordStatus::crawling
                                          : RecordStatus::absent;
        if (!st.is_null(1)) r.model = parse_model(st.text(1));
        detail::record_observations_from_json(Json::parse(st.text(2)), r);
        return r;
    }

    void put_record(const ModelRecord& record) override
    {
        std::lock_guard lock(mutex_);
        Statement st(db_, "INSERT INTO models (url_key, status, model, observations) VALUES (?1, ?2, ?3, ?4)"
                          " ON CONFLICT(url_key) DO UPDATE SET status = ?2, model = ?3, observations = ?4");
        st.bind(1, record.url_key.key);
        st.bind(2, std::string(to_string(record.status)));
        if (record.model) {
            st.bind(3, dump_model(*record.model));
        }
        st.bind(4, detail::record_observations_to_json(record).dump());
        st.run();
    }

    void erase_record(const UrlKey& key) override
    {
        std::lock_guard lock(mutex_);
        Statement st(db_, "DELETE FROM models WHERE url_key = ?1");
        st.bind(1, key.key);
        st.run();
    }

    void upsert_list(const ListEntry& entry) override
    {
        std::lock_guard lock(mutex_);
        Statement st(db_, "INSERT INTO lists (url_key, list, added_at) VALUES (?1, ?2, ?3)"
                          " ON CONFLICT(url_key) DO UPDATE SET list = ?2, added_at = ?3");
        st.bind(1, entry.url_key.key);
        st.bind(2, std::string(to_string(entry.list)));
        st.bind(3, format_rfc3339(entry.added_at));
        st.run();
    }

    std::optional<ListEntry> check_lists(const UrlKey& key) const override
    {
        std::lock_guard lock(mutex_);
        Statement st(db_, "SELECT list, added_at FROM lists WHERE url_key = ?1");
        st.bind(1, key.key);
        if (!st.step()) return std::nullopt;
        const auto kind = list_kind_from_string(st.text(0));
        const auto added = parse_rfc3339(st.text(1));
        if (!kind || !added) throw StoreUnavailable("corrupt list entry for '" + key.key + "'");
        return ListEntry{key, *kind, *added};
    }

    bool insert_job_if_idle(const CrawlJob& job) override
    {
        std::lock_guard lock(mutex_);
        Statement st(db_, "INSERT INTO jobs (url_key, active, job) VALUES (?1, ?2, ?3)"
                          " ON CONFLICT(url_key) DO UPDATE SET active = ?2, job = ?3 WHERE jobs.active = 0");
        st.bind(1, job.url_key.key);
        st.bind(2, job.active() ? 1 : 0);
        st.bind(3, detail::job_to_json(job).dump());
        st.run();
        return sqlite3_changes(db_) > 0;
    }

    void update_job(const CrawlJob& job) override
    {
        std::lock_guard lock(mutex_);
        Statement st(db_, "INSERT INTO jobs (url_key, active, job) VALUES (?1, ?2, ?3)"
                          " ON CONFLICT(url_key) DO UPDATE SET active = ?2, job = ?3");
        st.bind(1, job.url_key.key);
        st.bind(2, job.active() ? 1 : 0);
        st.bind(3, detail::job_to_json(job).dump());
        st.run();
    }

    std::optional<CrawlJob> get_job(const UrlKey& key) const override
    {
        std::lock_guard lock(mutex_);
        Statement st(db_, "SELECT job FROM jobs WHERE url_key = ?1");
        st.bind(1, key.key);
        if (!st.step()) return std::nullopt;
        return detail::job_from_json(Json::parse(st.text(0)));
    }

    std::vector<CrawlJob> jobs() const override
    {
        std::lock_guard lock(mutex_);
        Statement st(db_, "SELECT job FROM jobs ORDER BY url_key");
        std::vector<CrawlJob> out;
        while (st.step()) out.push_back(detail::job_from_json(Json::parse(st.text(0))));
        return out;
    }

    std::int64_t add_report(const std::string& url_key, Timestamp received_at, const std::string& body) override
    {
        std::lock_guard lock(mutex_);
        Statement st(db_, "INSERT INTO reports (url_key, received_at, body) VALUES (?1, ?2, ?3)");
        st.bind(1, url_key);
        st.bind(2, format_rfc3339(received_at));
        st.bind(3, body);
        st.run();
        return sqlite3_last_insert_rowid(db_);
    }

    std::vector<StoredReport> reports() const override
    {
        std::lock_guard lock(mutex_);
        Statement st(db_, "SELECT id, url_key, received_at, body FROM reports ORDER BY id");
        std::vector<StoredReport> out;
        while (st.step()) {
            out.push_back({st.int64(0), st.text(1), parse_rfc3339(st.text(2)).value_or(Timestamp{}), st.text(3)});
        }
        return out;
    }

private:
    class Statement {
    public:
        Statement(sqlite3* db, const char* sql) : db_(db)
        {
            if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
                throw StoreUnavailable(std::string("sqlite prepare: ") + sqlite3_errmsg(db));
            }
        }
        Statement(const Statement&) = delete;
        Statement& operator=(const Statement&) = delete;
        ~Statement() { sqlite3_finalize(stmt_); }

        void bind(int idx, const std::string& v)
        {
            sqlite3_bind_text(stmt_, idx, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
        }
        void bind(int idx, int v) { sqlite3_bind_int(stmt_, idx, v); }

        bool step()
        {
            const int rc = sqlite3_step(stmt_);
            if (rc == SQLITE_ROW) return true;
            if (rc == SQLITE_DONE) return false;
            throw StoreUnavailable(std::string("sqlite step: ") + sqlite3_errmsg(db_));
        }

        void run()
        {
            while (step()) {
            }
        }

        bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }

        std::string text(int col) const
        {
            const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
            return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col))) : std::string();
        }

        std::int64_t int64(int col) const { return sqlite3_column_int64(stmt_, col); }

    private:
        sqlite3* db_;
        sqlite3_stmt* stmt_ = nullptr;
    };

    void exec(const char* sql)
    {
        char* err = nullptr;
        if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
            const std::string msg = err ? err : "unknown error";
            sqlite3_free(err);
            throw StoreUnavailable(std::string("sqlite: ") + msg);
        }
    }

    sqlite3* db_ = nullptr;
    mutable std::mutex mutex_;
};

}  // namespace cloakcatch::server
