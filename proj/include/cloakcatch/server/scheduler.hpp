#pragma once

#include "cloakcatch/detector.hpp"
#include "cloakcatch/simhash.hpp"
#include "cloakcatch/swm.hpp"
#include "cloakcatch/server/clock.hpp"
#include "cloakcatch/server/fetcher.hpp"
#include "cloakcatch/server/store.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace cloakcatch::server {

struct CrawlConfig {
    int visits = 5;
    std::chrono::milliseconds interval = std::chrono::hours(1);
    AgentProfile profile = AgentProfile::googlebot;
    std::size_t max_observations = 6;
    std::size_t fetch_concurrency = 4;
    DetectionParams params;

    void validate() const
    {
        if (visits < 1) throw ConfigError("visits must be at least 1");
        if (interval.count() < 0) throw ConfigError("crawl interval must be nonnegative");
        if (max_observations < 1) throw ConfigError("max_observations must be at least 1");
        if (fetch_concurrency < 1) throw ConfigError("fetch concurrency must be at least 1");
        if (!params.valid()) throw ConfigError("detection params must be nonnegative");
    }
};

struct ModelLookup {
    enum class Kind { ready, pending, listed };

    Kind kind = Kind::pending;
    std::optional<WebsiteModel> model;
    std::optional<ListKind> listed;
};

struct JobTransition {
    UrlKey url_key;
    JobState from = JobState::pending;
    JobState to = JobState::pending;
    bool visit_succeeded = false;
    std::string error;
};

/// Owns the crawl lifecycle: list checks, job dedup, visits and model builds.
class CrawlService {
public:
    CrawlService(ModelStore& store, PageFetcher& fetcher, const Clock& clock, CrawlConfig config = {})
        : store_(store), fetcher_(fetcher), clock_(clock), config_(std::move(config))
    {
        config_.validate();
    }

    CrawlService(const CrawlService&) = delete;
    CrawlService& operator=(const CrawlService&) = delete;

    ~CrawlService() { stop(); }

    const CrawlConfig& config() const { return config_; }
    ModelStore& store() { return store_; }

    /// Never touches the network. Unknown keys get a crawl job and come back pending.
    ModelLookup get_model(const UrlKey& key, const std::string& target_url)
    {
        if (const auto listed = store_.check_lists(key)) {
            return {ModelLookup::Kind::listed, std::nullopt, listed->list};
        }
        if (const auto record = store_.get_record(key); record && record->status == RecordStatus::ready) {
            return {ModelLookup::Kind::ready, record->model, std::nullopt};
        }

        CrawlJob job;
        job.url_key = key;
        job.target_url = target_url;
        job.remaining_visits = config_.visits;
        job.interval = config_.interval;
        job.agent_profile = config_.profile;
        job.next_due = clock_.now();
        job.state = JobState::pending;
        if (store_.insert_job_if_idle(job)) {
            std::lock_guard lock(record_mutex_);
            ModelRecord record;
            record.url_key = key;
            record.status = RecordStatus::crawling;
            store_.put_record(record);
            wake_.notify_all();
        }
        return {ModelLookup::Kind::pending, std::nullopt, std::nullopt};
    }

    /// Normalizes `raw_url` and looks it up. Throws InvalidUrl.
    ModelLookup get_model(const std::string& raw_url)
    {
        const auto parsed = parse_url(raw_url);
        if (!parsed) throw InvalidUrl(raw_url);
        return get_model(normalize(raw_url), parsed->to_string());
    }

    void upsert_list(const UrlKey& key, ListKind list) { store_.upsert_list({key, list, clock_.now()}); }

    std::optional<ListKind> check_lists(const UrlKey& key) const
    {
        const auto e = store_.check_lists(key);
        return e ? std::optional<ListKind>(e->list) : std::nullopt;
    }

    /// Earliest next_due among pending jobs.
    std::optional<Timestamp> next_due() const
    {
        std::optional<Timestamp> best;
        for (const auto& j : store_.jobs()) {
            if (j.state == JobState::pending && (!best || j.next_due < *best)) best = j.next_due;
        }
        return best;
    }

    /// One visit for every pending job due at `now`; returns every state change made.
    std::vector<JobTransition> run_due_jobs(Timestamp now)
    {
        std::lock_guard run_lock(run_mutex_);

        std::vector<CrawlJob> due;
        for (auto& j : store_.jobs()) {
            if (j.state == JobState::pending && j.next_due <= now) due.push_back(std::move(j));
        }
        std::vector<JobTransition> transitions;
        if (due.empty()) return transitions;

        for (auto& j : due) {
            j.state = JobState::running;
            store_.update_job(j);
            transitions.push_back({j.url_key, JobState::pending, JobState::running, false, {}});
        }

        std::vector<Visit> visits(due.size());
        fetch_all(due, visits);

        for (std::size_t i = 0; i < due.size(); ++i) {
            transitions.push_back(finish_visit(due[i], visits[i], now));
        }
        return transitions;
    }

    /// Starts the background worker that runs due jobs as the clock advances.
    void start(std::chrono::milliseconds poll = std::chrono::milliseconds(1000))
    {
        std::lock_guard lock(worker_mutex_);
        if (worker_.joinable()) return;
        stopping_ = false;
        worker_ = std::thread([this, poll] { worker_loop(poll); });
    }

    void stop()
    {
        {
            std::lock_guard lock(worker_mutex_);
            stopping_ = true;
        }
        wake_.notify_all();
        if (worker_.joinable()) worker_.join();
    }

private:
    struct Visit {
        std::optional<PageFingerprints> prints;
        std::string error;
    };

    void fetch_all(const std::vector<CrawlJob>& jobs, std::vector<Visit>& out)
    {
        std::atomic<std::size_t> next{0};
        auto work = [&] {
            for (std::size_t i = next++; i < jobs.size(); i = next++) {
                try {
                    const auto doc = fetcher_.fetch_page(jobs[i].target_url, jobs[i].agent_profile);
                    out[i].prints = fingerprint(doc);
                } catch (const std::exception& e) {
                    out[i].error = e.what();
                }
            }
        };
        const std::size_t n = std::min(config_.fetch_concurrency, jobs.size());
        if (n <= 1) {
            work();
            return;
        }
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    JobTransition finish_visit(CrawlJob& job, const Visit& visit, Timestamp now)
    {
        std::lock_guard lock(record_mutex_);
        ModelRecord record;
        if (auto stored = store_.get_record(job.url_key)) record = std::move(*stored);
        record.url_key = job.url_key;

        if (visit.prints) {
            ++job.successful_visits;
            const Timestamp at = clock_.now();
            record.text_observations.push_back({visit.prints->text, at, visit.prints->text_feature_count});
            record.tag_observations.push_back({visit.prints->tag, at, visit.prints->tag_feature_count});
            const std::size_t cap = config_.max_observations;
            if (record.text_observations.size() > cap) {
                const auto drop = static_cast<std::ptrdiff_t>(record.text_observations.size() - cap);
                record.text_observations.erase(record.text_observations.begin(), record.text_observations.begin() + drop);
                record.tag_observations.erase(record.tag_observations.begin(), record.tag_observations.begin() + drop);
            }
        } else {
            ++job.failed_visits;
            job.last_error = visit.error;
        }
        job.remaining_visits = std::max(0, job.remaining_visits - 1);
        job.next_due += job.interval;

        JobTransition t{job.url_key, JobState::running, JobState::pending, visit.prints.has_value(), visit.error};
        if (job.remaining_visits > 0) {
            job.state = JobState::pending;
            record.status = RecordStatus::crawling;
            store_.put_record(record);
        } else if (job.successful_visits > 0 && !record.text_observations.empty()) {
            record.model = build_model(job.url_key.key, record.text_observations, record.tag_observations,
                                       config_.params.build_params(config_.max_observations), now);
            record.status = RecordStatus::ready;
            store_.put_record(record);
            job.state = JobState::done;
        } else {
            store_.erase_record(job.url_key);
            job.state = JobState::failed;
        }
        t.to = job.state;
        store_.update_job(job);
        return t;
    }

    void worker_loop(std::chrono::milliseconds poll)
    {
        std::unique_lock lock(worker_mutex_);
        while (!stopping_) {
            lock.unlock();
            auto wait = poll;
            try {
                run_due_jobs(clock_.now());
                if (const auto due = next_due()) {
                    const auto delta = std::chrono::duration_cast<std::chrono::milliseconds>(*due - clock_.now());
                    wait = std::clamp(delta, std::chrono::milliseconds(0), poll);
                }
            } catch (const std::exception&) {
                // A store outage leaves jobs pending; the next pass retries them.
            }
            lock.lock();
            if (wait.count() > 0) wake_.wait_for(lock, wait);
        }
    }

    ModelStore& store_;
    PageFetcher& fetcher_;
    const Clock& clock_;
    CrawlConfig config_;

    std::mutex record_mutex_;
    std::mutex run_mutex_;

    std::mutex worker_mutex_;
    std::condition_variable wake_;
    std::thread worker_;
    bool stopping_ = false;
};

}  // namespace cloakcatch::server
