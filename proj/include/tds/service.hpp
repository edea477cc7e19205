#pragma once

#include "tds/fit.hpp"
#include "tds/io.hpp"

#include <json.hpp>

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace tds::service {

enum class JobState { queued, running, succeeded, failed, cancelled };
std::string_view state_tag(JobState s);
[[nodiscard]] inline bool finished(JobState s) {
    return s == JobState::succeeded || s == JobState::failed || s == JobState::cancelled;
}

struct JobStatus {
    std::string id;
    JobState state = JobState::queued;
    std::vector<IterationRecord> trace;  // records from the requested offset on
    std::size_t trace_offset = 0;
    std::optional<FitResult> result;
    std::optional<Project> fitted;
    std::string error;
};

/// Runs fit jobs one at a time in submission order on a worker thread.
class FitQueue {
public:
    FitQueue();
    ~FitQueue();
    FitQueue(const FitQueue&) = delete;
    FitQueue& operator=(const FitQueue&) = delete;

    std::string submit(Project project, FitProblem problem, PsoOptions opts);

    /// nullopt for an unknown id. The trace starts at `from`.
    std::optional<JobStatus> status(const std::string& id, std::size_t from = 0) const;

    /// Like status() but first blocks until the trace grows past `from`, the
    /// job finishes or the timeout expires.
    std::optional<JobStatus> wait(const std::string& id, std::size_t from,
                                  std::chrono::milliseconds timeout) const;

    /// Queued jobs are dropped, a running job stops after its current
    /// iteration. False for an unknown id.
    bool cancel(const std::string& id);

    /// Jobs queued or running.
    [[nodiscard]] std::size_t active() const;

private:
    struct Job {
        std::string id;
        Project project;
        FitProblem problem;
        PsoOptions opts;
        JobState state = JobState::queued;
        std::vector<IterationRecord> trace;
        std::optional<FitResult> result;
        std::optional<Project> fitted;
        std::string error;
        std::stop_source stop;
    };

    void work(std::stop_token stop);
    JobStatus snapshot(const Job& job, std::size_t from) const;

    mutable std::mutex mutex_;
    mutable std::condition_variable_any changed_;
    std::map<std::string, std::shared_ptr<Job>> jobs_;
    std::deque<std::shared_ptr<Job>> pending_;
    std::uint64_t next_id_ = 1;
    std::jthread worker_;
};

struct Reply {
    int status = 200;
    nlohmann::json body;
};

/// Request handlers, independent of the transport.
Reply handle_simulate(const nlohmann::json& body);
Reply handle_fit_submit(FitQueue& queue, const nlohmann::json& body);
Reply handle_fit_status(const FitQueue& queue, const std::string& id);
Reply handle_fit_cancel(FitQueue& queue, const std::string& id);

nlohmann::json job_to_json(const JobStatus& s);
nlohmann::json fit_result_to_json(const FitResult& r);

/// One server-sent event: "id", "event" and a single-line JSON data field.
std::string sse_event(std::string_view event, const nlohmann::json& data,
                      std::optional<std::size_t> id = std::nullopt);

/// Local HTTP front end. Simulations run on the request threads, fits go
/// through a FitQueue.
class Server {
public:
    Server();
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds host:port (port 0 picks a free one) and returns the port.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    bool run();
    void stop();
    void wait_until_ready() const;

    FitQueue& queue() { return queue_; }

private:
    void routes();

    FitQueue queue_;
    std::unique_ptr<httplib::Server> http_;
};

}  // namespace tds::service
