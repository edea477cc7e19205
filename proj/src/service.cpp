#include "tds/service.hpp"

#include "tds/errors.hpp"
#include "tds/simulate.hpp"
#include "tds/spectrum.hpp"

#include <httplib.h>

#include <sstream>

namespace tds::service {

using nlohmann::json;

std::string_view state_tag(JobState s) {
    switch (s) {
        case JobState::queued:
            return "queued";
        case JobState::running:
            return "running";
        case JobState::succeeded:
            return "succeeded";
        case JobState::failed:
            return "failed";
        case JobState::cancelled:
            return "cancelled";
    }
    return "unknown";
}

FitQueue::FitQueue() : worker_([this](std::stop_token st) { work(st); }) {}

FitQueue::~FitQueue() {
    {
        std::lock_guard lock(mutex_);
        for (auto& [id, job] : jobs_) {
            job->stop.request_stop();
        }
    }
    worker_.request_stop();
    changed_.notify_all();
}

std::string FitQueue::submit(Project project, FitProblem problem, PsoOptions opts) {
    auto job = std::make_shared<Job>();
    job->project = std::move(project);
    job->problem = std::move(problem);
    job->opts = opts;
    {
        std::lock_guard lock(mutex_);
        job->id = std::to_string(next_id_++);
        jobs_.emplace(job->id, job);
        pending_.push_back(job);
    }
    changed_.notify_all();
    return job->id;
}

JobStatus FitQueue::snapshot(const Job& job, std::size_t from) const {
    JobStatus s;
    s.id = job.id;
    s.state = job.state;
    s.trace_offset = std::min(from, job.trace.size());
    s.trace.assign(job.trace.begin() + static_cast<std::ptrdiff_t>(s.trace_offset),
                   job.trace.end());
    s.result = job.result;
    s.fitted = job.fitted;
    s.error = job.error;
    return s;
}

std::optional<JobStatus> FitQueue::status(const std::string& id, std::size_t from) const {
    std::lock_guard lock(mutex_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) {
        return std::nullopt;
    }
    return snapshot(*it->second, from);
}

std::optional<JobStatus> FitQueue::wait(const std::string& id, std::size_t from,
                                        std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) {
        return std::nullopt;
    }
    const auto job = it->second;
    changed_.wait_for(lock, timeout,
                      [&] { return job->trace.size() > from || finished(job->state); });
    return snapshot(*job, from);
}

bool FitQueue::cancel(const std::string& id) {
    std::lock_guard lock(mutex_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) {
        return false;
    }
    auto& job = *it->second;
    if (job.state == JobState::queued) {
        job.state = JobState::cancelled;
        std::erase(pending_, it->second);
        changed_.notify_all();
    } else if (job.state == JobState::running) {
        job.stop.request_stop();
    }
    return true;
}

std::size_t FitQueue::active() const {
    std::lock_guard lock(mutex_);
    std::size_t n = pending_.size();
    for (const auto& [id, job] : jobs_) {
        n += job->state == JobState::running ? 1 : 0;
    }
    return n;
}

void FitQueue::work(std::stop_token stop) {
    while (true) {
        std::shared_ptr<Job> job;
        {
            std::unique_lock lock(mutex_);
            if (!changed_.wait(lock, stop, [&] { return !pending_.empty(); })) {
                return;
            }
            job = pending_.front();
            pending_.pop_front();
            job->state = JobState::running;
        }
        changed_.notify_all();

        const auto progress = [&](const IterationRecord& r) {
            {
                std::lock_guard lock(mutex_);
                job->trace.push_back(r);
            }
            changed_.notify_all();
        };
        try {
            FitResult r = run_pso(job->problem, job->opts, progress, job->stop.get_token());
            Project fitted = apply_fit(job->project, r);
            std::lock_guard lock(mutex_);
            job->state =
                r.reason == Termination::cancelled ? JobState::cancelled : JobState::succeeded;
            job->fitted = std::move(fitted);
            job->result = std::move(r);
        } catch (const std::exception& e) {
            std::lock_guard lock(mutex_);
            job->state = JobState::failed;
            job->error = e.what();
        }
        changed_.notify_all();
    }
}

namespace {

Reply error_reply(int status, std::string_view message) {
    return Reply{status, json{{"error", message}}};
}

// Maps library errors onto HTTP statuses: bad input is the client's fault,
// a failing forward solve is reported as unprocessable.
template <typename Fn>
Reply guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const json::exception& e) {
        return error_reply(400, e.what());
    } catch (const SolverError& e) {
        return error_reply(422, e.what());
    } catch (const Error& e) {
        return error_reply(400, e.what());
    }
}

const json& project_payload(const json& body) {
    return body.contains("project") ? body.at("project") : body;
}

}  // namespace

json fit_result_to_json(const FitResult& r) {
    json trace = json::array();
    for (const auto& rec : r.trace) {
        trace.push_back(trace_record_to_json(rec));
    }
    json j{{"traps", traps_to_json(r.traps)},
           {"best_f", r.best_f},
           {"C_L0", r.C_L0 ? json(*r.C_L0) : json(nullptr)},
           {"reason", termination_tag(r.reason)},
           {"f_count", r.f_count},
           {"failed_evaluations", r.failed_evaluations},
           {"trap_areas", r.trap_areas},
           {"total_area", r.total_area},
           {"spectrum", spectrum_to_json(r.best_spectrum)}};
    return j;
}

json job_to_json(const JobStatus& s) {
    json trace = json::array();
    for (const auto& rec : s.trace) {
        trace.push_back(trace_record_to_json(rec));
    }
    json j{{"id", s.id}, {"state", state_tag(s.state)}, {"trace", trace}};
    if (s.result) {
        j["result"] = fit_result_to_json(*s.result);
    }
    if (s.fitted) {
        j["project"] = project_to_json(*s.fitted);
    }
    if (!s.error.empty()) {
        j["error"] = s.error;
    }
    return j;
}

std::string sse_event(std::string_view event, const json& data, std::optional<std::size_t> id) {
    std::string out;
    if (id) {
        out += "id: " + std::to_string(*id) + "\n";
    }
    out += "event: ";
    out += event;
    out += "\ndata: " + data.dump() + "\n\n";
    return out;
}

Reply handle_simulate(const json& body) {
    return guarded([&] {
        const Project p = project_from_json(project_payload(body));
        std::vector<Model> models = p.models;
        if (body.contains("models")) {
            models.clear();
            for (const auto& m : body.at("models")) {
                models.push_back(parse_model(m.get<std::string>()));
            }
        }
        if (models.empty()) {
            throw ValidationError("no model selected");
        }
        json spectra = json::array();
        for (Model m : models) {
            const SimulationResult r = simulate(m, p.mat, p.traps, p.protocol, p.numerics);
            json s = spectrum_to_json(desorption_rate(r));
            s["mass_balance_residual"] = mass_balance_residual(r);
            s["warnings"] = r.warnings;
            spectra.push_back(std::move(s));
        }
        return Reply{200, json{{"spectra", spectra}}};
    });
}

Reply handle_fit_submit(FitQueue& queue, const json& body) {
    return guarded([&] {
        if (!body.is_object() || !body.contains("project")) {
            throw FormatError("fit request needs a 'project'");
        }
        Project p = project_from_json(body.at("project"));
        if (body.contains("data")) {
            const json& d = body.at("data");
            if (d.contains("text")) {
                std::istringstream in(d.at("text").get<std::string>());
                const auto kind = parse_column_kind(d.value("col2", std::string("deltaC")));
                const auto units = parse_column_units(d.value("units", std::string("K,mol_m3_s")));
                p.experiment =
                    parse_experiment(in, kind, units, p.mat, p.protocol, d.value("source", ""));
            } else {
                p.experiment = experiment_from_json(d, p.mat);
            }
        }
        if (body.contains("options")) {
            p.fit = fit_settings_from_json(body.at("options"), p.fit);
        }
        std::optional<Model> model;
        if (body.contains("model")) {
            model = parse_model(body.at("model").get<std::string>());
        }
        FitProblem problem = make_fit_problem(p, model);
        validate(problem);
        PsoOptions opts = p.fit.pso;
        if (body.contains("options") && body.at("options").contains("threads")) {
            opts.threads = body.at("options").at("threads").get<unsigned>();
        }
        validate(opts);
        const std::string id = queue.submit(std::move(p), std::move(problem), opts);
        return Reply{202, json{{"id", id}, {"state", "queued"}}};
    });
}

Reply handle_fit_status(const FitQueue& queue, const std::string& id) {
    const auto s = queue.status(id);
    if (!s) {
        return error_reply(404, "unknown fit job '" + id + "'");
    }
    return Reply{200, job_to_json(*s)};
}

Reply handle_fit_cancel(FitQueue& queue, const std::string& id) {
    if (!queue.cancel(id)) {
        return error_reply(404, "unknown fit job '" + id + "'");
    }
    const auto s = queue.status(id);
    return Reply{200, json{{"id", id}, {"state", state_tag(s->state)}}};
}

Server::Server() : http_(std::make_unique<httplib::Server>()) { routes(); }

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
    if (port == 0) {
        return http_->bind_to_any_port(host);
    }
    return http_->bind_to_port(host, port) ? port : -1;
}

bool Server::run() { return http_->listen_after_bind(); }

void Server::stop() {
    if (http_) {
        http_->stop();
    }
}

void Server::wait_until_ready() const { http_->wait_until_ready(); }

void Server::routes() {
    const auto send = [](httplib::Response& res, const Reply& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    const auto parse_body = [](const httplib::Request& req) -> std::optional<json> {
        try {
            return json::parse(req.body);
        } catch (const json::exception&) {
            return std::nullopt;
        }
    };

    // The browser UI is served from another origin.
    http_->set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"}});
    http_->Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.status = 204;
    });

    http_->Get("/health", [this, send](const httplib::Request&, httplib::Response& res) {
        send(res, Reply{200, json{{"status", "ok"}, {"active_fits", queue_.active()}}});
    });

    http_->Post("/simulate", [send, parse_body](const httplib::Request& req,
                                                httplib::Response& res) {
        const auto body = parse_body(req);
        send(res, body ? handle_simulate(*body) : error_reply(400, "request body is not JSON"));
    });

    http_->Post("/fit", [this, send, parse_body](const httplib::Request& req,
                                                 httplib::Response& res) {
        const auto body = parse_body(req);
        send(res, body ? handle_fit_submit(queue_, *body)
                       : error_reply(400, "request body is not JSON"));
    });

    http_->Get(R"(/fit/([^/]+))", [this, send](const httplib::Request& req,
                                               httplib::Response& res) {
        send(res, handle_fit_status(queue_, req.matches[1]));
    });

    http_->Delete(R"(/fit/([^/]+))", [this, send](const httplib::Request& req,
                                                  httplib::Response& res) {
        send(res, handle_fit_cancel(queue_, req.matches[1]));
    });

    // One "iteration" event per record, then a final "end" event carrying
    // the job state (and the result when there is one).
    http_->Get(R"(/fit/([^/]+)/events)", [this, send](const httplib::Request& req,
                                                      httplib::Response& res) {
        const std::string id = req.matches[1];
        if (!queue_.status(id)) {
            send(res, error_reply(404, "unknown fit job '" + id + "'"));
            return;
        }
        res.set_header("Cache-Control", "no-cache");
        auto seen = std::make_shared<std::size_t>(0);
        res.set_chunked_content_provider(
            "text/event-stream", [this, id, seen](std::size_t, httplib::DataSink& sink) {
                const auto s = queue_.wait(id, *seen, std::chrono::milliseconds(500));
                if (!s) {
                    return false;
                }
                for (const auto& r : s->trace) {
                    const auto ev = sse_event("iteration", trace_record_to_json(r),
                                              static_cast<std::size_t>(r.iteration));
                    if (!sink.write(ev.data(), ev.size())) {
                        return false;
                    }
                }
                *seen += s->trace.size();
                if (finished(s->state)) {
                    json end{{"id", id}, {"state", state_tag(s->state)}};
                    if (s->result) {
                        end["result"] = fit_result_to_json(*s->result);
                    }
                    if (!s->error.empty()) {
                        end["error"] = s->error;
                    }
                    const auto ev = sse_event("end", end);
                    sink.write(ev.data(), ev.size());
                    sink.done();
                    return true;
                }
                return sink.is_writable();
            });
    });
}

}  // namespace tds::service
