#include "tds/errors.hpp"
#include "tds/io.hpp"
#include "tds/service.hpp"
#include "tds/simulate.hpp"

#include "validation_cases.hpp"

#include <doctest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <thread>

using namespace tds;
using namespace tds::service;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

// One-trap project on a coarse grid with its own spectrum as the data.
Project small_project() {
    const auto c = cases::drexler();
    Project p;
    p.mat = c.mat;
    p.protocol = c.protocol;
    p.traps = {c.traps[1]};
    p.numerics.n_temperature_evals = 40;
    p.numerics.n_elements = 20;
    p.fit.bounds = BoundsMode::local;
    p.fit.pso.population = 6;
    p.fit.pso.max_iterations = 3;
    p.fit.pso.threads = 1;
    const auto s = desorption_rate(simulate(Model::oriani, p.mat, p.traps, p.protocol, p.numerics));
    ExperimentalSpectrum e;
    for (std::size_t k = 1; k < s.size(); ++k) {
        e.T.push_back(s.T[k]);
        e.deltaC.push_back(s.deltaC_total[k]);
    }
    p.experiment = e;
    return p;
}

JobStatus wait_done(const FitQueue& q, const std::string& id) {
    const auto deadline = std::chrono::steady_clock::now() + 300s;
    while (std::chrono::steady_clock::now() < deadline) {
        const auto s = q.wait(id, 1u << 30, 200ms);
        REQUIRE(s);
        if (finished(s->state)) {
            return *q.status(id);
        }
    }
    FAIL("fit job did not finish");
    return {};
}

std::string submit(FitQueue& q, const Project& p, int iterations = 3) {
    FitProblem f = make_fit_problem(p);
    PsoOptions o = p.fit.pso;
    o.max_iterations = iterations;
    return q.submit(p, f, o);
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("simulate handler") {
    Project p = small_project();
    p.experiment.reset();
    const json body = project_to_json(p);
    const Reply r = handle_simulate(body);
    REQUIRE(r.status == 200);
    REQUIRE(r.body.at("spectra").size() == 1);
    const json& s = r.body.at("spectra").at(0);
    CHECK(s.at("model") == "oriani");
    CHECK(s.at("T").size() == 40);
    CHECK(s.at("deltaC_trap").size() == 1);
    CHECK(s.at("mass_balance_residual").get<double>() < 5e-3);
    CHECK(s.at("warnings").empty());

    // nested project and an explicit model list
    const Reply two = handle_simulate(json{{"project", body}, {"models", {"oriani", "mf"}}});
    REQUIRE(two.status == 200);
    REQUIRE(two.body.at("spectra").size() == 2);
    CHECK(two.body.at("spectra").at(1).at("model") == "mf");
    CHECK(two.body.at("spectra").at(0).at("deltaC_total") == s.at("deltaC_total"));

    CHECK(handle_simulate(json{{"project", body}, {"models", {"fem"}}}).status == 400);
    CHECK(handle_simulate(json{{"project", body}, {"models", json::array()}}).status == 400);
    json bad = body;
    bad["protocol"]["T_max"] = 100.0;  // below T_min
    const Reply invalid = handle_simulate(bad);
    CHECK(invalid.status == 400);
    CHECK(invalid.body.contains("error"));
}

TEST_CASE("server-sent event framing") {
    CHECK(sse_event("iteration", json{{"a", 1}}, 7) == "id: 7\nevent: iteration\ndata: {\"a\":1}\n\n");
    CHECK(sse_event("end", json{{"state", "failed"}}) ==
          "event: end\ndata: {\"state\":\"failed\"}\n\n");
}

TEST_CASE("fit queue runs jobs in order") {
    FitQueue q;
    const Project p = small_project();
    const auto a = submit(q, p);
    const auto b = submit(q, p, 2);
    CHECK(a == "1");
    CHECK(b == "2");
    CHECK(!q.status("3"));

    const JobStatus sa = wait_done(q, a);
    CHECK(sa.state == JobState::succeeded);
    REQUIRE(sa.result);
    REQUIRE(sa.fitted);
    CHECK(sa.trace.size() == 4);
    CHECK(sa.fitted->traps == sa.result->traps);
    CHECK(sa.fitted->last_fit->best_f == sa.result->best_f);

    const JobStatus sb = wait_done(q, b);
    CHECK(sb.state == JobState::succeeded);
    CHECK(sb.trace.size() == 3);

    // trace from an offset
    const auto tail = q.status(a, 2);
    CHECK(tail->trace_offset == 2);
    CHECK(tail->trace.size() == 2);
    CHECK(tail->trace.front().iteration == 2);
    CHECK(q.status(a, 99)->trace.empty());
    CHECK(q.active() == 0);

    const auto js = job_to_json(sa);
    CHECK(js.at("state") == "succeeded");
    CHECK(js.at("result").at("traps").size() == 1);
    CHECK(js.at("project").at("last_fit").is_object());
}

TEST_CASE("fit queue cancellation") {
    FitQueue q;
    const Project p = small_project();
    Project slow = p;
    slow.fit.pso.tolerance = 1e-300;
    const auto running = submit(q, slow, 100000);
    const auto queued = submit(q, p);

    // wait until the first job reports an iteration
    REQUIRE(q.wait(running, 0, 60s)->trace.size() > 0);
    CHECK(q.status(queued)->state == JobState::queued);
    CHECK(q.active() == 2);

    CHECK(q.cancel(queued));
    CHECK(q.status(queued)->state == JobState::cancelled);
    CHECK(q.cancel(running));
    const JobStatus s = wait_done(q, running);
    CHECK(s.state == JobState::cancelled);
    CHECK(s.trace.size() < 100000);
    CHECK_FALSE(q.cancel("42"));

    // a failing job reports its error
    Project broken = p;
    FitProblem f = make_fit_problem(broken);
    f.exp.deltaC.assign(f.exp.size(), std::nan(""));
    const auto id = q.submit(broken, f, broken.fit.pso);
    const JobStatus e = wait_done(q, id);
    CHECK(e.state == JobState::failed);
    CHECK(!e.error.empty());
}

TEST_CASE("fit handlers") {
    FitQueue q;
    const Project p = small_project();
    const json pj = project_to_json(p);

    CHECK(handle_fit_submit(q, json{{"nothing", 1}}).status == 400);
    Project no_data = p;
    no_data.experiment.reset();
    CHECK(handle_fit_submit(q, json{{"project", project_to_json(no_data)}}).status == 400);
    CHECK(handle_fit_submit(q, json{{"project", pj}, {"options", {{"population", 1}}}}).status ==
          400);
    CHECK(handle_fit_submit(q, json{{"project", pj}, {"model", "lattice"}}).status == 400);

    // data as text in other units
    const json with_text{{"project", project_to_json(no_data)},
                         {"data",
                          {{"text", "T [C],rate\n26.85,0.1\n36.85,0.2\n46.85,0.1\n56.85,0.05\n"},
                           {"units", "C,mol_m3_s"},
                           {"source", "pasted"}}},
                         {"options", {{"max_iterations", 1}, {"threads", 1}}}};
    const Reply r = handle_fit_submit(q, with_text);
    REQUIRE(r.status == 202);
    CHECK(r.body.at("state") == "queued");
    const auto id = r.body.at("id").get<std::string>();
    const JobStatus s = wait_done(q, id);
    CHECK(s.state == JobState::succeeded);
    REQUIRE(s.fitted);
    CHECK(s.fitted->experiment->source == "pasted");
    CHECK(s.fitted->experiment->T.front() == doctest::Approx(300.0));
    CHECK(s.trace.size() == 2);

    const Reply st = handle_fit_status(q, id);
    CHECK(st.status == 200);
    CHECK(st.body.at("state") == "succeeded");
    CHECK(handle_fit_status(q, "nope").status == 404);
    CHECK(handle_fit_cancel(q, "nope").status == 404);
    CHECK(handle_fit_cancel(q, id).status == 200);
}

TEST_CASE("http end to end") {
    Server server;
    const int port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread serving([&] { server.run(); });
    server.wait_until_ready();

    httplib::Client cli("127.0.0.1", port);
    cli.set_read_timeout(120, 0);

    auto health = cli.Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(json::parse(health->body).at("status") == "ok");
    CHECK(health->get_header_value("Access-Control-Allow-Origin") == "*");

    const Project p = small_project();
    Project sim = p;
    sim.experiment.reset();
    auto s = cli.Post("/simulate", project_to_json(sim).dump(), "application/json");
    REQUIRE(s);
    CHECK(s->status == 200);
    CHECK(json::parse(s->body).at("spectra").size() == 1);

    auto bad = cli.Post("/simulate", "{oops", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    CHECK(json::parse(bad->body).contains("error"));

    auto f = cli.Post("/fit", json{{"project", project_to_json(p)}}.dump(), "application/json");
    REQUIRE(f);
    REQUIRE(f->status == 202);
    const auto id = json::parse(f->body).at("id").get<std::string>();

    // the event stream ends once the job is done
    std::string stream;
    auto ev = cli.Get("/fit/" + id + "/events",
                      [&](const char* data, std::size_t n) {
                          stream.append(data, n);
                          return true;
                      });
    REQUIRE(ev);
    CHECK(ev->status == 200);
    CHECK(ev->get_header_value("Content-Type") == "text/event-stream");
    std::size_t iterations = 0;
    for (std::size_t pos = 0; (pos = stream.find("event: iteration", pos)) != std::string::npos;
         ++pos) {
        ++iterations;
    }
    CHECK(iterations == 4);
    const auto end = stream.find("event: end\ndata: ");
    REQUIRE(end != std::string::npos);
    const auto data = stream.substr(end + 17, stream.find('\n', end + 17) - end - 17);
    CHECK(json::parse(data).at("state") == "succeeded");

    auto st = cli.Get("/fit/" + id);
    REQUIRE(st);
    CHECK(st->status == 200);
    const json job = json::parse(st->body);
    CHECK(job.at("state") == "succeeded");
    CHECK(job.at("trace").size() == 4);
    CHECK(job.at("result").at("traps").size() == 1);

    auto del = cli.Delete("/fit/" + id);
    REQUIRE(del);
    CHECK(del->status == 200);

    CHECK(cli.Get("/fit/999")->status == 404);
    CHECK(cli.Delete("/fit/999")->status == 404);
    CHECK(cli.Get("/fit/999/events")->status == 404);
    auto opt = cli.Options("/fit");
    REQUIRE(opt);
    CHECK(opt->status == 204);

    server.stop();
    serving.join();
}

}  // TEST_SUITE service
