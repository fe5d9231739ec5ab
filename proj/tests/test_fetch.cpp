#include "rescast/error.hpp"
#include "rescast/fetch.hpp"

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <thread>

using namespace rescast;
namespace fs = std::filesystem;

namespace {

const char* kFiveRows =
    "Date,Open,High,Low,Close,Adj Close,Volume\n"
    "2023-05-24,1,1,1,74.34,74.34,0\n"
    "2023-05-25,1,1,1,71.83,71.83,0\n"
    "2023-05-26,1,1,1,72.67,72.67,0\n"
    "2023-05-30,1,1,1,69.46,69.46,0\n"
    "2023-05-31,1,1,1,68.09,68.09,0\n";

class StubServer {
public:
    StubServer() {
        server_.Get(R"(/quotes/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
            last_target_ = req.target;
            res.set_content(kFiveRows, "text/csv");
        });
        server_.Get("/missing", [](const httplib::Request&, httplib::Response& res) {
            res.status = 404;
            res.set_content("no such symbol", "text/plain");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() { stop(); }

    void stop() {
        if (thread_.joinable()) {
            server_.stop();
            thread_.join();
        }
    }
    [[nodiscard]] int port() const { return port_; }
    [[nodiscard]] std::string last_target() const { return last_target_; }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::string last_target_;
};

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("rescast_fetch_" + name);
    fs::remove_all(dir);
    return dir;
}

FetchRequest request_for(int port, const fs::path& cache) {
    FetchRequest r;
    r.symbol = "CL=F";
    parse_iso_date("2010-01-01", r.start);
    parse_iso_date("2023-05-31", r.end);
    r.endpoint = "http://127.0.0.1:" + std::to_string(port) +
                 "/quotes/{symbol}?period1={start_epoch}&period2={end_epoch}";
    r.cache_dir = cache;
    r.timeout = std::chrono::seconds(2);
    return r;
}

int unused_port() {
    httplib::Server probe;
    return probe.bind_to_any_port("127.0.0.1");  // released when probe dies
}

}  // namespace

TEST_CASE("expand_url_template substitutes placeholders") {
    Date start, end;
    parse_iso_date("2010-01-01", start);
    parse_iso_date("2023-05-31", end);
    CHECK(expand_url_template("x/{symbol}?a={start_epoch}&b={end_epoch}", "CL=F", start, end) ==
          "x/CL%3DF?a=1262304000&b=1685577600");
}

TEST_CASE("cache_path layout") {
    Date start, end;
    parse_iso_date("2010-01-01", start);
    parse_iso_date("2023-05-31", end);
    CHECK(cache_path("c", "CL=F", start, end) == fs::path("c") / "CL=F_2010-01-01_2023-05-31.csv");
}

TEST_CASE("fetch_history against a stub, then with the server down") {
    const fs::path cache = fresh_dir("warm");
    StubServer stub;
    const FetchRequest req = request_for(stub.port(), cache);

    const FetchResult live = fetch_history(req);
    CHECK(live.series.size() == 5);
    CHECK_FALSE(live.stale);
    CHECK(fs::exists(live.cache_file));
    CHECK(stub.last_target() == "/quotes/CL%3DF?period1=1262304000&period2=1685577600");

    stub.stop();
    const FetchResult cached = fetch_history(req);
    CHECK(cached.stale);
    CHECK(cached.series.values == live.series.values);
    CHECK(cached.series.dates == live.series.dates);
}

TEST_CASE("cold cache with the server down names the cache path") {
    const fs::path cache = fresh_dir("cold");
    const FetchRequest req = request_for(unused_port(), cache);
    try {
        fetch_history(req);
        FAIL("expected a fetch error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Fetch);
        CHECK(std::string(e.what()).find(cache_path(cache, req.symbol, req.start, req.end).string()) !=
              std::string::npos);
        CHECK(exit_code(e.kind()) == 2);
    }
}

TEST_CASE("non-2xx status is an HTTP error and nothing is cached") {
    const fs::path cache = fresh_dir("status");
    StubServer stub;
    FetchRequest req = request_for(stub.port(), cache);
    req.endpoint = "http://127.0.0.1:" + std::to_string(stub.port()) + "/missing";
    try {
        fetch_history(req);
        FAIL("expected an HTTP status error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::HttpStatus);
        CHECK(std::string(e.what()).find("404") != std::string::npos);
    }
    CHECK_FALSE(fs::exists(cache_path(cache, req.symbol, req.start, req.end)));
}
