#include "rescast/data_pipeline.hpp"
#include "rescast/esn.hpp"
#include "rescast/model_io.hpp"

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <thread>

namespace fs = std::filesystem;
using namespace rescast;

namespace {

struct Run {
    int code = -1;
    std::string output;
};

Run rescast_cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " \"" RESCAST_BINARY "\" " + args + " 2>&1";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe) != nullptr) {
        r.output += buf;
    }
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("rescast_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        out.push_back(line);
    }
    return out;
}

const std::string kSynthetic = RESCAST_SOURCE_DIR "/data/synthetic_300.csv";
const std::string kFast = " --lstm.hidden_units 4 --lstm.epochs 2 --reservoir.washout 20";

}  // namespace

TEST_CASE("usage and config errors exit 1") {
    CHECK(rescast_cli("").code == 1);
    CHECK(rescast_cli("frobnicate").code == 1);
    CHECK(rescast_cli("--help").code == 0);

    const fs::path out = scratch("config");
    Run r = rescast_cli("train --data.path " + kSynthetic + " --reservoir.leak_rate 2 --out " +
                        out.string());
    CHECK(r.code == 1);
    CHECK(r.output.find("leak_rate") != std::string::npos);

    r = rescast_cli("compare --data.path=" + kSynthetic + " --reservoir.colour=red");
    CHECK(r.code == 1);
    CHECK(r.output.find("reservoir.colour") != std::string::npos);

    CHECK(rescast_cli("compare --out " + out.string()).code == 1);  // no data source

    const fs::path conf = out / "bad.conf";
    std::ofstream(conf) << "data.path = " << kSynthetic << "\nlstm.epochs = lots\n";
    r = rescast_cli("compare --config " + conf.string());
    CHECK(r.code == 1);
    CHECK(r.output.find("line 2") != std::string::npos);
}

TEST_CASE("data errors exit 2") {
    const fs::path out = scratch("data");
    CHECK(rescast_cli("train --data.path /nonexistent.csv --out " + out.string()).code == 2);
    const fs::path bad = out / "bad.csv";
    std::ofstream(bad) << "Date,Open\n2020-01-01,1\n";
    const Run r = rescast_cli("train --data.path " + bad.string() + " --out " + out.string());
    CHECK(r.code == 2);
    CHECK(r.output.find("Close") != std::string::npos);
}

TEST_CASE("fetch against a stub and with a cold cache") {
    httplib::Server server;
    int hits = 0;
    server.Get(R"(/q/(.+))", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.set_content(
            "Date,Open,High,Low,Close,Adj Close,Volume\n"
            "2023-05-25,1,1,1,71.83,71.83,0\n2023-05-26,1,1,1,72.67,72.67,0\n"
            "2023-05-30,1,1,1,69.46,69.46,0\n2023-05-31,1,1,1,68.09,68.09,0\n",
            "text/csv");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const fs::path dir = scratch("fetch");
    const std::string endpoint =
        "'http://127.0.0.1:" + std::to_string(port) + "/q/{symbol}?a={start_epoch}&b={end_epoch}'";
    const std::string args = "fetch --symbol CL=F --start 2010-01-01 --end 2023-05-31 --endpoint " +
                             endpoint + " --out " + (dir / "out").string();
    Run r = rescast_cli(args, "RESCAST_CACHE_DIR=" + (dir / "cache").string());
    CHECK(r.code == 0);
    CHECK(r.output.find("4 rows from 2023-05-25 to 2023-05-31") != std::string::npos);
    CHECK(fs::exists(dir / "cache" / "CL=F_2010-01-01_2023-05-31.csv"));
    CHECK(fs::exists(dir / "out" / "CL=F_2010-01-01_2023-05-31.csv"));
    CHECK(hits == 1);

    server.stop();
    t.join();

    r = rescast_cli(args, "RESCAST_CACHE_DIR=" + (dir / "cache").string());
    CHECK(r.code == 0);
    CHECK(r.output.find("stale") != std::string::npos);

    r = rescast_cli(args, "RESCAST_CACHE_DIR=" + (dir / "cold").string());
    CHECK(r.code == 2);
    CHECK(r.output.find((dir / "cold" / "CL=F_2010-01-01_2023-05-31.csv").string()) !=
          std::string::npos);
}

TEST_CASE("train is deterministic and writes the fit report") {
    const fs::path a = scratch("train_a");
    const fs::path b = scratch("train_b");
    const Run ra = rescast_cli("train --model esn --seed 7 --data.path " + kSynthetic +
                               " --reservoir.washout 20 --out " + a.string());
    const Run rb = rescast_cli("train --model esn --seed 7 --data.path " + kSynthetic +
                               " --reservoir.washout 20 --out " + b.string());
    REQUIRE(ra.code == 0);
    REQUIRE(rb.code == 0);
    CHECK(slurp(a / "esn.model") == slurp(b / "esn.model"));
    const auto report = nlohmann::json::parse(ra.output);
    CHECK(report["model"] == "esn");
    CHECK(report["effective_samples"] == 224 - 20);

    const Run other = rescast_cli("train --model esn --seed 8 --data.path " + kSynthetic +
                                  " --reservoir.washout 20 --out " + b.string());
    REQUIRE(other.code == 0);
    CHECK(slurp(a / "esn.model") != slurp(b / "esn.model"));
}

TEST_CASE("--train-only-norm switches the normalization fit") {
    const fs::path dir = scratch("train_only_norm");
    const Run r = rescast_cli("compare --data.path " + kSynthetic + kFast +
                              " --train-only-norm --out " + dir.string());
    REQUIRE(r.code == 0);
    const auto report = nlohmann::json::parse(slurp(dir / "compare_report.json"));
    CHECK(report["data"]["normalization"]["mode"] == "train-only");
}

TEST_CASE("train lstm for one epoch on a toy CSV") {
    const fs::path dir = scratch("toy");
    const auto all = lines(slurp(kSynthetic));
    std::ofstream toy(dir / "toy.csv");
    for (std::size_t i = 0; i <= 100; ++i) {
        toy << all[i] << '\n';
    }
    toy.close();
    const Run r = rescast_cli("train --model lstm --lstm.epochs 1 --lstm.hidden_units 4 --data.path " +
                              (dir / "toy.csv").string() + " --out " + dir.string());
    CHECK(r.code == 0);
    const auto loss = lines(slurp(dir / "lstm_loss.csv"));
    REQUIRE(loss.size() == 2);
    CHECK(loss[0] == "epoch,loss");
    CHECK(fs::exists(dir / "lstm.model"));
}

TEST_CASE("predict one-step, free-running and bias-only") {
    const fs::path dir = scratch("predict");
    REQUIRE(rescast_cli("train --model esn --reservoir.washout 20 --data.path " + kSynthetic +
                        " --out " + dir.string())
                .code == 0);
    Run r = rescast_cli("predict --model-file " + (dir / "esn.model").string() + " --data " +
                        kSynthetic + " --out " + dir.string());
    REQUIRE(r.code == 0);
    auto rows = lines(slurp(dir / "predictions.csv"));
    CHECK(rows[0] == "date,actual,predicted");
    CHECK(rows.size() == 1 + 75);

    r = rescast_cli("predict --model-file " + (dir / "esn.model").string() + " --data " +
                    kSynthetic + " --mode free-running --horizon 10 --out " + dir.string());
    REQUIRE(r.code == 0);
    rows = lines(slurp(dir / "predictions.csv"));
    REQUIRE(rows.size() == 11);
    const Series s = parse_ohlc_csv(slurp(kSynthetic));
    Date d = s.dates.back();
    for (std::size_t i = 1; i <= 10; ++i) {
        d = next_business_day(d);
        CHECK(rows[i].starts_with(format_iso_date(d) + ",,"));
    }

    r = rescast_cli("predict --model-file " RESCAST_SOURCE_DIR
                    "/tests/fixtures/bias_only_esn.model --data " +
                    kSynthetic + " --out " + dir.string());
    REQUIRE(r.code == 0);
    rows = lines(slurp(dir / "predictions.csv"));
    std::set<std::string> predicted;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        predicted.insert(rows[i].substr(rows[i].rfind(',') + 1));
    }
    CHECK(predicted.size() == 1);
    CHECK(*predicted.begin() == "65");  // bias 0.5 on the (50, 80) range

    const Run lstm_train = rescast_cli("train --model lstm --lstm.epochs 2 --lstm.hidden_units 4 "
                                       "--data.path " + kSynthetic + " --out " + dir.string());
    REQUIRE(lstm_train.code == 0);
    r = rescast_cli("predict --model-file " + (dir / "lstm.model").string() + " --data " +
                    kSynthetic + " --out " + dir.string());
    CHECK(r.code == 0);
    CHECK(lines(slurp(dir / "predictions.csv")).size() == 76);
}

TEST_CASE("artifact errors exit 3") {
    const fs::path dir = scratch("artifact");
    std::string text = slurp(RESCAST_SOURCE_DIR "/tests/fixtures/bias_only_esn.model");
    text.replace(text.find("format_version 1"), 16, "format_version 9");
    std::ofstream(dir / "future.model") << text;
    Run r = rescast_cli("predict --model-file " + (dir / "future.model").string() + " --data " +
                        kSynthetic + " --out " + dir.string());
    CHECK(r.code == 3);
    CHECK(r.output.find("format_version") != std::string::npos);
    r = rescast_cli("predict --model-file " + (dir / "missing.model").string() + " --data " +
                    kSynthetic + " --out " + dir.string());
    CHECK(r.code == 3);
}

TEST_CASE("divergence exits 4 naming the model") {
    const fs::path dir = scratch("diverge");
    const Run r = rescast_cli("compare --data.path " + kSynthetic + kFast +
                              " --lstm.optimizer plain-gradient --lstm.learning_rate 1e300 --out " +
                              dir.string());
    CHECK(r.code == 4);
    CHECK(r.output.find("lstm") != std::string::npos);
}

TEST_CASE("evaluate a predictions file") {
    const fs::path dir = scratch("evaluate");
    std::ofstream(dir / "p.csv") << "date,actual,predicted\n2023-01-02,1,2\n2023-01-03,2,2\n"
                                    "2023-01-04,4,2\n2023-01-05,,9\n";
    const Run r = rescast_cli("evaluate --predictions " + (dir / "p.csv").string() + " --out " +
                              dir.string());
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "evaluation.json"));
    CHECK(j["n"] == 3);
    CHECK(j["mae"].get<double>() == doctest::Approx(1.0));
    CHECK(j["mape_percent"].get<double>() == doctest::Approx(50.0));
    CHECK(j["model_name"] == "p");
}

TEST_CASE("compare writes every output") {
    const fs::path dir = scratch("compare");
    const Run r = rescast_cli("compare --data.path " + kSynthetic + kFast + " --out " + dir.string());
    REQUIRE(r.code == 0);
    for (const char* name :
         {"compare_report.json", "timing.json", "metrics.csv", "esn_predictions.csv",
          "lstm_predictions.csv", "lstm_loss.csv", "series.svg", "test_predictions.svg",
          "esn_train_test.svg"}) {
        CHECK_MESSAGE(fs::exists(dir / name), name);
    }
    const auto report = nlohmann::json::parse(slurp(dir / "compare_report.json"));
    CHECK(report["data"]["n"] == 300);
    CHECK(lines(slurp(dir / "metrics.csv")).size() == 4);
}
