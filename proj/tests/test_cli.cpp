#include <doctest.h>

#include <fstream>
#include <sstream>

#include "netselect/cli.hpp"
#include "netselect/eval.hpp"
#include "netselect/io.hpp"
#include "test_support.hpp"

using namespace netselect;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream o, e;
    const int code = run_cli(args, o, e);
    return {code, o.str(), e.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), {});
}

void write_panel(const fs::path& dir, const Matrix& v, const std::vector<std::string>& ids) {
    PanelSeries p;
    p.sensor_ids = ids;
    for (Index t = 0; t < v.cols(); ++t) p.timestamps.push_back(1451606400 + t * 3600);
    p.values = v;
    write_panel_csv((dir / "panel.csv").string(), p);
    CoordTable c;
    c.ids = ids;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        c.coords.push_back({41.0 + 0.01 * static_cast<double>(i), 2.0 + 0.013 * static_cast<double>(i * i % 7)});
    }
    write_coords_csv((dir / "coords.csv").string(), c);
}

// Panel whose uncentred training covariance is exactly A + D of the
// four-node example: Cholesky factor times a repeated orthogonal +-1 design.
void four_node_panel(const fs::path& dir) {
    const Matrix l = Eigen::LLT<Matrix>(four_node_covariance().mat()).matrixL();
    Matrix h(4, 4);
    h << 1, 1, 1, 1, 1, -1, 1, -1, 1, 1, -1, -1, 1, -1, -1, 1;
    Matrix z(4, 1000);
    for (Index t = 0; t < 1000; ++t) z.col(t) = h.col(t % 4);
    write_panel(dir, l * z, {"1", "2", "3", "4"});
}

std::vector<std::string> common(const fs::path& dir) {
    return {"--panel", (dir / "panel.csv").string(), "--coords", (dir / "coords.csv").string()};
}

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

TEST_CASE("cli ingest") {
    const auto dir = temp_dir("cli_ingest");
    std::ostringstream raw;
    raw << "station,moment,bikes,spaces\n";
    for (int k = 0; k < 30; ++k) {
        const std::string t = format_iso8601(1451606400 + k * 1200);
        raw << "a," << t << ',' << k % 10 << ',' << 10 - k % 10 << '\n';
        raw << "b," << t << ',' << k % 5 << ',' << 5 - k % 5 << '\n';
        raw << "c," << t << ',' << k % 3 << ',' << 3 - k % 3 << '\n';
    }
    raw << "d,2016-01-01T00:00:00Z,1,1\n";
    std::ofstream(dir / "raw.csv") << raw.str();
    const std::vector<std::string> args{"ingest", "--raw", (dir / "raw.csv").string(), "--min-records", "10",
                                        "--out", (dir / "out").string()};
    const auto r = run(args);
    REQUIRE(r.code == 0);
    const auto panel = read_panel_csv((dir / "out" / "panel.csv").string());
    CHECK(panel.sensor_ids == std::vector<std::string>{"a", "b", "c"});
    CHECK(panel.t_total() == 10);
    CHECK(slurp(dir / "out" / "stations.csv").rfind("station,max_bikes,correction_rate,records\na,10,1,30\n", 0) ==
          0);
    const auto first = slurp(dir / "out" / "panel.csv");
    REQUIRE(run(args).code == 0);
    CHECK(slurp(dir / "out" / "panel.csv") == first);

    std::ofstream(dir / "empty.csv") << "";
    const auto e = run({"ingest", "--raw", (dir / "empty.csv").string(), "--out", (dir / "o2").string()});
    CHECK(e.code == 2);
    const auto j = nlohmann::json::parse(e.err);
    CHECK(j["error"] == "input");
    CHECK(run({"ingest", "--raw", (dir / "raw.csv").string(), "--out", (dir / "o3").string()}).code == 2);
}

TEST_CASE("cli select on the four-node example") {
    const auto dir = temp_dir("cli_fig5");
    four_node_panel(dir);
    const auto base = cat({"select"}, common(dir));
    const std::vector<std::string> split{"--no-detrend", "--val-frac", "0.1", "--test-frac", "0.1"};
    const auto r = run(cat(cat(base, split), {"--method", "linear", "--p", "1", "--out", (dir / "lin").string()}));
    REQUIRE(r.code == 0);
    const auto sel = read_json((dir / "lin" / "selection.json").string());
    CHECK(sel["order"] == nlohmann::json({3}));
    CHECK(sel["order_ids"] == nlohmann::json({"4"}));
    CHECK(sel["n_sensors"] == 4);
    CHECK(sel["step_values"][0].get<double>() == doctest::Approx(4.0 / 7.0));
    CHECK(r.out.find("selected 4") != std::string::npos);
    const auto geo = read_json((dir / "lin" / "selection.geojson").string());
    CHECK(geo["features"][3]["properties"]["rank"] == 1);

    const auto std_run = run(cat(cat(base, split), {"--method", "linear", "--p", "1", "--standardize", "--out",
                                                     (dir / "std").string()}));
    REQUIRE(std_run.code == 0);
    CHECK(read_json((dir / "std" / "selection.json").string())["order"] == nlohmann::json({0}));

    const auto k = run(cat(cat(base, split), {"--method", "kernel", "--kernel", "autocovariance", "--lambda", "0",
                                               "--p", "2", "--out", (dir / "ker").string()}));
    REQUIRE(k.code == 0);
    const auto l2 = run(cat(cat(base, split), {"--method", "linear", "--p", "2", "--out", (dir / "lin2").string()}));
    REQUIRE(l2.code == 0);
    CHECK(read_json((dir / "ker" / "selection.json").string())["order"] ==
          read_json((dir / "lin2" / "selection.json").string())["order"]);
}

TEST_CASE("cli select errors") {
    const auto dir = temp_dir("cli_errors");
    four_node_panel(dir);
    CHECK(run({"select", "--panel", (dir / "panel.csv").string(), "--coords", (dir / "nope.csv").string(),
               "--method", "linear", "--out", (dir / "o").string()})
              .code == 2);
    CHECK(run(cat(cat({"select"}, common(dir)), {"--method", "magic", "--out", (dir / "o").string()})).code == 2);
    CHECK(run(cat(cat({"select"}, common(dir)), {"--method", "linear", "--p", "4", "--out", (dir / "o").string()}))
              .code == 2);
    CHECK(run({"select", "--bogus"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({}).code == 2);
    const auto help = run({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("select") != std::string::npos);
}

TEST_CASE("cli evaluate") {
    const auto dir = temp_dir("cli_eval");
    Matrix v(5, 600);
    v.topRows(4) = random_normal(4, 600, 120);
    v.row(4) = v.row(0) + 2.0 * v.row(1) - v.row(3);
    write_panel(dir, v, {"a", "b", "c", "d", "e"});
    const auto sel = run(cat(cat({"select"}, common(dir)),
                             {"--no-detrend", "--method", "linear", "--p", "1", "--out", (dir / "sel").string()}));
    REQUIRE(sel.code == 0);
    const auto eval_args = cat(cat({"evaluate"}, common(dir)), {"--selection", (dir / "sel" / "selection.json").string(),
                                                                 "--draws", "5", "--seed", "4"});
    REQUIRE(run(cat(eval_args, {"--out", (dir / "e1").string()})).code == 0);
    REQUIRE(run(cat(eval_args, {"--out", (dir / "e2").string()})).code == 0);
    const auto rep = EvalReport::from_json(read_json((dir / "e1" / "report.json").string()));
    CHECK(rep.test_mse <= 1e-10);
    CHECK(rep.baseline_draws == 5);
    CHECK(rep.method == "linear");
    // a, b, d and e are all exactly determined by the rest; c is not
    REQUIRE(rep.selected_ids.size() == 1);
    CHECK(rep.selected_ids[0] != "c");
    CHECK(slurp(dir / "e1" / "report.json") == slurp(dir / "e2" / "report.json"));
    CHECK(slurp(dir / "e1" / "summary.csv").rfind("method,H=0\n", 0) == 0);

    const auto other = temp_dir("cli_eval_other");
    write_panel(other, random_normal(4, 600, 121), {"a", "b", "c", "d"});
    const auto bad = run(cat(cat({"evaluate"}, common(other)),
                             {"--selection", (dir / "sel" / "selection.json").string(), "--out", (other / "e").string()}));
    CHECK(bad.code == 3);
    CHECK(nlohmann::json::parse(bad.err)["error"] == "computation");
}

TEST_CASE("cli synth writes a selectable panel") {
    const auto dir = temp_dir("cli_synth");
    REQUIRE(run({"synth", "--model", "var1", "--n", "8", "--T", "300", "--seed", "2", "--out", dir.string()}).code ==
            0);
    const auto panel = read_panel_csv((dir / "panel.csv").string());
    CHECK(panel.n() == 8);
    CHECK(panel.t_total() == 300);
    const auto coords = read_coords_csv((dir / "coords.csv").string());
    CHECK(coords.ids == panel.sensor_ids);
    const auto r = run(cat(cat({"select"}, common(dir)), {"--method", "kernel", "--kernel", "spatial-temporal", "--H",
                                                           "1", "--k0", "4", "--k1", "2", "--out",
                                                           (dir / "sel").string()}));
    CHECK(r.code == 0);
    CHECK(run({"synth", "--model", "var1", "--n", "8", "--coupling", "3", "--out", dir.string()}).code == 2);
}
