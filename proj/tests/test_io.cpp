#include <doctest.h>

#include <fstream>

#include "netselect/errors.hpp"
#include "netselect/io.hpp"
#include "test_support.hpp"

using namespace netselect;
using namespace testsupport;

namespace {

std::string write_file(const std::filesystem::path& dir, const std::string& name, const std::string& text) {
    const auto p = dir / name;
    std::ofstream(p, std::ios::binary) << text;
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("ISO-8601 timestamps") {
    CHECK(parse_iso8601("1970-01-01T00:00:00Z") == 0);
    CHECK(parse_iso8601("2016-01-01T00:00:00Z") == 1451606400);
    CHECK(parse_iso8601("2016-01-01 01:00:00") == 1451610000);
    CHECK(parse_iso8601("2016-01-01T02:00") == 1451613600);
    CHECK(parse_iso8601("2016-01-01T02:00:00+02:00") == 1451606400);
    CHECK(parse_iso8601("2016-02-29T00:00:00Z") - parse_iso8601("2016-02-28T00:00:00Z") == 86400);
    CHECK(format_iso8601(1451606400) == "2016-01-01T00:00:00Z");
    CHECK(format_iso8601(-1) == "1969-12-31T23:59:59Z");
    for (std::int64_t t : {0LL, 951782400LL, 1467331199LL, 4102444800LL}) {
        CHECK(parse_iso8601(format_iso8601(t)) == t);
    }
    CHECK_THROWS_AS(parse_iso8601("2016-13-01T00:00:00Z"), InputError);
    CHECK_THROWS_AS(parse_iso8601("2015-02-29T00:00:00Z"), InputError);
    CHECK_THROWS_AS(parse_iso8601("yesterday"), InputError);
    CHECK_THROWS_AS(parse_iso8601("2016-01-01T00:00:00Q"), InputError);
}

TEST_CASE("CSV line splitting and number formatting") {
    CHECK(split_csv_line("a, b ,c") == std::vector<std::string>{"a", "b", "c"});
    CHECK(split_csv_line("a,,") == std::vector<std::string>{"a", "", ""});
    CHECK(split_csv_line("x\r") == std::vector<std::string>{"x"});
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345.0}) {
        CHECK(std::stod(format_double(v)) == v);
    }
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("raw records") {
    const auto dir = temp_dir("io_raw");
    const auto ok = write_file(dir, "raw.csv",
                               "station,moment,bikes,spaces\n"
                               "a,2016-01-01T00:00:00Z,3,7\n"
                               "\n"
                               "b,1451606400,1.5,2\n");
    const auto recs = read_raw_csv(ok);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].station == "a");
    CHECK(recs[0].moment == 1451606400);
    CHECK(recs[1].moment == 1451606400);
    CHECK(recs[1].bikes == 1.5);
    CHECK(recs[1].spaces == 2.0);

    const auto bad = write_file(dir, "bad.csv", "station,moment,bikes,spaces\na,0,x,1\n");
    try {
        read_raw_csv(bad);
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("bad.csv:2") != std::string::npos);
    }
    CHECK_THROWS_AS(read_raw_csv(write_file(dir, "empty.csv", "")), InputError);
    CHECK_THROWS_AS(read_raw_csv(write_file(dir, "hdr.csv", "station,moment,bikes,spaces\n")), InputError);
    CHECK_THROWS_AS(read_raw_csv(write_file(dir, "wrong.csv", "id,t,b,s\n")), InputError);
    CHECK_THROWS_AS(read_raw_csv((dir / "missing.csv").string()), InputError);
}

TEST_CASE("panel round trip") {
    const auto dir = temp_dir("io_panel");
    PanelSeries p;
    p.sensor_ids = {"x", "y", "z"};
    p.timestamps = {1451606400, 1451610000};
    p.values = random_normal(3, 2, 30);
    const auto path = (dir / "panel.csv").string();
    write_panel_csv(path, p);
    const auto back = read_panel_csv(path);
    CHECK(back.sensor_ids == p.sensor_ids);
    CHECK(back.timestamps == p.timestamps);
    CHECK(back.values == p.values);
    write_panel_csv((dir / "again.csv").string(), back);
    CHECK(slurp(path) == slurp((dir / "again.csv").string()));

    const auto ragged = write_file(dir, "ragged.csv", "timestamp,a,b\n2016-01-01T00:00:00Z,1\n");
    try {
        read_panel_csv(ragged);
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("ragged.csv:2") != std::string::npos);
    }
    const auto nan = write_file(dir, "nan.csv", "timestamp,a\n2016-01-01T00:00:00Z,nan\n");
    CHECK_THROWS_AS(read_panel_csv(nan), InputError);
    const auto gap = write_file(dir, "gap.csv",
                                "timestamp,a\n2016-01-01T00:00:00Z,1\n2016-01-01T05:00:00Z,2\n");
    CHECK_THROWS_AS(read_panel_csv(gap), InputError);
}

TEST_CASE("coordinates") {
    const auto dir = temp_dir("io_coords");
    CoordTable t{{"a", "b"}, {{41.1, 2.1}, {41.2, 2.2}}};
    const auto path = (dir / "c.csv").string();
    write_coords_csv(path, t);
    const auto back = read_coords_csv(path);
    CHECK(back.ids == t.ids);
    CHECK(back.coords[1].lat == 41.2);
    CHECK(back.coords[1].lon == 2.2);
    const auto aligned = align_coords(back, {"b", "a"});
    CHECK(aligned[0].lat == 41.2);
    CHECK_THROWS_AS(align_coords(back, {"c"}), InputError);
    CHECK_THROWS_AS(align_coords(CoordTable{{"a", "a"}, {{0, 0}, {1, 1}}}, {"a"}), InputError);
    CHECK_THROWS_AS(read_coords_csv(write_file(dir, "bad.csv", "sensor_id,lat,lon\na,1\n")), InputError);
}

TEST_CASE("selection JSON and GeoJSON") {
    SelectionResult s;
    s.method = "linear-h";
    s.order = {2, 0};
    s.step_values = {1.5, 0.25};
    s.hyperparams = {{"H", 3}};
    s.warnings = {"note"};
    const auto j = selection_to_json(s, {"a", "b", "c"});
    CHECK(j["order_ids"] == nlohmann::json({"c", "a"}));
    const auto back = selection_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.method == s.method);
    CHECK(back.order == s.order);
    CHECK(back.step_values == s.step_values);
    CHECK(back.hyperparams == s.hyperparams);
    CHECK(back.warnings == s.warnings);
    CHECK_THROWS_AS(selection_to_json(s, {"a"}), InputError);
    CHECK_THROWS_AS(selection_from_json(nlohmann::json{{"order", {1}}}), InputError);

    const auto g = selection_geojson({"a", "b", "c"}, {{1, 2}, {3, 4}, {5, 6}}, s.order);
    CHECK(g["type"] == "FeatureCollection");
    REQUIRE(g["features"].size() == 3);
    CHECK(g["features"][0]["geometry"]["coordinates"] == nlohmann::json({2.0, 1.0}));
    CHECK(g["features"][0]["properties"]["rank"] == 2);
    CHECK(g["features"][1]["properties"]["selected"] == false);
    CHECK(g["features"][1]["properties"]["rank"].is_null());
    CHECK(g["features"][2]["properties"]["rank"] == 1);
}

TEST_CASE("scores CSV") {
    const auto dir = temp_dir("io_scores");
    SensorScores sc;
    sc.score = {0.5, 0.9, 0.1};
    sc.ranking = {1, 0, 2};
    const auto path = (dir / "scores.csv").string();
    write_scores_csv(path, sc, {"a", "b", "c"});
    CHECK(slurp(path) == "sensor_id,score,rank\na,0.5,2\nb,0.9,1\nc,0.1,3\n");
    CHECK_THROWS_AS(write_scores_csv(path, sc, {"a"}), InputError);
}

TEST_CASE("JSON files") {
    const auto dir = temp_dir("io_json");
    const auto path = (dir / "x.json").string();
    write_json(path, {{"k", 1}});
    CHECK(read_json(path)["k"] == 1);
    CHECK_THROWS_AS(read_json(write_file(dir, "bad.json", "{")), InputError);
}
