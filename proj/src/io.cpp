#include "netselect/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace netselect {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string where(const std::string& path, std::size_t line) {
    return path + ":" + std::to_string(line) + ": ";
}

double parse_double(const std::string& s, const std::string& ctx) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, v);
    if (s.empty() || r.ec != std::errc() || r.ptr != end || !std::isfinite(v)) {
        throw InputError(ctx + "expected a finite number, got '" + s + "'");
    }
    return v;
}

bool parse_int64(const std::string& s, std::int64_t& out) {
    const auto* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, out);
    return !s.empty() && r.ec == std::errc() && r.ptr == end;
}

int digits(const std::string& s, std::size_t pos, std::size_t count) {
    if (pos + count > s.size()) {
        throw InputError("bad ISO-8601 timestamp '" + s + "'");
    }
    int v = 0;
    for (std::size_t i = pos; i < pos + count; ++i) {
        if (s[i] < '0' || s[i] > '9') {
            throw InputError("bad ISO-8601 timestamp '" + s + "'");
        }
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream is(path);
    if (!is) {
        throw InputError("cannot open " + path);
    }
    return is;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw InputError("cannot write " + path);
    }
    return os;
}

}  // namespace

std::int64_t parse_iso8601(const std::string& raw) {
    const std::string s = trim(raw);
    const auto bad = [&] { return InputError("bad ISO-8601 timestamp '" + raw + "'"); };
    if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':') {
        throw bad();
    }
    const int y = digits(s, 0, 4);
    const int mo = digits(s, 5, 2);
    const int d = digits(s, 8, 2);
    const int hh = digits(s, 11, 2);
    const int mm = digits(s, 14, 2);
    int ss = 0;
    std::size_t pos = 16;
    if (pos < s.size() && s[pos] == ':') {
        ss = digits(s, pos + 1, 2);
        pos += 3;
    }
    std::int64_t offset = 0;
    if (pos < s.size()) {
        if (s[pos] == 'Z' && pos + 1 == s.size()) {
            pos += 1;
        } else if ((s[pos] == '+' || s[pos] == '-') && pos + 6 == s.size() && s[pos + 3] == ':') {
            const int sign = s[pos] == '+' ? 1 : -1;
            offset = sign * (digits(s, pos + 1, 2) * 3600 + digits(s, pos + 4, 2) * 60);
            pos += 6;
        } else {
            throw bad();
        }
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) {
        throw bad();
    }
    const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
    return static_cast<std::int64_t>(days) * 86400 + hh * 3600 + mm * 60 + ss - offset;
}

std::string format_iso8601(std::int64_t t) {
    std::int64_t days = t / 86400;
    std::int64_t rem = t % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 3600),
                  static_cast<int>(rem % 3600 / 60), static_cast<int>(rem % 60));
    return buf;
}

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

std::vector<RawRecord> read_raw_csv(const std::string& path) {
    auto is = open_in(path);
    std::string line;
    std::size_t lineno = 0;
    std::vector<RawRecord> out;
    bool header = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        const auto f = split_csv_line(line);
        if (!header) {
            if (f != std::vector<std::string>{"station", "moment", "bikes", "spaces"}) {
                throw InputError(where(path, lineno) + "expected header station,moment,bikes,spaces");
            }
            header = true;
            continue;
        }
        if (f.size() != 4 || f[0].empty()) {
            throw InputError(where(path, lineno) + "expected 4 fields");
        }
        RawRecord r;
        r.station = f[0];
        if (!parse_int64(f[1], r.moment)) {
            try {
                r.moment = parse_iso8601(f[1]);
            } catch (const InputError& e) {
                throw InputError(where(path, lineno) + e.what());
            }
        }
        r.bikes = parse_double(f[2], where(path, lineno));
        r.spaces = parse_double(f[3], where(path, lineno));
        out.push_back(std::move(r));
    }
    if (!header) {
        throw InputError(path + ": empty file");
    }
    if (out.empty()) {
        throw InputError(path + ": no records");
    }
    return out;
}

PanelSeries read_panel_csv(const std::string& path) {
    auto is = open_in(path);
    std::string line;
    std::size_t lineno = 0;
    PanelSeries p;
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        const auto f = split_csv_line(line);
        if (p.sensor_ids.empty()) {
            if (f.size() < 2 || f[0] != "timestamp") {
                throw InputError(where(path, lineno) + "expected header timestamp,<sensor ids>");
            }
            p.sensor_ids.assign(f.begin() + 1, f.end());
            continue;
        }
        if (f.size() != p.sensor_ids.size() + 1) {
            throw InputError(where(path, lineno) + "expected " + std::to_string(p.sensor_ids.size() + 1) + " fields");
        }
        try {
            p.timestamps.push_back(parse_iso8601(f[0]));
        } catch (const InputError& e) {
            throw InputError(where(path, lineno) + e.what());
        }
        std::vector<double> row;
        for (std::size_t i = 1; i < f.size(); ++i) {
            row.push_back(parse_double(f[i], where(path, lineno)));
        }
        rows.push_back(std::move(row));
    }
    if (p.sensor_ids.empty()) {
        throw InputError(path + ": empty file");
    }
    p.values.resize(static_cast<Index>(p.sensor_ids.size()), static_cast<Index>(rows.size()));
    for (std::size_t t = 0; t < rows.size(); ++t) {
        for (std::size_t i = 0; i < rows[t].size(); ++i) {
            p.values(static_cast<Index>(i), static_cast<Index>(t)) = rows[t][i];
        }
    }
    try {
        p.validate();
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    }
    return p;
}

void write_panel_csv(const std::string& path, const PanelSeries& panel) {
    panel.validate();
    auto os = open_out(path);
    os << "timestamp";
    for (const auto& id : panel.sensor_ids) {
        os << ',' << id;
    }
    os << '\n';
    for (Index t = 0; t < panel.t_total(); ++t) {
        os << format_iso8601(panel.timestamps[static_cast<std::size_t>(t)]);
        for (Index i = 0; i < panel.n(); ++i) {
            os << ',' << format_double(panel.values(i, t));
        }
        os << '\n';
    }
}

CoordTable read_coords_csv(const std::string& path) {
    auto is = open_in(path);
    std::string line;
    std::size_t lineno = 0;
    CoordTable tab;
    bool header = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        const auto f = split_csv_line(line);
        if (!header) {
            if (f != std::vector<std::string>{"sensor_id", "lat", "lon"}) {
                throw InputError(where(path, lineno) + "expected header sensor_id,lat,lon");
            }
            header = true;
            continue;
        }
        if (f.size() != 3 || f[0].empty()) {
            throw InputError(where(path, lineno) + "expected 3 fields");
        }
        tab.ids.push_back(f[0]);
        tab.coords.push_back({parse_double(f[1], where(path, lineno)), parse_double(f[2], where(path, lineno))});
    }
    if (tab.ids.empty()) {
        throw InputError(path + ": no coordinates");
    }
    return tab;
}

void write_coords_csv(const std::string& path, const CoordTable& table) {
    auto os = open_out(path);
    os << "sensor_id,lat,lon\n";
    for (std::size_t i = 0; i < table.ids.size(); ++i) {
        os << table.ids[i] << ',' << format_double(table.coords[i].lat) << ',' << format_double(table.coords[i].lon)
           << '\n';
    }
}

std::vector<Coord> align_coords(const CoordTable& table, const std::vector<std::string>& ids) {
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < table.ids.size(); ++i) {
        if (!pos.emplace(table.ids[i], i).second) {
            throw InputError("coordinates: duplicate sensor id '" + table.ids[i] + "'");
        }
    }
    std::vector<Coord> out;
    for (const auto& id : ids) {
        const auto it = pos.find(id);
        if (it == pos.end()) {
            throw InputError("coordinates: no entry for sensor '" + id + "'");
        }
        out.push_back(table.coords[it->second]);
    }
    return out;
}

nlohmann::json selection_to_json(const SelectionResult& sel, const std::vector<std::string>& ids) {
    nlohmann::json j;
    j["method"] = sel.method;
    j["hyperparams"] = sel.hyperparams;
    j["order"] = sel.order;
    nlohmann::json names = nlohmann::json::array();
    for (Index i : sel.order) {
        if (i < 0 || static_cast<std::size_t>(i) >= ids.size()) {
            throw InputError("selection_to_json: sensor index out of range");
        }
        names.push_back(ids[static_cast<std::size_t>(i)]);
    }
    j["order_ids"] = names;
    j["step_values"] = sel.step_values;
    j["warnings"] = sel.warnings;
    return j;
}

SelectionResult selection_from_json(const nlohmann::json& j) {
    SelectionResult s;
    try {
        s.method = j.at("method").get<std::string>();
        s.hyperparams = j.value("hyperparams", nlohmann::json::object());
        s.order = j.at("order").get<std::vector<Index>>();
        s.step_values = j.value("step_values", std::vector<double>{});
        s.warnings = j.value("warnings", std::vector<std::string>{});
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("selection json: ") + e.what());
    }
    s.validate();
    return s;
}

nlohmann::json selection_geojson(const std::vector<std::string>& ids, const std::vector<Coord>& coords,
                                 const std::vector<Index>& order) {
    if (ids.size() != coords.size()) {
        throw InputError("selection_geojson: ids and coordinates differ in length");
    }
    std::vector<int> rank(ids.size(), 0);
    for (std::size_t r = 0; r < order.size(); ++r) {
        rank.at(static_cast<std::size_t>(order[r])) = static_cast<int>(r) + 1;
    }
    nlohmann::json features = nlohmann::json::array();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        nlohmann::json props = {{"sensor_id", ids[i]}, {"selected", rank[i] > 0}};
        props["rank"] = rank[i] > 0 ? nlohmann::json(rank[i]) : nlohmann::json(nullptr);
        features.push_back({{"type", "Feature"},
                            {"geometry", {{"type", "Point"}, {"coordinates", {coords[i].lon, coords[i].lat}}}},
                            {"properties", props}});
    }
    return {{"type", "FeatureCollection"}, {"features", features}};
}

void write_scores_csv(const std::string& path, const SensorScores& scores, const std::vector<std::string>& ids) {
    if (ids.size() != scores.score.size()) {
        throw InputError("write_scores_csv: ids and scores differ in length");
    }
    std::vector<std::size_t> rank(ids.size());
    for (std::size_t r = 0; r < scores.ranking.size(); ++r) {
        rank[static_cast<std::size_t>(scores.ranking[r])] = r + 1;
    }
    auto os = open_out(path);
    os << "sensor_id,score,rank\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        os << ids[i] << ',' << format_double(scores.score[i]) << ',' << rank[i] << '\n';
    }
}

nlohmann::json read_json(const std::string& path) {
    auto is = open_in(path);
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
}

void write_json(const std::string& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

void write_text(const std::string& path, const std::string& text) {
    auto os = open_out(path);
    os << text;
    if (!os) {
        throw InputError("write failed for " + path);
    }
}

}  // namespace netselect
