#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "netselect/gcn.hpp"
#include "netselect/graph.hpp"
#include "netselect/select_linear.hpp"
#include "netselect/timeseries.hpp"

namespace netselect {

// "YYYY-MM-DDTHH:MM:SSZ" (also accepts a space separator, no suffix, or a
// +HH:MM offset) <-> Unix seconds.
std::int64_t parse_iso8601(const std::string& s);
std::string format_iso8601(std::int64_t unix_seconds);

// Splits one CSV line on commas; fields are trimmed, quotes are not supported.
std::vector<std::string> split_csv_line(const std::string& line);

// station,moment,bikes,spaces with moment as ISO-8601 or integer Unix seconds.
std::vector<RawRecord> read_raw_csv(const std::string& path);

// timestamp,<id_1>,...,<id_n>; one row per hour.
PanelSeries read_panel_csv(const std::string& path);
void write_panel_csv(const std::string& path, const PanelSeries& panel);

// sensor_id,lat,lon
struct CoordTable {
    std::vector<std::string> ids;
    std::vector<Coord> coords;
};
CoordTable read_coords_csv(const std::string& path);
void write_coords_csv(const std::string& path, const CoordTable& table);

// Coordinates reordered to match `ids`; throws if any id is missing.
std::vector<Coord> align_coords(const CoordTable& table, const std::vector<std::string>& ids);

nlohmann::json selection_to_json(const SelectionResult& sel, const std::vector<std::string>& ids);
SelectionResult selection_from_json(const nlohmann::json& j);

nlohmann::json selection_geojson(const std::vector<std::string>& ids, const std::vector<Coord>& coords,
                                 const std::vector<Index>& order);

// sensor_id,score,rank with rank 1 for the top-ranked sensor.
void write_scores_csv(const std::string& path, const SensorScores& scores, const std::vector<std::string>& ids);

nlohmann::json read_json(const std::string& path);
void write_json(const std::string& path, const nlohmann::json& j);
void write_text(const std::string& path, const std::string& text);

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace netselect
