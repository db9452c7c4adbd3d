#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "quantshape/fir_design.hpp"
#include "quantshape/iir_design.hpp"
#include "quantshape/quantsim.hpp"
#include "quantshape/statespace.hpp"

namespace quantshape {

using nlohmann::json;

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

json       to_json(const StateSpace& s);
StateSpace statespace_from_json(const json& j);

json to_json(const SolveStatus& s);
json to_json(const DesignReport& r);
json to_json(const IirDesignReport& r);
json to_json(const LmiVariables& v);
json to_json(const TradeoffCurve& c);

// CSV files. Writers emit a header row; readers require it.
void                       write_taps_csv(const std::filesystem::path& path, const std::vector<double>& taps);
std::vector<double>        read_taps_csv(const std::filesystem::path& path);
void                       write_trace_csv(const std::filesystem::path& path, const SimTrace& trace);
SimTrace                   read_trace_csv(const std::filesystem::path& path);
void                       write_curve_csv(const std::filesystem::path& path, const std::vector<TradeoffPoint>& points);
std::vector<TradeoffPoint> read_curve_csv(const std::filesystem::path& path);
void                       write_bits_csv(const std::filesystem::path& path, const std::vector<BitBound>& bounds);
std::vector<BitBound>      read_bits_csv(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace quantshape
