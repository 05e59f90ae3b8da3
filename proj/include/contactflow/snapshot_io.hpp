#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>

#include "contactflow/gauge2d.hpp"
#include "contactflow/radial.hpp"

namespace contactflow {

// %.17g
std::string format_double(double x);

// One CSV per snapshot: `# t=<t> mode=<mode>`, a column header row, one row per node.
//   radial_gauge: node_index,r,phi,u
//   radial_graph: node_index,r,w      (r = xi R)
//   gauge2d:      node_index,rho,sigma,phi1,phi2,u
void write_snapshot(std::ostream& out, const RadialGaugeState& s);
void write_snapshot(std::ostream& out, const RadialGraphState& s);
void write_snapshot(std::ostream& out, const GaugeField2D& f);

using Snapshot = std::variant<RadialGaugeState, RadialGraphState, GaugeField2D>;

// Throws ConfigError on malformed input.
Snapshot read_snapshot(std::istream& in);
Snapshot load_snapshot(const std::filesystem::path& path);
void save_snapshot(const std::filesystem::path& path, const Snapshot& s);

double snapshot_time(const Snapshot& s);
const char* snapshot_mode(const Snapshot& s);

std::uint32_t file_crc32(const std::filesystem::path& path);

}  // namespace contactflow
