#include "contactflow/snapshot_io.hpp"

#include <boost/crc.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

#include "contactflow/errors.hpp"

namespace contactflow {

namespace {

void header(std::ostream& out, double t, const char* mode, const char* columns) {
  out << "# t=" << format_double(t) << " mode=" << mode << '\n' << columns << '\n';
}

std::vector<std::vector<double>> read_rows(std::istream& in, std::size_t columns) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ConfigError("snapshot: bad number '" + cell + "'");
      }
    }
    if (row.size() != columns) throw ConfigError("snapshot: expected " + std::to_string(columns) + " columns");
    if (static_cast<std::size_t>(row[0]) != rows.size()) throw ConfigError("snapshot: node_index out of order");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_snapshot(std::ostream& out, const RadialGaugeState& s) {
  header(out, s.t, "radial_gauge", "node_index,r,phi,u");
  for (int k = 0; k <= s.M(); ++k)
    out << k << ',' << format_double(s.r[k]) << ',' << format_double(s.phi[k]) << ',' << format_double(s.u[k]) << '\n';
}

void write_snapshot(std::ostream& out, const RadialGraphState& s) {
  header(out, s.t, "radial_graph", "node_index,r,w");
  for (int k = 0; k <= s.M(); ++k) out << k << ',' << format_double(s.r(k)) << ',' << format_double(s.w[k]) << '\n';
}

void write_snapshot(std::ostream& out, const GaugeField2D& f) {
  header(out, f.t, "gauge2d", "node_index,rho,sigma,phi1,phi2,u");
  const DiskMesh& m = f.mesh;
  for (int p = 0; p <= m.P(); ++p)
    for (int q = 0; q < (p == 0 ? 1 : m.Q()); ++q) {
      const auto& F = f.at(p, q);
      out << m.index(p, q) << ',' << format_double(m.rho(p)) << ',' << format_double(p == 0 ? 0.0 : m.sigma(q))
          << ',' << format_double(F(0)) << ',' << format_double(F(1)) << ',' << format_double(F(2)) << '\n';
    }
}

Snapshot read_snapshot(std::istream& in) {
  std::string first, columns;
  if (!std::getline(in, first) || !std::getline(in, columns)) throw ConfigError("snapshot: missing header");
  double t = 0.0;
  char mode[32] = {0};
  if (std::sscanf(first.c_str(), "# t=%lf mode=%31s", &t, mode) != 2) throw ConfigError("snapshot: bad header");
  const std::string m = mode;
  if (m == "radial_gauge") {
    const auto rows = read_rows(in, 4);
    if (rows.size() < 5) throw ConfigError("snapshot: too few nodes");
    RadialGaugeState s;
    s.t = t;
    for (const auto& r : rows) {
      s.r.push_back(r[1]);
      s.phi.push_back(r[2]);
      s.u.push_back(r[3]);
    }
    s.kase = s.r.front() == 0.0 ? RadialCase::lens : RadialCase::exterior;
    s.outer_phi = s.phi.back();
    s.outer_u = s.u.back();
    return s;
  }
  if (m == "radial_graph") {
    const auto rows = read_rows(in, 3);
    if (rows.size() < 5) throw ConfigError("snapshot: too few nodes");
    RadialGraphState s;
    s.t = t;
    s.R = rows.back()[1];
    const int M = static_cast<int>(rows.size()) - 1;
    for (int k = 0; k <= M; ++k) {
      s.xi.push_back(static_cast<double>(k) / M);
      s.w.push_back(rows[k][2]);
    }
    return s;
  }
  if (m == "gauge2d") {
    const auto rows = read_rows(in, 6);
    // first ring sits at rho = 1/P
    const double rho1 = rows.size() > 1 ? rows[1][1] : 0.0;
    if (!(rho1 > 0.0)) throw ConfigError("snapshot: bad gauge2d mesh");
    const int P = static_cast<int>(std::lround(1.0 / rho1));
    const int n = static_cast<int>(rows.size()) - 1;
    if (P <= 0 || n % P != 0) throw ConfigError("snapshot: bad gauge2d mesh");
    GaugeField2D f;
    f.mesh = DiskMesh(P, n / P);
    f.t = t;
    for (const auto& r : rows) f.F.emplace_back(r[3], r[4], r[5]);
    return f;
  }
  throw ConfigError("snapshot: unknown mode '" + m + "'");
}

Snapshot load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return read_snapshot(in);
}

void save_snapshot(const std::filesystem::path& path, const Snapshot& s) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  std::visit([&](const auto& x) { write_snapshot(out, x); }, s);
}

double snapshot_time(const Snapshot& s) {
  return std::visit([](const auto& x) { return x.t; }, s);
}

const char* snapshot_mode(const Snapshot& s) {
  switch (s.index()) {
    case 0: return "radial_gauge";
    case 1: return "radial_graph";
    default: return "gauge2d";
  }
}

std::uint32_t file_crc32(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  boost::crc_32_type crc;
  crc.process_bytes(data.data(), data.size());
  return crc.checksum();
}

}  // namespace contactflow
