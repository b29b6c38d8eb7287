#include "slipfsi/output.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace slipfsi {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

namespace {

void row(std::ostream& out, std::initializer_list<double> xs) {
  bool first = true;
  for (double x : xs) {
    if (!first) out << ',';
    out << format_double(x);
    first = false;
  }
  out << '\n';
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows) {
  out << kTrajectorySchema << '\n';
  out << "t,h_x,h_y,h_z,q_w,q_x,q_y,q_z,ell_x,ell_y,ell_z,r_x,r_y,r_z\n";
  for (const auto& r : rows)
    row(out, {r.t, r.h.x(), r.h.y(), r.h.z(), r.q[0], r.q[1], r.q[2], r.q[3], r.ell.x(), r.ell.y(),
              r.ell.z(), r.r.x(), r.r.y(), r.r.z()});
}

void write_ledger_csv(std::ostream& out, const EnergyLedger& ledger) {
  out << kLedgerSchema << '\n';
  out << "t,E_fluid,E_body,D_visc,D_slip,W_budget,slack\n";
  for (const auto& r : ledger.rows) row(out, {r.t, r.E_fluid, r.E_body, r.D_visc, r.D_slip, r.W_budget, r.slack});
}

void write_density_grid(std::ostream& out, const DensityGrid& g) {
  out << kDensitySchema << '\n';
  out << "# n=" << g.n << " origin=" << format_double(g.origin.x()) << ',' << format_double(g.origin.y())
      << ',' << format_double(g.origin.z()) << " h=" << format_double(g.h) << " t=" << format_double(g.t)
      << '\n';
  out << "i,j,k,x,y,z,rho\n";
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      for (int k = 0; k < g.n; ++k) {
        const Vec3 y = g.origin + g.h * Vec3(i, j, k);
        out << i << ',' << j << ',' << k << ',';
        row(out, {y.x(), y.y(), y.z(), g.values[(static_cast<Eigen::Index>(i) * g.n + j) * g.n + k]});
      }
}

bool Report::all_pass() const {
  for (const auto& l : lines)
    if (!l.diagnostic && !l.pass) return false;
  return true;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

}  // namespace

void write_report(std::ostream& out, const Report& r) {
  out << kReportSchema << '\n';
  out << "title: " << r.title << '\n';
  for (const auto& [k, v] : r.meta) out << k << ": " << v << '\n';
  out << "status: " << (r.all_pass() ? "PASS" : "FAIL") << '\n';
  out << "check,value,relation,bound,result,note\n";
  for (const auto& l : r.lines)
    out << csv_field(l.name) << ',' << format_double(l.value) << ',' << l.relation << ',' << format_double(l.bound) << ','
        << (l.diagnostic ? "INFO" : l.pass ? "PASS" : "FAIL") << ',' << csv_field(l.note) << '\n';
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create directory " + p.parent_path().string());
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
  body(f);
  if (!f) throw Error(ErrorKind::Io, "write failed for " + path);
}

}  // namespace slipfsi
