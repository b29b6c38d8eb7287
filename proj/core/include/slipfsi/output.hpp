#pragma once

#include "slipfsi/drivers.hpp"
#include "slipfsi/galerkin.hpp"

#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace slipfsi {

inline constexpr const char* kTrajectorySchema = "# slipfsi trajectory v1";
inline constexpr const char* kLedgerSchema = "# slipfsi ledger v1";
inline constexpr const char* kDensitySchema = "# slipfsi density-grid v1";
inline constexpr const char* kReportSchema = "# slipfsi report v1";

/// Shortest round-trip decimal form; "nan" for NaN.
std::string format_double(double x);

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows);
void write_ledger_csv(std::ostream& out, const EnergyLedger& ledger);
void write_density_grid(std::ostream& out, const DensityGrid& grid);

struct ReportLine {
  std::string name;
  double value = 0.0;
  std::string relation = "<=";  // value relation bound
  double bound = 0.0;
  bool pass = true;
  std::string note;
  bool diagnostic = false;  // reported, never gates the status
};

struct Report {
  std::string title;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<ReportLine> lines;
  bool all_pass() const;
};

void write_report(std::ostream& out, const Report& r);

/// Writes to a file, creating parent directories; throws Error(Io, ...).
void write_file(const std::string& path, const std::function<void(std::ostream&)>& body);

}  // namespace slipfsi
