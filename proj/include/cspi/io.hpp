#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cspi/forward.hpp"
#include "cspi/reconstruction.hpp"
#include "cspi/spectral.hpp"

namespace cspi::io {

/// Grid block of a spec file: {"span": half-width, "count": points}, centred by the caller.
struct GridSpec {
  double span = 0.0;
  std::size_t count = 0;

  FrequencyGrid at(double center) const { return FrequencyGrid::from_span(center, span, count); }
};

struct StateFile {
  GaussianPdcSpec state;
  std::optional<GridSpec> grid;  // arm grids centred on pump_detuning / 2
};

struct ReferenceFile {
  ReferencePulseSpec reference;
};

struct SignalFile {
  SignalPulseSpec signal;
  std::optional<GridSpec> grid;  // centred on center_detuning
};

/// Parsers for the JSON spec documents. Errors are ErrorKind::parse and name the offending field.
StateFile parse_state_spec(std::string_view json);
ReferenceFile parse_reference_spec(std::string_view json);
SignalFile parse_signal_spec(std::string_view json);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

/// Count tables as CSV: `omega,value` or `omega1,omega2,value`, row-major in omega1. Rates always
/// carry a decimal point or exponent; sampled counts are plain integers.
std::string table_csv(const CountDistribution &table);
/// Reads a table written by table_csv. The kind follows from the values: all plain integers
/// means sampled counts. The grid is recovered from the frequency columns.
CountDistribution parse_table_csv(std::string_view csv);

/// Two-column CSV with the given header, e.g. `nu,value`.
std::string columns_csv(const std::vector<std::string> &header, const std::vector<std::vector<double>> &columns);

std::string report_json(const ReconstructionReport &report);
std::string report_json(const SingleReport &report);

std::string read_file(const std::filesystem::path &path);
/// Writes to a temporary file in the target directory, then renames it into place.
void write_file_atomic(const std::filesystem::path &path, std::string_view content);

} // namespace cspi::io
