#include "cspi/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cspi/error.hpp"

namespace cspi::io {

namespace {

using json = nlohmann::json;
using ordered = nlohmann::ordered_json;

json parse_document(std::string_view text, const std::string &what) {
  try {
    json doc = json::parse(text);
    require(doc.is_object(), ErrorKind::parse, what + ": expected a JSON object");
    return doc;
  } catch (const json::parse_error &e) {
    fail(ErrorKind::parse, what + ": " + e.what());
  }
}

// Reads the named fields and rejects anything else, so a misspelt key is reported rather than ignored.
class Fields {
public:
  Fields(const json &doc, std::string what, std::set<std::string> allowed) : doc_(doc), what_(std::move(what)) {
    for (const auto &[key, value] : doc.items()) {
      require(allowed.contains(key), ErrorKind::parse, what_ + ": unknown field '" + key + "'");
    }
  }

  std::optional<double> number(const std::string &key) const {
    if (!doc_.contains(key)) return std::nullopt;
    const auto &v = doc_.at(key);
    require(v.is_number(), ErrorKind::parse, what_ + ": field '" + key + "' must be a number");
    const double x = v.get<double>();
    require(std::isfinite(x), ErrorKind::parse, what_ + ": field '" + key + "' must be finite");
    return x;
  }

  double number(const std::string &key, double fallback) const { return number(key).value_or(fallback); }

  double required(const std::string &key) const {
    const auto x = number(key);
    require(x.has_value(), ErrorKind::parse, what_ + ": missing field '" + key + "'");
    return *x;
  }

  std::optional<GridSpec> grid(const std::string &key) const {
    if (!doc_.contains(key)) return std::nullopt;
    const auto &g = doc_.at(key);
    const std::string where = what_ + ": field '" + key + "'";
    require(g.is_object(), ErrorKind::parse, where + " must be an object");
    const Fields f(g, where, {"span", "count"});
    GridSpec spec;
    spec.span = f.required("span");
    require(spec.span > 0.0, ErrorKind::parse, where + ".span must be positive");
    require(g.contains("count") && g.at("count").is_number_integer() && g.at("count").get<long long>() >= 2,
            ErrorKind::parse, where + ".count must be an integer of at least 2");
    spec.count = static_cast<std::size_t>(g.at("count").get<long long>());
    return spec;
  }

private:
  const json &doc_;
  std::string what_;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(std::string_view token, std::size_t line) {
  double x = 0.0;
  const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), x);
  require(ec == std::errc() && end == token.data() + token.size(), ErrorKind::parse,
          "line " + std::to_string(line) + ": '" + std::string(token) + "' is not a number");
  return x;
}

bool plain_integer(std::string_view token) {
  if (token.empty()) return false;
  for (char c : token) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

// Uniform grid through the given points, which must match it to rounding.
FrequencyGrid grid_through(const std::vector<double> &points, const std::string &column) {
  require(points.size() >= 2, ErrorKind::parse, "column '" + column + "' needs at least 2 distinct frequencies");
  const double front = points.front(), back = points.back();
  const auto n = points.size();
  require(back > front, ErrorKind::parse, "column '" + column + "' must increase");
  const FrequencyGrid g(0.5 * (front + back), (back - front) / static_cast<double>(n - 1), n);
  for (std::size_t k = 0; k < n; ++k) {
    require(std::abs(points[k] - g.point(k)) <= 1e-9 * g.spacing(), ErrorKind::parse,
            "column '" + column + "' is not a uniform grid");
  }
  return g;
}

ordered ranges_json(const std::vector<std::pair<double, double>> &ranges) {
  ordered out = ordered::array();
  for (const auto &[lo, hi] : ranges) out.push_back({lo, hi});
  return out;
}

ordered finite_or_null(double x) { return std::isfinite(x) ? ordered(x) : ordered(nullptr); }

} // namespace

StateFile parse_state_spec(std::string_view text) {
  const json doc = parse_document(text, "state spec");
  const Fields f(doc, "state spec", {"delta_plus", "delta_minus", "chirp", "pump_detuning", "grid"});
  StateFile out;
  out.state.delta_plus = f.required("delta_plus");
  out.state.delta_minus = f.required("delta_minus");
  out.state.chirp = f.number("chirp", 0.0);
  out.state.pump_detuning = f.number("pump_detuning", 0.0);
  require(out.state.delta_plus > 0.0, ErrorKind::parse, "state spec: field 'delta_plus' must be positive");
  require(out.state.delta_minus > 0.0, ErrorKind::parse, "state spec: field 'delta_minus' must be positive");
  out.grid = f.grid("grid");
  return out;
}

ReferenceFile parse_reference_spec(std::string_view text) {
  const json doc = parse_document(text, "reference spec");
  const Fields f(doc, "reference spec", {"sigma_r", "center_detuning", "peak_time", "alpha_abs", "alpha_phase"});
  ReferenceFile out;
  out.reference.sigma_r = f.number("sigma_r", 1.0);
  out.reference.center_detuning = f.number("center_detuning", 0.0);
  out.reference.peak_time = f.number("peak_time", 0.0);
  const double abs = f.number("alpha_abs", 1.0);
  require(out.reference.sigma_r > 0.0, ErrorKind::parse, "reference spec: field 'sigma_r' must be positive");
  require(abs >= 0.0, ErrorKind::parse, "reference spec: field 'alpha_abs' must not be negative");
  out.reference.alpha = std::polar(abs, f.number("alpha_phase", 0.0));
  return out;
}

SignalFile parse_signal_spec(std::string_view text) {
  const json doc = parse_document(text, "signal spec");
  const Fields f(doc, "signal spec", {"sigma", "center_detuning", "delay", "phase_curvature", "grid"});
  SignalFile out;
  out.signal.sigma = f.required("sigma");
  out.signal.center_detuning = f.number("center_detuning", 0.0);
  out.signal.delay = f.number("delay", 0.0);
  out.signal.phase_curvature = f.number("phase_curvature", 0.0);
  require(out.signal.sigma > 0.0, ErrorKind::parse, "signal spec: field 'sigma' must be positive");
  out.grid = f.grid("grid");
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

namespace {

std::string format_value(double v, CountKind kind) {
  if (kind == CountKind::counts) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 0);
    return std::string(buf, end);
  }
  std::string s = format_double(v);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

} // namespace

std::string table_csv(const CountDistribution &table) {
  std::string out;
  const auto &g1 = table.grid1();
  if (!table.is_2d()) {
    out = "omega,value\n";
    for (std::size_t k = 0; k < g1.count(); ++k) {
      out += format_double(g1.point(k)) + ',' + format_value(table[k], table.kind()) + '\n';
    }
    return out;
  }
  const auto &g2 = table.grid2();
  out = "omega1,omega2,value\n";
  for (std::size_t k1 = 0; k1 < g1.count(); ++k1) {
    const std::string w1 = format_double(g1.point(k1)) + ',';
    for (std::size_t k2 = 0; k2 < g2.count(); ++k2) {
      out += w1 + format_double(g2.point(k2)) + ',' + format_value(table(k1, k2), table.kind()) + '\n';
    }
  }
  return out;
}

CountDistribution parse_table_csv(std::string_view csv) {
  std::vector<std::string_view> lines;
  for (auto line : split(csv, '\n')) {
    if (!line.empty()) lines.push_back(line);
  }
  require(!lines.empty(), ErrorKind::parse, "count table is empty");
  const auto header = split(lines[0], ',');
  const bool two_d = header == std::vector<std::string_view>{"omega1", "omega2", "value"};
  require(two_d || header == std::vector<std::string_view>{"omega", "value"}, ErrorKind::parse,
          "count table header must be 'omega,value' or 'omega1,omega2,value'");
  const std::size_t width = two_d ? 3 : 2;
  std::vector<double> w1, w2, values;
  bool integers = true;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i], ',');
    require(cells.size() == width, ErrorKind::parse,
            "line " + std::to_string(i + 1) + ": expected " + std::to_string(width) + " columns");
    w1.push_back(parse_number(cells[0], i + 1));
    if (two_d) w2.push_back(parse_number(cells[1], i + 1));
    values.push_back(parse_number(cells.back(), i + 1));
    integers = integers && plain_integer(cells.back());
  }
  require(!values.empty(), ErrorKind::parse, "count table has no rows");
  const CountKind kind = integers ? CountKind::counts : CountKind::rate;
  try {
    if (!two_d) return CountDistribution(kind, grid_through(w1, "omega"), std::move(values));
    std::size_t n2 = 1;
    while (n2 < w1.size() && w1[n2] == w1[0]) ++n2;
    require(w1.size() % n2 == 0, ErrorKind::parse, "2-D count table is not a full grid");
    const std::size_t n1 = w1.size() / n2;
    std::vector<double> first1(n1), first2(w2.begin(), w2.begin() + static_cast<std::ptrdiff_t>(n2));
    for (std::size_t k1 = 0; k1 < n1; ++k1) {
      first1[k1] = w1[k1 * n2];
      for (std::size_t k2 = 0; k2 < n2; ++k2) {
        require(w1[k1 * n2 + k2] == first1[k1] && w2[k1 * n2 + k2] == first2[k2], ErrorKind::parse,
                "2-D count table must be row-major in omega1 then omega2");
      }
    }
    return CountDistribution(kind, grid_through(first1, "omega1"), grid_through(first2, "omega2"), std::move(values));
  } catch (const Error &e) {
    if (e.kind() == ErrorKind::parse) throw;
    fail(ErrorKind::parse, std::string("count table: ") + e.what());
  }
}

std::string columns_csv(const std::vector<std::string> &header, const std::vector<std::vector<double>> &columns) {
  require(header.size() == columns.size() && !columns.empty(), ErrorKind::invalid_argument,
          "CSV needs one header entry per column");
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + header[c];
  out += '\n';
  for (std::size_t r = 0; r < columns[0].size(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      require(columns[c].size() == columns[0].size(), ErrorKind::invalid_argument, "CSV columns differ in length");
      if (c) out += ',';
      out += format_double(columns[c][r]);
    }
    out += '\n';
  }
  return out;
}

std::string report_json(const ReconstructionReport &r) {
  ordered doc;
  doc["schema_version"] = 1;
  doc["kind"] = "pair";
  doc["delta_sum"] = r.delta_sum;
  doc["delta_diff"] = r.delta_diff;
  doc["curvature"] = r.curvature;
  doc["curvature_residual"] = r.curvature_residual;
  doc["t_corr_eq12"] = r.t_corr_strong_chirp;
  doc["t_corr_quadrature"] = r.t_corr_quadrature;
  doc["uncertainty_product"] = r.uncertainty_product;
  doc["violation_factor"] = r.violation_factor;
  doc["entangled"] = r.entangled;
  doc["margin"] = finite_or_null(r.margin);
  doc["mask"] = ranges_json(r.mask);
  doc["source"] = r.source;
  doc["fringe_spacing"] = r.fringe_spacing;
  doc["slice_sum"] = r.slice_sum;
  return doc.dump(2) + '\n';
}

std::string report_json(const SingleReport &r) {
  ordered doc;
  doc["schema_version"] = 1;
  doc["kind"] = "single";
  doc["fringe_spacing"] = r.fringe_spacing;
  doc["phase_gradient"] = r.phase_gradient;
  doc["signal_time"] = r.signal_time;
  doc["mask"] = ranges_json(r.amplitude.ranges());
  return doc.dump(2) + '\n';
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::parse, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path &path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::invalid_argument, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    require(out.good(), ErrorKind::invalid_argument, "failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    fail(ErrorKind::invalid_argument, "cannot rename into " + path.string() + ": " + ec.message());
  }
}

} // namespace cspi::io
