#include "qot/serialization.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "qot/error.hpp"

namespace qot {

using nlohmann::json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

json config_to_json(double hbar, const WeightedConfiguration& config) {
  json points = json::array();
  for (const auto& z : config.points()) points.push_back({z.q, z.p});
  return json{{"hbar", hbar}, {"points", points}, {"weights", config.weights()}};
}

ConfigFile config_from_json(const json& j) {
  try {
    if (!j.is_object()) throw Error(ErrorCode::InvalidInput, "configuration must be a JSON object");
    const double hbar = j.at("hbar").get<double>();
    std::vector<CoherentPoint> points;
    for (const auto& p : j.at("points")) {
      if (!p.is_array() || p.size() != 2) throw Error(ErrorCode::InvalidInput, "points must be [q, p] pairs");
      points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    auto weights = j.at("weights").get<std::vector<double>>();
    PhaseSpaceContext ctx(hbar);
    return ConfigFile{ctx.hbar(), WeightedConfiguration(std::move(points), std::move(weights))};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed configuration: ") + e.what());
  }
}

namespace {

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, path + ": " + e.what());
  }
}

}  // namespace

ConfigFile load_config(const std::string& path) { return config_from_json(parse_file(path)); }

std::pair<ConfigFile, ConfigFile> load_config_pair(const std::string& path) {
  const json j = parse_file(path);
  if (!j.is_array() || j.size() != 2) {
    throw Error(ErrorCode::InvalidInput, path + ": expected an array of two configurations");
  }
  auto x = config_from_json(j[0]);
  auto y = config_from_json(j[1]);
  if (x.hbar != y.hbar) throw Error(ErrorCode::InvalidInput, path + ": configurations disagree on hbar");
  return {std::move(x), std::move(y)};
}

json matrix_to_json(const CMatrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back({m(i, j).real(), m(i, j).imag()});
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

CMatrix matrix_from_json(const json& j) {
  try {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const json& data = j.at("data");
    if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols)) {
      throw Error(ErrorCode::InvalidInput, "matrix data does not match its shape");
    }
    CMatrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index k = 0; k < cols; ++k) {
        const json& z = data[static_cast<std::size_t>(i * cols + k)];
        m(i, k) = Complex(z.at(0).get<double>(), z.at(1).get<double>());
      }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidInput, std::string("malformed matrix: ") + e.what());
  }
}

json basis_to_json(const OrthonormalBasis& b) {
  json points = json::array();
  for (const auto& z : b.points) points.push_back({z.q, z.p});
  return json{{"points", points},
              {"gram_eigenvalues", std::vector<double>(b.gram_eigenvalues.data(),
                                                       b.gram_eigenvalues.data() + b.gram_eigenvalues.size())},
              {"change_of_frame", matrix_to_json(b.change_of_frame)}};
}

json coupling_to_json(const Coupling& c) {
  return json{{"basis_x", basis_to_json(c.basis_x)},
              {"basis_y", basis_to_json(c.basis_y)},
              {"value", c.value},
              {"matrix", matrix_to_json(c.matrix)}};
}

json witness_to_json(const DualWitness& w) {
  return json{{"a", matrix_to_json(w.a)},
              {"b", matrix_to_json(w.b)},
              {"bound", w.bound},
              {"slack_spectrum", std::vector<double>(w.slack_spectrum.data(),
                                                     w.slack_spectrum.data() + w.slack_spectrum.size())}};
}

void write_csv(std::ostream& out, const RMatrix& m) {
  out << "row";
  for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << j;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << format_number(m(i, j));
    out << '\n';
  }
}

RMatrix read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidInput, "empty CSV");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');  // row index
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw Error(ErrorCode::InvalidInput, "bad CSV cell '" + cell + "'");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) throw Error(ErrorCode::InvalidInput, "ragged CSV");
    rows.push_back(std::move(row));
  }
  RMatrix m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

}  // namespace qot
