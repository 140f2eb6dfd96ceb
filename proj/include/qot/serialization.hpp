#pragma once

#include <iosfwd>
#include <string>
#include <utility>

#include <json.hpp>

#include "qot/quantum_transport.hpp"

namespace qot {

/// 12 significant digits, locale-independent.
std::string format_number(double v);

/// {"hbar": h, "points": [[q, p], ...], "weights": [...]}.
struct ConfigFile {
  double hbar = 1.0;
  WeightedConfiguration config;
};

nlohmann::json config_to_json(double hbar, const WeightedConfiguration& config);
ConfigFile config_from_json(const nlohmann::json& j);
ConfigFile load_config(const std::string& path);

/// A JSON array of exactly two configuration objects sharing the same hbar.
std::pair<ConfigFile, ConfigFile> load_config_pair(const std::string& path);

/// Row-major complex matrix as [[re, im], ...] with "rows"/"cols".
nlohmann::json matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const nlohmann::json& j);

nlohmann::json basis_to_json(const OrthonormalBasis& b);
nlohmann::json coupling_to_json(const Coupling& c);
nlohmann::json witness_to_json(const DualWitness& w);

/// CSV with a header row of column indices and a leading row-index column.
void write_csv(std::ostream& out, const RMatrix& m);
RMatrix read_csv(std::istream& in);

}  // namespace qot
