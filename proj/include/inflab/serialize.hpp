#pragma once

#include "inflab/constructions.hpp"
#include "inflab/measure.hpp"
#include "inflab/mv.hpp"

#include <json.hpp>

#include <string>

namespace inflab {

using json = nlohmann::json;

/// Reading helpers throw PreconditionError with a JSON pointer to the offending field.
double read_number(const json& j, const std::string& path);
Vec read_vector(const json& j, const std::string& path);
Mat read_matrix(const json& j, const std::string& path);
/// Finite values as numbers; ±infinity as "inf"/"-inf", NaN as "nan".
json number(double x);
json to_json(const Vec& v);
json to_json(const Mat& m);

json to_json(const Norm& norm);
Norm read_norm(const json& j, const std::string& path);

json to_json(const LinearMap& map);
LinearMap read_linear_map(const json& j, const std::string& path);

json to_json(const Box& box);
Box read_box(const json& j, const std::string& path);
json to_json(const Region& region);
Region read_region(const json& j, const std::string& path);

MapSpec read_map_spec(const json& j, const std::string& path);
json to_json(const MapSpec& spec);

json to_json(const VerificationReport& report);
json to_json(const InflationCertificate& cert);
json to_json(const SearchOptions& options);
SearchOptions read_search_options(const json& j, const std::string& path, SearchOptions defaults = {});
json to_json(const PairProbeReport& report);
json to_json(const MvResult& result);
json to_json(const UscReport& report);
json to_json(const ExtremalReport& report);

/// Basis, breakpoints, slope tables and per-combination statistics; per-cell
/// records are listed while the cell count is at most `max_cells`.
json to_json(const PiecewiseAffineMap& g, double max_cells = 4096);
/// One row per cell: index, combo, t-bounds, operator norm, vol (at most `max_cells` rows).
std::string cells_csv(const PiecewiseAffineMap& g, double max_cells = 100000);

json to_json(const InflateReport& report);
json to_json(const MeasureReport& report);

PositiveConfig read_positive_config(const json& params, const std::string& path);
NegativeConfig read_negative_config(const json& params, const std::string& path);
json to_json(const PositiveReport& report);
json to_json(const NegativeReport& report);
/// Columns eps, sup_dist, lip_exact, jac_integral, boxcount, superlevel_fraction.
std::string experiment_csv(const PositiveReport& report);
std::string experiment_csv(const NegativeReport& report);

struct OutputSpec {
  std::string path;
  std::string format = "json";
};

struct ExperimentConfig {
  std::string command;
  json params = json::object();
  std::uint64_t seed = 0;
  OutputSpec output;
};

json to_json(const ExperimentConfig& config);
ExperimentConfig read_experiment_config(const json& j);

/// Commands accepted in ExperimentConfig.command.
const std::vector<std::string>& command_names();

}  // namespace inflab
