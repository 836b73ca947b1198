#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "jeffmix/harness.hpp"

namespace jeffmix {

// 17 significant digits, enough to round-trip a double through text
std::string format_g17(double v);

// write temp file in the target directory, then rename over path
void write_text_atomic(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

bool gzip_available();
// gzip-compresses when the path ends in .gz; plain write otherwise
void write_maybe_gzip(const std::string& path, const std::string& content);

nlohmann::json model_to_json(const MixtureModel& m);
MixtureModel model_from_json(const nlohmann::json& j, const std::string& context = "model");
MixtureModel load_model(const std::string& path);

std::string dataset_to_csv(const DataSet& d);
DataSet dataset_from_csv(const std::string& text);
DataSet load_dataset(const std::string& path);

std::string fisher_to_csv(const FisherMatrix& f);
nlohmann::json fisher_to_json(const FisherMatrix& f);

// long format, one row per cell in storage order (last axis fastest)
std::string grid_to_csv(const GridResult& g);

std::string report_to_csv(const ReplicationReport& r);
std::string records_to_jsonl(const ReplicationReport& r);

std::string chain_to_csv(const Chain& chain, const std::vector<std::string>& labels);

std::string probe_to_csv(const std::vector<ProbeBox>& boxes, const ProbeResult& r);
std::string comparison_to_csv(const IntegratorComparison& c);

nlohmann::json integration_to_json(const IntegrationSpec& spec);
IntegrationSpec integration_from_json(const nlohmann::json& j,
                                      const std::string& context = "integration");
nlohmann::json mcmc_to_json(const McmcConfig& cfg);
McmcConfig mcmc_from_json(const nlohmann::json& j, const std::string& context = "mcmc");
nlohmann::json experiment_to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_from_json(const nlohmann::json& j);
ExperimentSpec load_experiment_spec(const std::string& path);
nlohmann::json grid_spec_to_json(const GridSpec& grid);
GridSpec grid_spec_from_json(const nlohmann::json& j, const std::string& context = "grid");

}  // namespace jeffmix
