#include "jeffmix/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifdef JEFFMIX_HAVE_ZLIB
#include <zlib.h>
#endif

namespace jeffmix {

namespace {

using nlohmann::json;

[[noreturn]] void fail_at(const std::string& path, const std::string& what) {
  throw std::invalid_argument(path + ": " + what);
}

const json& need(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) fail_at(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail_at(path + "." + std::string(key), "missing");
  return *it;
}

double as_num(const json& j, const std::string& path) {
  if (!j.is_number()) fail_at(path, "expected a number");
  return j.get<double>();
}

std::uint64_t as_u64(const json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    fail_at(path, "expected an integer");
  if (j.is_number_integer() && j.get<std::int64_t>() < 0)
    fail_at(path, "expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

std::string as_str(const json& j, const std::string& path) {
  if (!j.is_string()) fail_at(path, "expected a string");
  return j.get<std::string>();
}

double opt_num(const json& j, const char* key, double fallback, const std::string& path) {
  if (!j.is_object()) fail_at(path, "expected an object");
  const auto it = j.find(key);
  return it == j.end() ? fallback : as_num(*it, path + "." + key);
}

std::uint64_t opt_u64(const json& j, const char* key, std::uint64_t fallback,
                      const std::string& path) {
  if (!j.is_object()) fail_at(path, "expected an object");
  const auto it = j.find(key);
  return it == j.end() ? fallback : as_u64(*it, path + "." + key);
}

std::vector<double> as_num_vec(const json& j, const std::string& path) {
  if (!j.is_array()) fail_at(path, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(as_num(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

double axis_value(const GridAxis& a, std::size_t idx) {
  return a.lo + (a.hi - a.lo) * static_cast<double>(idx) /
                    static_cast<double>(a.steps - 1);
}

}  // namespace

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool gzip_available() {
#ifdef JEFFMIX_HAVE_ZLIB
  return true;
#else
  return false;
#endif
}

void write_maybe_gzip(const std::string& path, const std::string& content) {
  const bool want_gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
  if (!want_gz) {
    write_text_atomic(path, content);
    return;
  }
#ifdef JEFFMIX_HAVE_ZLIB
  const std::string tmp = path + ".tmp";
  gzFile gz = gzopen(tmp.c_str(), "wb");
  if (gz == nullptr) throw std::runtime_error("cannot open " + tmp + " for writing");
  const int written =
      gzwrite(gz, content.data(), static_cast<unsigned>(content.size()));
  const int rc = gzclose(gz);
  if (written != static_cast<int>(content.size()) || rc != Z_OK)
    throw std::runtime_error("gzip write to " + tmp + " failed");
  std::filesystem::rename(tmp, path);
#else
  throw std::runtime_error("gzip output requested but zlib support is not built in");
#endif
}

nlohmann::json model_to_json(const MixtureModel& m) {
  json components = json::array();
  for (const Component& c : m.components) {
    json jc;
    jc["family"] = c.family == Family::Gaussian ? "gaussian" : "student-t";
    jc["loc"] = c.loc;
    jc["scale"] = c.scale;
    if (c.family == Family::StudentT) jc["df"] = c.df;
    components.push_back(jc);
  }
  json out;
  out["components"] = components;
  out["weights"] = m.weights;
  return out;
}

MixtureModel model_from_json(const nlohmann::json& j, const std::string& context) {
  MixtureModel m;
  const json& components = need(j, "components", context);
  if (!components.is_array() || components.empty())
    fail_at(context + ".components", "expected a nonempty array");
  for (std::size_t i = 0; i < components.size(); ++i) {
    const std::string path = context + ".components[" + std::to_string(i) + "]";
    const json& jc = components[i];
    Component c;
    const std::string family = as_str(need(jc, "family", path), path + ".family");
    if (family == "gaussian") {
      c.family = Family::Gaussian;
    } else if (family == "student-t") {
      c.family = Family::StudentT;
      c.df = as_num(need(jc, "df", path), path + ".df");
    } else {
      fail_at(path + ".family", "expected 'gaussian' or 'student-t'");
    }
    c.loc = as_num(need(jc, "loc", path), path + ".loc");
    c.scale = as_num(need(jc, "scale", path), path + ".scale");
    m.components.push_back(c);
  }
  m.weights = as_num_vec(need(j, "weights", context), context + ".weights");
  try {
    m.validate();
  } catch (const std::exception& e) {
    fail_at(context, e.what());
  }
  return m;
}

MixtureModel load_model(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return model_from_json(j, path);
}

std::string dataset_to_csv(const DataSet& d) {
  std::string out = "x\n";
  for (double v : d.values) {
    out += format_g17(v);
    out += '\n';
  }
  return out;
}

DataSet dataset_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty data file");
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
  if (line != "x") throw std::invalid_argument("data CSV must start with a header line 'x'");
  DataSet d;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(line.c_str(), &end);
    if (end == line.c_str() || *end != '\0')
      throw std::invalid_argument("line " + std::to_string(lineno) +
                                  ": expected a number, got '" + line + "'");
    d.values.push_back(v);
  }
  if (d.values.empty()) throw std::invalid_argument("data file has no observations");
  return d;
}

DataSet load_dataset(const std::string& path) {
  try {
    return dataset_from_csv(read_text(path));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

std::string fisher_to_csv(const FisherMatrix& f) {
  std::string out;
  for (std::size_t i = 0; i < f.labels.size(); ++i) {
    if (i > 0) out += ',';
    out += f.labels[i];
  }
  out += '\n';
  for (Eigen::Index i = 0; i < f.entries.rows(); ++i) {
    for (Eigen::Index j = 0; j < f.entries.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_g17(f.entries(i, j));
    }
    out += '\n';
  }
  return out;
}

nlohmann::json fisher_to_json(const FisherMatrix& f) {
  json entries = json::array();
  for (Eigen::Index i = 0; i < f.entries.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < f.entries.cols(); ++j) row.push_back(f.entries(i, j));
    entries.push_back(row);
  }
  json out;
  out["labels"] = f.labels;
  out["entries"] = entries;
  return out;
}

std::string grid_to_csv(const GridResult& g) {
  std::string out;
  for (const GridAxis& a : g.axes) {
    out += a.name;
    out += ',';
  }
  out += g.scale == GridScale::Natural ? "value\n" : "log_value\n";
  std::vector<std::size_t> idx(g.axes.size(), 0);
  for (std::size_t cell = 0; cell < g.values.size(); ++cell) {
    std::size_t rem = cell;
    for (std::size_t a = g.axes.size(); a-- > 0;) {
      idx[a] = rem % g.axes[a].steps;
      rem /= g.axes[a].steps;
    }
    for (std::size_t a = 0; a < g.axes.size(); ++a) {
      out += format_g17(axis_value(g.axes[a], idx[a]));
      out += ',';
    }
    out += format_g17(g.values[cell]);
    out += '\n';
  }
  return out;
}

std::string report_to_csv(const ReplicationReport& r) {
  std::string out =
      "sample_size,n_chains,n_init_failures,avg_accept_rate,prop_stuck_sigma,"
      "prop_divergent_means,mean_loglik_ratio,median_loglik_ratio\n";
  for (const SizeRow& row : r.rows) {
    out += std::to_string(row.sample_size) + ',' + std::to_string(row.n_chains) + ',' +
           std::to_string(row.n_init_failures) + ',' + format_g17(row.avg_accept_rate) +
           ',' + format_g17(row.prop_stuck_sigma) + ',' +
           format_g17(row.prop_divergent_means) + ',' +
           format_g17(row.mean_loglik_ratio) + ',' +
           format_g17(row.median_loglik_ratio) + '\n';
  }
  return out;
}

std::string records_to_jsonl(const ReplicationReport& r) {
  std::string out;
  for (const ReplicationRecord& rec : r.records) {
    json j;
    j["sample_size"] = rec.sample_size;
    j["replication"] = rec.replication;
    j["data_seed"] = rec.data_seed;
    j["init_failed"] = rec.init_failed;
    if (!rec.init_failed) {
      j["accept_rate"] = rec.diag.accept_rate;
      j["stuck_small_sigma"] = rec.diag.stuck_small_sigma;
      j["divergent_means"] = rec.diag.divergent_means;
      j["loglik_ratio"] = rec.diag.loglik_ratio;
      j["posterior_mean"] = rec.posterior_mean;
      j["final_state"] = rec.final_state;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string chain_to_csv(const Chain& chain, const std::vector<std::string>& labels) {
  std::string out = "iteration";
  for (const std::string& l : labels) {
    out += ',';
    out += l;
  }
  out += ",log_post,accepted\n";
  for (std::size_t it = 0; it < chain.states.size(); ++it) {
    out += std::to_string(it + 1);
    for (double v : chain.states[it]) {
      out += ',';
      out += format_g17(v);
    }
    out += ',';
    out += format_g17(chain.log_post[it]);
    out += ',';
    out += chain.accepted[it] ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::string probe_to_csv(const std::vector<ProbeBox>& boxes, const ProbeResult& r) {
  const std::size_t d = boxes.empty() ? 0 : boxes[0].bounds.size();
  std::string out = "box";
  for (std::size_t i = 0; i < d; ++i)
    out += ",lo" + std::to_string(i + 1) + ",hi" + std::to_string(i + 1);
  out += ",mass\n";
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    out += std::to_string(b + 1);
    for (const auto& [lo, hi] : boxes[b].bounds)
      out += ',' + format_g17(lo) + ',' + format_g17(hi);
    out += ',' + format_g17(r.masses[b]) + '\n';
  }
  return out;
}

std::string comparison_to_csv(const IntegratorComparison& c) {
  std::string out = "a,b,method,draws,value,sd\n";
  for (const IntegratorComparison::ElementRow& row : c.rows) {
    const std::string prefix = std::to_string(row.a) + ',' + std::to_string(row.b) + ',';
    out += prefix + "riemann,," + format_g17(row.riemann) + ",\n";
    out += prefix + "adaptive,," + format_g17(row.adaptive) + ",\n";
    for (const IntegratorComparison::McSummary& s : row.mc)
      out += prefix + "monte-carlo," + std::to_string(s.draws) + ',' +
             format_g17(s.mean) + ',' + format_g17(s.sd) + '\n';
  }
  return out;
}

nlohmann::json integration_to_json(const IntegrationSpec& spec) {
  json j;
  j["method"] = integration_method_name(spec.method);
  j["points"] = spec.points;
  j["rel_tol"] = spec.rel_tol;
  j["max_subdivisions"] = spec.max_subdivisions;
  j["draws"] = spec.draws;
  j["seed"] = spec.seed;
  j["sigma_switch"] = spec.sigma_switch;
  j["coverage"] = spec.coverage;
  j["density_floor"] = spec.density_floor;
  return j;
}

IntegrationSpec integration_from_json(const nlohmann::json& j, const std::string& context) {
  IntegrationSpec spec;
  if (!j.is_object()) fail_at(context, "expected an object");
  if (j.contains("method"))
    spec.method = parse_integration_method(as_str(j["method"], context + ".method"));
  spec.points = static_cast<int>(opt_num(j, "points", spec.points, context));
  spec.rel_tol = opt_num(j, "rel_tol", spec.rel_tol, context);
  spec.max_subdivisions =
      static_cast<int>(opt_num(j, "max_subdivisions", spec.max_subdivisions, context));
  spec.draws = static_cast<int>(opt_num(j, "draws", spec.draws, context));
  spec.seed = opt_u64(j, "seed", spec.seed, context);
  spec.sigma_switch = opt_num(j, "sigma_switch", spec.sigma_switch, context);
  spec.coverage = opt_num(j, "coverage", spec.coverage, context);
  spec.density_floor = opt_num(j, "density_floor", spec.density_floor, context);
  try {
    spec.validate();
  } catch (const std::exception& e) {
    fail_at(context, e.what());
  }
  return spec;
}

nlohmann::json mcmc_to_json(const McmcConfig& cfg) {
  json j;
  j["iterations"] = cfg.iterations;
  j["burnin"] = cfg.burnin;
  j["adapt_window"] = cfg.adapt_window;
  j["accept_lo"] = cfg.accept_lo;
  j["accept_hi"] = cfg.accept_hi;
  j["seed"] = cfg.seed;
  j["initial_scales"] = cfg.initial_scales;
  return j;
}

McmcConfig mcmc_from_json(const nlohmann::json& j, const std::string& context) {
  McmcConfig cfg;
  if (!j.is_object()) fail_at(context, "expected an object");
  cfg.iterations = opt_u64(j, "iterations", cfg.iterations, context);
  cfg.burnin = opt_u64(j, "burnin", cfg.burnin, context);
  cfg.adapt_window = opt_u64(j, "adapt_window", cfg.adapt_window, context);
  cfg.accept_lo = opt_num(j, "accept_lo", cfg.accept_lo, context);
  cfg.accept_hi = opt_num(j, "accept_hi", cfg.accept_hi, context);
  cfg.seed = opt_u64(j, "seed", cfg.seed, context);
  if (j.contains("initial_scales"))
    cfg.initial_scales = as_num_vec(j["initial_scales"], context + ".initial_scales");
  return cfg;
}

nlohmann::json experiment_to_json(const ExperimentSpec& spec) {
  json j;
  j["truth"] = model_to_json(spec.truth);
  j["config"] = unknown_kind_name(spec.config.kind);
  j["prior"] = prior_kind_name(spec.prior);
  j["sample_sizes"] = spec.sample_sizes;
  j["replications"] = spec.replications;
  j["mcmc"] = mcmc_to_json(spec.mcmc);
  j["integration"] = integration_to_json(spec.integration);
  j["master_seed"] = spec.master_seed;
  j["init_loglik_slack"] = spec.init_loglik_slack;
  j["init_attempts"] = spec.init_attempts;
  j["sigma_stuck"] = spec.thresholds.sigma_stuck;
  j["mean_escape_factor"] = spec.thresholds.mean_escape_factor;
  return j;
}

ExperimentSpec experiment_from_json(const nlohmann::json& j) {
  const std::string context = "spec";
  ExperimentSpec spec;
  spec.truth = model_from_json(need(j, "truth", context), context + ".truth");
  spec.config.kind =
      parse_unknown_kind(as_str(need(j, "config", context), context + ".config"));
  if (j.contains("prior"))
    spec.prior = parse_prior_kind(as_str(j["prior"], context + ".prior"));
  const json& sizes = need(j, "sample_sizes", context);
  if (!sizes.is_array() || sizes.empty())
    fail_at(context + ".sample_sizes", "expected a nonempty array");
  for (std::size_t i = 0; i < sizes.size(); ++i)
    spec.sample_sizes.push_back(static_cast<std::size_t>(
        as_u64(sizes[i], context + ".sample_sizes[" + std::to_string(i) + "]")));
  spec.replications = opt_u64(j, "replications", spec.replications, context);
  if (j.contains("mcmc")) spec.mcmc = mcmc_from_json(j["mcmc"], context + ".mcmc");
  if (j.contains("integration"))
    spec.integration = integration_from_json(j["integration"], context + ".integration");
  spec.master_seed = opt_u64(j, "master_seed", spec.master_seed, context);
  spec.init_loglik_slack =
      opt_num(j, "init_loglik_slack", spec.init_loglik_slack, context);
  spec.init_attempts = opt_u64(j, "init_attempts", spec.init_attempts, context);
  spec.thresholds.sigma_stuck =
      opt_num(j, "sigma_stuck", spec.thresholds.sigma_stuck, context);
  spec.thresholds.mean_escape_factor =
      opt_num(j, "mean_escape_factor", spec.thresholds.mean_escape_factor, context);
  try {
    spec.validate();
  } catch (const std::exception& e) {
    fail_at(context, e.what());
  }
  return spec;
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  try {
    return experiment_from_json(j);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

nlohmann::json grid_spec_to_json(const GridSpec& grid) {
  json axes = json::array();
  for (const GridAxis& a : grid.axes) {
    json ja;
    ja["name"] = a.name;
    ja["lo"] = a.lo;
    ja["hi"] = a.hi;
    ja["steps"] = a.steps;
    axes.push_back(ja);
  }
  json j;
  j["axes"] = axes;
  j["fixed"] = grid.fixed;
  j["scale"] = grid.scale == GridScale::Natural ? "natural" : "log";
  return j;
}

GridSpec grid_spec_from_json(const nlohmann::json& j, const std::string& context) {
  GridSpec grid;
  const json& axes = need(j, "axes", context);
  if (!axes.is_array() || axes.empty())
    fail_at(context + ".axes", "expected a nonempty array");
  for (std::size_t i = 0; i < axes.size(); ++i) {
    const std::string path = context + ".axes[" + std::to_string(i) + "]";
    GridAxis a;
    a.name = as_str(need(axes[i], "name", path), path + ".name");
    a.lo = as_num(need(axes[i], "lo", path), path + ".lo");
    a.hi = as_num(need(axes[i], "hi", path), path + ".hi");
    a.steps = static_cast<std::size_t>(as_u64(need(axes[i], "steps", path), path + ".steps"));
    grid.axes.push_back(a);
  }
  if (j.contains("fixed")) {
    const json& fixed = j["fixed"];
    if (!fixed.is_object()) fail_at(context + ".fixed", "expected an object");
    for (const auto& [key, value] : fixed.items())
      grid.fixed[key] = as_num(value, context + ".fixed." + key);
  }
  if (j.contains("scale")) {
    const std::string s = as_str(j["scale"], context + ".scale");
    if (s == "natural")
      grid.scale = GridScale::Natural;
    else if (s == "log")
      grid.scale = GridScale::Log;
    else
      fail_at(context + ".scale", "expected 'natural' or 'log'");
  }
  try {
    grid.validate();
  } catch (const std::exception& e) {
    fail_at(context, e.what());
  }
  return grid;
}

}  // namespace jeffmix
