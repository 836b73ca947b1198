#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "helpers.hpp"
#include "jeffmix/io.hpp"

using namespace jeffmix;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "jeffmix_io_test";
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

}  // namespace

TEST_CASE("g17 formatting round trips doubles") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 1e300, -2.5066282746310002, 0.0, 42.0}) {
    const std::string s = format_g17(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(format_g17(0.5) == "0.5");
}

TEST_CASE("atomic text write leaves no temporary behind") {
  const fs::path p = temp_dir() / "atomic.txt";
  write_text_atomic(p.string(), "first");
  CHECK(read_text(p.string()) == "first");
  write_text_atomic(p.string(), "second");
  CHECK(read_text(p.string()) == "second");
  CHECK_FALSE(fs::exists(p.string() + ".tmp"));
  CHECK_THROWS(read_text((temp_dir() / "missing.txt").string()));
}

TEST_CASE("gzip output carries the gzip magic") {
  if (!gzip_available()) return;
  const fs::path p = temp_dir() / "out.csv.gz";
  write_maybe_gzip(p.string(), "iteration,x\n1,2\n");
  std::ifstream in(p, std::ios::binary);
  unsigned char magic[2] = {0, 0};
  in.read(reinterpret_cast<char*>(magic), 2);
  CHECK(magic[0] == 0x1f);
  CHECK(magic[1] == 0x8b);

  const fs::path plain = temp_dir() / "out.csv";
  write_maybe_gzip(plain.string(), "iteration,x\n1,2\n");
  CHECK(read_text(plain.string()) == "iteration,x\n1,2\n");
}

TEST_CASE("model json round trip") {
  MixtureModel m;
  m.components = {{Family::Gaussian, -1.25, 0.75, 1.0}, {Family::StudentT, 2.0, 1.5, 3.0}};
  m.weights = {0.3, 0.7};
  const nlohmann::json j = model_to_json(m);
  CHECK(j["components"][0]["family"] == "gaussian");
  CHECK(j["components"][1]["family"] == "student-t");
  CHECK(j["components"][1]["df"] == 3.0);
  const MixtureModel back = model_from_json(j);
  CHECK(back.components[0].loc == m.components[0].loc);
  CHECK(back.components[1].df == 3.0);
  CHECK(back.weights == m.weights);
}

TEST_CASE("model json reports the failing path") {
  nlohmann::json j = model_to_json(testutil::close_pair());
  j["components"][0].erase("loc");
  try {
    model_from_json(j);
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("components[0]") != std::string::npos);
    CHECK(std::string(e.what()).find("loc") != std::string::npos);
  }

  nlohmann::json t = model_to_json(testutil::close_pair());
  t["components"][1]["family"] = "student-t";
  t["components"][1].erase("df");
  CHECK_THROWS_AS(model_from_json(t), std::invalid_argument);
  nlohmann::json badfam = model_to_json(testutil::close_pair());
  badfam["components"][0]["family"] = "laplace";
  CHECK_THROWS_AS(model_from_json(badfam), std::invalid_argument);
  // validation still applies after parsing
  nlohmann::json badw = model_to_json(testutil::close_pair());
  badw["weights"] = {0.9, 0.9};
  CHECK_THROWS_AS(model_from_json(badw), std::invalid_argument);
}

TEST_CASE("dataset csv round trip and errors") {
  DataSet d;
  d.values = {1.5, -2.25, 1e-300};
  const std::string csv = dataset_to_csv(d);
  CHECK(csv.substr(0, 2) == "x\n");
  const DataSet back = dataset_from_csv(csv);
  CHECK(back.values == d.values);

  CHECK_THROWS_AS(dataset_from_csv("y\n1\n"), std::invalid_argument);
  try {
    dataset_from_csv("x\n1.5\nnope\n");
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(dataset_from_csv("x\n"), std::invalid_argument);
}

TEST_CASE("file loaders work through paths") {
  const fs::path mp = temp_dir() / "model.json";
  write_text_atomic(mp.string(), model_to_json(testutil::close_pair()).dump(2));
  const MixtureModel m = load_model(mp.string());
  CHECK(m.components[1].loc == 2.0);

  DataSet d;
  d.values = {0.25, 0.5};
  const fs::path dp = temp_dir() / "data.csv";
  write_text_atomic(dp.string(), dataset_to_csv(d));
  CHECK(load_dataset(dp.string()).values == d.values);
}

TEST_CASE("fisher matrix serialization") {
  FisherMatrix f;
  f.labels = {"mu1", "mu2"};
  f.entries = Eigen::MatrixXd(2, 2);
  f.entries << 1.5, -0.25, -0.25, 3.0;
  CHECK(fisher_to_csv(f) == "mu1,mu2\n1.5,-0.25\n-0.25,3\n");
  const nlohmann::json j = fisher_to_json(f);
  CHECK(j["labels"] == nlohmann::json({"mu1", "mu2"}));
  CHECK(j["entries"][1][0] == -0.25);
}

TEST_CASE("grid serialization in storage order") {
  GridResult g;
  g.axes = {{"p1", 0.0, 1.0, 2}, {"p2", 0.0, 1.0, 2}};
  g.scale = GridScale::Log;
  g.values = {1.0, 2.0, 3.0, 4.0};
  const std::string csv = grid_to_csv(g);
  CHECK(csv ==
        "p1,p2,log_value\n0,0,1\n0,1,2\n1,0,3\n1,1,4\n");
  g.scale = GridScale::Natural;
  CHECK(grid_to_csv(g).substr(0, 15) == "p1,p2,value\n0,0");
}

TEST_CASE("report and records serialization") {
  ReplicationReport r;
  SizeRow row;
  row.sample_size = 20;
  row.avg_accept_rate = 0.25;
  row.prop_stuck_sigma = 0.5;
  row.prop_divergent_means = 0.0;
  row.mean_loglik_ratio = 1.25;
  row.median_loglik_ratio = 1.0;
  row.n_chains = 2;
  row.n_init_failures = 1;
  r.rows = {row};

  ReplicationRecord rec;
  rec.sample_size = 20;
  rec.replication = 3;
  rec.data_seed = 99;
  rec.diag.accept_rate = 0.25;
  rec.diag.stuck_small_sigma = true;
  rec.diag.loglik_ratio = 1.25;
  rec.posterior_mean = {0.5};
  rec.final_state = {0.25};
  ReplicationRecord failed;
  failed.sample_size = 20;
  failed.replication = 4;
  failed.data_seed = 100;
  failed.init_failed = true;
  r.records = {rec, failed};

  CHECK(report_to_csv(r) ==
        "sample_size,n_chains,n_init_failures,avg_accept_rate,prop_stuck_sigma,"
        "prop_divergent_means,mean_loglik_ratio,median_loglik_ratio\n"
        "20,2,1,0.25,0.5,0,1.25,1\n");

  const std::string jsonl = records_to_jsonl(r);
  const auto nl = jsonl.find('\n');
  const nlohmann::json line1 = nlohmann::json::parse(jsonl.substr(0, nl));
  CHECK(line1["replication"] == 3);
  CHECK(line1["stuck_small_sigma"] == true);
  CHECK(line1["posterior_mean"][0] == 0.5);
  const nlohmann::json line2 =
      nlohmann::json::parse(jsonl.substr(nl + 1, jsonl.size() - nl - 2));
  CHECK(line2["init_failed"] == true);
  CHECK_FALSE(line2.contains("accept_rate"));
  CHECK_FALSE(line2.contains("posterior_mean"));
}

TEST_CASE("chain csv layout") {
  Chain chain;
  chain.states = {{0.5, 1.5}, {0.25, 1.5}};
  chain.log_post = {-1.0, -2.5};
  chain.accepted = {1, 0};
  const std::string csv = chain_to_csv(chain, {"mu1", "mu2"});
  CHECK(csv ==
        "iteration,mu1,mu2,log_post,accepted\n"
        "1,0.5,1.5,-1,1\n"
        "2,0.25,1.5,-2.5,0\n");
}

TEST_CASE("probe and comparison csv") {
  std::vector<ProbeBox> boxes = {{{{0.25, 0.75}}}, {{{0.125, 0.875}}}};
  ProbeResult pr;
  pr.masses = {1.5, 2.0};
  pr.plateau = false;
  CHECK(probe_to_csv(boxes, pr) ==
        "box,lo1,hi1,mass\n1,0.25,0.75,1.5\n2,0.125,0.875,2\n");

  IntegratorComparison c;
  IntegratorComparison::ElementRow row;
  row.a = 0;
  row.b = 1;
  row.riemann = 2.5;
  row.adaptive = 2.5;
  row.mc = {{100, 2.25, 0.125}};
  c.rows = {row};
  const std::string csv = comparison_to_csv(c);
  CHECK(csv.find("a,b,method,draws,value,sd\n") == 0);
  CHECK(csv.find("0,1,riemann,,2.5,\n") != std::string::npos);
  CHECK(csv.find("0,1,monte-carlo,100,2.25,0.125\n") != std::string::npos);
}

TEST_CASE("integration and mcmc json round trip") {
  IntegrationSpec spec;
  spec.method = IntegrationMethod::MonteCarlo;
  spec.points = 700;
  spec.rel_tol = 1e-8;
  spec.max_subdivisions = 900;
  spec.draws = 2500;
  spec.seed = 12;
  spec.sigma_switch = 0.05;
  spec.coverage = 0.999;
  spec.density_floor = 1e-250;
  const IntegrationSpec back = integration_from_json(integration_to_json(spec));
  CHECK(back.method == IntegrationMethod::MonteCarlo);
  CHECK(back.points == 700);
  CHECK(back.rel_tol == 1e-8);
  CHECK(back.draws == 2500);
  CHECK(back.seed == 12);
  CHECK(back.sigma_switch == 0.05);
  CHECK(back.coverage == 0.999);
  CHECK(back.density_floor == 1e-250);

  McmcConfig cfg;
  cfg.iterations = 5000;
  cfg.burnin = 500;
  cfg.adapt_window = 250;
  cfg.accept_lo = 0.15;
  cfg.accept_hi = 0.45;
  cfg.seed = 77;
  cfg.initial_scales = {0.5, 2.0};
  const McmcConfig cback = mcmc_from_json(mcmc_to_json(cfg));
  CHECK(cback.iterations == 5000);
  CHECK(cback.initial_scales == cfg.initial_scales);

  nlohmann::json j = integration_to_json(spec);
  j["method"] = "simpson";
  CHECK_THROWS_AS(integration_from_json(j), std::invalid_argument);
}

TEST_CASE("experiment spec json round trip keeps every field") {
  ExperimentSpec spec;
  spec.truth = testutil::close_pair();
  spec.config = UnknownConfig{UnknownKind::All};
  spec.prior = PriorKind::Jeffreys;
  spec.sample_sizes = {10, 100};
  spec.replications = 4;
  spec.mcmc.iterations = 2000;
  spec.mcmc.burnin = 400;
  spec.master_seed = 31;
  spec.init_loglik_slack = 12.5;
  spec.init_attempts = 44;
  spec.thresholds.sigma_stuck = 0.075;
  spec.thresholds.mean_escape_factor = 8.0;
  const nlohmann::json j = experiment_to_json(spec);
  CHECK(j["config"] == "all");
  CHECK(j["prior"] == "jeffreys");
  const ExperimentSpec back = experiment_from_json(j);
  CHECK(back.config.kind == UnknownKind::All);
  CHECK(back.sample_sizes == spec.sample_sizes);
  CHECK(back.replications == 4);
  CHECK(back.mcmc.iterations == 2000);
  CHECK(back.master_seed == 31);
  CHECK(back.init_loglik_slack == 12.5);
  CHECK(back.init_attempts == 44);
  CHECK(back.thresholds.sigma_stuck == 0.075);
  CHECK(back.thresholds.mean_escape_factor == 8.0);

  nlohmann::json missing = j;
  missing.erase("truth");
  try {
    experiment_from_json(missing);
    FAIL("expected a parse error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("truth") != std::string::npos);
  }
  nlohmann::json badcfg = j;
  badcfg["config"] = "some";
  CHECK_THROWS_AS(experiment_from_json(badcfg), std::invalid_argument);
}

TEST_CASE("grid spec json round trip") {
  GridSpec g;
  g.axes = {{"mu1", -3.0, 3.0, 40}, {"mu2", -2.0, 2.0, 20}};
  g.fixed = {{"sigma1", 0.8}};
  g.scale = GridScale::Natural;
  const nlohmann::json j = grid_spec_to_json(g);
  const GridSpec back = grid_spec_from_json(j);
  REQUIRE(back.axes.size() == 2);
  CHECK(back.axes[0].name == "mu1");
  CHECK(back.axes[0].steps == 40);
  CHECK(back.axes[1].hi == 2.0);
  CHECK(back.fixed.at("sigma1") == 0.8);
  CHECK(back.scale == GridScale::Natural);

  nlohmann::json bad = j;
  bad["scale"] = "cubic";
  CHECK_THROWS_AS(grid_spec_from_json(bad), std::invalid_argument);
  nlohmann::json noaxes = j;
  noaxes.erase("axes");
  CHECK_THROWS_AS(grid_spec_from_json(noaxes), std::invalid_argument);
}
