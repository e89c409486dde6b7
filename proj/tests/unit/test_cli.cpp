#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "wlab/experiment.hpp"

using namespace wlab;
namespace fs = std::filesystem;

namespace {

std::string key_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wlab_unit_" + name);
  fs::remove_all(p);
  return p;
}

const char* kSmall = R"(
model = circle
grid = 128
[potential]
family = cosine
params = 1 1
[solver]
snapshots = 0.1 0.3
[checks]
m = 3
integrated = 0.1:0.3
)";

int run_cli(const std::string& args) {
  const std::string cmd = std::string(WLAB_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config defaults and values") {
  const auto c = parse_config(kSmall);
  CHECK(c.manifold.model == Model::circle);
  CHECK(c.manifold.grid == std::vector<int>{128});
  CHECK(c.manifold.period[0] == doctest::Approx(2.0 * std::numbers::pi));
  CHECK(c.manifold.potential.family == PotentialFamily::cosine);
  CHECK(c.snapshots == std::vector<double>{0.1, 0.3});
  CHECK(c.m_values == std::vector<double>{3.0});
  CHECK(c.k_mode == KMode::admissible);
  CHECK(c.integrated.size() == 1);
  CHECK_FALSE(c.flow.has_value());
  const auto f = parse_config("[checks]\nK = 0.25\n[flow]\nfamily = constant_rate\nrate = -0.5\n");
  CHECK(f.k_mode == KMode::explicit_value);
  CHECK(f.K_value == 0.25);
  REQUIRE(f.flow.has_value());
  CHECK(f.flow->family == FlowFamily::constant_rate);
}

TEST_CASE("config errors name the offending key") {
  CHECK(key_of("[checks]\nK = -1\n") == "checks.K");
  CHECK(key_of("[solver]\nsnapshots = 0.5 0.2\n") == "solver.snapshots");
  CHECK(key_of("[solver]\nsnapshots = -1\n") == "solver.snapshots");
  CHECK(key_of("grid = abc\n") == "grid");
  CHECK(key_of("colour = red\n") == "colour");
  CHECK(key_of("[solver]\ncolour = red\n") == "solver.colour");
  CHECK(key_of("[extras]\na = 1\n") == "extras");
  CHECK(key_of("[checks]\nselect = hamilton bogus\n") == "checks.select");
  CHECK(key_of("[checks]\nm = inf\n") == "checks.m");
  CHECK(key_of("[checks]\nintegrated = 0.5:0.1\n") == "checks.integrated");
  CHECK(key_of("[flow]\nhorizon = 0\n") == "flow.horizon");
  CHECK(key_of("model = sphere\n") == "model");
  CHECK(key_of("[solver]\ninitial = dirac\n") == "solver.initial");
}

TEST_CASE("subcommand check groups") {
  CHECK(checks_for("harnack").size() == 5);
  CHECK(checks_for("all") == all_checks());
  CHECK_THROWS_AS(checks_for("plot"), ConfigError);
}

TEST_CASE("run writes versioned CSVs and a summary; reruns are byte-identical") {
  auto c = parse_config(kSmall);
  const fs::path a = scratch("a"), b = scratch("b");
  c.output_dir = a;
  const auto r = run_experiment(c, "all");
  CHECK(r.exit_code == 0);
  for (const auto& ch : r.checks) CHECK_MESSAGE((ch.ok || !ch.asserted), ch.name << ": " << ch.detail);
  for (const char* f : {"curvature_m3.csv", "snapshots.csv", "manifest.csv", "harnack.csv",
                        "entropy_m3.csv", "summary.txt", "summary.json"})
    CHECK_MESSAGE(fs::exists(a / f), f);
  CHECK(slurp(a / "harnack.csv").rfind("# wlab harnack v1\n", 0) == 0);
  CHECK(slurp(a / "entropy_m3.csv").rfind("# wlab entropy v1", 0) == 0);
  const auto js = nlohmann::json::parse(slurp(a / "summary.json"));
  CHECK(js["exit_code"] == 0);
  CHECK(js["checks"].size() == r.checks.size());

  c.output_dir = b;
  run_experiment(c, "all");
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    CHECK_MESSAGE(slurp(e.path()) == slurp(b / e.path().filename()), e.path().filename());
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("K below the admissible value is reported, not asserted") {
  auto c = parse_config(kSmall);
  c.k_mode = KMode::explicit_value;
  c.K_value = 0.0;
  c.output_dir = scratch("lowK");
  const auto r = run_experiment(c, "harnack", {"hamilton"});
  REQUIRE(r.checks.size() == 1);
  CHECK_FALSE(r.checks[0].asserted);
  CHECK(r.exit_code == 0);
  fs::remove_all(c.output_dir);
}

TEST_CASE("flow subcommand without a flow section is a config error") {
  auto c = parse_config(kSmall);
  c.output_dir = scratch("noflow");
  CHECK_THROWS_AS(run_experiment(c, "flow"), ConfigError);
  // 'all' just skips the flow checks.
  const auto r = run_experiment(c, "all", {"curvature", "flow_w"});
  CHECK(r.checks.size() == 1);
  fs::remove_all(c.output_dir);
}

TEST_CASE("unknown --check names are rejected") {
  auto c = parse_config(kSmall);
  CHECK_THROWS_AS(run_experiment(c, "all", {"nonsense"}), ConfigError);
  CHECK_THROWS_AS(run_experiment(c, "curvature", {"hamilton"}), ConfigError);
}

TEST_CASE("cli exit codes") {
  const fs::path dir = scratch("cli");
  fs::create_directories(dir);
  const std::string configs = WLAB_CONFIG_DIR;
  CHECK(run_cli("all --config " + configs + "/malformed_negative_K.ini --out " + dir.string()) == 2);
  CHECK(run_cli("harnack --config " + configs + "/liyau_circle.ini --out " + dir.string()) == 0);
  CHECK(run_cli("curvature --config /nonexistent.ini") == 2);
  CHECK(run_cli("bogus") == 2);
  CHECK(run_cli("harnack --config " + configs + "/liyau_circle.ini --check hamilton,nope") == 2);
  // A kernel this narrow cannot stay positive on the grid: numerical failure, exit 1.
  std::ofstream(dir / "fail.ini") << "model = circle\ngrid = 64\n[potential]\nfamily = cosine\n"
                                     "params = 1\n[solver]\ninitial = kernel\nt0 = 1e-4\n"
                                     "snapshots = 0.1\n";
  CHECK(run_cli("simulate --config " + (dir / "fail.ini").string() + " --out " + dir.string()) == 1);
  std::ifstream summary(dir / "summary.txt");
  std::string text((std::istreambuf_iterator<char>(summary)), {});
  CHECK(text.find("FAIL  numerics") != std::string::npos);
  fs::remove_all(dir);
}
