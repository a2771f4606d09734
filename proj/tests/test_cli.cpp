#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#ifndef DAVID_CLI_PATH
#error "DAVID_CLI_PATH must be defined by the build"
#endif

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DAVID_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool exists(const std::string& path) { return std::ifstream(path).good(); }

}  // namespace

TEST_CASE("simulate writes a deterministic CSV; usage errors exit 1") {
  CHECK(run_cli("simulate --n 200 --seed 7 --out /tmp/david_sim_a.csv") == 0);
  CHECK(run_cli("simulate --n 200 --seed 7 --out /tmp/david_sim_b.csv") == 0);
  CHECK(slurp("/tmp/david_sim_a.csv") == slurp("/tmp/david_sim_b.csv"));
  CHECK(slurp("/tmp/david_sim_a.csv").rfind("X1,X2,X3,X4,X5,X6,Y", 0) == 0);

  CHECK(run_cli("simulate --n 200") == 1);       // missing --out
  CHECK(run_cli("bogus-subcommand") == 1);       // unknown command
  CHECK(run_cli("--help") == 0);
  std::remove("/tmp/david_sim_b.csv");
}

TEST_CASE("train then generate round-trip through checkpoints") {
  REQUIRE(run_cli("simulate --n 150 --seed 3 --out /tmp/david_cli_data.csv") == 0);
  CHECK(run_cli("train --data /tmp/david_cli_data.csv --target Y "
                "--model-out /tmp/david_cli_model --epochs 5 --batch-size 32 --seed 5") == 0);
  CHECK(exists("/tmp/david_cli_model"));
  CHECK(exists("/tmp/david_cli_model.meta"));
  CHECK(exists("/tmp/david_cli_model.losses.csv"));

  // default config lands in the sidecar
  const std::string meta = slurp("/tmp/david_cli_model.meta");
  CHECK(meta.find("beta_y = 10") != std::string::npos);
  CHECK(meta.find("beta_kl = 9.9999999999999995e-07") != std::string::npos);

  CHECK(run_cli("generate --model /tmp/david_cli_model --data /tmp/david_cli_data.csv "
                "--target Y --kind david --out /tmp/david_cli_synth.csv --seed 9") == 0);
  const std::string synth = slurp("/tmp/david_cli_synth.csv");
  CHECK(synth.rfind("X1,X2,X3,X4,X5,X6,Y,origin", 0) == 0);
  CHECK(synth.find(",synthetic") != std::string::npos);

  // baseline emits only the header
  CHECK(run_cli("generate --data /tmp/david_cli_data.csv --target Y --kind baseline "
                "--out /tmp/david_cli_empty.csv") == 0);
  const std::string empty = slurp("/tmp/david_cli_empty.csv");
  CHECK(empty == "X1,X2,X3,X4,X5,X6,Y,origin\n");

  // alpha mismatch: the checkpoint above was trained with alpha = 1
  CHECK(run_cli("train --data /tmp/david_cli_data.csv --target Y --alpha 0 "
                "--model-out /tmp/david_cli_plain --epochs 3 --batch-size 32") == 0);
  CHECK(run_cli("generate --model /tmp/david_cli_plain --data /tmp/david_cli_data.csv "
                "--target Y --kind kbvaew --out /tmp/david_cli_bad.csv") == 2);

  CHECK(run_cli("train --data /tmp/david_cli_data.csv --target NotAColumn "
                "--model-out /tmp/david_cli_x") == 2);
}

TEST_CASE("benchmark smoke grid writes deterministic reports") {
  const std::string base =
      "benchmark --simulate --simulate-n 150 --folds 2 --epochs 6 --batch-size 32 "
      "--generators baseline,david --regressors knn:5 --n-synthetic 30 --seed 11 --out ";
  CHECK(run_cli(base + "/tmp/david_bench_a") == 0);
  CHECK(run_cli(base + "/tmp/david_bench_b") == 0);

  const std::string rows_a = slurp("/tmp/david_bench_a/rows.csv");
  CHECK(rows_a == slurp("/tmp/david_bench_b/rows.csv"));
  CHECK(rows_a.rfind("generator,regressor,fold,mse,wmse,mae,mape", 0) == 0);

  // 2 folds x 2 generators x 1 regressor = 4 data rows + header
  int lines = 0;
  for (char c : rows_a)
    if (c == '\n') ++lines;
  CHECK(lines == 5);

  CHECK(exists("/tmp/david_bench_a/aggregate.txt"));
  CHECK(exists("/tmp/david_bench_a/config.effective"));
  const std::string table = slurp("/tmp/david_bench_a/aggregate.txt");
  CHECK(table.find("kbvaew") != std::string::npos);
  CHECK(table.find("baseline") != std::string::npos);

  // the effective config file re-ingests cleanly
  CHECK(run_cli("benchmark --simulate --simulate-n 150 --config "
                "/tmp/david_bench_a/config.effective --out /tmp/david_bench_c --folds 2 "
                "--epochs 6 --batch-size 32") == 0);
}

TEST_CASE("benchmark without data source is a data error") {
  CHECK(run_cli("benchmark --out /tmp/david_bench_x") == 2);
}

TEST_CASE("numeric failures exit with code 3") {
  // a constant column makes min-max scaling degenerate
  {
    std::ofstream out("/tmp/david_const_col.csv");
    out << "a,b,y\n1,5,3\n2,5,6\n3,5,9\n4,5,12\n";
  }
  CHECK(run_cli("train --data /tmp/david_const_col.csv --target y "
                "--model-out /tmp/david_const_model --epochs 2 --batch-size 2") == 3);
  std::remove("/tmp/david_const_col.csv");
}
