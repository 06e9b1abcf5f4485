#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* path = std::getenv("ADAGCL_CLI");
  REQUIRE(path != nullptr);
  return path;
}

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const std::string cmd = cli() + " " + args + " 2>&1";
  std::array<char, 512> buf{};
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

void write_dataset(const std::string& path) {
  std::ofstream out(path);
  for (int b = 0; b < 3; ++b)
    for (int u = 0; u < 4; ++u)
      for (int v = 0; v < 4; ++v)
        if ((u + v) % 4 != 3)
          out << "u" << (4 * b + u) << "\tv" << (4 * b + v) << "\n";
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cli end to end") {
  const std::string dir = "cli_work";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_dataset(dir + "/data.tsv");

  SUBCASE("usage errors exit 1") {
    CHECK(run("").exit_code == 1);
    CHECK(run("prepare").exit_code == 1);  // missing required options
    CHECK(run("frobnicate --x 1").exit_code == 1);
  }

  SUBCASE("missing input exits with the data code and a message") {
    auto r = run("prepare --input missing.tsv --out " + dir + "/s");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("missing.tsv") != std::string::npos);
  }

  SUBCASE("prepare, idempotent rerun, train with overrides, eval, export") {
    auto prep = run("prepare --input " + dir + "/data.tsv --split-seed 5 --out " +
                    dir + "/splits");
    CHECK(prep.exit_code == 0);
    CHECK(fs::exists(dir + "/splits/manifest.json"));
    CHECK(fs::exists(dir + "/splits/run_manifest.json"));
    CHECK(slurp(dir + "/splits/run_manifest.json").find("\"status\": \"success\"") !=
          std::string::npos);

    auto rerun = run("prepare --input " + dir + "/data.tsv --split-seed 5 --out " +
                     dir + "/splits");
    CHECK(rerun.exit_code == 0);
    CHECK(rerun.output.find("up-to-date") != std::string::npos);

    auto train = run("train --splits " + dir + "/splits --out " + dir +
                     "/run --d 4 --L 1 --max_epochs 2 --eval_every 0 "
                     "--batch_size 16 --variant edge_drop --lambda1 0.05");
    CHECK(train.exit_code == 0);
    CHECK(fs::exists(dir + "/run/checkpoint.bin"));
    CHECK(fs::exists(dir + "/run/history.csv"));
    // overrides round-trip into the recorded config and the manifest
    const std::string cfg = slurp(dir + "/run/config.txt");
    CHECK(cfg.find("variant = edge_drop") != std::string::npos);
    CHECK(cfg.find("lambda1 = 0.05") != std::string::npos);
    CHECK(slurp(dir + "/run/run_manifest.json").find("edge_drop") !=
          std::string::npos);

    auto eval = run("eval --checkpoint " + dir + "/run/checkpoint.bin" +
                    " --splits " + dir + "/splits --out " + dir + "/eval");
    CHECK(eval.exit_code == 0);
    CHECK(fs::exists(dir + "/eval/eval_report.json"));
    CHECK(fs::exists(dir + "/eval/eval_report.csv"));

    auto exp = run("export --checkpoint " + dir + "/run/checkpoint.bin" +
                   " --splits " + dir + "/splits --which main --out " + dir +
                   "/emb.csv");
    CHECK(exp.exit_code == 0);
    int rows = 0;
    std::ifstream emb(dir + "/emb.csv");
    std::string line;
    while (std::getline(emb, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 1 + 12 + 12);  // header + users + items

    // evaluating an untrained checkpoint still succeeds (near-random metrics)
    auto t0 = run("train --splits " + dir + "/splits --out " + dir +
                  "/run0 --d 4 --L 1 --max_epochs 0 --eval_every 0");
    CHECK(t0.exit_code == 0);
    auto e0 = run("eval --checkpoint " + dir + "/run0/checkpoint.bin" +
                  " --splits " + dir + "/splits --out " + dir + "/eval0");
    CHECK(e0.exit_code == 0);
  }

  SUBCASE("output root env var reroutes relative out dirs") {
    fs::create_directories(dir + "/root");
    const std::string cmd = "ADAGCL_OUTPUT_ROOT=" + dir + "/root " + cli() +
                            " prepare --input " + dir +
                            "/data.tsv --out nested/splits 2>&1";
    const int status = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(status) == 0);
    CHECK(fs::exists(dir + "/root/nested/splits/manifest.json"));
  }

  fs::remove_all(dir);
}
