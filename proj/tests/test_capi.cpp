#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "adagcl.h"

namespace fs = std::filesystem;

namespace {

// small planted dataset written as a tsv file
std::string write_dataset(const std::string& path) {
  std::ofstream out(path);
  // 12 users x 12 items, 3 blocks; block b: users/items 4b..4b+3
  for (int b = 0; b < 3; ++b)
    for (int u = 0; u < 4; ++u)
      for (int v = 0; v < 4; ++v)
        if ((u + v) % 4 != 3)  // leave some pairs unobserved
          out << "u" << (4 * b + u) << "\tv" << (4 * b + v) << "\n";
  out << "u0\tv8\n";  // a little cross-block noise
  return path;
}

const char* kTinyConfig =
    "d = 8\nL = 2\nbatch_size = 32\nmax_epochs = 4\neval_every = 2\n"
    "learning_rate = 0.005\nseed = 7\n";

}  // namespace

TEST_CASE("version and checksum") {
  CHECK(std::string(adagcl_version()).find('.') != std::string::npos);
  char hex[17];
  CHECK(adagcl_checksum_file("definitely_missing_file", hex, sizeof(hex)) ==
        ADAGCL_ERR_DATA);
  CHECK(std::string(adagcl_last_error()).find("checksum") !=
        std::string::npos);
}

TEST_CASE("prepare -> train -> evaluate -> export, through the C surface") {
  const std::string dir = "capi_work";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string data = write_dataset(dir + "/data.tsv");

  // error path first: missing file maps to the data error code
  CHECK(adagcl_prepare("no_such_file.tsv", "tsv", 0, nullptr, 1, nullptr,
                       (dir + "/splits").c_str()) == ADAGCL_ERR_DATA);

  REQUIRE(adagcl_prepare(data.c_str(), "tsv", 0, "0.7,0.2,0.1", 42,
                         "per_user", (dir + "/splits").c_str()) == ADAGCL_OK);
  CHECK(fs::exists(dir + "/splits/manifest.json"));

  adagcl_splits* splits = adagcl_splits_open((dir + "/splits").c_str());
  REQUIRE(splits != nullptr);
  int64_t users = 0, items = 0, train = 0, val = 0, test = 0;
  REQUIRE(adagcl_splits_counts(splits, &users, &items, &train, &val, &test) ==
          ADAGCL_OK);
  CHECK(users == 12);
  CHECK(items == 12);
  CHECK(train + val + test == 37);

  adagcl_model* model =
      adagcl_train(splits, kTinyConfig, (dir + "/run").c_str());
  REQUIRE(model != nullptr);
  CHECK(fs::exists(dir + "/run/checkpoint.bin"));
  CHECK(fs::exists(dir + "/run/history.csv"));
  CHECK(fs::exists(dir + "/run/history.json"));
  CHECK(std::string(adagcl_model_config(model)).find("d = 8") !=
        std::string::npos);

  // evaluation: report files plus the single-metric accessor
  const int cutoffs[] = {5, 20};
  REQUIRE(adagcl_evaluate(model, splits, "test", cutoffs, 2,
                          (dir + "/eval.json").c_str(),
                          (dir + "/eval.csv").c_str()) == ADAGCL_OK);
  CHECK(fs::exists(dir + "/eval.json"));
  double recall = -1;
  REQUIRE(adagcl_metric(model, splits, "test", 20, "recall", &recall) ==
          ADAGCL_OK);
  CHECK(recall >= 0.0);
  CHECK(recall <= 1.0);
  CHECK(adagcl_metric(model, splits, "test", 20, "bogus", &recall) ==
        ADAGCL_ERR_USAGE);

  // export all three embedding views
  for (const char* which : {"main", "view1", "view2"}) {
    const std::string csv = dir + "/emb_" + which + ".csv";
    REQUIRE(adagcl_export_embeddings(model, splits, which, 5, csv.c_str()) ==
            ADAGCL_OK);
    std::ifstream in(csv);
    std::string line;
    int rows = 0;
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 1 + users + items);  // header + I + J
  }
  CHECK(adagcl_export_embeddings(model, splits, "nonsense", 5,
                                 (dir + "/x.csv").c_str()) ==
        ADAGCL_ERR_USAGE);

  // reload from the checkpoint (config embedded) and reproduce the metric
  adagcl_model* back =
      adagcl_model_load((dir + "/run/checkpoint.bin").c_str(), nullptr);
  REQUIRE(back != nullptr);
  double recall2 = -1;
  REQUIRE(adagcl_metric(back, splits, "test", 20, "recall", &recall2) ==
          ADAGCL_OK);
  CHECK(recall2 == doctest::Approx(recall));

  adagcl_model_close(back);
  adagcl_model_close(model);
  adagcl_splits_close(splits);
  fs::remove_all(dir);
}

TEST_CASE("lightgcn-config training skips the generators in the checkpoint") {
  const std::string dir = "capi_light";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_dataset(dir + "/data.tsv");
  REQUIRE(adagcl_prepare((dir + "/data.tsv").c_str(), "tsv", 0, nullptr, 1,
                         nullptr, (dir + "/splits").c_str()) == ADAGCL_OK);
  adagcl_splits* splits = adagcl_splits_open((dir + "/splits").c_str());
  REQUIRE(splits != nullptr);
  const char* cfg =
      "d = 4\nL = 1\nlambda1 = 0\nmax_epochs = 2\neval_every = 0\n"
      "batch_size = 16\n";
  adagcl_model* model = adagcl_train(splits, cfg, (dir + "/run").c_str());
  REQUIRE(model != nullptr);
  // view exports must fail cleanly without generators
  CHECK(adagcl_export_embeddings(model, splits, "view1", 1,
                                 (dir + "/v1.csv").c_str()) ==
        ADAGCL_ERR_USAGE);
  adagcl_model_close(model);
  adagcl_splits_close(splits);
  fs::remove_all(dir);
}

TEST_CASE("experiment: sweep on a tiny grid") {
  const std::string dir = "capi_exp";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_dataset(dir + "/data.tsv");
  REQUIRE(adagcl_prepare((dir + "/data.tsv").c_str(), "tsv", 0, nullptr, 1,
                         nullptr, (dir + "/splits").c_str()) == ADAGCL_OK);
  adagcl_splits* splits = adagcl_splits_open((dir + "/splits").c_str());
  REQUIRE(splits != nullptr);
  const char* cfg =
      "d = 4\nL = 1\nmax_epochs = 2\neval_every = 2\nbatch_size = 16\n";
  REQUIRE(adagcl_experiment(splits, "sweep", cfg, "{\"grid\":[0.1,0.01]}",
                            (dir + "/out").c_str()) == ADAGCL_OK);
  CHECK(fs::exists(dir + "/out/sweep.csv"));
  CHECK(fs::exists(dir + "/out/sweep.json"));
  CHECK(fs::exists(dir + "/out/sweep.svg"));

  // sweep csv is sorted by lambda1 descending
  std::ifstream in(dir + "/out/sweep.csv");
  std::string header, r1, r2;
  std::getline(in, header);
  std::getline(in, r1);
  std::getline(in, r2);
  CHECK(r1.substr(0, 4) == "0.1,");
  CHECK(r2.substr(0, 5) == "0.01,");

  CHECK(adagcl_experiment(splits, "bogus", cfg, nullptr,
                          (dir + "/out2").c_str()) == ADAGCL_ERR_USAGE);
  adagcl_splits_close(splits);
  fs::remove_all(dir);
}
