#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sys/wait.h>

#include "gtfs2vec/pipeline.hpp"
#include "gtfs2vec/similarity.hpp"
#include "support/fixture_run.hpp"
#include "support/temp_dir.hpp"

using namespace gtfs2vec;
using namespace testing_support;

namespace {

struct command_result {
  int exit_code{};
  std::string out;  // stdout only
};

command_result cli(std::string const& args) {
  std::string const cmd = std::string{GTFS2VEC_CLI} + " " + args + " 2>/dev/null";
  command_result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) {
    throw std::runtime_error("popen failed");
  }
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    r.out.append(buf.data(), n);
  }
  auto const status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(fs::path const& p) {
  std::ifstream in{p, std::ios::binary};
  return {std::istreambuf_iterator<char>{in}, std::istreambuf_iterator<char>{}};
}

std::string q(fs::path const& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_NE(cli("").exit_code, 0);
  EXPECT_NE(cli("frobnicate").exit_code, 0);
  EXPECT_NE(cli("similar --k 3").exit_code, 0);
  EXPECT_EQ(cli("--help").exit_code, 0);
}

TEST(Cli, StandaloneStagesReproduceTheFullRun) {
  temp_dir dir{"cli"};
  auto fx = make_fixture_run(dir.path(), {{"alpha", 51.00, 17.00, 6, 4, 3, 31},
                                          {"beta", 52.20, 21.00, 6, 5, 3, 32},
                                          {"small", 50.00, 19.00, 4, 2, 1, 33, 5}});
  // Full run through a config file.
  {
    std::ofstream cfg{dir / "run.cfg"};
    cfg << "output_dir = out\nseed = 42\n";
    for (auto const& c : fx.config.cities) {
      cfg << "\n[city]\nid = " << c.city_id << "\ngtfs = feeds/" << c.city_id
          << ".zip\npopulation = " << c.population << "\ndate = auto\n";
    }
  }
  auto const full = cli("run -q --config " + q(dir / "run.cfg"));
  ASSERT_EQ(full.exit_code, 0);
  EXPECT_EQ(full.out.rfind("stage,path,sha256\n", 0), 0u);
  auto const out = dir / "out";

  // The same stages one by one.
  auto const s = dir / "stages";
  for (auto const& c : fx.config.cities) {
    auto const r = cli("ingest --gtfs " + q(c.gtfs) + " --city " + c.city_id +
                       " --population " + std::to_string(c.population) +
                       " --out " + q(s / "ingest" / c.city_id));
    EXPECT_EQ(r.exit_code, c.city_id == "small" ? 3 : 0) << c.city_id;
  }
  ASSERT_EQ(cli("features --in " + q(s / "ingest/alpha") + " " + q(s / "ingest/beta") +
                " " + q(s / "ingest/small") + " --out " + q(s / "features.csv"))
                .exit_code,
            0);
  EXPECT_EQ(slurp(s / "features.csv"), slurp(out / "features.csv"));

  ASSERT_EQ(cli("train --features " + q(s / "features.csv") + " --norm-out " +
                q(s / "norm_params.txt") + " --out " + q(s / "model.txt") +
                " --loss-out " + q(s / "loss_history.csv"))
                .exit_code,
            0);
  EXPECT_EQ(slurp(s / "norm_params.txt"), slurp(out / "norm_params.txt"));
  EXPECT_EQ(slurp(s / "model.txt"), slurp(out / "model.txt"));
  EXPECT_EQ(slurp(s / "loss_history.csv"), slurp(out / "loss_history.csv"));

  ASSERT_EQ(cli("embed --model " + q(s / "model.txt") + " --features " +
                q(s / "features.csv") + " --norm " + q(s / "norm_params.txt") +
                " --out " + q(s / "embeddings.csv"))
                .exit_code,
            0);
  EXPECT_EQ(slurp(s / "embeddings.csv"), slurp(out / "embeddings.csv"));

  ASSERT_EQ(cli("cluster --embeddings " + q(s / "embeddings.csv") + " --features " +
                q(s / "features.csv") + " --cuts 3,9 --out-dir " + q(s))
                .exit_code,
            0);
  for (auto const* f : {"dendrogram.csv", "cuts.csv", "cluster_summary.csv"}) {
    EXPECT_EQ(slurp(s / f), slurp(out / f)) << f;
  }

  for (auto const* level : {"k3", "k9", "features"}) {
    auto const file = std::string{"map_"} + level + ".geojson";
    ASSERT_EQ(cli("export --features " + q(s / "features.csv") + " --cuts " +
                  q(s / "cuts.csv") + " --level " + level + " --out " + q(s / file))
                  .exit_code,
              0);
    EXPECT_EQ(slurp(s / file), slurp(out / file)) << file;
  }

  // Similarity search on the run's embeddings.
  auto const emb = embeddings_from_csv(slurp(out / "embeddings.csv"));
  auto const query = emb.front().region.str();
  auto const sim = cli("similar --embeddings " + q(out / "embeddings.csv") +
                       " --region " + query + " --k 4 --cross-city-only");
  ASSERT_EQ(sim.exit_code, 0);
  auto const expected = neighbors_to_csv(
      emb.front().region,
      embedding_index{emb}.nearest(emb.front().region, 4, search_filter{std::nullopt, true}));
  EXPECT_EQ(sim.out, expected);
  EXPECT_EQ(cli("similar --embeddings " + q(out / "embeddings.csv") +
                " --region nowhere:881e20408bfffff")
                .exit_code,
            1);
  auto const filtered = cli("similar --embeddings " + q(out / "embeddings.csv") +
                            " --region " + query + " --k 50 --cities beta");
  ASSERT_EQ(filtered.exit_code, 0);
  EXPECT_EQ(filtered.out.find(",alpha,"), std::string::npos);
  EXPECT_NE(filtered.out.find(",beta,"), std::string::npos);
}
