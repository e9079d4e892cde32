#include <fstream>
#include <sstream>

#include "advface/cli.hpp"
#include "advface/config.hpp"
#include "advface/image_io.hpp"
#include "advface/metrics.hpp"
#include "../support.hpp"
#include "doctest.h"

using namespace advface;
using advface::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path write_tiny_config(const TempDir& dir) {
  const auto path = dir / "tiny.json";
  write_text_file(path, R"({
  "steps": 2, "pretrain_steps": 1, "batch_size": 2,
  "target": {"count": 5}, "source": {"count": 5},
  "ensemble_domains": [],
  "model": {"channel_scale": 0.25},
  "attack": {"iterations": 2}
})");
  return path;
}

void write_metrics(const fs::path& path, const std::string& variant, std::vector<double> aih) {
  MetricReport r;
  r.variant = variant;
  for (std::size_t i = 0; i < aih.size(); ++i) r.per_image.push_back({"img" + std::to_string(i), aih[i], std::nullopt});
  r.aih = aggregate(aih);
  write_text_file(path, dump_json(report_to_json(r)));
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors") {
    TempDir dir("cli_usage");
    auto r = cli({});
    CHECK(r.code != 0);
    r = cli({"train", "--out", dir.path().string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("--config") != std::string::npos);
    r = cli({"train", "--config", (dir / "missing.json").string(), "--out", dir.path().string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("not found") != std::string::npos);
    CHECK(r.err.find("Usage") != std::string::npos);
    const auto cfg = write_tiny_config(dir).string();
    r = cli({"train", "--config", cfg, "--set", "variant=PGD-7", "--out", dir.path().string()});
    CHECK(r.code == kExitConfig);
    r = cli({"train", "--config", cfg, "--set", "model.bogus=1", "--out", dir.path().string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("model.bogus") != std::string::npos);
  }

  TEST_CASE("protect: gradient methods need a checkpoint, random does not") {
    TempDir dir("cli_protect");
    const auto cfg = write_tiny_config(dir).string();
    auto r = cli({"protect", "--config", cfg, "--set", "attack.method=pgd", "--out", (dir / "a").string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("checkpoint") != std::string::npos);
    r = cli({"protect", "--config", cfg, "--set", "variant=Random", "--out", (dir / "b").string()});
    CHECK(r.code == kExitOk);
    CHECK(fs::exists(dir / "b" / "protected" / "protection.json"));
    CHECK(list_images(dir / "b" / "protected").size() == 4);
  }

  TEST_CASE("pretrain, protect with zero budget, train and eval") {
    TempDir dir("cli_flow");
    const auto cfg = write_tiny_config(dir).string();
    auto r = cli({"pretrain", "--config", cfg, "--set", "pretrain_steps=0", "--out", (dir / "pre").string()});
    REQUIRE(r.code == kExitOk);
    const auto ckpt = (dir / "pre" / "checkpoints" / "final").string();
    CHECK(fs::exists(ckpt));
    CHECK(fs::exists(dir / "pre" / "provenance.json"));

    r = cli({"protect", "--config", cfg, "--set", "checkpoint=" + ckpt, "--set", "attack.epsilon=0", "--out",
             (dir / "zero").string()});
    REQUIRE(r.code == kExitOk);
    cli({"protect", "--config", cfg, "--set", "protect.input=" + (dir / "zero" / "protected").string(), "--set",
         "variant=Random", "--set", "attack.epsilon=0", "--out", (dir / "zero2").string()});
    for (const auto& p : list_images(dir / "zero" / "protected")) {
      // epsilon 0 leaves the input codes untouched
      auto again = dir / "zero2" / "protected" / p.filename().string();
      CHECK(file_bytes(p) == file_bytes(again));
    }

    r = cli({"train", "--config", cfg, "--set", "variant=PGD-01", "--set", "pretrained_checkpoint=" + ckpt, "--out",
             (dir / "run").string()});
    REQUIRE(r.code == kExitOk);
    CHECK(fs::exists(dir / "run" / "logs" / "attacker" / "loss_log.csv"));
    r = cli({"eval", "--config", cfg, "--out", (dir / "run").string()});
    REQUIRE(r.code == kExitOk);
    CHECK(fs::exists(dir / "run" / "reports" / "metrics.json"));
    CHECK(list_images(dir / "run" / "reports" / "swapped").size() == 1);

    r = cli({"eval", "--config", cfg, "--set", "source.holdout_fraction=0", "--out", (dir / "run").string()});
    CHECK(r.code != kExitOk);
    r = cli({"eval", "--config", cfg, "--out", (dir / "nothing").string()});
    CHECK(r.code == kExitConfig);

    r = cli({"report", (dir / "run").string(), "--out", (dir / "rep").string()});
    REQUIRE(r.code == kExitOk);
    auto csv = read_text_file(dir / "rep" / "reports" / "comparison.csv");
    CHECK(csv.find("white-box,PGD-01,1,1,") != std::string::npos);
    CHECK(fs::exists(dir / "rep" / "reports" / "aih.png"));
    CHECK(fs::exists(dir / "rep" / "reports" / "loss_total_G.png"));
  }

  TEST_CASE("report: pass-through, grouping, conflicts and unknown labels") {
    TempDir dir("cli_report");
    write_metrics(dir / "a.json", "Original", {1.0, 3.0});
    write_metrics(dir / "b.json", "Original", {5.0, 7.0});
    write_metrics(dir / "c.json", "Lite", {2.0});
    auto r = cli({"report", (dir / "a.json").string(), (dir / "c.json").string(), "--out", (dir / "one").string()});
    REQUIRE(r.code == kExitOk);
    auto csv = read_text_file(dir / "one" / "reports" / "comparison.csv");
    CHECK(csv.find("white-box,Original,1,2,2,1,,,,,\n") != std::string::npos);
    CHECK(csv.find("black-box,Lite,1,1,2,0,") != std::string::npos);

    r = cli({"report", (dir / "a.json").string(), (dir / "b.json").string(), "--out", (dir / "two").string()});
    REQUIRE(r.code == kExitOk);
    csv = read_text_file(dir / "two" / "reports" / "comparison.csv");
    CHECK(csv.find("white-box,Original,2,4,4,2,") != std::string::npos);

    write_metrics(dir / "d.json", "Mystery", {1.0});
    r = cli({"report", (dir / "d.json").string(), "--out", (dir / "bad").string()});
    CHECK(r.code == kExitConfig);

    fs::create_directories(dir / "run" / "reports");
    write_metrics(dir / "run" / "reports" / "metrics.json", "Lite", {1.0});
    write_text_file(dir / "run" / "provenance.json", R"({"variant": "Ensemble"})");
    r = cli({"report", (dir / "run").string(), "--out", (dir / "conflict").string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("conflicting") != std::string::npos);

    r = cli({"report", (dir / "nowhere").string(), "--out", (dir / "x").string()});
    CHECK(r.code == kExitInput);
  }
}
