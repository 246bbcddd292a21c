#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xgen/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result xgen_run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Result r;
  r.code = xgen::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

// Fresh working directory with a small, fast config.
struct Workspace {
  fs::path root;
  fs::path config;

  explicit Workspace(const std::string& name, std::size_t epochs = 1) {
    root = fs::temp_directory_path() / ("xgen_unit_cli_" + name);
    fs::remove_all(root);
    fs::create_directories(root);
    config = root / "config.json";
    write_config(epochs);
  }

  void write_config(std::size_t epochs) const {
    const nlohmann::json j = {
        {"seed", 1},
        {"corpus", {{"count", 600}, {"all_content", 20}, {"limited_reasons", 20}, {"credit_only", 20}}},
        {"train",
         {{"d_emb", 8},
          {"d_hidden", 8},
          {"d_code", 8},
          {"d_noise", 4},
          {"d_cond", 4},
          {"d_reason", 4},
          {"gan_hidden", 8},
          {"clf_hidden", 8},
          {"components", 3},
          {"batch_size", 32},
          {"critic_steps", 1},
          {"max_steps_per_epoch", 3},
          {"epochs", epochs},
          {"patience", 0}}},
        {"paths",
         {{"data_dir", (root / "data").string()},
          {"checkpoint_dir", (root / "ckpt").string()},
          {"report_dir", (root / "reports").string()}}}};
    std::ofstream(config) << j.dump(2);
  }

  Result run(std::vector<std::string> args) const {
    args.insert(args.begin() + 1, {"--config", config.string()});
    return xgen_run(args);
  }

  fs::path ckpt(const std::string& run) const { return root / "ckpt" / (run + ".ckpt"); }
};

const Workspace& trained() {
  static const Workspace ws = [] {
    Workspace w("trained");
    REQUIRE(w.run({"datagen"}).code == 0);
    REQUIRE(w.run({"train", "--variant", "gm-2l-c"}).code == 0);
    REQUIRE(w.run({"train", "--variant", "style-aligned"}).code == 0);
    return w;
  }();
  return ws;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("default datagen emits 2432 pairs") {
  const fs::path root = fs::temp_directory_path() / "xgen_unit_cli_default";
  fs::remove_all(root);
  const fs::path cfg = root / "config.json";
  fs::create_directories(root);
  std::ofstream(cfg) << nlohmann::json{{"paths", {{"data_dir", (root / "data").string()}}}}.dump();
  REQUIRE(xgen_run({"datagen", "--config", cfg.string()}).code == 0);
  const auto manifest = nlohmann::json::parse(slurp(root / "data" / "manifest.json"));
  CHECK(manifest.at("pairs") == 2432);
  CHECK(count_lines(slurp(root / "data" / "corpus.jsonl")) == 2 * 2432);
}

TEST_CASE("datagen is byte-identical on rerun") {
  Workspace ws("datagen");
  REQUIRE(ws.run({"datagen"}).code == 0);
  std::map<std::string, std::string> first;
  for (const auto& e : fs::directory_iterator(ws.root / "data")) first[e.path().filename()] = slurp(e.path());
  REQUIRE(ws.run({"datagen"}).code == 0);
  for (const auto& [name, bytes] : first) CHECK(slurp(ws.root / "data" / name) == bytes);
}

TEST_CASE("datagen with an unusable path is a usage error") {
  Workspace ws("badpath");
  std::ofstream(ws.root / "blocker") << "x";
  const auto r = xgen_run({"datagen", "--config", (ws.root / "missing.json").string()});
  CHECK(r.code == 2);
  CHECK_FALSE(r.err.empty());

  const nlohmann::json j = {{"paths", {{"data_dir", (ws.root / "blocker" / "data").string()}}}};
  std::ofstream(ws.config) << j.dump();
  const auto r2 = ws.run({"datagen"});
  CHECK(r2.code == 2);
  CHECK(r2.err.find("data directory") != std::string::npos);
}

TEST_CASE("unknown subcommands and variants are usage errors") {
  CHECK(xgen_run({"frobnicate"}).code == 2);
  Workspace ws("badvariant");
  CHECK(ws.run({"train", "--variant", "nope"}).code == 2);
  CHECK(xgen_run({"--help"}).code == 0);
}

TEST_CASE("train writes a checkpoint, log and epoch reports") {
  const auto& ws = trained();
  CHECK(fs::exists(ws.ckpt("gm-2l-c-s1")));
  CHECK(fs::exists(ws.root / "ckpt" / "gm-2l-c-s1.log.jsonl"));
  CHECK(fs::exists(ws.root / "ckpt" / "gm-2l-c-s1.config.json"));
  const auto reports = slurp(ws.root / "reports" / "gm-2l-c-s1.epochs.jsonl");
  CHECK(count_lines(reports) == 4);
}

TEST_CASE("train honours --seed") {
  Workspace ws("seed");
  REQUIRE(ws.run({"datagen"}).code == 0);
  REQUIRE(ws.run({"train", "--variant", "base", "--seed", "3"}).code == 0);
  CHECK(fs::exists(ws.ckpt("base-s3")));
}

TEST_CASE("train without data fails") {
  Workspace ws("nodata");
  CHECK(ws.run({"train", "--variant", "base"}).code != 0);
}

TEST_CASE("resumed training is byte-identical to an uninterrupted run") {
  Workspace a("resume_a", 2);
  REQUIRE(a.run({"datagen"}).code == 0);
  REQUIRE(a.run({"train", "--variant", "gm-2l-c"}).code == 0);

  Workspace b("resume_b", 1);
  REQUIRE(b.run({"datagen"}).code == 0);
  REQUIRE(b.run({"train", "--variant", "gm-2l-c"}).code == 0);
  b.write_config(2);
  REQUIRE(b.run({"train", "--variant", "gm-2l-c", "--resume"}).code == 0);

  CHECK(slurp(a.ckpt("gm-2l-c-s1")) == slurp(b.ckpt("gm-2l-c-s1")));
  CHECK(slurp(a.root / "ckpt" / "gm-2l-c-s1.log.jsonl") == slurp(b.root / "ckpt" / "gm-2l-c-s1.log.jsonl"));
  // First-epoch reports carry the fingerprint of the shorter budget.
  const auto last_epoch = [](const fs::path& p) {
    std::vector<std::string> out;
    std::istringstream lines(slurp(p));
    for (std::string line; std::getline(lines, line);)
      if (nlohmann::json::parse(line).at("extra").at("epoch") == 2) out.push_back(line);
    return out;
  };
  const auto ra = last_epoch(a.root / "reports" / "gm-2l-c-s1.epochs.jsonl");
  CHECK(ra.size() == 4);
  CHECK(ra == last_epoch(b.root / "reports" / "gm-2l-c-s1.epochs.jsonl"));
  CHECK(count_lines(slurp(b.root / "reports" / "gm-2l-c-s1.epochs.jsonl")) == 8);
}

TEST_CASE("resume rejects a checkpoint from another config") {
  Workspace ws("resume_bad");
  REQUIRE(ws.run({"datagen"}).code == 0);
  REQUIRE(ws.run({"train", "--variant", "base"}).code == 0);
  auto j = nlohmann::json::parse(slurp(ws.config));
  j["train"]["lr_ae"] = 0.01;
  std::ofstream(ws.config) << j.dump();
  CHECK(ws.run({"train", "--variant", "base", "--resume"}).code == 1);
}

TEST_CASE("generate prints N labelled lines") {
  const auto& ws = trained();
  const auto ck = ws.ckpt("gm-2l-c-s1").string();
  const auto r = xgen_run({"generate", ck, "--broad", "credit", "--specific", "low credit score", "--n", "5"});
  REQUIRE(r.code == 0);
  CHECK(count_lines(r.out) == 5);
  std::istringstream lines(r.out);
  for (std::string line; std::getline(lines, line);) CHECK(line.rfind("credit/low credit score\t", 0) == 0);
  const auto again = xgen_run({"generate", ck, "--broad", "credit", "--specific", "low credit score", "--n", "5"});
  CHECK(again.out == r.out);
}

TEST_CASE("generate rejects an invalid reason pair") {
  const auto ck = trained().ckpt("gm-2l-c-s1").string();
  const auto r = xgen_run({"generate", ck, "--broad", "credit", "--specific", "low income"});
  CHECK(r.code == 2);
  CHECK(r.err.find("low credit score") != std::string::npos);
  CHECK(xgen_run({"generate", ck, "--broad", "weather", "--specific", "rain"}).code == 2);
  CHECK(xgen_run({"generate", "/nonexistent.ckpt", "--broad", "credit", "--specific", "x"}).code == 2);
}

TEST_CASE("transfer rewrites one line per input line in both directions") {
  const auto& ws = trained();
  const auto ck = ws.ckpt("style-aligned-s1").string();
  const fs::path input = ws.root / "input.txt";
  std::ofstream(input) << "your credit score is too low\n\nyou have no job history\n";
  for (const char* dir : {"edu2act", "act2edu"}) {
    const fs::path output = ws.root / (std::string(dir) + ".txt");
    const auto r = xgen_run({"transfer", ck, input.string(), "--direction", dir, "-o", output.string()});
    REQUIRE(r.code == 0);
    const auto text = slurp(output);
    CHECK(count_lines(text) == 3);
    std::istringstream lines(text);
    std::string first, second;
    std::getline(lines, first);
    std::getline(lines, second);
    CHECK(second.empty());
  }
  const fs::path empty = ws.root / "empty.txt";
  std::ofstream(empty).close();
  const auto r = xgen_run({"transfer", ck, empty.string(), "--direction", "edu2act"});
  CHECK(r.code == 0);
  CHECK(r.out.empty());
}

TEST_CASE("transfer refuses a conditional checkpoint and a bad direction") {
  const auto& ws = trained();
  const fs::path input = ws.root / "one.txt";
  std::ofstream(input) << "your income is low\n";
  CHECK(xgen_run({"transfer", ws.ckpt("gm-2l-c-s1").string(), input.string(), "--direction", "edu2act"}).code == 2);
  CHECK(xgen_run({"transfer", ws.ckpt("style-aligned-s1").string(), input.string(), "--direction", "up"}).code == 2);
}

TEST_CASE("eval writes json reports and a summary table") {
  const auto& ws = trained();
  const auto r = ws.run({"eval", ws.ckpt("gm-2l-c-s1").string(), ws.ckpt("style-aligned-s1").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("gm-2l-c") != std::string::npos);
  CHECK(r.out.find("style-aligned") != std::string::npos);
  const auto jsonl = slurp(ws.root / "reports" / "eval.jsonl");
  std::istringstream lines(jsonl);
  std::size_t n = 0;
  for (std::string line; std::getline(lines, line); ++n) CHECK_NOTHROW((void)nlohmann::json::parse(line));
  CHECK(n >= 8);
  CHECK(fs::exists(ws.root / "reports" / "summary.txt"));
}

TEST_CASE("eval refuses checkpoints from other data unless forced") {
  const auto& ws = trained();
  Workspace other("eval_other");
  auto j = nlohmann::json::parse(slurp(other.config));
  j["corpus"]["seed"] = 99;
  std::ofstream(other.config) << j.dump();
  REQUIRE(other.run({"datagen"}).code == 0);
  const auto ck = ws.ckpt("gm-2l-c-s1").string();
  CHECK(other.run({"eval", ck}).code == 1);
  CHECK(other.run({"eval", ck, "--force"}).code == 0);
}

TEST_CASE("the config environment variable is honoured") {
  Workspace ws("env");
  ::setenv(xgen::cli::kConfigEnv, ws.config.string().c_str(), 1);
  const auto r = xgen_run({"datagen"});
  ::unsetenv(xgen::cli::kConfigEnv);
  CHECK(r.code == 0);
  CHECK(fs::exists(ws.root / "data" / "manifest.json"));
}

}  // TEST_SUITE
