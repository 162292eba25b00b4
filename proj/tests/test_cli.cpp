#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / "geea_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
};

int run(const std::string& args, const fs::path& stdout_file = {}) {
  std::string cmd = std::string(GEEA_CLI_PATH) + " " + args;
  if (!stdout_file.empty()) cmd += " > " + stdout_file.string();
  cmd += " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

void write_config(const fs::path& p, int epochs) {
  std::ofstream out(p);
  out << R"({
  "epochs": )" << epochs
      << R"(, "batch_size": 30, "unsup_batch_size": 80,
  "learning_rate": 0.01, "dropout": 0.0, "temperature": 0.1,
  "patience": 100, "seed": 7,
  "dims": {"d": 16, "d_joint": 16, "d_z": 12, "gnn_layers": 1,
           "vae_hidden": [16], "decoder_hidden": [16, 24]}
})";
}

}  // namespace

TEST_CASE("verify-theory passes and exits 0") {
  Workspace ws;
  const fs::path out = ws.dir / "theory.txt";
  CHECK(run("verify-theory --trials 100 --seed 7", out) == 0);
  const std::string text = slurp(out);
  CHECK(text.find("PASS") != std::string::npos);
  CHECK(text.find("FAIL") == std::string::npos);
}

TEST_CASE("unknown commands and bad usage exit 2") {
  CHECK(run("frobnicate") == 2);
  CHECK(run("train") == 2);                       // missing required flags
  CHECK(run("eval-align --ckpt only") == 2);      // missing --data
  CHECK(run("") == 2);                            // no subcommand
}

TEST_CASE("missing data directory is a runtime failure, exit 1") {
  CHECK(run("stats --data /nonexistent/geea_data") == 1);
}

TEST_CASE("prepare -> train -> eval-align -> synthesize pipeline") {
  Workspace ws;
  const fs::path data = ws.dir / "data";
  const fs::path ckpt = ws.dir / "ckpt";
  const fs::path cfg = ws.dir / "cfg.json";
  write_config(cfg, 12);

  REQUIRE(run("prepare --synthetic --entities 60 --relations 6 --attributes 10 --d-img 6 "
              "--noise 0.1 --seed-fraction 0.3 --seed 3 --out " +
              data.string()) == 0);

  const fs::path stats_out = ws.dir / "stats.txt";
  REQUIRE(run("stats --data " + data.string(), stats_out) == 0);
  CHECK(slurp(stats_out).find("\"entities\": 60") != std::string::npos);

  REQUIRE(run("train --config " + cfg.string() + " --data " + data.string() + " --out " +
              ckpt.string()) == 0);
  CHECK(fs::exists(ckpt / "params.bin"));
  CHECK(fs::exists(ckpt / "config.json"));
  CHECK(fs::exists(ckpt / "train_log.jsonl"));
  const std::string log = slurp(ckpt / "train_log.jsonl");
  CHECK(log.find("\"l_ns\"") != std::string::npos);
  CHECK(log.find("\"total\"") != std::string::npos);

  const fs::path eval1 = ws.dir / "eval1.txt";
  REQUIRE(run("eval-align --ckpt " + ckpt.string() + " --data " + data.string(), eval1) == 0);
  const std::string eval_text = slurp(eval1);
  CHECK(eval_text.find("\"mrr\"") != std::string::npos);
  CHECK(eval_text.find("hits@1") != std::string::npos);

  // Idempotence: identical invocation, identical output.
  const fs::path eval2 = ws.dir / "eval2.txt";
  REQUIRE(run("eval-align --ckpt " + ckpt.string() + " --data " + data.string(), eval2) == 0);
  CHECK(slurp(eval1) == slurp(eval2));

  // Synthesis: exactly --count JSON lines on stdout.
  const fs::path synth_out = ws.dir / "synth.jsonl";
  REQUIRE(run("synthesize --ckpt " + ckpt.string() + " --data " + data.string() +
              " --mode unconditional --count 5 --seed 11",
              synth_out) == 0);
  const std::string synth_text = slurp(synth_out);
  CHECK(count_lines(synth_text) == 5);
  CHECK(synth_text.find("\"neighbors\"") != std::string::npos);
  CHECK(synth_text.find("\"nearest_image_entity\"") != std::string::npos);

  const fs::path cond_out = ws.dir / "cond.jsonl";
  REQUIRE(run("synthesize --ckpt " + ckpt.string() + " --data " + data.string() +
              " --mode conditional --count 3 --dangling-fraction 0.3 --seed 11",
              cond_out) == 0);
  CHECK(count_lines(slurp(cond_out)) == 3);

  // Synthesis metrics on a re-built split.
  const fs::path es_out = ws.dir / "es.txt";
  REQUIRE(run("eval-synth --ckpt " + ckpt.string() + " --data " + data.string() +
              " --dangling-fraction 0.3 --seed 3",
              es_out) == 0);
  CHECK(slurp(es_out).find("\"pre\"") != std::string::npos);
}

TEST_CASE("sweep-ratio emits one row per ratio and metric") {
  Workspace ws;
  const fs::path data = ws.dir / "data";
  const fs::path cfg = ws.dir / "cfg.json";
  const fs::path csv = ws.dir / "sweep.csv";
  write_config(cfg, 4);
  REQUIRE(run("prepare --synthetic --entities 40 --relations 5 --attributes 8 --d-img 5 "
              "--noise 0.1 --seed-fraction 0.4 --seed 2 --out " +
              data.string()) == 0);
  REQUIRE(run("sweep-ratio --config " + cfg.string() + " --data " + data.string() +
              " --ratios 0.5,1.0 --out " + csv.string()) == 0);
  const std::string text = slurp(csv);
  CHECK(text.find("ratio,metric,value") != std::string::npos);
  CHECK(count_lines(text) == 1 + 2 * 3);  // header + 2 ratios x 3 metrics
}
