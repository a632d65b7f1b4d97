#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Run {
  int status;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(SLM_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  const int raw = pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

struct Workspace {
  fs::path dir;
  Workspace() : dir(fs::temp_directory_path() / "slm_cli_test") {
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream corpus(dir / "corpus.txt");
    for (int s = 0; s < 30; ++s) {
      const int len = 3 + s % 4;
      for (int i = 0; i < len; ++i) corpus << (i ? " " : "") << "w" << (s + i) % 5;
      corpus << '\n';
    }
    std::ofstream cfg(dir / "cfg.txt");
    cfg << "layers=1\nd_model=16\nheads=2\nd_ff=32\nmax_len=12\ntotal_steps=20\nwarmup_steps=4\n"
        << "lr_peak=0.003\nbatch_tokens=48\nlog_interval=5\n";
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string p(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("train, score and reproduce byte-identical outputs") {
  Workspace w;
  for (const char* model : {"slm", "mlm"}) {
    for (const char* out : {"a", "b"}) {
      const Run r = run(std::string("train --model ") + model + " --config " + w.p("cfg.txt") + " --corpus " +
                        w.p("corpus.txt") + " --out " + w.p(std::string(model) + out) + " --seed 7");
      REQUIRE_MESSAGE(r.status == 0, r.out);
    }
    const fs::path a = w.dir / (std::string(model) + "a"), b = w.dir / (std::string(model) + "b");
    CHECK(slurp(a / "model.ckpt") == slurp(b / "model.ckpt"));
    CHECK(slurp(a / "loss.csv") == slurp(b / "loss.csv"));
    CHECK(slurp(a / "loss.csv").rfind("step,lr,loss\n", 0) == 0);
    CHECK(fs::exists(a / "vocab.txt"));

    const std::string score = std::string("score --model ") + model + " --k 2 --per-token --seed 3 --input " +
                              w.p("corpus.txt") + " --ckpt ";
    const Run sa = run(score + (a / "model.ckpt").string());
    const Run sb = run(score + (b / "model.ckpt").string());
    REQUIRE_MESSAGE(sa.status == 0, sa.out);
    CHECK(sa.out == sb.out);
    CHECK(sa.out.rfind("sentence_id\ttotal_logprob\tn_tokens\tpasses\tper_token\n", 0) == 0);
    // First corpus line has 3 real tokens.
    const std::string expected_passes = std::string(model) == "slm" ? "\t1\t" : "\t2\t";
    CHECK(sa.out.find("\n0\t") != std::string::npos);
    CHECK(sa.out.find("\t3" + expected_passes) != std::string::npos);
  }
}

TEST_CASE("errors are single prefixed lines with nonzero exit") {
  Workspace w;
  const Run missing = run("score --ckpt " + w.p("nope.ckpt") + " --input " + w.p("corpus.txt"));
  CHECK(missing.status != 0);
  CHECK(missing.out.rfind("error[io]: ", 0) == 0);
  CHECK(std::count(missing.out.begin(), missing.out.end(), '\n') == 1);

  const Run short_mask = run("masks dump --len 2");
  CHECK(short_mask.status != 0);
  CHECK(short_mask.out.rfind("error[length]: ", 0) == 0);

  const Run bad_cfg = run("train --config " + w.p("corpus.txt") + " --corpus " + w.p("corpus.txt") + " --out " +
                          w.p("x"));
  CHECK(bad_cfg.status != 0);
  CHECK(bad_cfg.out.rfind("error[contract]: ", 0) == 0);

  const Run usage = run("score");
  CHECK(usage.status != 0);
  CHECK(usage.out.rfind("error[usage]: ", 0) == 0);
}

TEST_CASE("masks and cost reports") {
  const Run m = run("masks dump --len 3 --format ascii");
  REQUIRE(m.status == 0);
  CHECK(m.out.find("#..\n##.\n###") != std::string::npos);
  const Run c = run("analyze cost --n 20 --k 1,2,3");
  REQUIRE(c.status == 0);
  CHECK(c.out.find("mlm\t3\t20\t7\tx7") != std::string::npos);
  CHECK(c.out.find("slm\t-\t20\t1\tx3") != std::string::npos);
  CHECK(c.out.find("bilm\t-\t20\t1\tx2") != std::string::npos);
}

TEST_CASE("vocabulary building is byte-identical across runs") {
  Workspace w;
  REQUIRE(run("build-vocab --corpus " + w.p("corpus.txt") + " --out " + w.p("v1.txt")).status == 0);
  REQUIRE(run("build-vocab --corpus " + w.p("corpus.txt") + " --out " + w.p("v2.txt")).status == 0);
  CHECK(slurp(w.dir / "v1.txt") == slurp(w.dir / "v2.txt"));
  CHECK(slurp(w.dir / "v1.txt").rfind("<pad>\n<s>\n</s>\n<unk>\n<mask>\n", 0) == 0);
}
