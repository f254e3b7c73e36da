#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(GREC_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

fs::path workdir() {
  const auto dir = fs::temp_directory_path() / "grec_test_cli";
  static bool cleared = false;
  if (!cleared) {
    fs::remove_all(dir);
    cleared = true;
  }
  fs::create_directories(dir);
  return dir;
}

const std::string kSmall =
    " --set d=8 --set f=16 --set encoder_dilations=1,2 --set decoder_dilations=1,2"
    " --set max_epochs=2 --set batch_size=32";

std::string synth_data() {
  const auto dir = workdir() / "synth";
  if (!fs::exists(dir / "train.txt")) {
    const auto r = run("synth --out " + dir.string() +
                       " --set synth.vocab=30 --set synth.sessions=200 --set synth.length=8 --seed 3");
    REQUIRE(r.code == 0);
  }
  return dir.string();
}

}  // namespace

TEST_CASE("synth writes splits and a config snapshot") {
  const auto dir = fs::path(synth_data());
  for (const char* f : {"train.txt", "valid.txt", "test.txt", "resolved_config.txt"}) {
    CHECK(fs::exists(dir / f));
  }
  CHECK(slurp(dir / "resolved_config.txt").find("synth.vocab=30") != std::string::npos);
  const auto again = workdir() / "synth_again";
  REQUIRE(run("synth --out " + again.string() +
              " --set synth.vocab=30 --set synth.sessions=200 --set synth.length=8 --seed 3")
              .code == 0);
  CHECK(slurp(again / "train.txt") == slurp(dir / "train.txt"));
}

TEST_CASE("train, eval and infer") {
  const auto data = synth_data();
  const auto grec = workdir() / "grec";
  const auto r = run("train --data " + data + " --model grec --out " + grec.string() + kSmall);
  REQUIRE(r.code == 0);
  for (const char* f : {"model.ckpt", "model_log.csv", "report.txt", "report.csv", "resolved_config.txt"}) {
    CHECK(fs::exists(grec / f));
  }
  const auto report = slurp(grec / "report.txt");
  for (const char* key : {"MRR@5=", "MRR@20=", "HR@5=", "HR@20=", "NDCG@5=", "NDCG@20="}) {
    CHECK(report.find(key) != std::string::npos);
  }
  CHECK(line_count(slurp(grec / "model_log.csv")) == 3);

  const auto next = workdir() / "nextitnet";
  CHECK(run("train --data " + data + " --model nextitnet --out " + next.string() + kSmall).code == 0);
  CHECK(fs::exists(next / "report.csv"));

  const auto ev = workdir() / "eval";
  const auto e = run("eval --data " + data + " --checkpoint " + (grec / "model.ckpt").string() +
                     " --out " + ev.string());
  CHECK(e.code == 0);
  CHECK(slurp(ev / "eval_test.txt").find("model=grec") != std::string::npos);
  CHECK(run("eval --data " + data + " --model nextitnet --checkpoint " +
            (grec / "model.ckpt").string() + " --out " + ev.string())
            .code != 0);

  const auto pop = workdir() / "mostpop";
  CHECK(run("eval --data " + data + " --model mostpop --split valid --out " + pop.string()).code == 0);
  CHECK(fs::exists(pop / "eval_valid.csv"));

  const auto inf = run("infer --checkpoint " + (grec / "model.ckpt").string() +
                       " --prefix \"3 9 4\" --topn 7");
  REQUIRE(inf.code == 0);
  std::istringstream lines(inf.out);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "rank\titem\tscore");
  int rank, item, rows = 0;
  double score;
  while (lines >> rank >> item >> score) {
    ++rows;
    CHECK(item >= 1);
    CHECK(item <= 30);
  }
  CHECK(rows == 7);
  CHECK(run("infer --checkpoint " + (grec / "model.ckpt").string() + " --prefix \"3 9 4\" --topn 31")
            .code != 0);
  CHECK(run("infer --checkpoint " + (grec / "model.ckpt").string() + " --prefix \"3 x\"").code != 0);
}

TEST_CASE("prep on a hand-countable log") {
  const auto dir = workdir();
  const auto raw = dir / "events.tsv";
  {
    std::ofstream out(raw);
    out << "a\tp\t1\na\tq\t2\nb\tq\t1\na\tr\t3\nc\ts\t5\nb\tr\t2\na\tp\t4\nb\tq\t3\na\tq\t5\n";
  }
  const std::string args = " --raw " + raw.string() +
                           " --set min_item_count=2 --set k=3 --set l=2 --seed 1";
  const auto r = run("prep --out " + (dir / "prep1").string() + args);
  REQUIRE(r.code == 0);
  // p:2 q:4 r:2 s:1 -> V=3; a gives [p q r] and [0 p q], b gives [q r q].
  CHECK(r.out == "sessions\titems\tk\ttrain\tvalid\ttest\n3\t3\t3\t1\t1\t1\n");
  CHECK(slurp(dir / "prep1" / "vocab.tsv").find("p") != std::string::npos);
  REQUIRE(run("prep --out " + (dir / "prep2").string() + args).code == 0);
  for (const char* f : {"train.txt", "valid.txt", "test.txt", "vocab.tsv", "resolved_config.txt"}) {
    CHECK(slurp(dir / "prep1" / f) == slurp(dir / "prep2" / f));
  }
  CHECK(run("prep --out " + (dir / "prep3").string() + " --raw " + raw.string() +
            " --set min_item_count=50")
            .code != 0);
}

TEST_CASE("ablation grids") {
  const auto data = synth_data();
  const auto gam = workdir() / "ablate_gamma";
  REQUIRE(run("ablate --data " + data + " --out " + gam.string() + kSmall +
              " --set max_epochs=1 --set ablate.gammas=0.1,0.3,0.5,0.7,1.0")
              .code == 0);
  const auto csv = slurp(gam / "ablation.csv");
  CHECK(line_count(csv) == 6);
  CHECK(csv.find("grec_gamma0.3,0.3,1,") != std::string::npos);

  const auto grid = workdir() / "ablate_grid";
  REQUIRE(run("ablate --data " + data + " --out " + grid.string() + kSmall +
              " --set max_epochs=1 --set ablate.variants=grec,grecn,nextitnet,nextitnetp")
              .code == 0);
  const auto g = slurp(grid / "ablation.csv");
  CHECK(line_count(g) == 5);
  CHECK(g.find("\ngrecn,0.5,0,grec,") != std::string::npos);
  CHECK(g.find("\nnextitnetp,0.5,1,nextitnet,") != std::string::npos);

  CHECK(run("ablate --data " + data + " --out " + (workdir() / "ablate_empty").string()).code != 0);
}

TEST_CASE("usage errors exit nonzero") {
  CHECK(run("").code != 0);
  CHECK(run("train --out /tmp/x").code != 0);
  CHECK(run("train --data /nonexistent --out " + (workdir() / "e1").string()).code != 0);
  CHECK(run("synth --out " + (workdir() / "e2").string() + " --set colour=red").code != 0);
  CHECK(run("eval --data " + synth_data() + " --model grec --out " + (workdir() / "e3").string())
            .code != 0);
}
