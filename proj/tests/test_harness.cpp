#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "arlab/harness/checkpoint.hpp"
#include "arlab/harness/commands.hpp"
#include "arlab/harness/config.hpp"
#include "arlab/harness/csv.hpp"

using namespace arlab;
using namespace arlab::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const char* env = std::getenv("ARLAB_TEST_TMP");
  const fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "arlab_test_harness";
  const fs::path p = root / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

ExperimentConfig tiny(const fs::path& out) {
  ExperimentConfig c;
  c.task.d = 5;
  c.task.k = 3;
  c.task.length = 6;
  c.pretrain.steps = 12;
  c.pretrain.batch = 8;
  c.pretrain.checkpoint_every = 4;
  c.posttrain.steps = 8;
  c.posttrain.batch = 16;
  c.eval.test_size = 128;
  c.eval.error_test_size = 64;
  c.eval.eval_every = 4;
  c.eval.checkpoint_every = 4;
  c.eval.tracked_centers = 2;
  c.output.dir = out.string();
  c.output.seed = 5;
  return c;
}

std::vector<std::string> header_of(const fs::path& p) { return read_csv(p).header; }

}  // namespace

TEST_CASE("config: defaults, round trip and presets") {
  const ExperimentConfig d = parse_config("");
  CHECK(d == ExperimentConfig{});
  for (const auto& c : {ExperimentConfig{}, fig1_preset(), fig2_preset()}) {
    CHECK(parse_config(to_ini(c)) == c);
  }
  ExperimentConfig odd;
  odd.posttrain.optimizer.lr = 0.1 + 0.2;
  odd.task.teacher_seed = 123456789012345ULL;
  odd.eval.eps_grid = {0.015, 1.0 / 3.0};
  odd.lowerbound.algorithms = {"pg_or_uniform"};
  CHECK(parse_config(to_ini(odd)) == odd);
}

TEST_CASE("config: parsing values and comments") {
  const auto c = parse_config(
      "# leading comment\n"
      "[task]\nkind = hypercube\nd = 7\nk = 3\nN = 9\nteacher_seed = auto\n"
      "; other comment\n[posttrain]\nreward = process\nm = 12\n"
      "[eval]\neps_grid = 0.1, 0.2\n[output]\nseed = 42\nthreads = 2\n");
  CHECK(c.task.kind == "hypercube");
  CHECK(c.task.d == 7);
  CHECK(c.task.length == 9);
  CHECK(!c.task.teacher_seed.has_value());
  CHECK(c.posttrain.reward == "process");
  CHECK(c.posttrain.m == 12);
  CHECK(c.eval.grid() == std::vector<double>{0.1, 0.2});
  CHECK(c.output.seed == 42);
  CHECK(c.output.threads == 2);
  CHECK(ExperimentConfig{}.eval.grid().size() == 50);
}

TEST_CASE("config: every bad key is reported") {
  try {
    parse_config("[task]\nd = 4\nbogus = 1\n[nosuch]\nx = 1\n[pretrain]\nsteps = many\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const auto& keys = e.keys();
    CHECK(std::find(keys.begin(), keys.end(), "task.bogus") != keys.end());
    CHECK(std::find(keys.begin(), keys.end(), "pretrain.steps") != keys.end());
    CHECK(std::any_of(keys.begin(), keys.end(),
                      [](const std::string& k) { return k.rfind("nosuch", 0) == 0; }));
  }
  ExperimentConfig bad;
  bad.task.k = 1;
  bad.pretrain.batch = 0;
  bad.posttrain.algorithm = "nope";
  try {
    bad.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.keys().size() >= 3);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/arlab.ini"), ConfigError);
}

TEST_CASE("checkpoint byte layout and round trip") {
  const fs::path dir = scratch("ckpt");
  const CheckpointMeta meta{3, 2, 4, "experiment", 17};
  const std::vector<double> w{1.5, -0.25, 3.0e-300, 7.0};
  const fs::path p = dir / checkpoint_name(17);
  CHECK(p.filename() == "ckpt_00000017.bin");
  write_checkpoint(p, meta, w);
  const std::string bytes = slurp(p);
  REQUIRE(bytes.size() == 48 + 8 * w.size());
  CHECK(bytes.substr(0, 8) == "ARLABCKP");
  CHECK(static_cast<unsigned char>(bytes[8]) == 1);
  CHECK(static_cast<unsigned char>(bytes[16]) == 3);
  CHECK(static_cast<unsigned char>(bytes[20]) == 2);
  CHECK(static_cast<unsigned char>(bytes[24]) == 4);
  CHECK(static_cast<unsigned char>(bytes[28]) == 1);
  CHECK(static_cast<unsigned char>(bytes[32]) == 17);
  CHECK(static_cast<unsigned char>(bytes[40]) == 4);
  double first = 0.0;
  std::copy_n(bytes.data() + 48, 8, reinterpret_cast<char*>(&first));
  CHECK(first == 1.5);

  const auto back = read_checkpoint(p);
  CHECK(back.meta == meta);
  CHECK(back.w == w);
  CHECK(!fs::exists(dir / "ckpt_00000017.bin.tmp"));

  write_checkpoint(dir / checkpoint_name(3), meta, w);
  const auto listed = list_checkpoints(dir);
  REQUIRE(listed.size() == 2);
  CHECK(listed[0].filename() == "ckpt_00000003.bin");
}

TEST_CASE("checkpoint corruption is detected") {
  const fs::path dir = scratch("corrupt");
  const CheckpointMeta meta{2, 2, 2, "dense", 0};
  const fs::path p = dir / "a.bin";
  write_checkpoint(p, meta, std::vector<double>{1, 2, 3});
  const std::string good = slurp(p);
  auto write_bytes = [&](const std::string& s) { std::ofstream(p, std::ios::binary) << s; };

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  write_bytes(bad_magic);
  CHECK_THROWS_AS(read_checkpoint(p), FormatError);

  std::string bad_version = good;
  bad_version[8] = 9;
  write_bytes(bad_version);
  CHECK_THROWS_AS(read_checkpoint(p), FormatError);

  write_bytes(good.substr(0, good.size() - 3));
  CHECK_THROWS_AS(read_checkpoint(p), FormatError);

  write_bytes(good + "extra");
  CHECK_THROWS_AS(read_checkpoint(p), FormatError);

  CHECK_THROWS_AS(read_checkpoint(dir / "missing.bin"), FormatError);
}

TEST_CASE("teacher sidecar round trip") {
  const fs::path dir = scratch("teacher");
  const Teacher t = Teacher::draw(4, 3, 11);
  write_teacher(dir / "teacher.bin", t);
  const auto back = read_teacher(dir / "teacher.bin");
  CHECK(back->d == 4);
  CHECK(back->k == 3);
  CHECK(back->w1 == t.w1);
  CHECK(back->w2 == t.w2);
  CHECK_THROWS_AS(read_checkpoint(dir / "teacher.bin"), FormatError);
}

TEST_CASE("csv writer and reader") {
  const fs::path dir = scratch("csv");
  CsvWriter w(dir / "t.csv", {"a", "b"});
  w.row(1, 0.1);
  w.row(2, 1.0 / 3.0);
  CHECK_THROWS(w.row(1));
  w.close();
  const auto t = read_csv(dir / "t.csv");
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.number(1, "b") == 1.0 / 3.0);
  CHECK(t.rows[0][1] == "0.1");
  CHECK_THROWS(t.column("c"));
}

TEST_CASE("pretrain with zero steps leaves the uniform error") {
  auto c = tiny(scratch("zero"));
  c.pretrain.steps = 0;
  const auto r = cmd_pretrain(c);
  CHECK(r.steps == std::vector<std::int64_t>{0});
  CHECK(r.final_error == doctest::Approx(1.0 - std::pow(3.0, -6.0)).epsilon(1e-12));
}

TEST_CASE("pretrain -> posttrain -> lq pipeline") {
  const fs::path root = scratch("pipe");
  auto c = tiny(root / "pre");
  const auto pre = cmd_pretrain(c);
  CHECK(pre.steps == std::vector<std::int64_t>{0, 4, 8, 12});
  CHECK(fs::exists(root / "pre" / "teacher.bin"));
  CHECK(fs::exists(root / "pre" / "config.ini"));
  CHECK(load_config((root / "pre" / "config.ini").string()) == c);
  CHECK(header_of(root / "pre" / "error.csv") ==
        std::vector<std::string>{"step", "expected_error", "offsupport_avg_likelihood",
                                 "onsupport_avg_likelihood"});
  CHECK(header_of(root / "pre" / "train.csv") ==
        std::vector<std::string>{"step", "eta", "mean_reward", "query_delta",
                                 "cumulative_queries", "correct_fraction"});

  for (const std::string reward : {"outcome", "process"}) {
    auto p = tiny(root / reward);
    p.posttrain.reward = reward;
    p.posttrain.base_checkpoint = pre.checkpoints.back().string();
    const auto post = cmd_posttrain(p);
    std::vector<std::int64_t> eval_steps;
    for (const auto& e : post.evals) eval_steps.push_back(e.step);
    CHECK(eval_steps == std::vector<std::int64_t>{0, 4, 8});
    REQUIRE(post.cumulative_queries.size() == 8);
    if (reward == "outcome") CHECK(post.cumulative_queries.back() == 8u * 16u);
    CHECK(std::is_sorted(post.cumulative_queries.begin(), post.cumulative_queries.end()));
    CHECK(post.tracked_centers.size() <= 2);
    CHECK(header_of(root / reward / "error_greedy.csv") ==
          std::vector<std::string>{"step", "greedy_error"});
    CHECK(header_of(root / reward / "centers.csv") ==
          std::vector<std::string>{"step", "center_id", "likelihood_log10",
                                   "initial_likelihood_log10"});
    CHECK(fs::exists(post.final_checkpoint));
  }

  auto l = tiny(root / "lq");
  l.eval.eps_grid = {0.1, 0.5};
  l.eval.cdf_points = 10;
  const auto rows = cmd_lq(l, {pre.checkpoints.front(), pre.checkpoints.back()});
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].checkpoint_step == 0);
  CHECK(rows[0].q_log10 == doctest::Approx(-6.0 * std::log10(3.0)).epsilon(1e-12));
  CHECK(rows[1].q_log10 == doctest::Approx(-6.0 * std::log10(3.0)).epsilon(1e-12));
  CHECK(rows[2].q_log10 <= rows[3].q_log10);
  CHECK(header_of(root / "lq" / "lq.csv") ==
        std::vector<std::string>{"checkpoint_step", "epsilon", "q_log10"});
  const auto cdf = read_csv(root / "lq" / "cdf.csv");
  CHECK(cdf.header == std::vector<std::string>{"checkpoint_step", "likelihood_log10", "cdf"});
  CHECK(cdf.rows.size() == 20);

  // Empty list: every checkpoint of the output dir.
  auto all = tiny(root / "pre");
  all.eval.eps_grid = {0.2};
  CHECK(cmd_lq(all).size() == 4);
}

TEST_CASE("posttrain rejects a base of the wrong shape") {
  const fs::path root = scratch("mismatch");
  const auto pre = cmd_pretrain(tiny(root / "pre"));
  auto p = tiny(root / "post");
  p.task.d = 6;
  p.posttrain.base_checkpoint = pre.checkpoints.back().string();
  try {
    cmd_posttrain(p);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.keys() == std::vector<std::string>{"posttrain.base_checkpoint"});
  }
}

TEST_CASE("reruns are byte-identical, independent of thread count") {
  const fs::path root = scratch("determinism");
  auto run = [&](const std::string& name, unsigned threads) {
    auto c = tiny(root / name / "pre");
    c.output.threads = threads;
    const auto pre = cmd_pretrain(c);
    auto p = tiny(root / name / "post");
    p.output.threads = threads;
    p.posttrain.reward = "process";
    p.posttrain.base_checkpoint = pre.checkpoints.back().string();
    cmd_posttrain(p);
  };
  run("a", 1);
  run("b", 1);
  run("c", 3);
  for (const std::string f : {"pre/ckpt_00000012.bin", "pre/error.csv", "post/ckpt_00000008.bin",
                              "post/error.csv", "post/train.csv", "post/centers.csv"}) {
    INFO(f);
    const std::string a = slurp(root / "a" / f);
    CHECK(!a.empty());
    CHECK(a == slurp(root / "b" / f));
    CHECK(a == slurp(root / "c" / f));
  }
}

TEST_CASE("guessing and verify commands write their tables") {
  const fs::path root = scratch("small");
  auto c = tiny(root);
  c.guessing.m_grid = {2, 4};
  c.guessing.trials = 2000;
  const auto rows = cmd_guessing(c);
  CHECK(rows.size() == 2 * (2 + 4));
  for (const auto& r : rows) {
    if (r.strategy == "optimal") CHECK(r.exact == doctest::Approx(double(r.m - r.l) / r.m));
  }
  CHECK(header_of(root / "guessing.csv") ==
        std::vector<std::string>{"m", "l", "strategy", "miss_rate", "exact_optimal",
                                 "binomial_sigma"});
}

TEST_CASE("budget helpers") {
  // Q((1 - 0.1) * 0.5) = 0.45 quantile of {log 1/8} is 1/8: m = 8.
  const std::vector<double> l(10, std::log(1.0 / 8.0));
  CHECK(derive_m_outcome(l, 0.5, 0.1, 4, 4) == 8);
  // Saturates at k^N.
  const std::vector<double> tiny_l(10, std::log(1e-9));
  CHECK(derive_m_outcome(tiny_l, 0.5, 0.1, 4, 4) == 256);
  // Token level: ceil(2 (ln 6 + 1) * min(4, 4)).
  const std::vector<double> tl(10, std::log(0.25));
  CHECK(derive_m_process(tl, 0.2, 0.1, 4, 6) ==
        static_cast<std::int64_t>(std::ceil(2.0 * (std::log(6.0) + 1.0) * 4.0)));
}
