// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
//
//   arlab_acceptance OUT_DIR [criterion ...]
//
// With no criterion names every check runs. Names: fig1 fig2 oracles guessing
// identities rates queries determinism.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "arlab/evaluation.hpp"
#include "arlab/harness/commands.hpp"

using namespace arlab;
using namespace arlab::harness;
namespace fs = std::filesystem;

namespace {

unsigned worker_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string join_checks(const std::vector<CheckLine>& checks) {
  std::string s;
  for (const auto& c : checks) {
    if (!s.empty()) s += "; ";
    s += fmt::format("{}{}={}", c.passed ? "" : "!", c.name, c.detail);
  }
  return s;
}

CheckLine fig1(const fs::path& root) {
  auto cfg = fig1_preset();
  cfg.output.dir = (root / "fig1").string();
  cfg.output.threads = worker_threads();
  const auto r = cmd_reproduce_fig1(cfg);
  return {"fig1_reproduction", all_passed(r.checks), join_checks(r.checks)};
}

CheckLine fig2(const fs::path& root) {
  auto cfg = fig2_preset();
  cfg.output.dir = (root / "fig2").string();
  cfg.output.threads = worker_threads();
  const auto r = cmd_reproduce_fig2(cfg);
  return {"fig2_reproduction", all_passed(r.checks), join_checks(r.checks)};
}

CheckLine oracles(const fs::path&) {
  const auto checks = run_oracle_suite(0, 100);
  bool ok = true;
  std::string detail;
  for (const auto& c : checks) {
    ok = ok && c.passed;
    if (!detail.empty()) detail += "; ";
    detail += fmt::format("{}{} {:.3g}/{:.3g}", c.passed ? "" : "!", c.name, c.observed, c.threshold);
  }
  return {"oracle_suite", ok, detail};
}

CheckLine guessing(const fs::path& root) {
  ExperimentConfig cfg;
  cfg.guessing.m_grid = {2, 4, 8, 16};
  cfg.guessing.trials = 100000;
  cfg.output.dir = (root / "guessing").string();
  bool ok = true;
  int rows = 0;
  double worst = 0.0;  // largest |miss - exact| in units of sigma
  for (const auto& r : cmd_guessing(cfg)) {
    if (r.strategy != "optimal") continue;
    ++rows;
    const double dev = std::abs(r.miss - r.exact);
    if (r.sigma == 0.0) {
      ok = ok && dev == 0.0;
    } else {
      ok = ok && dev <= 3.0 * r.sigma;
      worst = std::max(worst, dev / r.sigma);
    }
  }
  ok = ok && rows == 2 + 4 + 8 + 16;
  return {"guessing_optimal_miss", ok, fmt::format("{} (m,l) rows, max deviation {:.2f} sigma", rows, worst)};
}

HardInstance hard(int k, int length, std::uint64_t seed) {
  HardInstanceConfig cfg;
  cfg.k = k;
  cfg.length = length;
  Rng rng(seed);
  return build_hard_instance(cfg, rng);
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

CheckLine identities(const fs::path&) {
  const auto hi = hard(4, 4, 11);
  const std::size_t dim = hi.task.features->dim();

  // (a) clipped at zeta = 1 vs plain, step by step.
  double clip_diff = 0.0;
  {
    PgConfig plain;
    plain.behavior = BehaviorPolicy{BehaviorKind::mixture_base_uniform, hi.base, 1};
    PgConfig clipped = plain;
    clipped.algorithm = PgAlgorithm::or_clipped;
    clipped.zeta = 1.0;
    std::vector<Weights> a;
    std::size_t t = 0;
    RunOptions o;
    o.steps = 5000;
    o.seed = 3;
    o.observer = [&](std::int64_t, std::span<const double> w) { a.emplace_back(w.begin(), w.end()); };
    const RewardModel rm_a(RewardKind::outcome, hi.task.label, 4);
    pg_run(hi.task, plain, rm_a, LrRule::adaptive(4.0, 2.0), Weights(dim, 0.0), o);
    o.observer = [&](std::int64_t, std::span<const double> w) {
      clip_diff = std::max(clip_diff, max_abs_diff(a.at(t++), w));
    };
    const RewardModel rm_b(RewardKind::outcome, hi.task.label, 4);
    pg_run(hi.task, clipped, rm_b, LrRule::adaptive(4.0, 2.0), Weights(dim, 0.0), o);
    if (t != a.size()) clip_diff = INFINITY;
  }

  // (b) PG-PR on a correct rollout vs one SGD step, from random weights on every context.
  double sgd_diff = 0.0;
  {
    Rng wr(5);
    Weights w0(dim);
    for (double& v : w0) v = 0.5 * standard_normal(wr);
    for (const auto& x : hi.task.support->contexts) {
      Task pinned = hi.task;
      pinned.sample = [x](Rng&) { return x; };
      RunOptions o;
      o.steps = 1;
      const auto sgd = sgd_run(pinned, LrRule::constant(0.3), w0, o);
      Weights w = w0;
      Optimizer opt(LrRule::constant(0.3), dim);
      const RewardModel rm(RewardKind::process, hi.task.label, 4);
      Rng rng(1);
      const auto out = pg_pr_step(w, pinned, BehaviorPolicy{BehaviorKind::ground_truth, nullptr, 1},
                                  rm, AdvantageKind::simple, opt, rng);
      sgd_diff = std::max(sgd_diff, out.row.reward == 1.0 ? max_abs_diff(w, sgd.final) : INFINITY);
    }
  }

  // (c) whenever PG-OR fires, the direction is grad log p_w(y* | x).
  double fire_diff = 0.0;
  int fired = 0;
  {
    const RewardModel rm(RewardKind::outcome, hi.task.label, 4);
    Optimizer opt(LrRule::adaptive(4.0, 2.0), dim);
    Weights w(dim, 0.0);
    const BehaviorPolicy uniform{BehaviorKind::uniform, nullptr, 1};
    for (std::int64_t t = 0; t < 20000; ++t) {
      const Weights before = w;
      Rng rng = make_stream(9, tags::rollout, static_cast<std::uint64_t>(t));
      const auto out = pg_or_step(w, hi.task, uniform, rm, opt, rng);
      if (out.row.reward != 1.0) continue;
      ++fired;
      if (out.y != hi.task.label(out.x)) fire_diff = INFINITY;
      const auto g = grad_seq_loglik(before, *hi.task.features, out.x, out.y);
      fire_diff = std::max(fire_diff, max_abs_diff(out.direction, g) / std::max(1.0, norm2(g)));
    }
  }

  const bool ok = clip_diff == 0.0 && sgd_diff == 0.0 && fire_diff <= 1e-12 && fired > 0;
  return {"algorithmic_identities", ok,
          fmt::format("clip-vs-plain max|dw|={:g}; pr-vs-sgd max|dw|={:g}; "
                      "or-fire grad rel diff={:g} over {} fires",
                      clip_diff, sgd_diff, fire_diff, fired)};
}

CheckLine rates(const fs::path&) {
  // (a) running average of the exact error along SGD iterates, averaged over instances.
  const std::int64_t T = 2000;
  const int seeds = 256;
  std::vector<double> mean_running(T + 1, 0.0);  // index t: mean over iterates 0..t-1
  for (int s = 0; s < seeds; ++s) {
    const auto hi = hard(4, 4, 100 + static_cast<std::uint64_t>(s));
    const Weights w0(hi.task.features->dim(), 0.0);
    std::vector<double> err{expected_error_exact(LinearPolicy(w0, *hi.task.features), hi.task)};
    RunOptions o;
    o.steps = T;
    o.seed = static_cast<std::uint64_t>(s);
    o.observer = [&](std::int64_t, std::span<const double> w) {
      err.push_back(expected_error_exact(LinearPolicy(w, *hi.task.features), hi.task));
    };
    sgd_run(hi.task, LrRule::adaptive(2.0, 4.0), w0, o);
    double acc = 0.0;
    for (std::int64_t t = 1; t <= T; ++t) {
      acc += err[static_cast<std::size_t>(t - 1)];
      mean_running[static_cast<std::size_t>(t)] += acc / static_cast<double>(t) / seeds;
    }
  }
  const double r500 = mean_running[1000] / mean_running[500];
  const double r1000 = mean_running[2000] / mean_running[1000];

  // (b) PG-OR with uniform exploration in the mistake-bound protocol.
  const std::int64_t rounds = 400000;
  const auto hi = hard(4, 4, 7);
  const RewardModel rm(RewardKind::outcome, hi.task.label, 4);
  PgOrLearner learner(hi.task, BehaviorPolicy{BehaviorKind::uniform, nullptr, 1}, rm,
                      LrRule::adaptive(4.0, 2.0), Weights(hi.task.features->dim(), 0.0));
  Rng rng(13);
  const auto tally = mistake_count(
      learner, [&](std::int64_t, Rng& r) { return hi.task.sample(r); }, hi.task.label, rounds, rng);
  const auto first = tally.cumulative[static_cast<std::size_t>(rounds / 2 - 1)];
  const auto second = tally.total - first;

  const bool ok = r500 <= 0.7 && r1000 <= 0.7 && second < 0.6 * static_cast<double>(first);
  return {"rate_shape", ok,
          fmt::format("sgd err(1000)/err(500)={:.5f}, err(2000)/err(1000)={:.5f}; "
                      "pg-or mistakes first half {} second half {} (ratio {:.3f})",
                      r500, r1000, first, second,
                      static_cast<double>(second) / std::max<double>(1.0, static_cast<double>(first)))};
}

CheckLine queries(const fs::path& root) {
  auto cfg = lowerbound_preset();
  cfg.output.dir = (root / "lowerbound").string();
  const auto r = cmd_lowerbound(cfg);
  const auto* c3 = r.find("pg_or_best_of_m", 0.3);
  const auto* c2 = r.find("pg_or_best_of_m", 0.2);
  const auto* p2 = r.find("pg_pr", 0.2);
  if (!c3 || !c2 || !p2) return {"query_accounting", false, "missing lowerbound summary rows"};
  const bool reached = c3->reached == c3->runs && c2->reached == c2->runs && p2->reached == p2->runs;
  const double jump = c2->mean_queries / c3->mean_queries;
  const double sep = p2->mean_queries / c2->mean_queries;
  return {"query_accounting", reached && jump >= 4.0 && sep < 0.25,
          fmt::format("pg_or_best_of_m queries 0.3 -> 0.2: {:.0f} -> {:.0f} ({:.1f}x, m {} -> {}); "
                      "pg_pr at 0.2: {:.0f} ({:.4f} of pg_or_best_of_m, m {}); all reached: {}",
                      c3->mean_queries, c2->mean_queries, jump, c3->m, c2->m, p2->mean_queries,
                      sep, p2->m, reached)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Relative paths of every artifact except config.ini, which records the
// output dir and thread count.
std::vector<fs::path> artifacts(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "config.ini") {
      out.push_back(fs::relative(e.path(), dir));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void small_pipeline(const fs::path& dir, unsigned threads) {
  ExperimentConfig c;
  c.task.d = 8;
  c.task.k = 5;
  c.task.length = 12;
  c.pretrain.steps = 40;
  c.pretrain.batch = 32;
  c.pretrain.checkpoint_every = 20;
  c.posttrain.steps = 20;
  c.posttrain.batch = 64;
  c.eval.test_size = 256;
  c.eval.error_test_size = 128;
  c.eval.eval_every = 10;
  c.eval.checkpoint_every = 10;
  c.eval.tracked_centers = 4;
  c.output.seed = 21;
  c.output.threads = threads;
  c.output.dir = (dir / "pre").string();
  const auto pre = cmd_pretrain(c);
  cmd_lq(c);
  for (const std::string reward : {"outcome", "process"}) {
    auto p = c;
    p.posttrain.reward = reward;
    p.posttrain.base_checkpoint = pre.checkpoints.back().string();
    p.output.dir = (dir / reward).string();
    cmd_posttrain(p);
  }
  auto lb = lowerbound_preset();
  lb.task.length = 4;
  lb.lowerbound.repeats = 1;
  lb.output.seed = 21;
  lb.output.threads = threads;
  lb.output.dir = (dir / "lowerbound").string();
  cmd_lowerbound(lb);
  ExperimentConfig g;
  g.guessing.trials = 5000;
  g.output.seed = 21;
  g.output.dir = (dir / "guessing").string();
  cmd_guessing(g);
}

CheckLine determinism(const fs::path& root) {
  const fs::path base = root / "determinism";
  fs::remove_all(base);
  small_pipeline(base / "a", 1);
  small_pipeline(base / "b", 1);
  small_pipeline(base / "c", std::max(2u, worker_threads()));
  const auto files = artifacts(base / "a");
  bool ok = !files.empty() && files == artifacts(base / "b") && files == artifacts(base / "c");
  std::string first_diff;
  for (const auto& f : files) {
    const std::string a = slurp(base / "a" / f);
    if (a != slurp(base / "b" / f) || a != slurp(base / "c" / f)) {
      ok = false;
      if (first_diff.empty()) first_diff = f.string();
    }
  }
  return {"determinism", ok,
          fmt::format("{} artifacts compared across 3 runs (threads 1, 1, {}){}", files.size(),
                      std::max(2u, worker_threads()),
                      first_diff.empty() ? "" : "; first difference in " + first_diff)};
}

struct Criterion {
  const char* name;
  std::function<CheckLine(const fs::path&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    fmt::print(stderr, "usage: arlab_acceptance OUT_DIR [criterion ...]\n");
    return 2;
  }
  const fs::path root = argv[1];
  fs::create_directories(root);
  const std::vector<Criterion> all{{"oracles", oracles},       {"guessing", guessing},
                                   {"identities", identities}, {"rates", rates},
                                   {"queries", queries},       {"determinism", determinism},
                                   {"fig2", fig2},             {"fig1", fig1}};
  std::vector<std::string> wanted(argv + 2, argv + argc);
  for (const auto& w : wanted) {
    if (std::none_of(all.begin(), all.end(), [&](const Criterion& c) { return w == c.name; })) {
      fmt::print(stderr, "unknown criterion '{}'\n", w);
      return 2;
    }
  }

  // Passing ctest runs hide stdout, so the lines are also kept on disk.
  std::ofstream log(root / "acceptance.txt");
  bool ok = true;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.name) == wanted.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CheckLine line;
    try {
      line = c.run(root);
    } catch (const std::exception& e) {
      line = {c.name, false, fmt::format("threw: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string text =
        fmt::format("{} {}: {} [{:.1f}s]\n", line.passed ? "PASS" : "FAIL", line.name, line.detail, secs);
    fmt::print("{}", text);
    std::fflush(stdout);
    log << text << std::flush;
    ok = ok && line.passed;
  }
  return ok ? 0 : 1;
}
