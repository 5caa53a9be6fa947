#include "arlab/harness/commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "arlab/evaluation.hpp"
#include "arlab/harness/checkpoint.hpp"
#include "arlab/harness/csv.hpp"
#include "arlab/parallel.hpp"

namespace arlab::harness {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kGuessTag = 0x67756573ULL;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const double kLn10 = std::log(10.0);

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory " + dir.string());
  }
}

void write_config(const ExperimentConfig& cfg, const fs::path& dir) {
  std::ofstream f(dir / "config.ini", std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write to output directory " + dir.string());
  f << to_ini(cfg);
}

std::uint64_t teacher_seed(const ExperimentConfig& cfg) {
  return cfg.task.teacher_seed.value_or(cfg.output.seed);
}

CheckpointMeta meta_for(const Task& task, std::int64_t step) {
  return CheckpointMeta{task.d, task.k, task.length, std::string(task.features->kind()), step};
}

void check_compatible(const LoadedCheckpoint& c, const Task& task, const std::string& key) {
  const auto want = meta_for(task, c.meta.step);
  if (!(c.meta == want) || c.w.size() != task.features->dim()) {
    throw ConfigError(
        fmt::format("checkpoint (d={}, k={}, N={}, map={}, D={}) does not match the task "
                    "(d={}, k={}, N={}, map={}, D={})",
                    c.meta.d, c.meta.k, c.meta.length, c.meta.map_kind, c.w.size(), want.d, want.k,
                    want.length, want.map_kind, task.features->dim()),
        {key});
  }
}

// A sidecar teacher whose (d, k) disagree with the config is a config error
// against the checkpoint key, not an internal failure.
TaskBundle task_for_checkpoint(const ExperimentConfig& cfg, std::shared_ptr<const Teacher> teacher,
                               const std::string& key) {
  if (teacher && (teacher->d != cfg.task.d || teacher->k != cfg.task.k)) {
    throw ConfigError(fmt::format("checkpoint teacher (d={}, k={}) does not match the task "
                                  "(d={}, k={})",
                                  teacher->d, teacher->k, cfg.task.d, cfg.task.k),
                      {key});
  }
  return make_task(cfg, std::move(teacher));
}

std::shared_ptr<const Teacher> sidecar_teacher(const fs::path& checkpoint) {
  const auto p = checkpoint.parent_path() / "teacher.bin";
  return fs::exists(p) ? read_teacher(p) : nullptr;
}

double mean_exp(std::span<const double> ll) {
  if (ll.empty()) return kNaN;
  double s = 0.0;
  for (double v : ll) s += std::exp(v);
  return s / static_cast<double>(ll.size());
}

Token argmax_lowest(std::span<const double> v) {
  return static_cast<Token>(std::max_element(v.begin(), v.end()) - v.begin());
}

double greedy_error(std::span<const double> w, const Task& task, std::span<const Context> xs,
                    unsigned threads) {
  const FeatureMap& fm = *task.features;
  std::vector<char> wrong(xs.size(), 0);
  parallel_for(xs.size(), threads, [&](std::size_t j) {
    const auto bound = fm.bind(w, xs[j]);
    std::vector<double> logits(static_cast<std::size_t>(fm.vocab()));
    Sequence y;
    for (int i = 0; i < fm.length(); ++i) {
      bound->logits(y, logits);
      y.push_back(argmax_lowest(logits));
    }
    wrong[j] = y != task.label(xs[j]);
  });
  return static_cast<double>(std::count(wrong.begin(), wrong.end(), 1)) /
         static_cast<double>(std::max<std::size_t>(xs.size(), 1));
}

double error_of(const Task& task, std::span<const double> w, std::span<const Context> xs,
                unsigned threads) {
  const LinearPolicy p(w, *task.features);
  return task.support ? expected_error_exact(p, task) : expected_error(p, task, xs, threads);
}

std::string clean_cell(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

void write_checks(const fs::path& path, const std::vector<CheckLine>& checks) {
  CsvWriter csv(path, {"check", "passed", "detail"});
  for (const auto& c : checks) csv.row(c.name, c.passed ? 1 : 0, clean_cell(c.detail));
  csv.close();
}

HardInstance hard_instance(const ExperimentConfig& cfg, std::uint64_t seed) {
  HardInstanceConfig h;
  h.gamma = cfg.task.gamma;
  h.alpha = cfg.task.alpha;
  h.eps_star = cfg.task.eps_star;
  h.delta = cfg.task.delta;
  h.k = cfg.task.k;
  h.length = cfg.task.length;
  Rng rng = make_stream(seed, tags::labels);
  return build_hard_instance(h, rng);
}

void log_progress(const char* what, std::int64_t t, std::int64_t total) {
  const std::int64_t every = std::max<std::int64_t>(1, total / 10);
  if (t % every == 0 || t == total) fmt::print(stderr, "[{}] step {}/{}\n", what, t, total);
}

}  // namespace

bool all_passed(const std::vector<CheckLine>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckLine& c) { return c.passed; });
}

TaskBundle make_task(const ExperimentConfig& cfg, std::shared_ptr<const Teacher> teacher) {
  const auto& t = cfg.task;
  TaskBundle b;
  if (t.kind == "mixture") {
    MixtureTaskConfig mc;
    mc.d = t.d;
    mc.k = t.k;
    mc.length = t.length;
    mc.noise_std_scale = t.noise_std_scale;
    mc.noise_norm_clip = t.noise_norm_clip;
    mc.teacher_seed = teacher_seed(cfg);
    b.task = teacher ? make_mixture_task(mc, teacher) : make_mixture_task(mc);
  } else if (t.kind == "hypercube") {
    b.task = teacher ? make_hypercube_task(teacher, t.length)
                     : make_hypercube_task(t.d, t.k, t.length, teacher_seed(cfg));
  } else if (t.kind == "constant") {
    Rng rng = make_stream(teacher_seed(cfg), tags::teacher);
    b.task = constant_feature_task(t.d, t.k, t.length, rng);
  } else if (t.kind == "hard") {
    auto hi = hard_instance(cfg, teacher_seed(cfg));
    b.task = hi.task;
    b.base = hi.base;
    b.hard = std::move(hi);
  } else {
    throw ConfigError("unknown task kind '" + t.kind + "'", {"task.kind"});
  }
  return b;
}

std::int64_t derive_m_outcome(std::span<const double> base_ll, double eps, double slack, int k,
                              int length) {
  const double q = lq_estimate(base_ll, (1.0 - slack) * eps);
  const std::int64_t cap = sequence_count(k, length);
  const double inv = std::ceil(std::exp(-q) - 1e-9);
  if (!(inv < static_cast<double>(cap))) return cap;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(inv));
}

std::int64_t derive_m_process(std::span<const double> base_token_ll, double eps, double slack,
                              int k, int length) {
  const double q = lq_estimate(base_token_ll, (1.0 - slack) * eps);
  const double inv = std::min(std::exp(-q), static_cast<double>(k));
  return static_cast<std::int64_t>(
      std::ceil(2.0 * (std::log(static_cast<double>(length)) + 1.0) * inv - 1e-9));
}

PretrainResult cmd_pretrain(const ExperimentConfig& cfg) {
  cfg.validate();
  const fs::path out = cfg.output.dir;
  ensure_dir(out);
  write_config(cfg, out);

  const TaskBundle b = make_task(cfg);
  const Task& task = b.task;
  if (task.teacher) write_teacher(out / "teacher.bin", *task.teacher);

  const Weights w0(task.features->dim(), 0.0);
  RunOptions o;
  o.steps = cfg.pretrain.steps;
  o.batch = cfg.pretrain.batch;
  o.seed = cfg.output.seed;
  o.threads = cfg.output.threads;
  o.checkpoint_every = cfg.pretrain.checkpoint_every;
  o.checkpoint_at = cfg.pretrain.checkpoints;
  o.observer = [&](std::int64_t t, std::span<const double>) { log_progress("pretrain", t, o.steps); };
  const Trajectory traj = sgd_run(task, cfg.pretrain.optimizer.rule(), w0, o);

  const auto xs = draw_contexts(task, static_cast<std::size_t>(cfg.eval.error_test_size),
                                cfg.output.seed);
  PretrainResult res;
  CsvWriter err(out / "error.csv",
                {"step", "expected_error", "offsupport_avg_likelihood", "onsupport_avg_likelihood"});
  for (const auto& c : traj.checkpoints) {
    const fs::path p = out / checkpoint_name(c.step);
    write_checkpoint(p, meta_for(task, c.step), c.w);
    res.checkpoints.push_back(p);
    res.steps.push_back(c.step);
    res.final_error = error_of(task, c.w, xs, cfg.output.threads);
    err.row(c.step, res.final_error, kNaN, kNaN);
  }
  err.close();

  CsvWriter train(out / "train.csv", {"step", "eta", "mean_reward", "query_delta",
                                      "cumulative_queries", "correct_fraction"});
  for (const auto& r : traj.records) train.row(r.step, r.eta, r.reward, 0, 0, r.correct);
  train.close();
  return res;
}

PosttrainResult cmd_posttrain(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& pc = cfg.posttrain;
  const fs::path out = cfg.output.dir;

  std::optional<LoadedCheckpoint> base_ckpt;
  std::shared_ptr<const Teacher> teacher;
  if (pc.init == "base") {
    if (pc.base_checkpoint.empty()) {
      throw ConfigError("posttrain.init = base needs posttrain.base_checkpoint",
                        {"posttrain.base_checkpoint"});
    }
    if (!fs::exists(pc.base_checkpoint)) {
      throw ConfigError("base checkpoint not found: " + pc.base_checkpoint,
                        {"posttrain.base_checkpoint"});
    }
    base_ckpt = read_checkpoint(pc.base_checkpoint);
    teacher = sidecar_teacher(pc.base_checkpoint);
  }
  const TaskBundle b = task_for_checkpoint(cfg, teacher, "posttrain.base_checkpoint");
  const Task& task = b.task;
  const FeatureMap& fm = *task.features;
  if (base_ckpt) check_compatible(*base_ckpt, task, "posttrain.base_checkpoint");

  ensure_dir(out);
  write_config(cfg, out);

  const Weights w0 = base_ckpt ? base_ckpt->w : Weights(fm.dim(), 0.0);
  const std::shared_ptr<const Policy> base =
      b.base ? b.base : std::make_shared<LinearPolicy>(w0, fm);
  const RewardModel rm(parse_reward(pc.reward), task.label, task.length);
  const unsigned threads = cfg.output.threads;

  const auto xs = draw_contexts(task, static_cast<std::size_t>(cfg.eval.error_test_size),
                                cfg.output.seed);

  PosttrainResult res;

  // Centers whose base likelihood is below the threshold are off-support.
  const auto base_center_ll = likelihood_sample(*base, task, task.centers, threads);
  std::vector<Context> off, on;
  for (std::size_t j = 0; j < task.centers.size(); ++j) {
    if (std::exp(base_center_ll[j]) < cfg.eval.offsupport_threshold) {
      off.push_back(task.centers[j]);
      res.offsupport_centers.push_back(static_cast<int>(j));
    } else {
      on.push_back(task.centers[j]);
    }
  }
  // Track the most extreme initial likelihoods: half lowest, half highest.
  {
    std::vector<int> order(task.centers.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int c) {
      return base_center_ll[static_cast<std::size_t>(a)] < base_center_ll[static_cast<std::size_t>(c)];
    });
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(cfg.eval.tracked_centers),
                                         order.size());
    const std::size_t lo = n / 2;
    for (std::size_t i = 0; i < lo; ++i) res.tracked_centers.push_back(order[i]);
    for (std::size_t i = order.size() - (n - lo); i < order.size(); ++i) {
      res.tracked_centers.push_back(order[i]);
    }
    std::sort(res.tracked_centers.begin(), res.tracked_centers.end());
  }

  BehaviorPolicy behavior{parse_behavior(pc.behavior), base, std::max<std::int64_t>(pc.m, 1)};
  if (pc.algorithm != "on_policy" &&
      (behavior.kind == BehaviorKind::best_of_m_or || behavior.kind == BehaviorKind::best_of_m_pr) &&
      pc.m == 0) {
    const auto lq_xs = draw_contexts(task, static_cast<std::size_t>(cfg.eval.test_size),
                                     cfg.output.seed);
    if (behavior.kind == BehaviorKind::best_of_m_or) {
      behavior.m = derive_m_outcome(likelihood_sample(*base, task, lq_xs, threads), pc.target_eps,
                                    pc.lq_slack, task.k, task.length);
    } else {
      behavior.m = derive_m_process(token_likelihood_sample(*base, task, lq_xs, threads),
                                    pc.target_eps, pc.lq_slack, task.k, task.length);
    }
  }
  res.m = behavior.m;

  std::vector<std::vector<double>> center_rows;  // per eval: tracked center log10 likelihoods
  auto evaluate = [&](std::int64_t step, std::span<const double> w) {
    const LinearPolicy p(w, fm);
    EvalRow row;
    row.step = step;
    row.expected_error = error_of(task, w, xs, threads);
    row.greedy_error = greedy_error(w, task, xs, threads);
    row.offsupport = mean_exp(likelihood_sample(p, task, off, threads));
    row.onsupport = mean_exp(likelihood_sample(p, task, on, threads));
    res.evals.push_back(row);
    std::vector<double> c;
    for (int id : res.tracked_centers) {
      c.push_back(likelihood(p, task, task.centers[static_cast<std::size_t>(id)]) / kLn10);
    }
    center_rows.push_back(std::move(c));
  };
  evaluate(0, w0);

  RunOptions o;
  o.steps = pc.steps;
  o.batch = pc.batch;
  o.seed = cfg.output.seed;
  o.threads = threads;
  o.checkpoint_every = cfg.eval.checkpoint_every;
  o.observer = [&](std::int64_t t, std::span<const double> w) {
    log_progress(pc.reward == "process" ? "posttrain/prm" : "posttrain/orm", t, o.steps);
    if (t % cfg.eval.eval_every == 0 || t == o.steps) evaluate(t, w);
  };

  const LrRule rule = pc.optimizer.rule();
  Trajectory traj;
  if (pc.algorithm == "on_policy") {
    traj = on_policy_pg_run(task, rm, parse_advantage(pc.advantage), rule, w0, o);
  } else {
    PgConfig pg;
    pg.algorithm = pc.algorithm == "pg_pr"           ? PgAlgorithm::pr
                   : pc.algorithm == "pg_or_clipped" ? PgAlgorithm::or_clipped
                                                     : PgAlgorithm::or_plain;
    pg.behavior = behavior;
    pg.advantage = parse_advantage(pc.advantage);
    pg.zeta = pc.zeta;
    traj = pg_run(task, pg, rm, rule, w0, o);
  }

  for (const auto& c : traj.checkpoints) {
    const fs::path p = out / checkpoint_name(c.step);
    write_checkpoint(p, meta_for(task, c.step), c.w);
    res.final_checkpoint = p;
  }

  CsvWriter err(out / "error.csv",
                {"step", "expected_error", "offsupport_avg_likelihood", "onsupport_avg_likelihood"});
  CsvWriter greedy(out / "error_greedy.csv", {"step", "greedy_error"});
  CsvWriter centers(out / "centers.csv",
                    {"step", "center_id", "likelihood_log10", "initial_likelihood_log10"});
  for (std::size_t e = 0; e < res.evals.size(); ++e) {
    const auto& r = res.evals[e];
    err.row(r.step, r.expected_error, r.offsupport, r.onsupport);
    greedy.row(r.step, r.greedy_error);
    for (std::size_t i = 0; i < res.tracked_centers.size(); ++i) {
      centers.row(r.step, res.tracked_centers[i], center_rows[e][i], center_rows[0][i]);
    }
  }
  err.close();
  greedy.close();
  centers.close();

  CsvWriter train(out / "train.csv", {"step", "eta", "mean_reward", "query_delta",
                                      "cumulative_queries", "correct_fraction"});
  std::uint64_t cumulative = 0;
  for (const auto& r : traj.records) {
    cumulative += r.queries;
    res.cumulative_queries.push_back(cumulative);
    train.row(r.step, r.eta, r.reward, r.queries, cumulative, r.correct);
  }
  train.close();
  return res;
}

std::vector<LqRow> cmd_lq(const ExperimentConfig& cfg, std::vector<fs::path> checkpoints) {
  cfg.validate();
  const fs::path out = cfg.output.dir;
  if (checkpoints.empty() && fs::is_directory(out)) checkpoints = list_checkpoints(out);
  if (checkpoints.empty()) throw std::runtime_error("lq: no checkpoints given or found in " + out.string());
  ensure_dir(out);

  const TaskBundle b = task_for_checkpoint(cfg, sidecar_teacher(checkpoints.front()), "lq.checkpoints");
  const Task& task = b.task;
  const auto xs = draw_contexts(task, static_cast<std::size_t>(cfg.eval.test_size), cfg.output.seed);
  const auto grid = cfg.eval.grid();

  std::vector<LqRow> rows;
  CsvWriter lq(out / "lq.csv", {"checkpoint_step", "epsilon", "q_log10"});
  CsvWriter cdf(out / "cdf.csv", {"checkpoint_step", "likelihood_log10", "cdf"});
  for (const auto& path : checkpoints) {
    const auto c = read_checkpoint(path);
    check_compatible(c, task, "checkpoint");
    const LinearPolicy p(c.w, *task.features);
    const auto curve = LQCurve::from_sample(likelihood_sample(p, task, xs, cfg.output.threads));
    for (double eps : grid) {
      const LqRow r{c.meta.step, eps, curve.quantile(eps) / kLn10};
      lq.row(r.checkpoint_step, r.epsilon, r.q_log10);
      rows.push_back(r);
    }
    const auto n = curve.sorted.size();
    const auto points = static_cast<std::size_t>(cfg.eval.cdf_points);
    for (std::size_t j = 0; j < points; ++j) {
      const auto idx = std::min(n - 1, static_cast<std::size_t>((static_cast<double>(j) + 0.5) /
                                                               static_cast<double>(points) *
                                                               static_cast<double>(n)));
      const double v = curve.sorted[idx];
      const auto le = std::upper_bound(curve.sorted.begin(), curve.sorted.end(), v) -
                      curve.sorted.begin();
      cdf.row(c.meta.step, v / kLn10, static_cast<double>(le) / static_cast<double>(n));
    }
  }
  lq.close();
  cdf.close();
  return rows;
}

std::vector<GuessRow> cmd_guessing(const ExperimentConfig& cfg) {
  cfg.validate();
  const fs::path out = cfg.output.dir;
  ensure_dir(out);
  std::vector<GuessRow> rows;
  CsvWriter csv(out / "guessing.csv",
                {"m", "l", "strategy", "miss_rate", "exact_optimal", "binomial_sigma"});
  for (int m : cfg.guessing.m_grid) {
    for (int l = 1; l <= m; ++l) {
      for (auto strategy : {GuessStrategy::optimal, GuessStrategy::repeat}) {
        const GuessingGame game{m, l, strategy};
        Rng rng = make_stream(cfg.output.seed, kGuessTag,
                              static_cast<std::uint64_t>(m) * 1000 + static_cast<std::uint64_t>(l),
                              strategy == GuessStrategy::optimal ? 0 : 1);
        GuessRow r;
        r.m = m;
        r.l = l;
        r.strategy = strategy == GuessStrategy::optimal ? "optimal" : "repeat";
        r.miss = game.run(cfg.guessing.trials, rng);
        r.exact = game.exact_optimal_miss();
        r.sigma = std::sqrt(r.exact * (1.0 - r.exact) / static_cast<double>(cfg.guessing.trials));
        csv.row(r.m, r.l, r.strategy, r.miss, r.exact, r.sigma);
        rows.push_back(r);
      }
    }
  }
  csv.close();
  return rows;
}

std::vector<OracleCheck> cmd_verify(const ExperimentConfig& cfg) {
  cfg.validate();
  const fs::path out = cfg.output.dir;
  ensure_dir(out);
  auto checks = run_oracle_suite(cfg.output.seed);
  CsvWriter csv(out / "verify.csv", {"check", "passed", "observed", "threshold", "detail"});
  for (const auto& c : checks) {
    csv.row(c.name, c.passed ? 1 : 0, c.observed, c.threshold, clean_cell(c.detail));
  }
  csv.close();
  return checks;
}

const LowerBoundSummary* LowerBoundResult::find(const std::string& algorithm, double target) const {
  for (const auto& s : summary) {
    if (s.algorithm == algorithm && std::abs(s.target - target) < 1e-12) return &s;
  }
  return nullptr;
}

LowerBoundResult cmd_lowerbound(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  cfg.task.kind = "hard";
  cfg.validate();
  const fs::path out = cfg.output.dir;
  ensure_dir(out);
  write_config(cfg, out);

  const auto& lb = cfg.lowerbound;
  const LrRule rule = LrRule::adaptive(cfg.posttrain.optimizer.adaptive_a,
                                       cfg.posttrain.optimizer.adaptive_b);
  LowerBoundResult res;
  CsvWriter csv(out / "lowerbound.csv", {"repeat", "algorithm", "target_eps", "m", "steps",
                                         "queries", "reached", "final_error"});
  for (int r = 0; r < lb.repeats; ++r) {
    const auto hi = hard_instance(cfg, stream_seed(cfg.output.seed, tags::labels,
                                                   static_cast<std::uint64_t>(r)));
    const Task& task = hi.task;
    const auto lq_xs = draw_contexts(task, static_cast<std::size_t>(lb.lq_samples),
                                     stream_seed(cfg.output.seed, tags::test_context,
                                                 static_cast<std::uint64_t>(r)));
    const auto base_ll = likelihood_sample(*hi.base, task, lq_xs);
    const auto base_tl = token_likelihood_sample(*hi.base, task, lq_xs);

    for (std::size_t a = 0; a < lb.algorithms.size(); ++a) {
      const std::string& algo = lb.algorithms[a];
      for (std::size_t ti = 0; ti < lb.targets.size(); ++ti) {
        const double target = lb.targets[ti];
        LowerBoundRow row;
        row.repeat = r;
        row.algorithm = algo;
        row.target = target;

        BehaviorPolicy behavior{BehaviorKind::uniform, hi.base, 1};
        RewardKind kind = RewardKind::outcome;
        if (algo == "pg_or_best_of_m") {
          behavior.kind = BehaviorKind::best_of_m_or;
          behavior.m = derive_m_outcome(base_ll, target, cfg.posttrain.lq_slack, task.k, task.length);
        } else if (algo == "pg_pr") {
          behavior.kind = BehaviorKind::best_of_m_pr;
          behavior.m = derive_m_process(base_tl, target, cfg.posttrain.lq_slack, task.k, task.length);
          kind = RewardKind::process;
        }
        row.m = behavior.m;

        const RewardModel rm(kind, task.label, task.length);
        Optimizer opt(rule, task.features->dim());
        Weights w(task.features->dim(), 0.0);
        const std::uint64_t run_seed = stream_seed(cfg.output.seed, tags::rollout,
                                                   static_cast<std::uint64_t>(r), a * 64 + ti);
        std::int64_t t = 0;
        double err = expected_error_exact(LinearPolicy(w, *task.features), task);
        while (err > target && t < lb.max_steps) {
          Rng rng = make_stream(run_seed, tags::rollout, static_cast<std::uint64_t>(t));
          if (kind == RewardKind::process) {
            pg_pr_step(w, task, behavior, rm, AdvantageKind::simple, opt, rng);
          } else {
            pg_or_step(w, task, behavior, rm, opt, rng);
          }
          ++t;
          err = expected_error_exact(LinearPolicy(w, *task.features), task);
        }
        row.steps = t;
        row.queries = rm.query_count();
        row.reached = err <= target;
        row.final_error = err;
        fmt::print(stderr, "[lowerbound] repeat {} {} eps={} m={}: {} steps, {} queries{}\n", r,
                   algo, target, row.m, row.steps, row.queries, row.reached ? "" : " (not reached)");
        csv.row(row.repeat, row.algorithm, row.target, row.m, row.steps, row.queries,
                row.reached ? 1 : 0, row.final_error);
        res.runs.push_back(row);
      }
    }
  }
  csv.close();

  CsvWriter sum(out / "lowerbound_summary.csv",
                {"algorithm", "target_eps", "m", "mean_queries", "reached", "runs"});
  for (const auto& algo : lb.algorithms) {
    for (double target : lb.targets) {
      LowerBoundSummary s;
      s.algorithm = algo;
      s.target = target;
      double total = 0.0;
      for (const auto& row : res.runs) {
        if (row.algorithm != algo || row.target != target) continue;
        if (s.runs == 0) s.m = row.m;
        total += static_cast<double>(row.queries);
        s.reached += row.reached ? 1 : 0;
        ++s.runs;
      }
      s.mean_queries = s.runs ? total / s.runs : 0.0;
      sum.row(s.algorithm, s.target, s.m, s.mean_queries, s.reached, s.runs);
      res.summary.push_back(s);
    }
  }
  sum.close();
  return res;
}

ReproResult cmd_reproduce_fig1(const ExperimentConfig& cfg) {
  cfg.validate();
  const fs::path out = cfg.output.dir;
  ensure_dir(out);

  ExperimentConfig pre = cfg;
  pre.output.dir = (out / "pretrain").string();
  const auto base = cmd_pretrain(pre);

  auto post = [&](const std::string& reward) {
    ExperimentConfig c = cfg;
    c.output.dir = (out / (reward == "outcome" ? "orm" : "prm")).string();
    c.posttrain.algorithm = "on_policy";
    c.posttrain.behavior = "on_policy";
    c.posttrain.reward = reward;
    c.posttrain.init = "base";
    c.posttrain.base_checkpoint = base.checkpoints.back().string();
    return cmd_posttrain(c);
  };
  const auto orm = post("outcome");
  const auto prm = post("process");

  ReproResult res;
  auto& ch = res.checks;
  ch.push_back({"fig1_offsupport_centers", !orm.offsupport_centers.empty(),
                fmt::format("{} of {} centers below {} under the base model",
                            orm.offsupport_centers.size(), cfg.task.d,
                            cfg.eval.offsupport_threshold)});

  double orm_max = 0.0;
  bool orm_ok = !orm.offsupport_centers.empty();
  for (const auto& r : orm.evals) {
    orm_ok = orm_ok && r.offsupport < 1e-6;
    orm_max = std::max(orm_max, r.offsupport);
  }
  ch.push_back({"fig1_orm_offsupport_stays_low", orm_ok,
                fmt::format("max ORM off-support likelihood {:.3e} (< 1e-6 required)", orm_max)});

  const double orm_final = orm.evals.back().offsupport;
  const double prm_final = prm.evals.back().offsupport;
  ch.push_back({"fig1_prm_offsupport_gain", prm_final > 0.0 && prm_final >= 100.0 * orm_final,
                fmt::format("PRM {:.3e} vs ORM {:.3e} (>= 100x required)", prm_final, orm_final)});

  const double orm_err = orm.evals.back().expected_error;
  const double prm_err = prm.evals.back().expected_error;
  ch.push_back({"fig1_prm_error_below_orm", prm_err < orm_err,
                fmt::format("final expected error PRM {:.6f} vs ORM {:.6f}", prm_err, orm_err)});
  write_checks(out / "fig1_checks.csv", ch);
  return res;
}

ReproResult cmd_reproduce_fig2(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  cfg.validate();
  const fs::path out = cfg.output.dir;
  ensure_dir(out);
  auto grid = cfg.eval.grid();
  if (std::none_of(grid.begin(), grid.end(), [](double e) { return e == 0.1; })) {
    grid.push_back(0.1);
    std::sort(grid.begin(), grid.end());
    cfg.eval.eps_grid = grid;
  }

  const auto pre = cmd_pretrain(cfg);
  const auto rows = cmd_lq(cfg, pre.checkpoints);

  ReproResult res;
  const double exact = -static_cast<double>(cfg.task.length) * std::log10(cfg.task.k);
  double worst = 0.0;
  bool zero_ok = false;
  for (const auto& r : rows) {
    if (r.checkpoint_step != 0) continue;
    zero_ok = true;
    worst = std::max(worst, std::abs(r.q_log10 - exact));
  }
  zero_ok = zero_ok && worst <= 1e-9;
  res.checks.push_back({"fig2_zero_init_lq", zero_ok,
                        fmt::format("max |log10 Q - ({})| = {:.3e} at step 0", exact, worst)});

  std::vector<std::pair<std::int64_t, double>> at01;
  for (const auto& r : rows) {
    if (r.epsilon == 0.1) at01.emplace_back(r.checkpoint_step, r.q_log10);
  }
  int inversions = 0;
  double worst_drop = 0.0;
  std::string series;
  for (std::size_t i = 0; i < at01.size(); ++i) {
    series += fmt::format("{}{}:{:.3f}", i ? " " : "", at01[i].first, at01[i].second);
    if (i && at01[i].second < at01[i - 1].second) {
      ++inversions;
      worst_drop = std::max(worst_drop, at01[i - 1].second - at01[i].second);
    }
  }
  const bool mono = at01.size() >= 2 && (inversions == 0 || (inversions == 1 && worst_drop < 0.5));
  res.checks.push_back({"fig2_lq_nondecreasing", mono,
                        fmt::format("log10 Q(0.1) by step: {} ({} inversion(s))", series, inversions)});
  write_checks(out / "fig2_checks.csv", res.checks);
  return res;
}

}  // namespace arlab::harness
