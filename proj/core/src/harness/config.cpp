#include "arlab/harness/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace arlab::harness {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <class T>
T parse_number(const std::string& raw) {
  const std::string s = trim(raw);
  T v{};
  if constexpr (std::is_floating_point_v<T>) {
    // strtod handles every form fmt prints, including exponents.
    char* end = nullptr;
    v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw std::invalid_argument(s);
  } else {
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size()) throw std::invalid_argument(s);
  }
  return v;
}

template <class T>
std::string format_list(const std::vector<T>& v) {
  return fmt::format("{}", fmt::join(v, ","));
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

template <class T>
Field number(std::string section, std::string key, T& ref) {
  return Field{std::move(section), std::move(key),
               [&ref](const std::string& s) { ref = parse_number<T>(s); },
               [&ref] { return fmt::format("{}", ref); }};
}

Field text(std::string section, std::string key, std::string& ref) {
  return Field{std::move(section), std::move(key), [&ref](const std::string& s) { ref = trim(s); },
               [&ref] { return ref; }};
}

template <class T>
Field list(std::string section, std::string key, std::vector<T>& ref) {
  return Field{std::move(section), std::move(key),
               [&ref](const std::string& s) {
                 std::vector<T> v;
                 for (const auto& item : split_list(s)) {
                   if constexpr (std::is_same_v<T, std::string>) {
                     v.push_back(item);
                   } else {
                     v.push_back(parse_number<T>(item));
                   }
                 }
                 ref = std::move(v);
               },
               [&ref] { return format_list(ref); }};
}

void optimizer_fields(std::vector<Field>& f, const std::string& sec, OptimizerConfig& o) {
  f.push_back(text(sec, "optimizer", o.kind));
  f.push_back(number(sec, "lr", o.lr));
  f.push_back(number(sec, "adaptive_a", o.adaptive_a));
  f.push_back(number(sec, "adaptive_b", o.adaptive_b));
  f.push_back(number(sec, "adagrad_delta", o.adagrad_delta));
}

std::vector<Field> fields(ExperimentConfig& c) {
  std::vector<Field> f;
  auto& t = c.task;
  f.push_back(text("task", "kind", t.kind));
  f.push_back(number("task", "d", t.d));
  f.push_back(number("task", "k", t.k));
  f.push_back(number("task", "N", t.length));
  f.push_back(Field{"task", "teacher_seed",
                    [&t](const std::string& s) {
                      if (trim(s).empty() || trim(s) == "auto") {
                        t.teacher_seed.reset();
                      } else {
                        t.teacher_seed = parse_number<std::uint64_t>(s);
                      }
                    },
                    [&t] {
                      return t.teacher_seed ? fmt::format("{}", *t.teacher_seed)
                                            : std::string("auto");
                    }});
  f.push_back(number("task", "noise_std_scale", t.noise_std_scale));
  f.push_back(number("task", "noise_norm_clip", t.noise_norm_clip));
  f.push_back(number("task", "gamma", t.gamma));
  f.push_back(number("task", "alpha", t.alpha));
  f.push_back(number("task", "eps_star", t.eps_star));
  f.push_back(number("task", "delta", t.delta));

  auto& p = c.pretrain;
  optimizer_fields(f, "pretrain", p.optimizer);
  f.push_back(number("pretrain", "steps", p.steps));
  f.push_back(number("pretrain", "batch", p.batch));
  f.push_back(number("pretrain", "checkpoint_every", p.checkpoint_every));
  f.push_back(list("pretrain", "checkpoints", p.checkpoints));

  auto& q = c.posttrain;
  f.push_back(text("posttrain", "algorithm", q.algorithm));
  f.push_back(text("posttrain", "reward", q.reward));
  f.push_back(text("posttrain", "behavior", q.behavior));
  f.push_back(text("posttrain", "advantage", q.advantage));
  f.push_back(number("posttrain", "zeta", q.zeta));
  f.push_back(number("posttrain", "m", q.m));
  f.push_back(number("posttrain", "target_eps", q.target_eps));
  f.push_back(number("posttrain", "lq_slack", q.lq_slack));
  optimizer_fields(f, "posttrain", q.optimizer);
  f.push_back(number("posttrain", "steps", q.steps));
  f.push_back(number("posttrain", "batch", q.batch));
  f.push_back(text("posttrain", "init", q.init));
  f.push_back(text("posttrain", "base_checkpoint", q.base_checkpoint));

  auto& e = c.eval;
  f.push_back(number("eval", "test_size", e.test_size));
  f.push_back(number("eval", "error_test_size", e.error_test_size));
  f.push_back(list("eval", "eps_grid", e.eps_grid));
  f.push_back(number("eval", "cdf_points", e.cdf_points));
  f.push_back(number("eval", "eval_every", e.eval_every));
  f.push_back(number("eval", "checkpoint_every", e.checkpoint_every));
  f.push_back(number("eval", "offsupport_threshold", e.offsupport_threshold));
  f.push_back(number("eval", "tracked_centers", e.tracked_centers));

  auto& l = c.lowerbound;
  f.push_back(list("lowerbound", "targets", l.targets));
  f.push_back(number("lowerbound", "repeats", l.repeats));
  f.push_back(number("lowerbound", "max_steps", l.max_steps));
  f.push_back(number("lowerbound", "lq_samples", l.lq_samples));
  f.push_back(list("lowerbound", "algorithms", l.algorithms));

  f.push_back(list("guessing", "m_grid", c.guessing.m_grid));
  f.push_back(number("guessing", "trials", c.guessing.trials));

  f.push_back(text("output", "dir", c.output.dir));
  f.push_back(number("output", "seed", c.output.seed));
  f.push_back(number("output", "threads", c.output.threads));
  return f;
}

const std::set<std::string> kOptimizers{"adagrad", "constant", "adaptive"};
const std::set<std::string> kTaskKinds{"mixture", "hypercube", "constant", "hard"};
const std::set<std::string> kAlgorithms{"on_policy", "pg_or", "pg_or_clipped", "pg_pr"};
const std::set<std::string> kLowerBoundAlgorithms{"pg_or_best_of_m", "pg_pr", "pg_or_uniform"};

void check_optimizer(const OptimizerConfig& o, const std::string& sec,
                     std::vector<std::string>& bad) {
  if (!kOptimizers.count(o.kind)) bad.push_back(sec + ".optimizer");
  if (!(o.lr > 0.0)) bad.push_back(sec + ".lr");
  if (!(o.adaptive_a > 0.0)) bad.push_back(sec + ".adaptive_a");
  if (!(o.adaptive_b > 0.0)) bad.push_back(sec + ".adaptive_b");
  if (!(o.adagrad_delta > 0.0)) bad.push_back(sec + ".adagrad_delta");
}

}  // namespace

LrRule OptimizerConfig::rule() const {
  if (kind == "constant") return LrRule::constant(lr);
  if (kind == "adaptive") return LrRule::adaptive(adaptive_a, adaptive_b);
  if (kind == "adagrad") return LrRule::adagrad(lr, adagrad_delta);
  throw ConfigError("unknown optimizer '" + kind + "'", {"optimizer"});
}

std::vector<double> EvalConfig::grid() const {
  if (!eps_grid.empty()) return eps_grid;
  std::vector<double> g;
  for (int j = 1; j <= 50; ++j) g.push_back(j / 100.0);
  return g;
}

void ExperimentConfig::validate() const {
  std::vector<std::string> bad;
  const auto& t = task;
  if (!kTaskKinds.count(t.kind)) bad.push_back("task.kind");
  if (t.d < 1) bad.push_back("task.d");
  if (t.k < 2) bad.push_back("task.k");
  if (t.length < 1) bad.push_back("task.N");
  if (!(t.noise_std_scale >= 0.0)) bad.push_back("task.noise_std_scale");
  if (!(t.noise_norm_clip >= 0.0)) bad.push_back("task.noise_norm_clip");
  if (t.kind == "hard") {
    if (!(t.gamma > 0.0 && t.gamma <= 1.0)) bad.push_back("task.gamma");
    if (!(t.alpha > 0.0 && t.alpha <= 1.0)) bad.push_back("task.alpha");
    if (!(t.eps_star > 0.0 && t.eps_star < 1.0)) bad.push_back("task.eps_star");
    if (!(t.delta > 0.0 && t.delta < 1.0)) bad.push_back("task.delta");
    if (t.alpha > 0.0 && t.alpha <= 1.0 && t.k >= 2 &&
        static_cast<std::int64_t>(1.0 / t.alpha) > sequence_count(t.k, t.length)) {
      bad.push_back("task.alpha");
    }
  }

  check_optimizer(pretrain.optimizer, "pretrain", bad);
  if (pretrain.steps < 0) bad.push_back("pretrain.steps");
  if (pretrain.batch < 1) bad.push_back("pretrain.batch");
  if (pretrain.checkpoint_every < 0) bad.push_back("pretrain.checkpoint_every");
  for (auto s : pretrain.checkpoints) {
    if (s < 0 || s > pretrain.steps) {
      bad.push_back("pretrain.checkpoints");
      break;
    }
  }

  const auto& q = posttrain;
  if (!kAlgorithms.count(q.algorithm)) bad.push_back("posttrain.algorithm");
  try {
    parse_reward(q.reward);
  } catch (const ConfigError&) {
    bad.push_back("posttrain.reward");
  }
  try {
    parse_behavior(q.behavior);
  } catch (const ConfigError&) {
    bad.push_back("posttrain.behavior");
  }
  try {
    parse_advantage(q.advantage);
  } catch (const ConfigError&) {
    bad.push_back("posttrain.advantage");
  }
  if (q.algorithm == "pg_pr" && q.reward != "process") bad.push_back("posttrain.reward");
  if ((q.algorithm == "pg_or" || q.algorithm == "pg_or_clipped") && q.reward != "outcome") {
    bad.push_back("posttrain.reward");
  }
  if (!(q.zeta >= 1.0)) bad.push_back("posttrain.zeta");
  if (q.m < 0) bad.push_back("posttrain.m");
  if (!(q.target_eps > 0.0 && q.target_eps < 1.0)) bad.push_back("posttrain.target_eps");
  if (!(q.lq_slack >= 0.0 && q.lq_slack < 1.0)) bad.push_back("posttrain.lq_slack");
  check_optimizer(q.optimizer, "posttrain", bad);
  if (q.steps < 0) bad.push_back("posttrain.steps");
  if (q.batch < 1) bad.push_back("posttrain.batch");
  if (q.init != "base" && q.init != "zero") bad.push_back("posttrain.init");

  const auto& e = eval;
  if (e.test_size < 1) bad.push_back("eval.test_size");
  if (e.error_test_size < 1) bad.push_back("eval.error_test_size");
  for (double v : e.eps_grid) {
    if (!(v >= 0.0 && v < 1.0)) {
      bad.push_back("eval.eps_grid");
      break;
    }
  }
  if (e.cdf_points < 1) bad.push_back("eval.cdf_points");
  if (e.eval_every < 1) bad.push_back("eval.eval_every");
  if (e.checkpoint_every < 0) bad.push_back("eval.checkpoint_every");
  if (!(e.offsupport_threshold > 0.0 && e.offsupport_threshold < 1.0)) {
    bad.push_back("eval.offsupport_threshold");
  }
  if (e.tracked_centers < 0) bad.push_back("eval.tracked_centers");

  const auto& l = lowerbound;
  if (l.targets.empty()) bad.push_back("lowerbound.targets");
  for (double v : l.targets) {
    if (!(v > 0.0 && v < 1.0)) {
      bad.push_back("lowerbound.targets");
      break;
    }
  }
  if (l.repeats < 1) bad.push_back("lowerbound.repeats");
  if (l.max_steps < 1) bad.push_back("lowerbound.max_steps");
  if (l.lq_samples < 1) bad.push_back("lowerbound.lq_samples");
  for (const auto& a : l.algorithms) {
    if (!kLowerBoundAlgorithms.count(a)) {
      bad.push_back("lowerbound.algorithms");
      break;
    }
  }

  if (guessing.m_grid.empty()) bad.push_back("guessing.m_grid");
  for (int m : guessing.m_grid) {
    if (m < 1) {
      bad.push_back("guessing.m_grid");
      break;
    }
  }
  if (guessing.trials < 1) bad.push_back("guessing.trials");

  if (output.dir.empty()) bad.push_back("output.dir");
  if (output.threads < 1) bad.push_back("output.threads");

  if (!bad.empty()) {
    throw ConfigError(fmt::format("invalid config value(s): {}", fmt::join(bad, ", ")), bad);
  }
}

ExperimentConfig parse_config(const std::string& text_in) {
  // Normalize '#' comments to the ';' form the INI reader understands.
  std::stringstream in(text_in);
  std::string line;
  std::string normalized;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    normalized += (!t.empty() && t.front() == '#') ? ";" : line;
    normalized += '\n';
  }

  boost::property_tree::ptree tree;
  try {
    std::istringstream src(normalized);
    boost::property_tree::ini_parser::read_ini(src, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(fmt::format("config syntax error at line {}: {}", e.line(), e.message()), {});
  }

  ExperimentConfig cfg;
  auto table = fields(cfg);
  std::vector<std::string> bad;
  for (const auto& [section, body] : tree) {
    const bool known = std::any_of(table.begin(), table.end(),
                                   [&](const Field& f) { return f.section == section; });
    if (!known) {
      bad.push_back(section);  // unknown section, or a key outside any section
      continue;
    }
    for (const auto& [key, value] : body) {
      const std::string name = section + "." + key;
      auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) {
        return f.section == section && f.key == key;
      });
      if (it == table.end()) {
        bad.push_back(name);
        continue;
      }
      try {
        it->set(value.get_value<std::string>());
      } catch (const std::exception&) {
        bad.push_back(name);
      }
    }
  }
  if (!bad.empty()) {
    throw ConfigError(fmt::format("unknown or malformed config key(s): {}", fmt::join(bad, ", ")),
                      bad);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path, {"--config"});
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string to_ini(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  std::string out;
  std::string current;
  for (const auto& f : fields(cfg)) {
    if (f.section != current) {
      if (!current.empty()) out += '\n';
      out += "[" + f.section + "]\n";
      current = f.section;
    }
    out += f.key + " = " + f.get() + "\n";
  }
  return out;
}

ExperimentConfig fig1_preset() {
  ExperimentConfig c;
  c.task.kind = "mixture";
  c.task.d = 32;
  c.task.k = 32;
  c.task.length = 128;
  c.pretrain.optimizer = OptimizerConfig{"adagrad", 0.1, 2.0, 4.0, 1e-10};
  c.pretrain.steps = 1000;
  c.pretrain.batch = 256;
  c.posttrain.algorithm = "on_policy";
  c.posttrain.behavior = "on_policy";
  c.posttrain.optimizer = OptimizerConfig{"adagrad", 0.1, 4.0, 2.0, 1e-10};
  c.posttrain.steps = 4000;
  c.posttrain.batch = 1024;
  c.posttrain.init = "base";
  c.eval.eval_every = 100;
  c.eval.checkpoint_every = 1000;
  c.output.dir = "out/fig1";
  c.output.seed = 1;
  return c;
}

ExperimentConfig fig2_preset() {
  ExperimentConfig c;
  c.task.kind = "hypercube";
  c.task.d = 32;
  c.task.k = 10;
  c.task.length = 128;
  c.pretrain.optimizer = OptimizerConfig{"adagrad", 1.0, 2.0, 4.0, 1e-10};
  c.pretrain.steps = 1000;
  c.pretrain.batch = 256;
  c.pretrain.checkpoints = {250, 500};
  c.output.dir = "out/fig2";
  c.output.seed = 0;
  return c;
}

ExperimentConfig lowerbound_preset() {
  ExperimentConfig c;
  c.task.kind = "hard";
  c.task.k = 4;
  c.task.length = 6;
  c.output.dir = "out/lowerbound";
  return c;
}

BehaviorKind parse_behavior(const std::string& name) {
  if (name == "ground_truth") return BehaviorKind::ground_truth;
  if (name == "uniform") return BehaviorKind::uniform;
  if (name == "mixture_base_uniform") return BehaviorKind::mixture_base_uniform;
  if (name == "on_policy") return BehaviorKind::on_policy;
  if (name == "best_of_m_or") return BehaviorKind::best_of_m_or;
  if (name == "best_of_m_pr") return BehaviorKind::best_of_m_pr;
  throw ConfigError("unknown behavior policy '" + name + "'", {"posttrain.behavior"});
}

AdvantageKind parse_advantage(const std::string& name) {
  if (name == "simple") return AdvantageKind::simple;
  if (name == "return") return AdvantageKind::returns;
  throw ConfigError("unknown advantage '" + name + "'", {"posttrain.advantage"});
}

RewardKind parse_reward(const std::string& name) {
  if (name == "outcome") return RewardKind::outcome;
  if (name == "process") return RewardKind::process;
  throw ConfigError("unknown reward kind '" + name + "'", {"posttrain.reward"});
}

}  // namespace arlab::harness
