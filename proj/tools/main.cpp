// arlab: command-line front end for the experiment harness.
//
//   arlab <subcommand> [--config PATH] [--seed U64] [--out DIR] [--threads N] [args...]
//
// Exit status: 0 success, 2 validation error, 1 check failure or runtime error.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "arlab/harness/commands.hpp"
#include "arlab/harness/config.hpp"

namespace {

using namespace arlab::harness;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<unsigned> threads;
  std::vector<std::string> positional;
};

ExperimentConfig resolve(const Flags& f, ExperimentConfig preset) {
  ExperimentConfig cfg = f.config.empty() ? std::move(preset) : load_config(f.config);
  if (f.seed) cfg.output.seed = *f.seed;
  if (!f.out.empty()) cfg.output.dir = f.out;
  if (f.threads) cfg.output.threads = *f.threads;
  cfg.validate();
  return cfg;
}

int report(const std::vector<CheckLine>& checks) {
  for (const auto& c : checks) {
    fmt::print("{} {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
  }
  return all_passed(checks) ? 0 : 1;
}

int run_pretrain(const Flags& f) {
  const auto cfg = resolve(f, ExperimentConfig{});
  const auto r = cmd_pretrain(cfg);
  fmt::print("pretrain: {} checkpoint(s) in {}, final expected error {:.6f}\n", r.checkpoints.size(),
             cfg.output.dir, r.final_error);
  return 0;
}

int run_posttrain(const Flags& f) {
  auto cfg = resolve(f, ExperimentConfig{});
  if (!f.positional.empty()) cfg.posttrain.base_checkpoint = f.positional.front();
  const auto r = cmd_posttrain(cfg);
  const auto& last = r.evals.back();
  fmt::print("posttrain ({} reward): expected error {:.6f}, off-support {:.3e}, on-support {:.3e}, "
             "{} queries\n",
             cfg.posttrain.reward, last.expected_error, last.offsupport, last.onsupport,
             r.cumulative_queries.empty() ? 0 : r.cumulative_queries.back());
  return 0;
}

int run_lq(const Flags& f) {
  const auto cfg = resolve(f, ExperimentConfig{});
  std::vector<std::filesystem::path> ckpts(f.positional.begin(), f.positional.end());
  const auto rows = cmd_lq(cfg, ckpts);
  fmt::print("lq: {} rows written to {}/lq.csv\n", rows.size(), cfg.output.dir);
  return 0;
}

int run_guessing(const Flags& f) {
  const auto cfg = resolve(f, ExperimentConfig{});
  std::vector<CheckLine> checks;
  for (const auto& r : cmd_guessing(cfg)) {
    if (r.strategy != "optimal") continue;
    const double z = r.sigma > 0 ? std::abs(r.miss - r.exact) / r.sigma : 0.0;
    checks.push_back({fmt::format("guess_m{}_l{}", r.m, r.l),
                      r.sigma > 0 ? z <= 3.0 : r.miss == r.exact,
                      fmt::format("miss {:.5f} vs (m-l)/m = {:.5f} ({:.2f} sigma)", r.miss, r.exact, z)});
  }
  return report(checks);
}

int run_verify(const Flags& f) {
  const auto cfg = resolve(f, ExperimentConfig{});
  std::vector<CheckLine> checks;
  for (const auto& c : cmd_verify(cfg)) {
    checks.push_back({c.name, c.passed,
                      fmt::format("observed {:.3e}, threshold {:.3e}{}{}", c.observed, c.threshold,
                                  c.detail.empty() ? "" : "; ", c.detail)});
  }
  return report(checks);
}

int run_lowerbound(const Flags& f) {
  const auto cfg = resolve(f, lowerbound_preset());
  const auto r = cmd_lowerbound(cfg);
  for (const auto& s : r.summary) {
    fmt::print("{:>14} eps={:<5} m={:<6} mean queries {:>12.1f} ({}/{} reached)\n", s.algorithm,
               s.target, s.m, s.mean_queries, s.reached, s.runs);
  }
  return 0;
}

int run_fig1(const Flags& f) { return report(cmd_reproduce_fig1(resolve(f, fig1_preset())).checks); }
int run_fig2(const Flags& f) { return report(cmd_reproduce_fig2(resolve(f, fig2_preset())).checks); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation lab for policy-gradient post-training of linear autoregressive models"};
  app.require_subcommand(1);

  Flags flags;
  struct Sub {
    const char* name;
    const char* help;
    std::function<int(const Flags&)> run;
    const char* positional;
  };
  const std::vector<Sub> subs{
      {"pretrain", "Supervised pre-training from zero init", run_pretrain, nullptr},
      {"posttrain", "Policy-gradient post-training from a base checkpoint", run_posttrain,
       "base checkpoint (overrides posttrain.base_checkpoint)"},
      {"lq", "Likelihood quantiles and CDFs of checkpoints", run_lq,
       "checkpoint files (default: all in --out)"},
      {"guessing", "Guessing-game grid", run_guessing, nullptr},
      {"verify", "Oracle suite", run_verify, nullptr},
      {"lowerbound", "Queries-to-target on the hard instance", run_lowerbound, nullptr},
      {"reproduce-fig1", "ORM vs PRM post-training on the mixture task", run_fig1, nullptr},
      {"reproduce-fig2", "Likelihood quantiles along pre-training", run_fig2, nullptr},
  };
  std::function<int(const Flags&)> chosen;
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", flags.config, "INI config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "master seed");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--threads", flags.threads, "worker threads")->check(CLI::PositiveNumber);
    if (s.positional) sub->add_option("files", flags.positional, s.positional);
    sub->callback([&chosen, run = s.run] { chosen = run; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    return chosen(flags);
  } catch (const ConfigError& e) {
    fmt::print(stderr, "validation error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
}
