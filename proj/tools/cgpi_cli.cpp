#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cgpi/harness.hpp"

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) seeds.push_back(std::stoull(tok));
  return seeds;
}

void print_comparison(const cgpi::ComparisonReport& rep) {
  nlohmann::json j;
  j["env"] = rep.env;
  j["a"] = {{"label", rep.label_a}, {"finals", rep.finals_a},
            {"mean", rep.mean_a}, {"std", rep.std_a}};
  j["b"] = {{"label", rep.label_b}, {"finals", rep.finals_b},
            {"mean", rep.mean_b}, {"std", rep.std_b}};
  j["t"] = rep.welch.t;
  j["dof"] = rep.welch.dof;
  j["p"] = rep.welch.p;
  j["significant_at_0.05"] = rep.significant;
  j["window"] = rep.window;
  std::cout << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Off-policy continuous-control training, comparison, and analysis"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "train one algorithm over several seeds");
  std::string algo = "td3", env = "lqr1d", seeds_csv = "0", config_path, out_dir;
  long steps = 30000, eval_every = 1000;
  int depth = 0, hidden = 0;
  bool force = false;
  run_cmd->add_option("--algo", algo, "ddpg|td3|tds|sac")->capture_default_str();
  run_cmd->add_option("--env", env, "lqr1d|pendulum|pointmass2d")->capture_default_str();
  run_cmd->add_option("--seeds", seeds_csv, "comma-separated seed list")->capture_default_str();
  run_cmd->add_option("--steps", steps, "environment steps per seed")->capture_default_str();
  run_cmd->add_option("--eval-every", eval_every, "evaluation cadence")->capture_default_str();
  run_cmd->add_option("--depth", depth, "number of hidden layers (2 or 3)")
      ->check(CLI::IsMember({2, 3}));
  run_cmd->add_option("--hidden", hidden, "hidden layer width");
  run_cmd->add_option("--config", config_path, "flat key = value config file");
  run_cmd->add_option("--out", out_dir, "output directory")->required();
  run_cmd->add_flag("--force", force, "overwrite an existing output directory");

  // compare
  auto* cmp_cmd = app.add_subcommand("compare", "Welch's t-test between two run directories");
  std::string dir_a, dir_b;
  int window = 1;
  cmp_cmd->add_option("dir_a", dir_a)->required();
  cmp_cmd->add_option("dir_b", dir_b)->required();
  cmp_cmd->add_option("--window", window, "average the last N evaluations per seed")
      ->capture_default_str();

  // plot
  auto* plot_cmd = app.add_subcommand("plot", "emit an SVG learning-curve plot");
  std::vector<std::string> plot_dirs;
  std::string plot_out, plot_mode = "return";
  plot_cmd->add_option("dirs", plot_dirs, "run directories")->required();
  plot_cmd->add_option("--out", plot_out, "output SVG path")->required();
  plot_cmd->add_option("--mode", plot_mode, "return|sigma")
      ->check(CLI::IsMember({"return", "sigma"}));

  // taylor
  auto* taylor_cmd =
      app.add_subcommand("taylor", "stochastic-vs-deterministic objective gap on a checkpoint");
  std::string taylor_dir;
  double sigma = 0.1, eps = 1e-3;
  long samples = 100000;
  int n_states = 32;
  std::uint64_t taylor_seed = 0;
  taylor_cmd->add_option("--run", taylor_dir, "seed directory of a finished run")->required();
  taylor_cmd->add_option("--sigma", sigma)->capture_default_str();
  taylor_cmd->add_option("--samples", samples, "Monte Carlo samples")->capture_default_str();
  taylor_cmd->add_option("--states", n_states, "probe states")->capture_default_str();
  taylor_cmd->add_option("--eps", eps, "Hessian finite-difference step")->capture_default_str();
  taylor_cmd->add_option("--seed", taylor_seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      cgpi::RunOptions opt;
      opt.algo = cgpi::parse_variant(algo);
      opt.env = env;
      opt.seeds = parse_seeds(seeds_csv);
      opt.steps = steps;
      opt.eval_every = eval_every;
      opt.config = cgpi::AlgoConfig::for_variant(opt.algo);
      if (!config_path.empty()) cgpi::load_config_file(config_path, opt.config);
      if (depth > 0 || hidden > 0) {
        const int d = depth > 0 ? depth : 3;
        const int h = hidden > 0 ? hidden : 256;
        std::string layers;
        for (int i = 0; i < d; ++i) layers += (i ? ":" : "") + std::to_string(h);
        opt.config.hidden_layers = layers;
      }
      opt.out_dir = out_dir;
      opt.force = force;
      const cgpi::RunResult res = cgpi::run(opt);
      std::printf("%s on %s: final return %.6g +/- %.6g over %zu seed(s) -> %s\n", algo.c_str(),
                  env.c_str(), res.final_mean, res.final_std, res.seeds.size(),
                  res.dir.string().c_str());
    } else if (*cmp_cmd) {
      print_comparison(cgpi::compare(dir_a, dir_b, window));
    } else if (*plot_cmd) {
      std::vector<std::filesystem::path> dirs(plot_dirs.begin(), plot_dirs.end());
      cgpi::plot(dirs, plot_out,
                 plot_mode == "sigma" ? cgpi::PlotMode::Sigma : cgpi::PlotMode::Return);
      std::printf("wrote %s\n", plot_out.c_str());
    } else if (*taylor_cmd) {
      const cgpi::TaylorReport rep =
          cgpi::taylor_from_run(taylor_dir, sigma, samples, n_states, eps, taylor_seed);
      nlohmann::json j;
      j["sigma"] = rep.sigma;
      j["j_d"] = rep.j_d;
      j["j_r"] = rep.j_r;
      j["measured_residual"] = rep.measured_residual;
      j["predicted_residual"] = rep.predicted_residual;
      j["mc_standard_error"] = rep.mc_standard_error;
      j["states"] = rep.state_count;
      j["samples"] = rep.sample_count;
      std::cout << j.dump(2) << "\n";
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
