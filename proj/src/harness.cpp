#include "cgpi/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace cgpi {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = v.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  return {mean, sd};
}

void write_config_snapshot(const fs::path& path, const RunOptions& options) {
  std::ofstream f(path);
  f << "# reproduces this run together with the per-seed directories\n";
  f << "algo = " << variant_name(options.algo) << "\n";
  f << "env = " << options.env << "\n";
  f << "steps = " << options.steps << "\n";
  f << "eval_every = " << options.eval_every << "\n";
  std::string seeds;
  for (std::size_t i = 0; i < options.seeds.size(); ++i)
    seeds += (i ? "," : "") + std::to_string(options.seeds[i]);
  f << "seeds = " << seeds << "\n";
  for (const auto& [k, v] : options.config.to_key_values()) f << k << " = " << v << "\n";
  if (!f) throw std::runtime_error("harness: failed writing " + path.string());
}

json run_summary_entry(AlgoVariant algo, const std::string& env, std::uint64_t seed,
                       const LearningCurve& curve) {
  json j;
  j["algo"] = variant_name(algo);
  j["env"] = env;
  j["seed"] = seed;
  const bool stochastic = variant_traits(algo).stochastic_actor;
  j["policy_kind"] = stochastic ? "gaussian" : "deterministic";
  if (!curve.points.empty()) {
    const CurvePoint& last = curve.points.back();
    j["final_step"] = last.step;
    j["final_return_mean"] = last.eval_mean;
    j["final_return_std"] = last.eval_std;
    j["final_sigma_mean"] = last.sigma_mean;
    if (std::isnan(last.alpha))
      j["final_alpha"] = nullptr;
    else
      j["final_alpha"] = last.alpha;
  }
  return j;
}

}  // namespace

void write_curve_csv(const fs::path& path, const LearningCurve& curve) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("harness: cannot open " + path.string());
  f << kCurveHeader << "\n";
  for (const CurvePoint& p : curve.points) {
    f << p.step << ',' << fmt(p.eval_mean) << ',' << fmt(p.eval_std) << ','
      << fmt(p.sigma_mean) << ',';
    if (!std::isnan(p.alpha)) f << fmt(p.alpha);
    f << "\n";
  }
  if (!f) throw std::runtime_error("harness: failed writing " + path.string());
}

LearningCurve read_curve_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("harness: cannot open " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != kCurveHeader)
    throw std::runtime_error("harness: bad curve header in " + path.string());
  LearningCurve curve;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    CurvePoint p;
    std::getline(ss, tok, ',');
    p.step = std::stoll(tok);
    std::getline(ss, tok, ',');
    p.eval_mean = std::stod(tok);
    std::getline(ss, tok, ',');
    p.eval_std = std::stod(tok);
    std::getline(ss, tok, ',');
    p.sigma_mean = std::stod(tok);
    std::getline(ss, tok, ',');
    p.alpha = tok.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(tok);
    curve.points.push_back(p);
  }
  return curve;
}

RunResult run(const RunOptions& options) {
  if (options.seeds.empty()) throw std::invalid_argument("harness: seeds list is empty");
  if (fs::exists(options.out_dir) && !fs::is_empty(options.out_dir) && !options.force)
    throw std::runtime_error("harness: output directory " + options.out_dir.string() +
                             " exists; pass --force to overwrite");
  fs::create_directories(options.out_dir);
  write_config_snapshot(options.out_dir / "config.txt", options);

  RunResult result;
  result.dir = options.out_dir;
  std::vector<double> finals;
  for (const std::uint64_t seed : options.seeds) {
    Trainer trainer(options.algo, options.config, options.env, seed);
    LearningCurve curve = trainer.train(options.steps, options.eval_every);

    RunArtifact art;
    art.seed = seed;
    art.seed_dir = options.out_dir / ("seed_" + std::to_string(seed));
    fs::create_directories(art.seed_dir);
    art.curve_csv = art.seed_dir / "curve.csv";
    art.summary_json = art.seed_dir / "summary.json";
    write_curve_csv(art.curve_csv, curve);
    {
      std::ofstream f(art.summary_json);
      f << run_summary_entry(options.algo, options.env, seed, curve).dump(2) << "\n";
    }
    const ActorSet& actors = trainer.actors();
    if (actors.gauss)
      actors.gauss->net.save((art.seed_dir / "policy.bin").string());
    else
      actors.det->net.save((art.seed_dir / "policy.bin").string());
    trainer.critic().q1.save((art.seed_dir / "q1.bin").string());
    trainer.critic().q2.save((art.seed_dir / "q2.bin").string());

    if (!curve.points.empty()) finals.push_back(curve.points.back().eval_mean);
    art.curve = std::move(curve);
    result.seeds.push_back(std::move(art));
  }

  if (!finals.empty()) std::tie(result.final_mean, result.final_std) = mean_std(finals);
  json top;
  top["algo"] = variant_name(options.algo);
  top["env"] = options.env;
  top["seeds"] = options.seeds;
  top["final_returns"] = finals;
  top["final_mean"] = result.final_mean;
  top["final_std"] = result.final_std;
  std::ofstream f(options.out_dir / "summary.json");
  f << top.dump(2) << "\n";
  return result;
}

namespace {

struct LoadedRun {
  std::string label;
  std::string env;
  std::string algo;
  std::vector<LearningCurve> curves;  // one per seed
};

LoadedRun load_run(const fs::path& dir) {
  LoadedRun r;
  r.label = dir.filename().string();
  if (r.label.empty()) r.label = dir.parent_path().filename().string();
  const fs::path summary = dir / "summary.json";
  if (!fs::exists(summary))
    throw std::runtime_error("harness: missing " + summary.string());
  json j;
  std::ifstream(summary) >> j;
  r.env = j.at("env").get<std::string>();
  r.algo = j.at("algo").get<std::string>();
  std::vector<fs::path> seed_dirs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && e.path().filename().string().starts_with("seed_"))
      seed_dirs.push_back(e.path());
  std::sort(seed_dirs.begin(), seed_dirs.end());
  for (const auto& sd : seed_dirs) r.curves.push_back(read_curve_csv(sd / "curve.csv"));
  if (r.curves.empty()) throw std::runtime_error("harness: no seed curves in " + dir.string());
  return r;
}

std::vector<double> final_returns(const LoadedRun& r, int window) {
  std::vector<double> out;
  for (const auto& curve : r.curves) {
    const auto& pts = curve.points;
    if (pts.empty()) throw std::runtime_error("harness: empty curve in run " + r.label);
    const int w = std::min<int>(window, static_cast<int>(pts.size()));
    double sum = 0.0;
    for (int i = 0; i < w; ++i) sum += pts[pts.size() - 1 - i].eval_mean;
    out.push_back(sum / w);
  }
  return out;
}

}  // namespace

ComparisonReport compare(const fs::path& run_dir_a, const fs::path& run_dir_b, int window) {
  const LoadedRun a = load_run(run_dir_a);
  const LoadedRun b = load_run(run_dir_b);
  if (a.env != b.env)
    throw std::runtime_error("harness: cannot compare runs on different environments (" + a.env +
                             " vs " + b.env + ")");
  ComparisonReport rep;
  rep.env = a.env;
  rep.label_a = a.label;
  rep.label_b = b.label;
  rep.window = window;
  rep.finals_a = final_returns(a, window);
  rep.finals_b = final_returns(b, window);
  if (rep.finals_a.size() < 2 || rep.finals_b.size() < 2)
    throw std::runtime_error("harness: compare needs at least 2 seeds per run");
  std::tie(rep.mean_a, rep.std_a) = mean_std(rep.finals_a);
  std::tie(rep.mean_b, rep.std_b) = mean_std(rep.finals_b);
  rep.welch = welch_t_test(rep.finals_a, rep.finals_b);
  rep.significant = rep.welch.p < 0.05;
  return rep;
}

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b"};

struct Series {
  std::string label;
  std::vector<double> x, mean, lo, hi;
};

}  // namespace

void plot(const std::vector<fs::path>& run_dirs, const fs::path& out_path, PlotMode mode) {
  if (run_dirs.empty()) throw std::invalid_argument("harness: plot needs at least one run");
  std::vector<Series> series;
  std::string env;
  for (const auto& dir : run_dirs) {
    const LoadedRun r = load_run(dir);
    if (env.empty())
      env = r.env;
    else if (env != r.env)
      throw std::runtime_error("harness: plotted runs must share an environment");
    Series s;
    s.label = r.label;
    const std::size_t n_points = r.curves.front().points.size();
    for (const auto& c : r.curves)
      if (c.points.size() != n_points)
        throw std::runtime_error("harness: seed curves in " + dir.string() +
                                 " have mismatched lengths");
    for (std::size_t i = 0; i < n_points; ++i) {
      std::vector<double> vals;
      for (const auto& c : r.curves)
        vals.push_back(mode == PlotMode::Return ? c.points[i].eval_mean
                                                : c.points[i].sigma_mean);
      const auto [m, sd] = mean_std(vals);
      s.x.push_back(static_cast<double>(r.curves.front().points[i].step));
      s.mean.push_back(m);
      s.lo.push_back(m - sd);
      s.hi.push_back(m + sd);
    }
    series.push_back(std::move(s));
  }

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    for (double v : s.x) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
    for (double v : s.lo) ymin = std::min(ymin, v);
    for (double v : s.hi) ymax = std::max(ymax, v);
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double width = 720, height = 480, ml = 80, mr = 20, mt = 30, mb = 50;
  const auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
  const auto py = [&](double y) {
    return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb);
  };

  std::ofstream f(out_path);
  if (!f) throw std::runtime_error("harness: cannot open " + out_path.string());
  f << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  f << "<!-- data table: label step mean lo hi\n";
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i)
      f << s.label << ' ' << s.x[i] << ' ' << fmt(s.mean[i]) << ' ' << fmt(s.lo[i]) << ' '
        << fmt(s.hi[i]) << "\n";
  f << "-->\n";
  f << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
    << "\" fill=\"white\"/>\n";
  // Axes.
  f << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr << "\" y2=\""
    << height - mb << "\" stroke=\"black\"/>\n";
  f << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 5.0;
    const double yv = ymin + (ymax - ymin) * i / 5.0;
    f << "<text x=\"" << px(xv) << "\" y=\"" << height - mb + 18
      << "\" font-size=\"11\" text-anchor=\"middle\">" << static_cast<long long>(xv)
      << "</text>\n";
    char ybuf[32];
    std::snprintf(ybuf, sizeof(ybuf), "%.4g", yv);
    f << "<text x=\"" << ml - 6 << "\" y=\"" << py(yv) + 4
      << "\" font-size=\"11\" text-anchor=\"end\">" << ybuf << "</text>\n";
  }
  f << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
    << "\" font-size=\"13\" text-anchor=\"middle\">environment steps (" << env << ")</text>\n";
  f << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
    << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << (mt + height - mb) / 2 << ")\">"
    << (mode == PlotMode::Return ? "evaluation return" : "mean policy std") << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    if (s.x.size() > 1) {
      f << "<path fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" d=\"M";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        f << (i ? " L" : "") << px(s.x[i]) << ' ' << py(s.hi[i]);
      for (std::size_t i = s.x.size(); i-- > 0;) f << " L" << px(s.x[i]) << ' ' << py(s.lo[i]);
      f << " Z\"/>\n";
    }
    f << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) f << px(s.x[i]) << ',' << py(s.mean[i]) << ' ';
    f << "\"/>\n";
    const double ly = mt + 16.0 * static_cast<double>(k);
    f << "<line x1=\"" << width - mr - 150 << "\" y1=\"" << ly << "\" x2=\"" << width - mr - 120
      << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    f << "<text x=\"" << width - mr - 114 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">"
      << s.label << "</text>\n";
  }
  f << "</svg>\n";
  if (!f) throw std::runtime_error("harness: failed writing " + out_path.string());
}

TaylorReport taylor_from_run(const fs::path& seed_dir, double sigma, std::int64_t mc_samples,
                             int n_states, double hessian_eps, std::uint64_t rng_seed) {
  json j;
  std::ifstream(seed_dir / "summary.json") >> j;
  const std::string env_name = j.at("env").get<std::string>();
  const bool gaussian = j.at("policy_kind").get<std::string>() == "gaussian";

  const Mlp policy_net = Mlp::load((seed_dir / "policy.bin").string());
  const Mlp q1 = Mlp::load((seed_dir / "q1.bin").string());
  const Mlp q2 = Mlp::load((seed_dir / "q2.bin").string());

  const auto env = make_env(env_name);
  const int adim = env->spec().action_dim;

  PolicyFn mu;
  if (gaussian) {
    GaussianPolicy gp;
    gp.net = policy_net;
    gp.action_dim = adim;
    mu = [gp](const Eigen::VectorXd& s) { return act_mean(gp, s); };
  } else {
    DeterministicPolicy dp{policy_net, adim};
    mu = [dp](const Eigen::VectorXd& s) { return act_deterministic(dp, s); };
  }
  CriticFn q = [q1, q2, adim](const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
    Eigen::VectorXd x(s.size() + adim);
    x << s, a;
    return min_q(q1.forward(x)[0], q2.forward(x)[0]);
  };

  // Probe states from on-policy rollouts of the mean action.
  Rng rng(rng_seed);
  std::vector<Eigen::VectorXd> states;
  Eigen::VectorXd s = env->reset(rng);
  while (static_cast<int>(states.size()) < n_states) {
    states.push_back(s);
    const StepResult r = env->step(mu(s));
    s = r.episode_over() ? env->reset(rng) : r.next_state;
  }
  return taylor_residual(q, mu, sigma, states, mc_samples, rng, false, hessian_eps);
}

}  // namespace cgpi
