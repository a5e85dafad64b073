#include "spocc/commands.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "spocc/dataio.hpp"
#include "spocc/error.hpp"

namespace spocc::cli {
namespace {

namespace fs = std::filesystem;
using io::Json;

constexpr std::uint64_t kDesignSeedOffset = 1000;

std::vector<Point> site_coords(const OccupancyDataset& data, std::span<const int> sites) {
  std::vector<Point> out;
  out.reserve(sites.size());
  for (int i : sites) out.push_back(data.sites()[static_cast<std::size_t>(i)].coords);
  return out;
}

std::vector<int> all_sites(const OccupancyDataset& data) {
  std::vector<int> idx(static_cast<std::size_t>(data.size()));
  for (int i = 0; i < data.size(); ++i) idx[static_cast<std::size_t>(i)] = i;
  return idx;
}

// Design rows for raster points: the intercept plus covariates held at their
// training means.
Eigen::MatrixXd raster_design(const OccupancyDataset& data, std::span<const int> train, std::size_t points) {
  const int q = data.num_covariates();
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(q + 1);
  row[0] = 1.0;
  if (q > 0 && !train.empty()) {
    for (int i : train) row.tail(q) += data.covariates().row(i);
    row.tail(q) /= static_cast<double>(train.size());
  }
  return row.replicate(static_cast<Eigen::Index>(points), 1);
}

struct FitDir {
  RunConfig config;
  OccupancyDataset data;
  PosteriorSamples samples;
};

FitDir load_fit_dir(const fs::path& dir) {
  for (const char* name : {"config.json", "draws.json", "split.csv"}) {
    if (!fs::is_regular_file(dir / name)) throw IoError("missing fit artifact: " + (dir / name).string());
  }
  FitDir f{parse_run_config(io::read_json(dir / "config.json"), dir), {}, {}};
  const OccupancyDataset raw = io::load_dataset(f.config.sites_path, f.config.detections_path);
  f.data = raw.with_split(io::load_split(dir / "split.csv", raw));
  f.samples = io::read_samples(dir / "draws.json", f.data);
  return f;
}

void write_warnings(const fs::path& dir, const std::vector<std::string>& warnings, std::ostream& err) {
  const fs::path path = dir / "warnings.txt";
  if (warnings.empty()) {
    std::error_code ec;
    fs::remove(path, ec);
    return;
  }
  std::string text;
  for (const auto& w : warnings) {
    err << "warning: " << w << '\n';
    text += w + '\n';
  }
  io::write_text(path, text);
}

void write_raster_for(const PosteriorSamples& samples, const OccupancyDataset& data, const BoundingBox& box, int nx,
                      int ny, const fs::path& path) {
  const auto pts = raster_points(box, nx, ny);
  const Eigen::MatrixXd design = raster_design(data, samples.train_sites, pts.size());
  const Eigen::MatrixXd psi = psi_draws(samples, pts, &design);
  io::write_raster(path, io::summarize_raster(psi, pts));
}

BoundingBox site_box(const OccupancyDataset& data) {
  const auto coords = site_coords(data, all_sites(data));
  return BoundingBox::of(coords);
}

BoundingBox parse_bbox(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw InvalidArgument("bad number");
    } catch (const std::exception&) {
      throw InvalidArgument("--bbox expects xmin,ymin,xmax,ymax");
    }
  }
  if (v.size() != 4 || !(v[2] >= v[0]) || !(v[3] >= v[1])) {
    throw InvalidArgument("--bbox expects xmin,ymin,xmax,ymax with min <= max");
  }
  return {{v[0], v[1]}, {v[2], v[3]}};
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

}  // namespace

Simulation simulate(const SimulationOptions& opt) {
  if (opt.visits < 1 || opt.n_train < 1 || opt.n_holdout < 0) {
    throw InvalidArgument("simulate: need n_train >= 1, n_holdout >= 0, visits >= 1");
  }
  ScenarioParams params;
  params.p = opt.p;
  Simulation sim{make_surface(opt.scenario, opt.grid, params, opt.seed), {}};
  sim.data = sample_design(sim.surface, opt.n_train, opt.n_holdout, opt.visits, opt.seed + kDesignSeedOffset);
  return sim;
}

void write_simulation(const Simulation& sim, const SimulationOptions& opt, const fs::path& dir) {
  io::write_dataset(sim.data, dir);
  std::string text = "x,y,f,psi\n";
  for (std::size_t c = 0; c < sim.surface.cells.size(); ++c) {
    text += io::format_number(sim.surface.cells[c][0]) + ',' + io::format_number(sim.surface.cells[c][1]) + ',' +
            io::format_number(sim.surface.f[c]) + ',' + io::format_number(sim.surface.psi[c]) + '\n';
  }
  io::write_text(dir / "truth_raster.csv", text);
  io::write_json(dir / "simulate.json", Json{{"scenario", opt.scenario},
                                             {"seed", opt.seed},
                                             {"grid", std::to_string(opt.grid.nx) + "x" + std::to_string(opt.grid.ny)},
                                             {"n_train", opt.n_train},
                                             {"n_holdout", opt.n_holdout},
                                             {"visits", opt.visits},
                                             {"p", opt.p},
                                             {"beta0", sim.surface.beta0}});
}

Correlogram residual_correlogram(const PosteriorSamples& samples, const OccupancyDataset& data,
                                 std::span<const int> sites, const ScoringConfig& scoring) {
  const auto residuals = occupancy_residuals(samples, data, sites);
  const auto coords = site_coords(data, sites);
  const auto edges = bin_edges(scoring, coords);
  return correlogram(residuals, coords, edges, scoring.n_perm, scoring.seed);
}

FitResult fit_and_score(const OccupancyDataset& data, const LearnerSpec& learner, const McmcConfig& mcmc,
                        const ScoringConfig& scoring, const std::string& label) {
  FitResult r{run_chain(data, learner, mcmc), std::nullopt, std::nullopt, {}};
  if (data.split().holdout.empty()) {
    r.warnings.push_back("holdout set is empty; score.json not written");
  } else {
    r.score = neg2_lppd(r.samples, data, label);
  }
  try {
    r.correlogram = residual_correlogram(r.samples, data, data.split().train, scoring);
  } catch (const UndefinedStatistic& e) {
    r.warnings.push_back(std::string("correlogram skipped: ") + e.what());
  } catch (const InvalidArgument& e) {
    r.warnings.push_back(std::string("correlogram skipped: ") + e.what());
  }
  return r;
}

std::vector<LeagueEntry> compare(const OccupancyDataset& data,
                                 const std::vector<std::pair<std::string, LearnerSpec>>& learners,
                                 std::uint64_t seed, const McmcConfig& base, const ScoringConfig& scoring) {
  std::vector<LeagueEntry> entries(learners.size());
  const long n = static_cast<long>(learners.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long k = 0; k < n; ++k) {
    auto& e = entries[static_cast<std::size_t>(k)];
    e.label = learners[static_cast<std::size_t>(k)].first;
    e.learner = learners[static_cast<std::size_t>(k)].second;
    McmcConfig mcmc = base;
    mcmc.seed = seed + static_cast<std::uint64_t>(k);
    ScoringConfig sc = scoring;
    sc.seed = seed + static_cast<std::uint64_t>(k);
    try {
      e.result = fit_and_score(data, e.learner, mcmc, sc, e.label);
      if (!e.result->score) e.error = "no holdout sites to score";
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
  }
  return entries;
}

std::vector<std::size_t> league_order(const std::vector<LeagueEntry>& entries) {
  std::vector<std::size_t> order(entries.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ea = entries[a];
    const auto& eb = entries[b];
    if (ea.ok() != eb.ok()) return ea.ok();
    if (!ea.ok()) return false;
    return ea.result->score->neg2_lppd < eb.result->score->neg2_lppd;
  });
  return order;
}

void write_league(const fs::path& path, const std::vector<LeagueEntry>& entries) {
  std::string text = "rank,learner,neg2_lppd,status\n";
  int rank = 0;
  for (std::size_t k : league_order(entries)) {
    const auto& e = entries[k];
    if (e.ok()) {
      text += std::to_string(++rank) + ',' + e.label + ',' + io::format_number(e.result->score->neg2_lppd) + ",ok\n";
    } else {
      text += "NA," + e.label + ",NA,failed\n";
    }
  }
  io::write_text(path, text);
}

std::vector<Point> raster_points(const BoundingBox& box, int nx, int ny) {
  if (nx < 1 || ny < 1) throw InvalidArgument("raster grid must be at least 1x1");
  const GridGeometry grid{box, nx, ny};
  std::vector<Point> pts(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
  for (int c = 0; c < grid.num_cells(); ++c) pts[static_cast<std::size_t>(c)] = grid.center(c);
  return pts;
}

std::pair<int, int> parse_grid(const std::string& text) {
  const auto x = text.find_first_of("xX");
  int nx = 0;
  int ny = 0;
  try {
    if (x == std::string::npos) throw InvalidArgument("");
    std::size_t u1 = 0;
    std::size_t u2 = 0;
    const std::string a = text.substr(0, x);
    const std::string b = text.substr(x + 1);
    nx = std::stoi(a, &u1);
    ny = std::stoi(b, &u2);
    if (u1 != a.size() || u2 != b.size()) throw InvalidArgument("");
  } catch (const std::exception&) {
    throw InvalidArgument("grid must look like 30x30, got '" + text + "'");
  }
  if (nx < 1 || ny < 1) throw InvalidArgument("grid dimensions must be positive");
  return {nx, ny};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatial occupancy models with embedded learners"};
  app.require_subcommand(1);

  // simulate
  SimulationOptions sim_opt;
  std::string sim_out;
  std::string sim_grid = "30x30";
  auto* sim = app.add_subcommand("simulate", "Simulate a synthetic scenario dataset");
  sim->add_option("--scenario", sim_opt.scenario, "Scenario 1-6")->required()->check(CLI::Range(1, 6));
  sim->add_option("--seed", sim_opt.seed, "Random seed")->required();
  sim->add_option("--out", sim_out, "Output directory")->required();
  sim->add_option("--grid", sim_grid, "Grid size, e.g. 30x30");
  sim->add_option("--n-train", sim_opt.n_train, "Training sites")->check(CLI::PositiveNumber);
  sim->add_option("--n-holdout", sim_opt.n_holdout, "Holdout sites")->check(CLI::NonNegativeNumber);
  sim->add_option("--visits", sim_opt.visits, "Visits per site")->check(CLI::PositiveNumber);
  sim->add_option("--p", sim_opt.p, "Detection probability")->check(CLI::Range(0.0, 1.0));

  // fit
  std::string fit_config;
  auto* fit = app.add_subcommand("fit", "Run the sampler from a JSON config");
  fit->add_option("--config", fit_config, "Run configuration")->required();

  // predict
  std::string pred_fit;
  std::string pred_grid = "30x30";
  std::string pred_bbox;
  std::string pred_out;
  auto* pred = app.add_subcommand("predict", "Posterior occupancy raster from a fit");
  pred->add_option("--fit", pred_fit, "Fit directory")->required();
  pred->add_option("--grid-spec", pred_grid, "Raster size, e.g. 30x30");
  pred->add_option("--bbox", pred_bbox, "xmin,ymin,xmax,ymax (default: site bounding box)");
  pred->add_option("--out", pred_out, "Output CSV (default: FIT/psi_raster.csv)");

  // score
  std::string score_fit;
  std::string score_holdout;
  std::string score_label;
  std::string score_out;
  auto* score = app.add_subcommand("score", "Holdout -2 x LPPD of a fit");
  score->add_option("--fit", score_fit, "Fit directory")->required();
  score->add_option("--holdout", score_holdout, "split.csv naming holdout sites (default: the fit's split)");
  score->add_option("--label", score_label, "Model label (default: learner kind)");
  score->add_option("--out", score_out, "Output JSON (default: FIT/score.json)");

  // correlogram
  std::string cor_fit;
  std::string cor_out;
  std::string cor_sites = "train";
  std::optional<int> cor_bins;
  std::optional<int> cor_perm;
  std::optional<std::uint64_t> cor_seed;
  std::optional<double> cor_max;
  auto* cor = app.add_subcommand("correlogram", "Moran's I correlogram of occupancy residuals");
  cor->add_option("--fit", cor_fit, "Fit directory")->required();
  cor->add_option("--sites", cor_sites, "train, holdout or all")->check(CLI::IsMember({"train", "holdout", "all"}));
  cor->add_option("--bins", cor_bins, "Number of distance bins");
  cor->add_option("--n-perm", cor_perm, "Permutations for the envelope");
  cor->add_option("--seed", cor_seed, "Permutation seed");
  cor->add_option("--max-distance", cor_max, "Upper edge of the last bin");
  cor->add_option("--out", cor_out, "Output CSV (default: FIT/correlogram.csv)");

  // compare
  std::string cmp_data;
  std::string cmp_learners = "tree,svr,gp,gmrf,none";
  std::uint64_t cmp_seed = 1;
  std::string cmp_out;
  std::vector<std::string> cmp_hp;
  std::optional<int> cmp_iter;
  std::optional<int> cmp_burn;
  std::optional<int> cmp_thin;
  std::optional<int> cmp_perm;
  auto* cmp = app.add_subcommand("compare", "Fit several learners on one dataset and rank them");
  cmp->add_option("--data", cmp_data, "Directory with sites.csv, detections.csv and split.csv")->required();
  cmp->add_option("--learners", cmp_learners, "Comma-separated learner kinds");
  cmp->add_option("--seed", cmp_seed, "Base seed; learner k uses seed + k");
  cmp->add_option("--out", cmp_out, "Output directory")->required();
  cmp->add_option("--hp", cmp_hp, "Hyperparameter override, e.g. tree.max_depth=4");
  cmp->add_option("--n-iter", cmp_iter, "MCMC iterations");
  cmp->add_option("--burn-in", cmp_burn, "Burn-in iterations");
  cmp->add_option("--thin", cmp_thin, "Thinning interval");
  cmp->add_option("--n-perm", cmp_perm, "Permutations for the correlogram envelope");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*sim) {
      const auto [nx, ny] = parse_grid(sim_grid);
      sim_opt.grid = {nx, ny};
      const Simulation s = simulate(sim_opt);
      write_simulation(s, sim_opt, sim_out);
      out << "wrote " << s.data.size() << " sites to " << sim_out << '\n';
      return 0;
    }

    if (*fit) {
      const RunConfig cfg = load_run_config(fit_config);
      const OccupancyDataset raw = io::load_dataset(cfg.sites_path, cfg.detections_path);
      const OccupancyDataset data = raw.with_split(resolve_split(cfg.split, raw));
      const std::string label(to_string(cfg.learner.kind));
      FitResult r = fit_and_score(data, cfg.learner, cfg.mcmc, cfg.scoring, label);
      const fs::path dir = cfg.output_dir;
      fs::create_directories(dir);
      RunConfig echo = cfg;
      echo.sites_path = fs::absolute(cfg.sites_path).lexically_normal();
      echo.detections_path = fs::absolute(cfg.detections_path).lexically_normal();
      echo.split = SplitSpec{SplitSpec::Mode::file, fs::path("split.csv"), {}, 0.0, 1};
      echo.output_dir = ".";
      io::write_json(dir / "config.json", to_json(echo));
      io::write_split(dir / "split.csv", data);
      io::write_samples(dir / "draws.json", r.samples, data);
      io::write_posterior_summary(dir / "posterior_summary.csv", io::summarize_parameters(r.samples));
      std::error_code ec;
      fs::remove(dir / "score.json", ec);
      if (r.score) io::write_score(dir / "score.json", *r.score);
      fs::remove(dir / "correlogram.csv", ec);
      if (r.correlogram) io::write_correlogram(dir / "correlogram.csv", *r.correlogram);
      write_raster_for(r.samples, data, site_box(data), cfg.raster.nx, cfg.raster.ny, dir / "psi_raster.csv");
      write_warnings(dir, r.warnings, err);
      out << label << ": " << r.samples.draws.size() << " draws";
      if (r.score) out << ", -2xLPPD " << io::format_number(r.score->neg2_lppd) << " on " << r.score->n_holdout << " holdout sites";
      out << '\n';
      return 0;
    }

    if (*pred) {
      const FitDir f = load_fit_dir(pred_fit);
      const auto [nx, ny] = parse_grid(pred_grid);
      const BoundingBox box = pred_bbox.empty() ? site_box(f.data) : parse_bbox(pred_bbox);
      const fs::path path = pred_out.empty() ? fs::path(pred_fit) / "psi_raster.csv" : fs::path(pred_out);
      write_raster_for(f.samples, f.data, box, nx, ny, path);
      out << "wrote " << nx * ny << " raster rows to " << path.string() << '\n';
      return 0;
    }

    if (*score) {
      FitDir f = load_fit_dir(score_fit);
      if (!score_holdout.empty()) f.data = f.data.with_split(io::load_split(score_holdout, f.data));
      const std::string label = score_label.empty() ? std::string(to_string(f.samples.learner.kind)) : score_label;
      const ScoreReport rep = neg2_lppd(f.samples, f.data, label);
      const fs::path path = score_out.empty() ? fs::path(score_fit) / "score.json" : fs::path(score_out);
      if (!io::write_score(path, rep)) {
        err << "warning: holdout set is empty; " << path.string() << " not written\n";
        return 0;
      }
      out << label << ": -2xLPPD " << io::format_number(rep.neg2_lppd) << " on " << rep.n_holdout
          << " holdout sites\n";
      return 0;
    }

    if (*cor) {
      const FitDir f = load_fit_dir(cor_fit);
      ScoringConfig sc = f.config.scoring;
      if (cor_bins) sc.n_bins = *cor_bins;
      if (cor_perm) sc.n_perm = *cor_perm;
      if (cor_seed) sc.seed = *cor_seed;
      if (cor_max) sc.max_distance = *cor_max;
      if (sc.n_bins < 2 || sc.n_perm < 1) throw InvalidArgument("need --bins >= 2 and --n-perm >= 1");
      std::vector<int> sites = cor_sites == "train"     ? f.data.split().train
                               : cor_sites == "holdout" ? f.data.split().holdout
                                                        : all_sites(f.data);
      const Correlogram c = residual_correlogram(f.samples, f.data, sites, sc);
      const fs::path path = cor_out.empty() ? fs::path(cor_fit) / "correlogram.csv" : fs::path(cor_out);
      io::write_correlogram(path, c);
      out << "wrote " << c.num_bins() << " bins to " << path.string() << '\n';
      return 0;
    }

    if (*cmp) {
      const fs::path data_dir = cmp_data;
      const OccupancyDataset raw = io::load_dataset(data_dir / "sites.csv", data_dir / "detections.csv");
      const fs::path split_path = data_dir / "split.csv";
      if (!fs::is_regular_file(split_path)) throw IoError("missing " + split_path.string());
      const OccupancyDataset data = raw.with_split(io::load_split(split_path, raw));

      std::map<std::string, std::map<std::string, double>> overrides;
      for (const auto& kv : cmp_hp) {
        const auto dot = kv.find('.');
        const auto eq = kv.find('=');
        if (dot == std::string::npos || eq == std::string::npos || eq < dot) {
          throw InvalidArgument("--hp expects learner.key=value, got '" + kv + "'");
        }
        try {
          overrides[kv.substr(0, dot)][kv.substr(dot + 1, eq - dot - 1)] = std::stod(kv.substr(eq + 1));
        } catch (const std::exception&) {
          throw InvalidArgument("--hp value is not a number: '" + kv + "'");
        }
      }
      std::vector<std::pair<std::string, LearnerSpec>> learners;
      for (const auto& name : split_list(cmp_learners)) {
        LearnerSpec spec{parse_learner_kind(name), {}};
        for (const auto& key : {name, std::string(to_string(spec.kind))}) {
          if (auto it = overrides.find(key); it != overrides.end()) {
            for (const auto& [k, v] : it->second) spec.hyperparams[k] = v;
          }
        }
        validate(spec);
        for (const auto& [label, existing] : learners) {
          if (label == name) throw InvalidArgument("learner '" + name + "' listed twice");
        }
        learners.emplace_back(name, spec);
      }
      if (learners.empty()) throw InvalidArgument("--learners is empty");

      McmcConfig mcmc;
      if (cmp_iter) mcmc.n_iter = *cmp_iter;
      if (cmp_burn) mcmc.burn_in = *cmp_burn;
      if (cmp_thin) mcmc.thin = *cmp_thin;
      mcmc.seed = cmp_seed;
      mcmc.validate(data.num_covariates() + 1);
      ScoringConfig scoring;
      if (cmp_perm) scoring.n_perm = *cmp_perm;
      if (scoring.n_perm < 1) throw InvalidArgument("need --n-perm >= 1");

      const auto entries = compare(data, learners, cmp_seed, mcmc, scoring);
      const fs::path out_dir = cmp_out;
      fs::create_directories(out_dir);
      bool failed = false;
      for (const auto& e : entries) {
        const fs::path dir = out_dir / e.label;
        fs::create_directories(dir);
        std::vector<std::string> warnings;
        std::error_code ec;
        fs::remove(dir / "score.json", ec);
        fs::remove(dir / "correlogram.csv", ec);
        fs::remove(dir / "posterior_summary.csv", ec);
        if (e.result) {
          warnings = e.result->warnings;
          if (e.result->score) io::write_score(dir / "score.json", *e.result->score);
          if (e.result->correlogram) io::write_correlogram(dir / "correlogram.csv", *e.result->correlogram);
          io::write_posterior_summary(dir / "posterior_summary.csv", io::summarize_parameters(e.result->samples));
        }
        if (!e.ok()) {
          failed = true;
          warnings.push_back("fit failed: " + e.error);
        }
        write_warnings(dir, warnings, err);
      }
      write_league(out_dir / "league.csv", entries);
      io::write_json(out_dir / "compare.json",
                     Json{{"data", fs::absolute(data_dir).lexically_normal().string()},
                          {"learners", split_list(cmp_learners)},
                          {"seed", cmp_seed},
                          {"mcmc", io::mcmc_to_json(mcmc)},
                          {"scoring", {{"n_bins", scoring.n_bins}, {"n_perm", scoring.n_perm}}}});
      for (std::size_t k : league_order(entries)) {
        const auto& e = entries[k];
        out << e.label << ' ' << (e.ok() ? io::format_number(e.result->score->neg2_lppd) : "failed") << '\n';
      }
      return failed ? 1 : 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace spocc::cli
