#include "spocc/config.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "spocc/error.hpp"
#include "spocc/truncnorm.hpp"

namespace spocc {
namespace {

namespace fs = std::filesystem;
using io::Json;

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidArgument(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw InvalidArgument("unknown key '" + k + "' in " + where);
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw IoError("file not found: " + p.string());
}

}  // namespace

RunConfig parse_run_config(const Json& j, const fs::path& base_dir) {
  try {
    check_keys(j, {"data", "split", "learner", "mcmc", "scoring", "raster", "output_dir"}, "config");
    RunConfig cfg;
    const Json& data = j.at("data");
    check_keys(data, {"sites", "detections"}, "data");
    cfg.sites_path = resolve(base_dir, data.at("sites").get<std::string>());
    cfg.detections_path = resolve(base_dir, data.at("detections").get<std::string>());
    require_file(cfg.sites_path);
    require_file(cfg.detections_path);

    cfg.split.file = cfg.sites_path.parent_path() / "split.csv";
    if (j.contains("split")) {
      cfg.split.file.clear();
      const Json& s = j.at("split");
      check_keys(s, {"file", "holdout_ids", "holdout_fraction", "seed", "none"}, "split");
      const int modes = static_cast<int>(s.contains("file")) + static_cast<int>(s.contains("holdout_ids")) +
                        static_cast<int>(s.contains("holdout_fraction")) + static_cast<int>(s.contains("none"));
      if (modes != 1) throw InvalidArgument("split needs exactly one of file, holdout_ids, holdout_fraction, none");
      if (s.contains("file")) {
        cfg.split.mode = SplitSpec::Mode::file;
        cfg.split.file = resolve(base_dir, s.at("file").get<std::string>());
        require_file(cfg.split.file);
      } else if (s.contains("holdout_ids")) {
        cfg.split.mode = SplitSpec::Mode::ids;
        for (const auto& id : s.at("holdout_ids")) {
          cfg.split.holdout_ids.push_back(id.is_string() ? id.get<std::string>() : id.dump());
        }
      } else if (s.contains("holdout_fraction")) {
        cfg.split.mode = SplitSpec::Mode::fraction;
        cfg.split.holdout_fraction = s.at("holdout_fraction").get<double>();
        cfg.split.seed = s.value("seed", cfg.split.seed);
        if (!(cfg.split.holdout_fraction >= 0.0 && cfg.split.holdout_fraction < 1.0)) {
          throw InvalidArgument("split.holdout_fraction must lie in [0, 1)");
        }
      } else {
        cfg.split.mode = SplitSpec::Mode::none;
      }
    }

    cfg.learner = io::learner_from_json(j.at("learner"));
    if (j.contains("mcmc")) cfg.mcmc = io::mcmc_from_json(j.at("mcmc"));
    if (cfg.mcmc.n_iter < 1 || cfg.mcmc.burn_in < 0 || cfg.mcmc.burn_in >= cfg.mcmc.n_iter || cfg.mcmc.thin < 1 ||
        cfg.mcmc.refit_every < 1 || !(cfg.mcmc.priors.beta_var > 0.0) || !(cfg.mcmc.priors.p_alpha > 0.0) ||
        !(cfg.mcmc.priors.p_beta > 0.0)) {
      throw InvalidArgument("mcmc settings out of range");
    }

    if (j.contains("scoring")) {
      const Json& s = j.at("scoring");
      check_keys(s, {"n_bins", "n_perm", "seed", "max_distance"}, "scoring");
      cfg.scoring.n_bins = s.value("n_bins", cfg.scoring.n_bins);
      cfg.scoring.n_perm = s.value("n_perm", cfg.scoring.n_perm);
      cfg.scoring.seed = s.value("seed", cfg.scoring.seed);
      cfg.scoring.max_distance = s.value("max_distance", cfg.scoring.max_distance);
    }
    if (cfg.scoring.n_bins < 2 || cfg.scoring.n_perm < 1 || !std::isfinite(cfg.scoring.max_distance)) {
      throw InvalidArgument("scoring settings out of range");
    }

    if (j.contains("raster")) {
      const Json& r = j.at("raster");
      check_keys(r, {"nx", "ny"}, "raster");
      cfg.raster.nx = r.value("nx", cfg.raster.nx);
      cfg.raster.ny = r.value("ny", cfg.raster.ny);
    }
    if (cfg.raster.nx < 1 || cfg.raster.ny < 1) throw InvalidArgument("raster dimensions must be positive");

    cfg.output_dir = resolve(base_dir, j.value("output_dir", std::string("out")));
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
}

RunConfig load_run_config(const fs::path& path) {
  const Json j = io::read_json(path);
  return parse_run_config(j, path.has_parent_path() ? path.parent_path() : fs::path("."));
}

Json to_json(const RunConfig& cfg) {
  Json split;
  switch (cfg.split.mode) {
    case SplitSpec::Mode::auto_detect:
      split = !cfg.split.file.empty() && fs::is_regular_file(cfg.split.file)
                  ? Json{{"file", cfg.split.file.string()}}
                  : Json{{"none", true}};
      break;
    case SplitSpec::Mode::file:
      split = Json{{"file", cfg.split.file.string()}};
      break;
    case SplitSpec::Mode::ids:
      split = Json{{"holdout_ids", cfg.split.holdout_ids}};
      break;
    case SplitSpec::Mode::fraction:
      split = Json{{"holdout_fraction", cfg.split.holdout_fraction}, {"seed", cfg.split.seed}};
      break;
    case SplitSpec::Mode::none:
      split = Json{{"none", true}};
      break;
  }
  return Json{{"data", {{"sites", cfg.sites_path.string()}, {"detections", cfg.detections_path.string()}}},
              {"split", split},
              {"learner", io::learner_to_json(cfg.learner)},
              {"mcmc", io::mcmc_to_json(cfg.mcmc)},
              {"scoring",
               {{"n_bins", cfg.scoring.n_bins},
                {"n_perm", cfg.scoring.n_perm},
                {"seed", cfg.scoring.seed},
                {"max_distance", cfg.scoring.max_distance}}},
              {"raster", {{"nx", cfg.raster.nx}, {"ny", cfg.raster.ny}}},
              {"output_dir", cfg.output_dir.string()}};
}

Split random_split(int n, double holdout_fraction, std::uint64_t seed) {
  if (n < 0 || !(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw InvalidArgument("random_split: bad arguments");
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  const int n_holdout = static_cast<int>(std::lround(holdout_fraction * n));
  for (int k = 0; k < n_holdout; ++k) {
    std::uniform_int_distribution<int> pick(k, n - 1);
    std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(pick(rng))]);
  }
  Split split;
  split.holdout.assign(order.begin(), order.begin() + n_holdout);
  split.train.assign(order.begin() + n_holdout, order.end());
  std::sort(split.holdout.begin(), split.holdout.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

Split resolve_split(const SplitSpec& spec, const OccupancyDataset& data) {
  const int n = data.size();
  auto all_train = [n] {
    Split s;
    s.train.resize(static_cast<std::size_t>(n));
    std::iota(s.train.begin(), s.train.end(), 0);
    return s;
  };
  switch (spec.mode) {
    case SplitSpec::Mode::auto_detect:
      if (!spec.file.empty() && fs::is_regular_file(spec.file)) return io::load_split(spec.file, data);
      return all_train();
    case SplitSpec::Mode::file:
      return io::load_split(spec.file, data);
    case SplitSpec::Mode::none:
      return all_train();
    case SplitSpec::Mode::fraction:
      return random_split(n, spec.holdout_fraction, spec.seed);
    case SplitSpec::Mode::ids: {
      std::unordered_map<std::string, int> index;
      for (int i = 0; i < n; ++i) index.emplace(data.sites()[static_cast<std::size_t>(i)].id, i);
      std::vector<char> hold(static_cast<std::size_t>(n), 0);
      for (const auto& id : spec.holdout_ids) {
        const auto it = index.find(id);
        if (it == index.end()) throw InvalidArgument("split: unknown holdout site '" + id + "'");
        hold[static_cast<std::size_t>(it->second)] = 1;
      }
      Split s;
      for (int i = 0; i < n; ++i) (hold[static_cast<std::size_t>(i)] ? s.holdout : s.train).push_back(i);
      return s;
    }
  }
  return all_train();
}

std::vector<double> bin_edges(const ScoringConfig& cfg, std::span<const Point> coords) {
  if (cfg.max_distance <= 0.0) return default_bin_edges(coords, cfg.n_bins);
  std::vector<double> edges(static_cast<std::size_t>(cfg.n_bins) + 1);
  for (int b = 0; b <= cfg.n_bins; ++b) edges[static_cast<std::size_t>(b)] = cfg.max_distance * b / cfg.n_bins;
  return edges;
}

}  // namespace spocc
