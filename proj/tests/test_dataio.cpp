#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "spocc/config.hpp"
#include "spocc/dataio.hpp"
#include "spocc/error.hpp"
#include "spocc/synthgen.hpp"

using namespace spocc;
using namespace spocc::io;
using fixture::read_file;
using fixture::scratch_dir;
using fixture::write_file;

namespace {

// Message of the LoadError thrown by f, or "" if none.
template <class F>
std::string load_error(F&& f) {
  try {
    f();
  } catch (const LoadError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

PosteriorSamples short_fit(const OccupancyDataset& data, LearnerKind kind) {
  McmcConfig cfg;
  cfg.n_iter = 60;
  cfg.burn_in = 20;
  cfg.thin = 4;
  cfg.seed = 3;
  return run_chain(data, LearnerSpec{kind, {}}, cfg);
}

}  // namespace

// ============================================================ CSV basics

TEST_CASE("format_number is shortest round trip") {
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.3333333333333333");
  CHECK(format_number(1e-300) == "1e-300");
  CHECK(format_number(std::nan("")) == "nan");
  for (double x : {0.1 + 0.2, 9700000.123456789, -1.5e-7}) CHECK(std::stod(format_number(x)) == x);
}

TEST_CASE("split_csv_line handles quotes") {
  CHECK(split_csv_line("a,b,,c") == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(split_csv_line("\"x,y\",2") == std::vector<std::string>{"x,y", "2"});
  CHECK(split_csv_line("\"say \"\"hi\"\"\",1") == std::vector<std::string>{"say \"hi\"", "1"});
  CHECK(split_csv_line("") == std::vector<std::string>{""});
}

TEST_CASE("read_csv: line numbers and errors") {
  const auto dir = scratch_dir("read_csv");
  write_file(dir / "a.csv", "h1,h2\r\n1,2\n\n3,4\n");
  const auto t = read_csv(dir / "a.csv");
  CHECK(t.header == std::vector<std::string>{"h1", "h2"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.line_numbers == std::vector<int>{2, 4});
  write_file(dir / "b.csv", "h1,h2\n1,2\n3\n");
  CHECK(contains(load_error([&] { read_csv(dir / "b.csv"); }), "b.csv:3"));
  CHECK_THROWS_AS(read_csv(dir / "missing.csv"), IoError);
}

// ============================================================ datasets

TEST_CASE("load_dataset: unequal visit counts in visit order") {
  const auto dir = scratch_dir("load_small");
  write_file(dir / "sites.csv", "site_id,x,y\nA,0.5,1.5\nB,2,3\n");
  write_file(dir / "det.csv", "site_id,visit,y\nA,3,1\nB,1,0\nA,1,0\nA,2,0\n");
  const auto d = load_dataset(dir / "sites.csv", dir / "det.csv");
  REQUIRE(d.size() == 2);
  CHECK(d.histories()[0].visits == std::vector<std::uint8_t>{0, 0, 1});
  CHECK(d.histories()[1].visits == std::vector<std::uint8_t>{0});
  CHECK(d.sites()[0].coords == Point{0.5, 1.5});
  CHECK(d.num_covariates() == 0);
  CHECK(d.split().train == std::vector<int>{0, 1});
  CHECK(d.split().holdout.empty());
}

TEST_CASE("load_dataset: errors carry file and row") {
  const auto dir = scratch_dir("load_errors");
  write_file(dir / "sites.csv", "site_id,x,y,elev\nA,0,0,1\nB,1,1,2\n");
  auto det = [&](const std::string& body) {
    write_file(dir / "det.csv", "site_id,visit,y\n" + body);
    return load_error([&] { load_dataset(dir / "sites.csv", dir / "det.csv"); });
  };
  CHECK(det("A,1,0\nB,1,1\n").empty());
  const auto unknown = det("A,1,0\nZZ,1,0\nB,1,1\n");
  CHECK(contains(unknown, "det.csv:3"));
  CHECK(contains(unknown, "ZZ"));
  CHECK(contains(det("A,1,0\nB,1,2\n"), "det.csv:3"));
  CHECK(contains(det("A,1,0\nB,1,1\nA,1,1\n"), "det.csv:4"));
  CHECK(!det("A,1,0\n").empty());  // B has no visits
  CHECK(contains(det("A,x,0\nB,1,1\n"), "det.csv:2"));

  write_file(dir / "det.csv", "site_id,visit,y\nA,1,0\nB,1,1\n");
  write_file(dir / "s2.csv", "site_id,x,y\nA,0,0\nA,1,1\n");
  CHECK(contains(load_error([&] { load_dataset(dir / "s2.csv", dir / "det.csv"); }), "s2.csv:3"));
  write_file(dir / "s3.csv", "id,x,y\nA,0,0\n");
  CHECK(contains(load_error([&] { load_dataset(dir / "s3.csv", dir / "det.csv"); }), "s3.csv:1"));
  write_file(dir / "s4.csv", "site_id,x,y\nA,nan,0\nB,1,1\n");
  CHECK(contains(load_error([&] { load_dataset(dir / "s4.csv", dir / "det.csv"); }), "s4.csv:2"));
}

TEST_CASE("load_dataset: gazelle-shaped survey") {
  const auto dir = scratch_dir("gazelle");
  const auto visits = fixture::write_gazelle(dir);
  const auto d = load_dataset(dir / "sites.csv", dir / "detections.csv");
  REQUIRE(d.size() == 195);
  CHECK(d.num_covariates() == 2);
  int lo = 1000;
  int hi = 0;
  for (int i = 0; i < d.size(); ++i) {
    const int J = d.histories()[static_cast<std::size_t>(i)].num_visits();
    CHECK(J == visits[static_cast<std::size_t>(i)]);
    lo = std::min(lo, J);
    hi = std::max(hi, J);
  }
  CHECK(lo == 1);
  CHECK(hi == 46);
}

TEST_CASE("dataset round trip through write_dataset") {
  const auto dir = scratch_dir("roundtrip");
  fixture::write_gazelle(dir, 4);
  auto d = load_dataset(dir / "sites.csv", dir / "detections.csv");
  d = d.with_split(random_split(d.size(), 0.3, 5));
  const auto out = dir / "copy";
  fs::create_directories(out);
  write_dataset(d, out);
  auto back = load_dataset(out / "sites.csv", out / "detections.csv");
  back = back.with_split(load_split(out / "split.csv", back));
  CHECK(back == d);

  const auto syn = sample_design(make_surface(3), 50, 25, 3, 2);
  write_dataset(syn, out);
  const auto b2 = load_dataset(out / "sites.csv", out / "detections.csv");
  CHECK(b2.with_split(load_split(out / "split.csv", b2)) == syn);
}

TEST_CASE("load_split errors") {
  const auto dir = scratch_dir("split");
  write_file(dir / "sites.csv", "site_id,x,y\nA,0,0\nB,1,1\n");
  write_file(dir / "det.csv", "site_id,visit,y\nA,1,0\nB,1,1\n");
  const auto d = load_dataset(dir / "sites.csv", dir / "det.csv");
  write_file(dir / "s.csv", "site_id,set\nA,train\nB,holdout\n");
  CHECK(load_split(dir / "s.csv", d).holdout == std::vector<int>{1});
  write_file(dir / "s.csv", "site_id,set\nA,train\nB,test\n");
  CHECK(contains(load_error([&] { load_split(dir / "s.csv", d); }), "s.csv:3"));
  write_file(dir / "s.csv", "site_id,set\nA,train\n");
  CHECK(!load_error([&] { load_split(dir / "s.csv", d); }).empty());
  write_file(dir / "s.csv", "site_id,set\nA,train\nA,holdout\nB,train\n");
  CHECK(contains(load_error([&] { load_split(dir / "s.csv", d); }), "s.csv:3"));
}

// ============================================================ outputs

TEST_CASE("raster summary: interval ordering and quantile recompute") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  Eigen::MatrixXd psi(41, 13);
  for (Eigen::Index m = 0; m < psi.rows(); ++m) {
    for (Eigen::Index i = 0; i < psi.cols(); ++i) psi(m, i) = u(rng);
  }
  std::vector<Point> pts;
  for (int i = 0; i < 13; ++i) pts.push_back({0.1 * i, 2.0 - 0.1 * i});
  const auto rows = summarize_raster(psi, pts);
  REQUIRE(rows.size() == 13);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<double> col(psi.col(static_cast<Eigen::Index>(i)).data(),
                            psi.col(static_cast<Eigen::Index>(i)).data() + psi.rows());
    std::sort(col.begin(), col.end());
    // type 7 with 41 values: h = 40 q
    const double lo = col[1] + (40 * 0.025 - 1.0) * (col[2] - col[1]);
    const double hi = col[39] + (40 * 0.975 - 39.0) * (col[40] - col[39]);
    CHECK(rows[i].psi_lo == doctest::Approx(lo).epsilon(1e-14));
    CHECK(rows[i].psi_hi == doctest::Approx(hi).epsilon(1e-14));
    CHECK(rows[i].psi_mean == doctest::Approx(psi.col(static_cast<Eigen::Index>(i)).mean()).epsilon(1e-14));
    CHECK(rows[i].psi_lo <= rows[i].psi_mean);
    CHECK(rows[i].psi_mean <= rows[i].psi_hi);
    CHECK(rows[i].x == pts[i][0]);
  }
  const auto dir = scratch_dir("raster");
  write_raster(dir / "r.csv", rows);
  CHECK(read_raster(dir / "r.csv") == rows);
  CHECK(read_file(dir / "r.csv").rfind("x,y,psi_mean,psi_lo,psi_hi\n", 0) == 0);

  // one point, one draw
  Eigen::MatrixXd one(1, 1);
  one << 0.25;
  const std::vector<Point> p1 = {{3.0, 4.0}};
  write_raster(dir / "one.csv", summarize_raster(one, p1));
  CHECK(read_file(dir / "one.csv") == "x,y,psi_mean,psi_lo,psi_hi\n3,4,0.25,0.25,0.25\n");
}

TEST_CASE("posterior summary, score and correlogram round trips") {
  const auto data = sample_design(make_surface(1, GridSpec{10, 10}), 40, 20, 3, 1);
  const auto s = short_fit(data, LearnerKind::tree);
  const auto dir = scratch_dir("outputs");

  const auto summ = summarize_parameters(s);
  REQUIRE(summ.size() == 2);
  CHECK(summ[0].parameter == "beta0");
  CHECK(summ[1].parameter == "p");
  double pm = 0.0;
  for (const auto& d : s.draws) pm += d.p;
  CHECK(summ[1].mean == doctest::Approx(pm / static_cast<double>(s.draws.size())).epsilon(1e-14));
  CHECK(summ[1].q025 <= summ[1].q975);
  write_posterior_summary(dir / "ps.csv", summ);
  CHECK(read_posterior_summary(dir / "ps.csv") == summ);
  CHECK(read_file(dir / "ps.csv").rfind("parameter,mean,sd,q2.5,q97.5\n", 0) == 0);

  const auto rep = neg2_lppd(s, data, "tree");
  CHECK(write_score(dir / "score.json", rep));
  const auto j = read_json(dir / "score.json");
  CHECK(j.at("label") == "tree");
  CHECK(j.at("neg2_lppd").get<double>() == rep.neg2_lppd);
  CHECK(j.at("M").get<int>() == static_cast<int>(s.draws.size()));
  CHECK(j.at("n_holdout").get<int>() == 20);
  ScoreReport empty;
  CHECK_FALSE(write_score(dir / "none.json", empty));
  CHECK_FALSE(fs::exists(dir / "none.json"));

  const auto x = oracle::random_points(30, 5);
  const auto v = oracle::random_targets(30, 6);
  std::vector<double> edges = {0.0, 0.01, 0.2, 0.5};
  const auto c = correlogram(v, x, edges, 19, 2);
  write_correlogram(dir / "c.csv", c);
  const auto back = read_correlogram(dir / "c.csv");
  CHECK(back.edges == c.edges);
  CHECK(back.moran == c.moran);
  CHECK(back.env_lo == c.env_lo);
  CHECK(back.env_hi == c.env_hi);
  CHECK(back.pairs == c.pairs);
  CHECK(read_file(dir / "c.csv").rfind("bin_lo,bin_hi,I,env_lo,env_hi,pairs\n", 0) == 0);
  if (!c.moran[0]) CHECK(contains(read_file(dir / "c.csv"), ",NA,NA,NA,0\n"));
}

TEST_CASE("surface and samples round trip") {
  const auto data = sample_design(make_surface(2, GridSpec{10, 10}), 40, 20, 3, 1);
  const auto dir = scratch_dir("samples");
  for (auto kind : {LearnerKind::none, LearnerKind::tree, LearnerKind::svr, LearnerKind::lowrank_gp, LearnerKind::gmrf}) {
    const auto s = short_fit(data, kind);
    CAPTURE(std::string(to_string(kind)));
    for (const auto& d : s.draws) {
      const auto copy = surface_from_json(surface_to_json(d.surface));
      for (const auto& site : data.sites()) CHECK(copy.predict(site.coords) == d.surface.predict(site.coords));
    }
    write_samples(dir / "draws.json", s, data);
    const auto back = read_samples(dir / "draws.json", data);
    CHECK(back.learner.kind == s.learner.kind);
    CHECK(back.train_sites == s.train_sites);
    CHECK(back.counters.iterations == s.counters.iterations);
    CHECK(back.scaler.origin == s.scaler.origin);
    CHECK(back.scaler.scale == s.scaler.scale);
    REQUIRE(back.draws.size() == s.draws.size());
    for (std::size_t m = 0; m < s.draws.size(); ++m) {
      CHECK(back.draws[m].beta == s.draws[m].beta);
      CHECK(back.draws[m].p == s.draws[m].p);
      CHECK(back.draws[m].psi == s.draws[m].psi);
    }
    CHECK(neg2_lppd(back, data).neg2_lppd == neg2_lppd(s, data).neg2_lppd);
    // writing the re-read samples reproduces the bytes
    const auto first = read_file(dir / "draws.json");
    write_samples(dir / "draws2.json", back, data);
    CHECK(read_file(dir / "draws2.json") == first);
  }
}

TEST_CASE("learner and mcmc JSON") {
  const LearnerSpec spec{LearnerKind::svr, {{"C", 2.0}, {"epsilon", 0.05}}};
  const auto back = learner_from_json(learner_to_json(spec));
  CHECK(back.kind == spec.kind);
  CHECK(back.hyperparams == spec.hyperparams);
  CHECK(learner_from_json(Json("gmrf")).kind == LearnerKind::gmrf);
  CHECK_THROWS_AS(learner_from_json(Json("forest")), InvalidArgument);
  CHECK_THROWS_AS(learner_from_json(Json{{"kind", "tree"}, {"hyperparams", {{"depth", 3}}}}), InvalidArgument);

  McmcConfig cfg;
  cfg.n_iter = 321;
  cfg.seed = 99;
  cfg.priors.beta_var = 4.0;
  const auto m = mcmc_from_json(mcmc_to_json(cfg));
  CHECK(m.n_iter == 321);
  CHECK(m.seed == 99);
  CHECK(m.priors.beta_var == 4.0);
  CHECK_THROWS_AS(mcmc_from_json(Json{{"iterations", 5}}), InvalidArgument);
}

// ============================================================ config

TEST_CASE("run config: parse, defaults, echo") {
  const auto dir = scratch_dir("config");
  fixture::write_gazelle(dir);
  const Json j = Json::parse(R"({
    "data": {"sites": "sites.csv", "detections": "detections.csv"},
    "split": {"holdout_fraction": 0.25, "seed": 4},
    "learner": {"kind": "tree", "hyperparams": {"max_depth": 3}},
    "mcmc": {"n_iter": 200, "burn_in": 50, "thin": 2, "seed": 7},
    "output_dir": "out"
  })");
  const auto cfg = parse_run_config(j, dir);
  CHECK(cfg.sites_path == dir / "sites.csv");
  CHECK(cfg.output_dir == dir / "out");
  CHECK(cfg.split.mode == SplitSpec::Mode::fraction);
  CHECK(cfg.learner.kind == LearnerKind::tree);
  CHECK(cfg.mcmc.n_iter == 200);
  CHECK(cfg.mcmc.thin == 2);
  CHECK(cfg.scoring.n_perm == 199);
  CHECK(cfg.scoring.n_bins == 10);
  CHECK(cfg.raster.nx == 30);
  const auto again = parse_run_config(to_json(cfg), dir);
  CHECK(to_json(again) == to_json(cfg));

  const auto data = load_dataset(cfg.sites_path, cfg.detections_path);
  const auto split = resolve_split(cfg.split, data);
  CHECK(split.holdout.size() == 49);  // round(0.25 * 195)
  CHECK(split.train.size() + split.holdout.size() == 195);
  CHECK(resolve_split(cfg.split, data).holdout == split.holdout);
}

TEST_CASE("run config: split modes") {
  const auto dir = scratch_dir("config_split");
  write_file(dir / "sites.csv", "site_id,x,y\nA,0,0\nB,1,1\nC,2,0\n");
  write_file(dir / "detections.csv", "site_id,visit,y\nA,1,0\nB,1,1\nC,1,1\n");
  const auto data = load_dataset(dir / "sites.csv", dir / "detections.csv");
  auto parse = [&](const std::string& split) {
    return parse_run_config(Json::parse(R"({"data": {"sites": "sites.csv", "detections": "detections.csv"},
                                            "learner": "none")" + split + "}"), dir);
  };
  // no split.csv yet: train on everything
  CHECK(resolve_split(parse("").split, data).holdout.empty());
  write_file(dir / "split.csv", "site_id,set\nA,train\nB,holdout\nC,train\n");
  CHECK(resolve_split(parse("").split, data).holdout == std::vector<int>{1});
  CHECK(resolve_split(parse(R"(, "split": {"holdout_ids": ["C", "A"]})").split, data).holdout == std::vector<int>{0, 2});
  CHECK(resolve_split(parse(R"(, "split": {"none": true})").split, data).holdout.empty());
  CHECK_THROWS_AS(resolve_split(parse(R"(, "split": {"holdout_ids": ["Q"]})").split, data), InvalidArgument);
  CHECK_THROWS_AS(parse(R"(, "split": {"none": true, "holdout_ids": []})"), InvalidArgument);
  CHECK_THROWS_AS(parse(R"(, "split": {"holdout_fraction": 1.0})"), InvalidArgument);
}

TEST_CASE("run config: schema violations") {
  const auto dir = scratch_dir("config_bad");
  write_file(dir / "sites.csv", "site_id,x,y\nA,0,0\n");
  write_file(dir / "detections.csv", "site_id,visit,y\nA,1,0\n");
  auto parse = [&](const std::string& text) { return parse_run_config(Json::parse(text), dir); };
  const std::string data = R"("data": {"sites": "sites.csv", "detections": "detections.csv"}, "learner": "tree")";
  CHECK_NOTHROW(parse("{" + data + "}"));
  CHECK_THROWS_AS(parse(R"({"data": {"sites": "nope.csv", "detections": "detections.csv"}, "learner": "none"})"), IoError);
  CHECK_THROWS_AS(parse(R"({"data": {"sites": "sites.csv", "detections": "detections.csv"}})"), InvalidArgument);
  CHECK_THROWS_AS(parse("{" + data + R"(, "colour": 1})"), InvalidArgument);
  CHECK_THROWS_AS(parse("{" + data + R"(, "mcmc": {"n_iter": 10, "burn_in": 10}})"), InvalidArgument);
  CHECK_THROWS_AS(parse("{" + data + R"(, "scoring": {"n_bins": 1}})"), InvalidArgument);
  CHECK_THROWS_AS(parse("{" + data + R"(, "scoring": {"n_perm": 0}})"), InvalidArgument);
  CHECK_THROWS_AS(parse("{" + data + R"(, "raster": {"nx": 0, "ny": 3}})"), InvalidArgument);
  CHECK_THROWS_AS(parse(R"({"data": {"sites": "sites.csv", "detections": "detections.csv"},
                              "learner": {"kind": "svr", "hyperparams": {"C": -1}}})"), InvalidArgument);
  CHECK_THROWS_AS(load_run_config(dir / "absent.json"), IoError);
}

TEST_CASE("random_split and bin_edges") {
  const auto a = random_split(100, 0.3, 1);
  CHECK(a.holdout.size() == 30);
  CHECK(a.train.size() == 70);
  CHECK(std::is_sorted(a.holdout.begin(), a.holdout.end()));
  CHECK(random_split(100, 0.3, 1).holdout == a.holdout);
  CHECK(random_split(100, 0.3, 2).holdout != a.holdout);
  CHECK(random_split(10, 0.0, 1).holdout.empty());

  const std::vector<Point> pts = {{0.0, 0.0}, {6.0, 8.0}};
  ScoringConfig sc;
  sc.n_bins = 4;
  CHECK(bin_edges(sc, pts) == default_bin_edges(pts, 4));
  sc.max_distance = 2.0;
  CHECK(bin_edges(sc, pts) == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0});
}
