#include "spocc/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <system_error>
#include <unordered_map>

#include "spocc/error.hpp"

namespace spocc::io {
namespace {

std::string quote_if_needed(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string join_row(std::initializer_list<std::string> fields) {
  std::string out;
  bool first = true;
  for (const auto& f : fields) {
    if (!first) out += ',';
    out += f;
    first = false;
  }
  out += '\n';
  return out;
}

[[noreturn]] void load_fail(const fs::path& path, int line, const std::string& msg) {
  throw LoadError(path.string() + ":" + std::to_string(line) + ": " + msg);
}

double parse_double(const fs::path& path, int line, const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  if (first < last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) load_fail(path, line, "not a number: '" + text + "'");
  return value;
}

long parse_integer(const fs::path& path, int line, const std::string& text) {
  long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    load_fail(path, line, "not an integer: '" + text + "'");
  }
  return value;
}

void expect_header(const CsvTable& t, const fs::path& path, std::span<const std::string_view> names) {
  if (t.header.size() < names.size()) {
    load_fail(path, 1, "header has " + std::to_string(t.header.size()) + " columns, expected at least " +
                           std::to_string(names.size()));
  }
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (t.header[c] != names[c]) {
      load_fail(path, 1, "column " + std::to_string(c + 1) + " is '" + t.header[c] + "', expected '" +
                             std::string(names[c]) + "'");
    }
  }
}

void expect_exact_header(const CsvTable& t, const fs::path& path, std::span<const std::string_view> names) {
  expect_header(t, path, names);
  if (t.header.size() != names.size()) load_fail(path, 1, "unexpected extra columns");
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : "NA"; }

std::optional<double> parse_opt(const fs::path& path, int line, const std::string& text) {
  if (text == "NA") return std::nullopt;
  return parse_double(path, line, text);
}

Json point_to_json(Point p) { return Json::array({p[0], p[1]}); }
Point point_from_json(const Json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

Json box_to_json(const BoundingBox& b) { return Json{{"lo", point_to_json(b.lo)}, {"hi", point_to_json(b.hi)}}; }
BoundingBox box_from_json(const Json& j) { return {point_from_json(j.at("lo")), point_from_json(j.at("hi"))}; }

Json vector_to_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Json points_to_json(const std::vector<Point>& pts) {
  Json a = Json::array();
  for (const auto& p : pts) a.push_back(point_to_json(p));
  return a;
}

std::vector<Point> points_from_json(const Json& j) {
  std::vector<Point> pts;
  pts.reserve(j.size());
  for (const auto& e : j) pts.push_back(point_from_json(e));
  return pts;
}

struct SurfaceWriter {
  Json operator()(const ZeroModel&) const { return Json::object(); }
  Json operator()(const TreeModel& m) const {
    Json nodes = Json::array();
    for (const auto& n : m.nodes) {
      nodes.push_back(Json::array({n.axis, n.threshold, n.left, n.right, n.value, n.count}));
    }
    return Json{{"nodes", nodes}};
  }
  Json operator()(const SvrModel& m) const {
    return Json{{"support", points_to_json(m.support)}, {"coef", m.coef},        {"bias", m.bias},
                {"gamma", m.gamma},                     {"kkt_violation", m.kkt_violation},
                {"iterations", m.iterations}};
  }
  Json operator()(const LowRankGpModel& m) const {
    return Json{{"knots", points_to_json(m.knots)},
                {"weights", vector_to_json(m.weights)},
                {"range_phi", m.range_phi},
                {"sill_sigma2", m.sill_sigma2}};
  }
  Json operator()(const GmrfModel& m) const {
    return Json{{"box", box_to_json(m.grid.box)},
                {"nx", m.grid.nx},
                {"ny", m.grid.ny},
                {"effects", vector_to_json(m.effects)}};
  }
};

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      load_fail(path, lineno, "expected " + std::to_string(t.header.size()) + " fields, found " +
                                  std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(lineno);
  }
  if (!have_header) load_fail(path, 1, "missing header row");
  return t;
}

OccupancyDataset load_dataset(const fs::path& sites_path, const fs::path& detections_path) {
  const CsvTable st = read_csv(sites_path);
  static constexpr std::string_view site_cols[] = {"site_id", "x", "y"};
  expect_header(st, sites_path, site_cols);
  const int n = static_cast<int>(st.rows.size());
  const int q = static_cast<int>(st.header.size()) - 3;
  std::vector<Site> sites;
  sites.reserve(static_cast<std::size_t>(n));
  Eigen::MatrixXd cov(n, q);
  std::unordered_map<std::string, int> index;
  for (int i = 0; i < n; ++i) {
    const auto& row = st.rows[static_cast<std::size_t>(i)];
    const int line = st.line_numbers[static_cast<std::size_t>(i)];
    if (row[0].empty()) load_fail(sites_path, line, "empty site_id");
    if (!index.emplace(row[0], i).second) load_fail(sites_path, line, "duplicate site_id '" + row[0] + "'");
    Site s{row[0], {parse_double(sites_path, line, row[1]), parse_double(sites_path, line, row[2])}};
    if (!std::isfinite(s.coords[0]) || !std::isfinite(s.coords[1])) {
      load_fail(sites_path, line, "non-finite coordinates for site '" + row[0] + "'");
    }
    for (int c = 0; c < q; ++c) {
      const double v = parse_double(sites_path, line, row[static_cast<std::size_t>(3 + c)]);
      if (!std::isfinite(v)) load_fail(sites_path, line, "non-finite covariate '" + st.header[3 + c] + "'");
      cov(i, c) = v;
    }
    sites.push_back(std::move(s));
  }

  const CsvTable dt = read_csv(detections_path);
  static constexpr std::string_view det_cols[] = {"site_id", "visit", "y"};
  expect_exact_header(dt, detections_path, det_cols);
  std::vector<std::map<long, std::uint8_t>> visits(static_cast<std::size_t>(n));
  for (std::size_t r = 0; r < dt.rows.size(); ++r) {
    const auto& row = dt.rows[r];
    const int line = dt.line_numbers[r];
    const auto it = index.find(row[0]);
    if (it == index.end()) load_fail(detections_path, line, "unknown site_id '" + row[0] + "'");
    const long visit = parse_integer(detections_path, line, row[1]);
    if (row[2] != "0" && row[2] != "1") {
      load_fail(detections_path, line, "y must be 0 or 1, found '" + row[2] + "'");
    }
    auto& hist = visits[static_cast<std::size_t>(it->second)];
    if (!hist.emplace(visit, static_cast<std::uint8_t>(row[2] == "1")).second) {
      load_fail(detections_path, line,
                "duplicate visit " + std::to_string(visit) + " for site '" + row[0] + "'");
    }
  }
  std::vector<DetectionHistory> histories;
  histories.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& hist = visits[static_cast<std::size_t>(i)];
    if (hist.empty()) {
      throw LoadError(detections_path.string() + ": site '" + sites[static_cast<std::size_t>(i)].id +
                      "' has no visits");
    }
    DetectionHistory h{sites[static_cast<std::size_t>(i)].id, {}};
    for (const auto& [visit, y] : hist) h.visits.push_back(y);
    histories.push_back(std::move(h));
  }
  Split split;
  for (int i = 0; i < n; ++i) split.train.push_back(i);
  return OccupancyDataset(std::move(sites), std::move(histories), std::move(cov), std::move(split));
}

void write_dataset(const OccupancyDataset& data, const fs::path& dir) {
  {
    const fs::path path = dir / "sites.csv";
    auto out = open_out(path);
    out << "site_id,x,y";
    for (int c = 0; c < data.num_covariates(); ++c) out << ",cov" << (c + 1);
    out << '\n';
    for (int i = 0; i < data.size(); ++i) {
      const auto& s = data.sites()[static_cast<std::size_t>(i)];
      out << quote_if_needed(s.id) << ',' << format_number(s.coords[0]) << ',' << format_number(s.coords[1]);
      for (int c = 0; c < data.num_covariates(); ++c) out << ',' << format_number(data.covariates()(i, c));
      out << '\n';
    }
    finish(out, path);
  }
  {
    const fs::path path = dir / "detections.csv";
    auto out = open_out(path);
    out << "site_id,visit,y\n";
    for (const auto& h : data.histories()) {
      const std::string id = quote_if_needed(h.site_id);
      for (int j = 0; j < h.num_visits(); ++j) {
        out << id << ',' << (j + 1) << ',' << int{h.visits[static_cast<std::size_t>(j)]} << '\n';
      }
    }
    finish(out, path);
  }
  write_split(dir / "split.csv", data);
}

Split load_split(const fs::path& path, const OccupancyDataset& data) {
  const CsvTable t = read_csv(path);
  static constexpr std::string_view cols[] = {"site_id", "set"};
  expect_exact_header(t, path, cols);
  std::unordered_map<std::string, int> index;
  for (int i = 0; i < data.size(); ++i) index.emplace(data.sites()[static_cast<std::size_t>(i)].id, i);
  std::vector<int> role(static_cast<std::size_t>(data.size()), -1);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const auto it = index.find(row[0]);
    if (it == index.end()) load_fail(path, t.line_numbers[r], "unknown site_id '" + row[0] + "'");
    int value;
    if (row[1] == "train") {
      value = 0;
    } else if (row[1] == "holdout") {
      value = 1;
    } else {
      load_fail(path, t.line_numbers[r], "set must be train or holdout, found '" + row[1] + "'");
    }
    auto& slot = role[static_cast<std::size_t>(it->second)];
    if (slot != -1) load_fail(path, t.line_numbers[r], "site '" + row[0] + "' listed twice");
    slot = value;
  }
  Split split;
  for (int i = 0; i < data.size(); ++i) {
    const int r = role[static_cast<std::size_t>(i)];
    if (r < 0) throw LoadError(path.string() + ": site '" + data.sites()[static_cast<std::size_t>(i)].id + "' missing");
    (r == 0 ? split.train : split.holdout).push_back(i);
  }
  return split;
}

void write_split(const fs::path& path, const OccupancyDataset& data) {
  std::vector<char> holdout(static_cast<std::size_t>(data.size()), 0);
  for (int i : data.split().holdout) holdout[static_cast<std::size_t>(i)] = 1;
  auto out = open_out(path);
  out << "site_id,set\n";
  for (int i = 0; i < data.size(); ++i) {
    out << quote_if_needed(data.sites()[static_cast<std::size_t>(i)].id) << ','
        << (holdout[static_cast<std::size_t>(i)] ? "holdout" : "train") << '\n';
  }
  finish(out, path);
}

std::vector<RasterRow> summarize_raster(const Eigen::MatrixXd& psi, std::span<const Point> coords) {
  if (psi.cols() != static_cast<Eigen::Index>(coords.size())) {
    throw ShapeError("summarize_raster: " + std::to_string(psi.cols()) + " columns for " +
                     std::to_string(coords.size()) + " points");
  }
  if (psi.rows() == 0) throw InvalidArgument("summarize_raster: no draws");
  std::vector<RasterRow> rows(coords.size());
  std::vector<double> col(static_cast<std::size_t>(psi.rows()));
  for (std::size_t k = 0; k < coords.size(); ++k) {
    for (Eigen::Index d = 0; d < psi.rows(); ++d) col[static_cast<std::size_t>(d)] = psi(d, static_cast<Eigen::Index>(k));
    auto& r = rows[k];
    r.x = coords[k][0];
    r.y = coords[k][1];
    r.psi_mean = psi.col(static_cast<Eigen::Index>(k)).mean();
    r.psi_lo = quantile(col, 0.025);
    r.psi_hi = quantile(col, 0.975);
    // The mean of values in [lo, hi] can fall a rounding step outside them.
    r.psi_mean = std::clamp(r.psi_mean, r.psi_lo, r.psi_hi);
  }
  return rows;
}

void write_raster(const fs::path& path, std::span<const RasterRow> rows) {
  auto out = open_out(path);
  out << "x,y,psi_mean,psi_lo,psi_hi\n";
  for (const auto& r : rows) {
    out << join_row({format_number(r.x), format_number(r.y), format_number(r.psi_mean), format_number(r.psi_lo),
                     format_number(r.psi_hi)});
  }
  finish(out, path);
}

std::vector<RasterRow> read_raster(const fs::path& path) {
  const CsvTable t = read_csv(path);
  static constexpr std::string_view cols[] = {"x", "y", "psi_mean", "psi_lo", "psi_hi"};
  expect_exact_header(t, path, cols);
  std::vector<RasterRow> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int line = t.line_numbers[r];
    const auto& f = t.rows[r];
    rows.push_back({parse_double(path, line, f[0]), parse_double(path, line, f[1]), parse_double(path, line, f[2]),
                    parse_double(path, line, f[3]), parse_double(path, line, f[4])});
  }
  return rows;
}

std::vector<ParameterSummary> summarize_parameters(const PosteriorSamples& samples) {
  if (samples.draws.empty()) throw InvalidArgument("summarize_parameters: no draws");
  const auto& draws = samples.draws;
  const Eigen::Index k = draws.front().beta.size();
  auto summarize = [&](std::string name, auto&& get) {
    std::vector<double> v;
    v.reserve(draws.size());
    for (const auto& d : draws) v.push_back(get(d));
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    const double lo = quantile(v, 0.025);
    const double hi = quantile(std::move(v), 0.975);
    return ParameterSummary{std::move(name), mean, sd, lo, hi};
  };
  std::vector<ParameterSummary> rows;
  for (Eigen::Index c = 0; c < k; ++c) {
    rows.push_back(summarize("beta" + std::to_string(c), [c](const Draw& d) { return d.beta[c]; }));
  }
  rows.push_back(summarize("p", [](const Draw& d) { return d.p; }));
  return rows;
}

void write_posterior_summary(const fs::path& path, std::span<const ParameterSummary> rows) {
  auto out = open_out(path);
  out << "parameter,mean,sd,q2.5,q97.5\n";
  for (const auto& r : rows) {
    out << join_row({quote_if_needed(r.parameter), format_number(r.mean), format_number(r.sd), format_number(r.q025),
                     format_number(r.q975)});
  }
  finish(out, path);
}

std::vector<ParameterSummary> read_posterior_summary(const fs::path& path) {
  const CsvTable t = read_csv(path);
  static constexpr std::string_view cols[] = {"parameter", "mean", "sd", "q2.5", "q97.5"};
  expect_exact_header(t, path, cols);
  std::vector<ParameterSummary> rows;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int line = t.line_numbers[r];
    const auto& f = t.rows[r];
    rows.push_back({f[0], parse_double(path, line, f[1]), parse_double(path, line, f[2]),
                    parse_double(path, line, f[3]), parse_double(path, line, f[4])});
  }
  return rows;
}

Json score_to_json(const ScoreReport& report) {
  return Json{{"label", report.label},
              {"neg2_lppd", report.neg2_lppd},
              {"M", report.num_draws},
              {"n_holdout", report.n_holdout}};
}

bool write_score(const fs::path& path, const ScoreReport& report) {
  if (report.n_holdout == 0) return false;
  write_json(path, score_to_json(report));
  return true;
}

void write_correlogram(const fs::path& path, const Correlogram& c) {
  auto out = open_out(path);
  out << "bin_lo,bin_hi,I,env_lo,env_hi,pairs\n";
  for (int b = 0; b < c.num_bins(); ++b) {
    const auto k = static_cast<std::size_t>(b);
    out << join_row({format_number(c.edges[k]), format_number(c.edges[k + 1]), opt_number(c.moran[k]),
                     opt_number(c.env_lo[k]), opt_number(c.env_hi[k]), std::to_string(c.pairs[k])});
  }
  finish(out, path);
}

Correlogram read_correlogram(const fs::path& path) {
  const CsvTable t = read_csv(path);
  static constexpr std::string_view cols[] = {"bin_lo", "bin_hi", "I", "env_lo", "env_hi", "pairs"};
  expect_exact_header(t, path, cols);
  Correlogram c;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const int line = t.line_numbers[r];
    const auto& f = t.rows[r];
    const double lo = parse_double(path, line, f[0]);
    if (r == 0) {
      c.edges.push_back(lo);
    } else if (lo != c.edges.back()) {
      load_fail(path, line, "bins are not contiguous");
    }
    c.edges.push_back(parse_double(path, line, f[1]));
    c.moran.push_back(parse_opt(path, line, f[2]));
    c.env_lo.push_back(parse_opt(path, line, f[3]));
    c.env_hi.push_back(parse_opt(path, line, f[4]));
    c.pairs.push_back(parse_integer(path, line, f[5]));
  }
  return c;
}

Json surface_to_json(const FittedSurface& surface) {
  return Json{{"kind", std::string(to_string(surface.kind()))},
              {"box", box_to_json(surface.training_box())},
              {"model", std::visit(SurfaceWriter{}, surface.model())}};
}

FittedSurface surface_from_json(const Json& j) {
  try {
    const LearnerKind kind = parse_learner_kind(j.at("kind").get<std::string>());
    const BoundingBox box = box_from_json(j.at("box"));
    const Json& m = j.at("model");
    switch (kind) {
      case LearnerKind::none:
        return FittedSurface(ZeroModel{}, box);
      case LearnerKind::tree: {
        TreeModel t;
        for (const auto& n : m.at("nodes")) {
          t.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                             n.at(4).get<double>(), n.at(5).get<int>()});
        }
        const int size = static_cast<int>(t.nodes.size());
        if (size == 0) throw LoadError("tree surface without nodes");
        for (const auto& n : t.nodes) {
          if (n.axis != -1 && (n.axis < 0 || n.axis > 1 || n.left <= 0 || n.left >= size || n.right <= 0 ||
                               n.right >= size)) {
            throw LoadError("tree surface has an invalid node");
          }
        }
        return FittedSurface(std::move(t), box);
      }
      case LearnerKind::svr: {
        SvrModel s;
        s.support = points_from_json(m.at("support"));
        s.coef = m.at("coef").get<std::vector<double>>();
        s.bias = m.at("bias").get<double>();
        s.gamma = m.at("gamma").get<double>();
        s.kkt_violation = m.at("kkt_violation").get<double>();
        s.iterations = m.at("iterations").get<long>();
        if (s.coef.size() != s.support.size()) throw LoadError("svr surface: coef/support size mismatch");
        return FittedSurface(std::move(s), box);
      }
      case LearnerKind::lowrank_gp: {
        LowRankGpModel g;
        g.knots = points_from_json(m.at("knots"));
        g.weights = vector_from_json(m.at("weights"));
        g.range_phi = m.at("range_phi").get<double>();
        g.sill_sigma2 = m.at("sill_sigma2").get<double>();
        if (static_cast<std::size_t>(g.weights.size()) != g.knots.size()) {
          throw LoadError("lowrank_gp surface: weight/knot size mismatch");
        }
        return FittedSurface(std::move(g), box);
      }
      case LearnerKind::gmrf: {
        GmrfModel g;
        g.grid.box = box_from_json(m.at("box"));
        g.grid.nx = m.at("nx").get<int>();
        g.grid.ny = m.at("ny").get<int>();
        g.effects = vector_from_json(m.at("effects"));
        if (g.grid.nx < 1 || g.grid.ny < 1 || g.effects.size() != g.grid.num_cells()) {
          throw LoadError("gmrf surface: effects do not match the grid");
        }
        return FittedSurface(std::move(g), box);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed surface: ") + e.what());
  }
  throw LoadError("malformed surface");
}

Json learner_to_json(const LearnerSpec& spec) {
  Json hp = Json::object();
  for (const auto& [k, v] : spec.hyperparams) hp[k] = v;
  return Json{{"kind", std::string(to_string(spec.kind))}, {"hyperparams", hp}};
}

LearnerSpec learner_from_json(const Json& j) {
  LearnerSpec spec;
  if (j.is_string()) {
    spec.kind = parse_learner_kind(j.get<std::string>());
    return spec;
  }
  spec.kind = parse_learner_kind(j.at("kind").get<std::string>());
  if (j.contains("hyperparams")) {
    for (const auto& [k, v] : j.at("hyperparams").items()) {
      if (!v.is_number()) throw InvalidArgument("hyperparameter '" + k + "' must be numeric");
      spec.hyperparams[k] = v.get<double>();
    }
  }
  validate(spec);
  return spec;
}

Json mcmc_to_json(const McmcConfig& cfg) {
  return Json{{"n_iter", cfg.n_iter},
              {"burn_in", cfg.burn_in},
              {"thin", cfg.thin},
              {"seed", cfg.seed},
              {"refit_every", cfg.refit_every},
              {"priors",
               {{"beta_mean", vector_to_json(cfg.priors.beta_mean)},
                {"beta_var", cfg.priors.beta_var},
                {"p_alpha", cfg.priors.p_alpha},
                {"p_beta", cfg.priors.p_beta}}}};
}

McmcConfig mcmc_from_json(const Json& j) {
  McmcConfig cfg;
  static const std::set<std::string> keys = {"n_iter", "burn_in", "thin", "seed", "refit_every", "priors"};
  static const std::set<std::string> prior_keys = {"beta_mean", "beta_var", "p_alpha", "p_beta"};
  for (const auto& [k, v] : j.items()) {
    if (!keys.count(k)) throw InvalidArgument("unknown mcmc key '" + k + "'");
  }
  cfg.n_iter = j.value("n_iter", cfg.n_iter);
  cfg.burn_in = j.value("burn_in", cfg.burn_in);
  cfg.thin = j.value("thin", cfg.thin);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.refit_every = j.value("refit_every", cfg.refit_every);
  if (j.contains("priors")) {
    const Json& p = j.at("priors");
    for (const auto& [k, v] : p.items()) {
      if (!prior_keys.count(k)) throw InvalidArgument("unknown prior key '" + k + "'");
    }
    if (p.contains("beta_mean")) cfg.priors.beta_mean = vector_from_json(p.at("beta_mean"));
    cfg.priors.beta_var = p.value("beta_var", cfg.priors.beta_var);
    cfg.priors.p_alpha = p.value("p_alpha", cfg.priors.p_alpha);
    cfg.priors.p_beta = p.value("p_beta", cfg.priors.p_beta);
  }
  return cfg;
}

void write_samples(const fs::path& path, const PosteriorSamples& samples, const OccupancyDataset& data) {
  Json train = Json::array();
  for (int i : samples.train_sites) train.push_back(data.sites().at(static_cast<std::size_t>(i)).id);
  Json draws = Json::array();
  for (const auto& d : samples.draws) {
    draws.push_back(Json{{"beta", vector_to_json(d.beta)}, {"p", d.p}, {"surface", surface_to_json(d.surface)}});
  }
  Json j{{"learner", learner_to_json(samples.learner)},
         {"mcmc", mcmc_to_json(samples.config)},
         {"scaler", {{"origin", point_to_json(samples.scaler.origin)}, {"scale", samples.scaler.scale}}},
         {"counters", {{"iterations", samples.counters.iterations}, {"refits", samples.counters.refits}}},
         {"train_sites", train},
         {"draws", draws}};
  write_json(path, j);
}

PosteriorSamples read_samples(const fs::path& path, const OccupancyDataset& data) {
  const Json j = read_json(path);
  PosteriorSamples s;
  try {
    s.learner = learner_from_json(j.at("learner"));
    s.config = mcmc_from_json(j.at("mcmc"));
    s.scaler.origin = point_from_json(j.at("scaler").at("origin"));
    s.scaler.scale = j.at("scaler").at("scale").get<double>();
    s.counters.iterations = j.at("counters").at("iterations").get<long>();
    s.counters.refits = j.at("counters").at("refits").get<long>();
    std::unordered_map<std::string, int> index;
    for (int i = 0; i < data.size(); ++i) index.emplace(data.sites()[static_cast<std::size_t>(i)].id, i);
    for (const auto& id : j.at("train_sites")) {
      const auto it = index.find(id.get<std::string>());
      if (it == index.end()) throw LoadError(path.string() + ": training site '" + id.get<std::string>() + "' not in dataset");
      s.train_sites.push_back(it->second);
    }
    const int k = data.num_covariates() + 1;
    for (const auto& dj : j.at("draws")) {
      Draw d;
      d.beta = vector_from_json(dj.at("beta"));
      if (d.beta.size() != k) throw LoadError(path.string() + ": draw beta does not match the dataset covariates");
      d.p = dj.at("p").get<double>();
      d.surface = surface_from_json(dj.at("surface"));
      s.draws.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
  if (!s.draws.empty() && !s.train_sites.empty()) {
    std::vector<Point> coords;
    Eigen::MatrixXd design(static_cast<Eigen::Index>(s.train_sites.size()), data.num_covariates() + 1);
    for (std::size_t r = 0; r < s.train_sites.size(); ++r) {
      const int i = s.train_sites[r];
      coords.push_back(data.sites()[static_cast<std::size_t>(i)].coords);
      design.row(static_cast<Eigen::Index>(r)) = data.design_row(i).transpose();
    }
    const Eigen::MatrixXd psi = psi_draws(s, coords, &design);
    for (std::size_t d = 0; d < s.draws.size(); ++d) {
      auto& v = s.draws[d].psi;
      v.resize(coords.size());
      for (std::size_t r = 0; r < coords.size(); ++r) v[r] = psi(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(r));
    }
  }
  return s;
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, std::string_view text) {
  auto out = open_out(path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  finish(out, path);
}

}  // namespace spocc::io
