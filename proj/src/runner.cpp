#include "gsphar/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gsphar/csv.hpp"
#include "gsphar/rng.hpp"
#include "gsphar/spillover.hpp"

namespace gsphar {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  require(obj.is_object(), "config: '" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw Error("config: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

std::string resolve(const std::string& path, const std::string& base) {
  if (path.empty()) return path;
  const fs::path p(path);
  return p.is_absolute() ? path : (fs::path(base) / p).lexically_normal().string();
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw Error(name + ": " + e.what());
  }
}

Matrix matrix_from(const json& j, const std::string& what) {
  require(j.is_array() && !j.empty(), "config: " + what + " must be a non-empty array of rows");
  const auto rows = static_cast<Index>(j.size());
  const auto cols = static_cast<Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    require(static_cast<Index>(j.at(i).size()) == cols, "config: " + what + " rows differ in length");
    for (Index k = 0; k < cols; ++k) m(i, k) = j.at(i).at(k).get<double>();
  }
  return m;
}

VolPanel head_rows(const VolPanel& panel, Index rows) {
  VolPanel out;
  out.labels = panel.labels;
  out.days.assign(panel.days.begin(), panel.days.begin() + rows);
  out.values = panel.values.topRows(rows);
  out.scale = panel.scale;
  return out;
}

}  // namespace

Matrix planted_coupling(int n) {
  require(n >= 1, "planted coupling: n must be positive");
  Matrix c = 0.5 * Matrix::Identity(n, n);
  for (int i = 0; i + 1 < n; ++i) c(i + 1, i) = 0.3;
  return c;
}

RunConfig parse_run_config(const std::string& text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig c;
  try {
    check_keys(doc, {"data", "models", "horizons", "target", "q", "rho", "var", "split", "training",
                     "reference_model", "mcs", "seed", "output_dir"},
               "the top level");

    require(doc.contains("data"), "config: 'data' is required");
    const auto& data = doc.at("data");
    check_keys(data, {"panel", "intraday", "synthetic", "scale"}, "data");
    int sources = 0;
    if (data.contains("panel")) {
      c.panel_path = resolve(data.at("panel").get<std::string>(), base_dir);
      ++sources;
    }
    if (data.contains("intraday")) {
      c.intraday_path = resolve(data.at("intraday").get<std::string>(), base_dir);
      ++sources;
    }
    if (data.contains("synthetic")) {
      const auto& s = data.at("synthetic");
      check_keys(s, {"n", "t", "coupling", "noise_scale", "log_mean", "seed"}, "data.synthetic");
      SyntheticData syn;
      read_opt(s, "n", syn.n);
      read_opt(s, "t", syn.t);
      read_opt(s, "noise_scale", syn.noise_scale);
      read_opt(s, "log_mean", syn.log_mean);
      read_opt(s, "seed", syn.seed);
      if (s.contains("coupling")) syn.coupling = matrix_from(s.at("coupling"), "data.synthetic.coupling");
      c.synthetic = syn;
      ++sources;
    }
    require(sources == 1, "config: 'data' needs exactly one of panel, intraday or synthetic");
    read_opt(data, "scale", c.scale);
    require(c.scale > 0.0, "config: data.scale must be positive");

    require(doc.contains("models"), "config: 'models' is required");
    for (const auto& m : doc.at("models")) {
      const ModelKind kind = model_kind_from_string(m.get<std::string>());
      require(std::find(c.models.begin(), c.models.end(), kind) == c.models.end(),
              "config: model '" + m.get<std::string>() + "' listed twice");
      c.models.push_back(kind);
    }
    require(!c.models.empty(), "config: 'models' must not be empty");

    read_opt(doc, "horizons", c.horizons);
    require(!c.horizons.empty(), "config: 'horizons' must not be empty");
    for (int h : c.horizons) require(h >= 1, "config: horizons must be positive");
    require(std::set<int>(c.horizons.begin(), c.horizons.end()).size() == c.horizons.size(),
            "config: horizons must be distinct");

    if (doc.contains("target")) {
      const auto t = doc.at("target").get<std::string>();
      require(t == "direct" || t == "average", "config: target must be 'direct' or 'average'");
      c.target = t == "direct" ? TargetMode::Direct : TargetMode::Average;
    }
    read_opt(doc, "q", c.training.q);
    read_opt(doc, "rho", c.training.rho);
    require(c.training.q >= 0.0, "config: q must be non-negative");
    require(c.training.rho >= 0.0 && c.training.rho <= 1.0, "config: rho must lie in [0, 1]");

    if (doc.contains("var")) {
      const auto& v = doc.at("var");
      check_keys(v, {"p", "ridge", "horizon"}, "var");
      read_opt(v, "p", c.var_p);
      read_opt(v, "ridge", c.var_ridge);
      read_opt(v, "horizon", c.graph_horizon);
    }
    require(c.var_p >= 1, "config: var.p must be positive");
    require(c.var_ridge >= 0.0, "config: var.ridge must be non-negative");
    require(c.graph_horizon >= 0, "config: var.horizon must be non-negative");

    if (doc.contains("split")) {
      const auto& s = doc.at("split");
      check_keys(s, {"train", "valid", "test"}, "split");
      read_opt(s, "train", c.train_fraction);
      read_opt(s, "valid", c.valid_fraction);
      read_opt(s, "test", c.test_fraction);
    }
    require(c.train_fraction > 0.0 && c.valid_fraction >= 0.0 && c.test_fraction > 0.0,
            "config: split fractions must be non-negative with positive train and test");
    require(std::abs(c.train_fraction + c.valid_fraction + c.test_fraction - 1.0) < 1e-9,
            "config: split fractions must sum to 1");

    if (doc.contains("training")) {
      const auto& t = doc.at("training");
      check_keys(t, {"learning_rate", "max_epochs", "patience", "beta1", "beta2", "epsilon", "monotone", "hidden",
                     "gnn_layers", "gnn_width", "binarize_threshold", "gsphar_windows"},
                 "training");
      auto& tr = c.training;
      read_opt(t, "learning_rate", tr.learning_rate);
      read_opt(t, "max_epochs", tr.max_epochs);
      read_opt(t, "patience", tr.patience);
      read_opt(t, "beta1", tr.beta1);
      read_opt(t, "beta2", tr.beta2);
      read_opt(t, "epsilon", tr.epsilon);
      read_opt(t, "monotone", tr.monotone);
      read_opt(t, "hidden", tr.hidden);
      read_opt(t, "gnn_layers", tr.gnn_layers);
      read_opt(t, "gnn_width", tr.gnn_width);
      read_opt(t, "binarize_threshold", tr.binarize_threshold);
      if (t.contains("gsphar_windows")) {
        const auto w = t.at("gsphar_windows").get<std::string>();
        require(w == "overlapping" || w == "partitioned", "config: gsphar_windows must be overlapping or partitioned");
        tr.gsphar_windows = w == "overlapping" ? WindowMode::Overlapping : WindowMode::Partitioned;
      }
    }
    require(c.training.learning_rate > 0.0, "config: learning_rate must be positive");
    require(c.training.max_epochs >= 0 && c.training.patience >= 1, "config: invalid epoch settings");
    require(c.training.hidden >= 1 && c.training.gnn_width >= 1 && c.training.gnn_layers >= 1,
            "config: network sizes must be positive");

    read_opt(doc, "reference_model", c.reference_model);
    model_kind_from_string(c.reference_model);

    if (doc.contains("mcs")) {
      const auto& m = doc.at("mcs");
      check_keys(m, {"bootstrap", "block_length", "level"}, "mcs");
      read_opt(m, "bootstrap", c.mcs.bootstrap);
      read_opt(m, "block_length", c.mcs.block_length);
      read_opt(m, "level", c.mcs.level);
    }
    require(c.mcs.bootstrap >= 1 && c.mcs.block_length >= 0, "config: invalid MCS bootstrap settings");
    require(c.mcs.level > 0.0 && c.mcs.level < 1.0, "config: mcs.level must lie in (0, 1)");

    if (doc.contains("seed")) c.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("output_dir")) c.output_dir = resolve(doc.at("output_dir").get<std::string>(), base_dir);
  } catch (const json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  doc.erase("output_dir");
  doc.erase("seed");
  c.source = doc.dump();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), fs::path(path).parent_path().string().empty()
                                        ? std::string(".")
                                        : fs::path(path).parent_path().string());
}

std::uint64_t config_hash(const RunConfig& config) {
  require(config.seed.has_value(), "config: a seed is required");
  return fnv1a(config.source + "|seed=" + std::to_string(*config.seed));
}

SplitRows split_rows(Index rows, const RunConfig& config) {
  SplitRows s;
  s.rows = rows;
  auto part = [&](double fraction) {
    return static_cast<Index>(std::floor(fraction * static_cast<double>(rows) + 1e-9));
  };
  s.train_end = part(config.train_fraction);
  s.valid_end = s.train_end + part(config.valid_fraction);
  return s;
}

VolPanel load_data(const RunConfig& config) {
  if (!config.panel_path.empty()) return read_panel_csv(config.panel_path);
  if (!config.intraday_path.empty()) {
    return compute_rv(align_returns(read_intraday_csv(config.intraday_path)), config.scale);
  }
  require(config.synthetic.has_value(), "config: no data source");
  const auto& s = *config.synthetic;
  SyntheticSpec spec;
  spec.n = s.n;
  spec.t = s.t;
  spec.coupling = s.coupling ? *s.coupling : planted_coupling(s.n);
  spec.noise_scale = s.noise_scale;
  spec.log_mean = s.log_mean;
  spec.seed = s.seed;
  return generate_synthetic(spec);
}

namespace {

std::string forecast_csv(const VolPanel& panel, const std::vector<Index>& origins, int horizon, const Matrix& f) {
  std::string out = "date";
  for (const auto& l : panel.labels) out += "," + l;
  out += "\n";
  for (std::size_t s = 0; s < origins.size(); ++s) {
    out += panel.days[static_cast<std::size_t>(origins[s] + horizon - 1)];
    for (Index i = 0; i < f.cols(); ++i) out += "," + csv::format_machine(f(static_cast<Index>(s), i));
    out += "\n";
  }
  return out;
}

}  // namespace

RunSummary cmd_run(RunConfig config, const std::optional<std::uint64_t>& seed_override, const std::string& out_override) {
  if (seed_override) config.seed = seed_override;
  if (!out_override.empty()) config.output_dir = out_override;
  require(config.seed.has_value(), "config: a seed is required (set \"seed\" or pass --seed)");
  require(!config.output_dir.empty(), "config: an output directory is required (set \"output_dir\" or pass --out)");
  const std::uint64_t seed = *config.seed;
  config.training.seed = seed;
  config.mcs.seed = derive_seed(seed, 7);

  RunSummary summary;
  summary.output_dir = config.output_dir;
  const fs::path out(config.output_dir);
  auto emit = [&](const std::string& rel, const std::string& text) {
    const fs::path p = out / rel;
    fs::create_directories(p.parent_path());
    csv::write_text(p.string(), text);
    summary.files.push_back(rel);
  };

  const VolPanel panel = stage("ingest", [&] {
    VolPanel p = load_data(config);
    validate(p);
    return p;
  });
  const SplitRows split = split_rows(panel.rows(), config);
  stage("ingest", [&] {
    for (int h : config.horizons) {
      require(split.train_end > LagWindows::kLong + h, "training split too short for horizon " + std::to_string(h));
      require(split.rows - split.valid_end >= 1 &&
                  !forecast_origins(split.rows, h, split.valid_end, split.rows).empty(),
              "test split has no forecast targets for horizon " + std::to_string(h));
    }
    fs::create_directories(out);
    emit("panel.csv", panel_csv(panel));
    if (panel.rows() >= 30) emit("stats.csv", stats_csv(describe(panel)));
    return 0;
  });

  const VolPanel in_sample = head_rows(panel, split.valid_end);
  const SampleSplit linear_split{0, split.valid_end, split.valid_end};
  const SampleSplit neural_split{0, split.train_end, split.valid_end};

  std::vector<ForecastSet> sets;
  json fits = json::array();
  for (int h : config.horizons) {
    const std::string tag = "h" + std::to_string(h);
    const int gh = config.graph_horizon > 0 ? config.graph_horizon : h;
    const SpilloverMatrix graph = stage("graph", [&] {
      SpilloverMatrix g = spillover_graph(in_sample, config.var_p, gh, config.var_ridge);
      const fs::path csv_path = out / ("graph_" + tag + ".csv");
      write_spillover(g, panel.labels, csv_path.string(), (out / ("graph_" + tag + ".json")).string());
      summary.files.push_back("graph_" + tag + ".csv");
      summary.files.push_back("graph_" + tag + ".json");
      return g;
    });

    const auto origins = forecast_origins(panel.rows(), h, split.valid_end, panel.rows());
    const Matrix truth = target_matrix(panel.values, origins, h, config.target);
    for (ModelKind kind : config.models) {
      const std::string name = to_string(kind);
      const ModelFit fit = stage("fit " + name + " H=" + std::to_string(h), [&] {
        switch (kind) {
          case ModelKind::Har: return fit_har_all(panel, h, linear_split, config.target);
          case ModelKind::Vhar: return fit_vhar(panel, h, linear_split, config.target);
          case ModelKind::HarKs: return fit_har_ks(panel, h, linear_split, config.target);
          case ModelKind::VGsphar: return fit_v_gsphar(panel, graph, h, linear_split, config.target);
          case ModelKind::Gnnhar: return fit_gnnhar(panel, graph, h, config.training, neural_split, config.target);
          case ModelKind::Gsphar: return fit_gsphar(panel, graph, h, config.training, neural_split, config.target);
          case ModelKind::DGsphar:
            return fit_d_gsphar(panel, graph, h, config.training, neural_split, config.target);
        }
        throw Error("unhandled model kind");
      });
      const Matrix f = stage("forecast " + name + " H=" + std::to_string(h), [&] {
        Matrix m = forecast(fit, panel, origins);
        require(m.allFinite(), "non-finite forecasts");
        return m;
      });
      emit("fits/" + name + "_" + tag + ".json", to_json(fit));
      emit("forecasts/" + name + "_" + tag + ".csv", forecast_csv(panel, origins, h, f));
      if (kind == ModelKind::Gsphar || kind == ModelKind::DGsphar) {
        emit("filters/" + name + "_" + tag + ".csv", filter_weights_csv(export_filter_weights(fit)));
      }
      fits.push_back({{"model", name},
                      {"horizon", h},
                      {"parameters", fit.parameter_count()},
                      {"epochs", fit.train_loss.size()},
                      {"best_epoch", fit.best_epoch}});
      sets.push_back({name, h, f, truth, panel.labels});
    }
  }

  summary.report = stage("evaluate", [&] { return build_report(sets, config.reference_model, config.mcs); });
  stage("report", [&] {
    write_report(summary.report, out.string());
    for (const auto& r : summary.report.horizons) {
      for (const char* f : {"mae.csv", "dm.csv", "mcs.csv", "tables.txt"}) {
        summary.files.push_back("h" + std::to_string(r.horizon) + "/" + f);
      }
    }
    std::vector<std::string> files = summary.files;
    files.push_back("manifest.json");
    std::sort(files.begin(), files.end());
    json models = json::array();
    for (ModelKind k : config.models) models.push_back(to_string(k));
    json manifest = {{"config_hash", hex(config_hash(config))},
                     {"seed", seed},
                     {"models", models},
                     {"horizons", config.horizons},
                     {"target", config.target == TargetMode::Direct ? "direct" : "average"},
                     {"rows", panel.rows()},
                     {"labels", panel.labels},
                     {"first_day", panel.days.front()},
                     {"last_day", panel.days.back()},
                     {"split", {{"train_end", split.train_end}, {"valid_end", split.valid_end}}},
                     {"reference_model", config.reference_model},
                     {"mcs", {{"bootstrap", config.mcs.bootstrap},
                              {"block_length", config.mcs.block_length},
                              {"level", config.mcs.level},
                              {"seed", config.mcs.seed}}},
                     {"fits", fits},
                     {"files", files},
                     {"config", json::parse(config.source)}};
    csv::write_text((out / "manifest.json").string(), manifest.dump(2) + "\n");
    summary.files.push_back("manifest.json");
    return 0;
  });
  return summary;
}

void cmd_compute_rv(const std::string& intraday_csv, const std::string& out_csv, double scale) {
  const VolPanel panel = compute_rv(align_returns(read_intraday_csv(intraday_csv)), scale);
  write_panel_csv(panel, out_csv);
}

void cmd_build_graph(const std::string& panel_csv_path, int p, int horizon, double ridge, const std::string& out_dir) {
  const VolPanel panel = read_panel_csv(panel_csv_path);
  const SpilloverMatrix g = spillover_graph(panel, p, horizon, ridge);
  fs::create_directories(out_dir);
  write_spillover(g, panel.labels, (fs::path(out_dir) / "spillover.csv").string(),
                  (fs::path(out_dir) / "spillover.json").string());
}

void cmd_describe(const std::string& panel_csv_path, const std::string& out_csv) {
  const VolPanel panel = read_panel_csv(panel_csv_path);
  csv::write_text(out_csv, stats_csv(describe(panel)));
}

}  // namespace gsphar
