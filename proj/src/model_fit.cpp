#include <json.hpp>

#include "gsphar/csv.hpp"
#include "gsphar/kernels.hpp"
#include "gsphar/objectives.hpp"

namespace gsphar {

using json = nlohmann::json;

namespace {

const std::vector<std::pair<ModelKind, std::string>>& kind_names() {
  static const std::vector<std::pair<ModelKind, std::string>> names = {
      {ModelKind::Har, "HAR"},         {ModelKind::Vhar, "VHAR"},       {ModelKind::HarKs, "HAR-KS"},
      {ModelKind::Gnnhar, "GNNHAR"},   {ModelKind::VGsphar, "v-GSPHAR"}, {ModelKind::Gsphar, "GSPHAR"},
      {ModelKind::DGsphar, "d-GSPHAR"},
  };
  return names;
}

}  // namespace

std::string to_string(ModelKind kind) {
  for (const auto& [k, name] : kind_names()) {
    if (k == kind) return name;
  }
  throw Error("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& name) {
  for (const auto& [k, n] : kind_names()) {
    if (n == name) return k;
  }
  std::string known;
  for (const auto& [k, n] : kind_names()) known += (known.empty() ? "" : ", ") + n;
  throw Error("unknown model name '" + name + "' (known: " + known + ")");
}

const std::vector<ModelKind>& all_model_kinds() {
  static const std::vector<ModelKind> kinds = {ModelKind::Har,     ModelKind::Vhar,   ModelKind::HarKs,
                                               ModelKind::Gnnhar,  ModelKind::VGsphar, ModelKind::Gsphar,
                                               ModelKind::DGsphar};
  return kinds;
}

Index ModelFit::parameter_count() const {
  switch (kind) {
    case ModelKind::Gsphar:
    case ModelKind::DGsphar:
      require(gsphar.has_value(), "fit has no GSPHAR parameters");
      return gsphar->size();
    case ModelKind::Gnnhar:
      require(gnnhar.has_value(), "fit has no GNNHAR parameters");
      return gnnhar->size();
    default:
      return coefficients.size();
  }
}

// --- forecasting --------------------------------------------------------

namespace {

Matrix linear_forecast(const ModelFit& fit, const Matrix& values, const std::vector<Index>& origins) {
  const Index n = values.cols();
  const auto f = build_har_features(values, origins, LagWindows{});
  const auto s = static_cast<Index>(origins.size());
  const Matrix& c = fit.coefficients;
  switch (fit.kind) {
    case ModelKind::Har: {
      if (fit.n == 1 && c.rows() == 1) {
        require(fit.column < n, "forecast: HAR column out of range");
        const Index i = fit.column;
        Matrix out(s, 1);
        out.col(0) = (c(0, 1) * f.daily.col(i) + c(0, 2) * f.mid.col(i) + c(0, 3) * f.lng.col(i)).array() + c(0, 0);
        return out;
      }
      require(c.rows() == n, "forecast: panel width does not match the fit");
      Matrix out(s, n);
      for (Index i = 0; i < n; ++i) {
        out.col(i) = (c(i, 1) * f.daily.col(i) + c(i, 2) * f.mid.col(i) + c(i, 3) * f.lng.col(i)).array() + c(i, 0);
      }
      return out;
    }
    case ModelKind::Vhar: {
      require(c.rows() == n, "forecast: panel width does not match the fit");
      Matrix x(s, 3 * n + 1);
      x.col(0).setOnes();
      x.middleCols(1, n) = f.daily;
      x.middleCols(1 + n, n) = f.mid;
      x.middleCols(1 + 2 * n, n) = f.lng;
      return x * c.transpose();
    }
    case ModelKind::HarKs: {
      require(c.rows() == n, "forecast: panel width does not match the fit");
      Matrix out(s, n);
      for (Index i = 0; i < n; ++i) {
        out.col(i) = (f.daily * c.row(i).segment(1, n).transpose() + c(i, n + 1) * f.mid.col(i) +
                      c(i, n + 2) * f.lng.col(i)).array() + c(i, 0);
      }
      return out;
    }
    case ModelKind::VGsphar: {
      require(fit.basis.has_value() && c.rows() == n, "forecast: panel width does not match the fit");
      const Matrix u = fit.basis->u.real();
      const auto g = build_har_features(values * u, origins, LagWindows{});
      Matrix spec(s, n);
      for (Index k = 0; k < n; ++k) {
        spec.col(k) = (c(k, 1) * g.daily.col(k) + c(k, 2) * g.mid.col(k) + c(k, 3) * g.lng.col(k)).array() + c(k, 0);
      }
      return spec * u.transpose();
    }
    default:
      throw Error("forecast: not a linear model");
  }
}

}  // namespace

Matrix forecast(const ModelFit& fit, const Matrix& values, const std::vector<Index>& origins) {
  require(!origins.empty(), "forecast: no origins requested");
  for (Index t : origins) {
    if (t < LagWindows::kLong || t > values.rows()) {
      throw Error("forecast: missing history for origin " + std::to_string(t) + " (needs lags t-22..t-1)");
    }
  }
  switch (fit.kind) {
    case ModelKind::Gsphar:
    case ModelKind::DGsphar: {
      require(fit.gsphar.has_value(), "forecast: fit has no GSPHAR parameters");
      require(values.cols() == fit.n, "forecast: panel width does not match the fit");
      const auto& p = *fit.gsphar;
      kernels::DynamicBases b;
      if (fit.kind == ModelKind::Gsphar) {
        require(fit.basis.has_value(), "forecast: GSPHAR fit has no basis");
        b.bases = {*fit.basis};
        b.basis_of.assign(origins.size(), 0);
      } else {
        b = kernels::dynamic_bases(values, origins, fit.adjacency, fit.rho, fit.q);
      }
      const auto objective = GspharObjective::for_inference(values, origins, std::move(b.bases), std::move(b.basis_of),
                                                            p.windows.mode, static_cast<int>(p.w1.cols()));
      return objective.predict(p);
    }
    case ModelKind::Gnnhar: {
      require(fit.gnnhar.has_value(), "forecast: fit has no GNNHAR parameters");
      require(values.cols() == fit.n, "forecast: panel width does not match the fit");
      const auto& p = *fit.gnnhar;
      const auto objective = GnnharObjective::for_inference(values, origins, p.propagation,
                                                            static_cast<int>(p.layers.size()) - 1,
                                                            static_cast<int>(p.gamma.size()));
      return objective.predict(p);
    }
    default:
      return linear_forecast(fit, values, origins);
  }
}

Matrix forecast(const ModelFit& fit, const VolPanel& panel, const std::vector<Index>& origins) {
  return forecast(fit, panel.values, origins);
}

// --- filter export ------------------------------------------------------

std::vector<FilterWeightRow> export_filter_weights(const ModelFit& fit) {
  require(fit.kind == ModelKind::Gsphar || fit.kind == ModelKind::DGsphar,
          "filter weights exist only for GSPHAR and d-GSPHAR fits (got " + to_string(fit.kind) + ")");
  require(fit.gsphar.has_value(), "fit has no GSPHAR parameters");
  const auto& p = *fit.gsphar;
  std::vector<FilterWeightRow> rows;
  auto add = [&](const std::string& window, const Matrix& w, int first) {
    const RowVector mean = w.colwise().mean();
    for (Index k = 0; k < mean.size(); ++k) {
      rows.push_back({window, first + static_cast<int>(k), mean(k), 1.0 / static_cast<double>(mean.size())});
    }
  };
  add("mid", p.filter.mid_weights(), p.windows.mid_first());
  add("long", p.filter.long_weights(), p.windows.long_first());
  return rows;
}

std::string filter_weights_csv(const std::vector<FilterWeightRow>& rows) {
  std::string out = "window,lag,learned_weight,har_reference_weight\n";
  for (const auto& r : rows) {
    out += r.window + "," + std::to_string(r.lag) + "," + csv::format_machine(r.learned) + "," +
           csv::format_machine(r.har_reference) + "\n";
  }
  return out;
}

// --- serialization ------------------------------------------------------

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  const auto rows = static_cast<Index>(j.size());
  const Index cols = rows ? static_cast<Index>(j.at(0).size()) : 0;
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    require(static_cast<Index>(j.at(i).size()) == cols, "model JSON: ragged matrix");
    for (Index k = 0; k < cols; ++k) m(i, k) = j.at(i).at(k).get<double>();
  }
  return m;
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

std::string to_json(const ModelFit& fit) {
  json j;
  j["kind"] = to_string(fit.kind);
  j["horizon"] = fit.horizon;
  j["target"] = fit.target == TargetMode::Direct ? "direct" : "average";
  j["n"] = fit.n;
  j["labels"] = fit.labels;
  j["column"] = fit.column;
  j["coefficients"] = matrix_json(fit.coefficients);
  j["adjacency"] = matrix_json(fit.adjacency);
  j["q"] = fit.q;
  j["rho"] = fit.rho;
  if (fit.basis) {
    j["basis"] = {{"q", fit.basis->q},
                  {"eigenvalues", vector_json(fit.basis->eigenvalues)},
                  {"u_real", matrix_json(fit.basis->u.real())},
                  {"u_imag", matrix_json(fit.basis->u.imag())},
                  {"laplacian_real", matrix_json(fit.basis->laplacian.real())},
                  {"laplacian_imag", matrix_json(fit.basis->laplacian.imag())}};
  }
  if (fit.gsphar) {
    j["gsphar"] = {{"windows", fit.gsphar->windows.mode == WindowMode::Overlapping ? "overlapping" : "partitioned"},
                   {"hidden", fit.gsphar->w1.cols()},
                   {"parameters", vector_json(fit.gsphar->flatten())}};
  }
  if (fit.gnnhar) {
    j["gnnhar"] = {{"layers", fit.gnnhar->layers.size() - 1},
                   {"width", fit.gnnhar->gamma.size()},
                   {"propagation", matrix_json(fit.gnnhar->propagation)},
                   {"parameters", vector_json(fit.gnnhar->flatten())}};
  }
  j["train_loss"] = fit.train_loss;
  j["valid_loss"] = fit.valid_loss;
  j["best_epoch"] = fit.best_epoch;
  j["seed"] = fit.seed;
  return j.dump(2) + "\n";
}

ModelFit model_fit_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("model JSON: ") + e.what());
  }
  try {
    ModelFit fit;
    fit.kind = model_kind_from_string(j.at("kind").get<std::string>());
    fit.horizon = j.at("horizon").get<int>();
    fit.target = j.at("target").get<std::string>() == "average" ? TargetMode::Average : TargetMode::Direct;
    fit.n = j.at("n").get<Index>();
    fit.labels = j.at("labels").get<std::vector<std::string>>();
    fit.column = j.value("column", Index{0});
    fit.coefficients = matrix_from_json(j.at("coefficients"));
    fit.adjacency = matrix_from_json(j.at("adjacency"));
    fit.q = j.at("q").get<double>();
    fit.rho = j.at("rho").get<double>();
    if (j.contains("basis")) {
      const auto& b = j["basis"];
      MagneticBasis basis;
      basis.q = b.at("q").get<double>();
      basis.eigenvalues = vector_from_json(b.at("eigenvalues"));
      const Matrix ur = matrix_from_json(b.at("u_real"));
      const Matrix ui = matrix_from_json(b.at("u_imag"));
      basis.u = ur.cast<Complex>() + Complex(0.0, 1.0) * ui.cast<Complex>();
      const Matrix lr = matrix_from_json(b.at("laplacian_real"));
      const Matrix li = matrix_from_json(b.at("laplacian_imag"));
      basis.laplacian = lr.cast<Complex>() + Complex(0.0, 1.0) * li.cast<Complex>();
      fit.basis = std::move(basis);
    }
    if (j.contains("gsphar")) {
      const auto& g = j["gsphar"];
      const WindowMode mode =
          g.at("windows").get<std::string>() == "partitioned" ? WindowMode::Partitioned : WindowMode::Overlapping;
      GspharParams p = GspharParams::zeros(fit.n, g.at("hidden").get<int>(), mode);
      p.unflatten(vector_from_json(g.at("parameters")));
      fit.gsphar = std::move(p);
    }
    if (j.contains("gnnhar")) {
      const auto& g = j["gnnhar"];
      const int layers = g.at("layers").get<int>();
      const int width = g.at("width").get<int>();
      GnnharParams p;
      p.propagation = matrix_from_json(g.at("propagation"));
      p.layers.push_back(Matrix::Zero(3, width));
      for (int k = 0; k < layers; ++k) p.layers.push_back(Matrix::Zero(width, width));
      p.gamma = Vector::Zero(width);
      p.unflatten(vector_from_json(g.at("parameters")));
      fit.gnnhar = std::move(p);
    }
    fit.train_loss = j.at("train_loss").get<std::vector<double>>();
    fit.valid_loss = j.at("valid_loss").get<std::vector<double>>();
    fit.best_epoch = j.at("best_epoch").get<int>();
    fit.seed = j.at("seed").get<std::uint64_t>();
    return fit;
  } catch (const json::exception& e) {
    throw Error(std::string("model JSON: ") + e.what());
  }
}

}  // namespace gsphar
