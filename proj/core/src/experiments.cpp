#include "dti/experiments.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace dti {

ConfigError::ConfigError(std::string path, const std::string& message)
    : std::runtime_error(fmt::format("config error at {}: {}",
                                     path.empty() ? "/" : path, message)),
      path_(std::move(path)) {}

namespace {

std::string sub(const std::string& path, const std::string& key) {
  return path + "/" + key;
}

const nlohmann::json& require_field(const nlohmann::json& j, const std::string& path,
                                    const char* key) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path, fmt::format("missing field '{}'", key));
  return *it;
}

double as_double(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

int as_int(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<int>();
}

std::uint64_t as_u64(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !j.is_number_integer()) {
    throw ConfigError(path, "expected a nonnegative integer");
  }
  if (j.is_number_integer() && j.get<std::int64_t>() < 0) {
    throw ConfigError(path, "expected a nonnegative integer");
  }
  return j.get<std::uint64_t>();
}

std::string as_string(const nlohmann::json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> as_double_array(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> v;
  for (size_t i = 0; i < j.size(); ++i) {
    v.push_back(as_double(j[i], sub(path, std::to_string(i))));
  }
  return v;
}

TensorShape parse_shape(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(path, "expected a non-empty array of mode sizes");
  }
  std::vector<int> modes;
  for (size_t i = 0; i < j.size(); ++i) {
    modes.push_back(as_int(j[i], sub(path, std::to_string(i))));
  }
  try {
    return TensorShape(modes);
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
}

std::pair<double, double> parse_window(const nlohmann::json& j, const std::string& path) {
  const std::vector<double> w = as_double_array(j, path);
  if (w.size() != 2) throw ConfigError(path, "expected [lo, hi]");
  return {w[0], w[1]};
}

}  // namespace

ScalarFunction parse_function(const nlohmann::json& j, const std::string& path) {
  const std::string kind = as_string(require_field(j, path, "kind"), sub(path, "kind"));
  if (kind == "polynomial") {
    return ScalarFunction::polynomial(
        as_double_array(require_field(j, path, "coeffs"), sub(path, "coeffs")));
  }
  if (kind == "identity") return ScalarFunction::identity();
  if (kind == "exp") return ScalarFunction::exponential();
  if (kind == "log") return ScalarFunction::logarithm();
  if (kind == "sqrt") return ScalarFunction::square_root();
  if (kind == "power") {
    return ScalarFunction::power(
        as_double(require_field(j, path, "alpha"), sub(path, "alpha")));
  }
  if (kind == "polygamma") {
    try {
      return ScalarFunction::polygamma_function(
          as_int(require_field(j, path, "order"), sub(path, "order")));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(sub(path, "order"), e.what());
    }
  }
  throw ConfigError(sub(path, "kind"), fmt::format("unknown function kind '{}'", kind));
}

Kernel parse_kernel(const nlohmann::json& j, const std::string& path) {
  const std::string kind = as_string(require_field(j, path, "kind"), sub(path, "kind"));
  try {
    if (kind == "arithmetic") return Kernel::mean(MeanKind::arithmetic);
    if (kind == "geometric") return Kernel::mean(MeanKind::geometric);
    if (kind == "harmonic") return Kernel::mean(MeanKind::harmonic);
    if (kind == "logarithmic") return Kernel::mean(MeanKind::logarithmic);
    if (kind == "general_mean") {
      return Kernel::mean(MeanKind::general,
                          as_double(require_field(j, path, "alpha"), sub(path, "alpha")));
    }
    if (kind == "constant") {
      return Kernel::constant(as_double(require_field(j, path, "value"), sub(path, "value")));
    }
    if (kind == "divided_difference") {
      return Kernel::first_divided_difference(
          parse_function(require_field(j, path, "function"), sub(path, "function")));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(sub(path, "kind"), fmt::format("unknown kernel kind '{}'", kind));
}

NormSpec parse_norm(const nlohmann::json& j, const std::string& path) {
  const std::string kind = as_string(require_field(j, path, "norm"), sub(path, "norm"));
  if (kind == "schatten") {
    return NormSpec::schatten(as_double(require_field(j, path, "p"), sub(path, "p")));
  }
  if (kind == "kyfan") {
    return NormSpec::kyfan(as_int(require_field(j, path, "k"), sub(path, "k")));
  }
  if (kind == "ktrace") {
    return NormSpec::ktrace(as_int(require_field(j, path, "k"), sub(path, "k")));
  }
  if (kind == "operator") return NormSpec::operator_norm();
  throw ConfigError(sub(path, "norm"), fmt::format("unknown norm kind '{}'", kind));
}

nlohmann::json norm_to_json(const NormSpec& spec) {
  switch (spec.kind) {
    case NormKind::schatten: return {{"norm", "schatten"}, {"p", spec.p}};
    case NormKind::kyfan: return {{"norm", "kyfan"}, {"k", spec.k}};
    case NormKind::ktrace: return {{"norm", "ktrace"}, {"k", spec.k}};
    case NormKind::operator_norm: return {{"norm", "operator"}};
  }
  throw std::logic_error("norm_to_json: unreachable");
}

EnsembleSpec parse_ensemble(const nlohmann::json& j, const TensorShape& shape,
                            const std::string& path) {
  const std::string kind = as_string(require_field(j, path, "kind"), sub(path, "kind"));
  if (kind == "gaussian_hermitian") {
    GaussianHermitianSpec g;
    if (j.contains("scale")) g.scale = as_double(j["scale"], sub(path, "scale"));
    return {shape, g};
  }
  if (kind == "wishart") {
    WishartSpec w;
    if (j.contains("inner_samples")) {
      w.inner_samples = as_int(j["inner_samples"], sub(path, "inner_samples"));
    }
    if (j.contains("scale")) w.scale = as_double(j["scale"], sub(path, "scale"));
    if (j.contains("ridge")) w.ridge = as_double(j["ridge"], sub(path, "ridge"));
    if (w.inner_samples < 1) {
      throw ConfigError(sub(path, "inner_samples"), "must be >= 1");
    }
    if (w.ridge < 0.0) throw ConfigError(sub(path, "ridge"), "must be >= 0");
    return {shape, w};
  }
  if (kind == "fixed_eigenvalues") {
    FixedEigenvaluesSpec f;
    if (j.contains("values")) {
      ConstantEigenvalues c;
      c.values = as_double_array(j["values"], sub(path, "values"));
      if (static_cast<int>(c.values.size()) != shape.dim()) {
        throw ConfigError(sub(path, "values"),
                          fmt::format("{} values but shape {} has dim {}",
                                      c.values.size(), shape.to_string(), shape.dim()));
      }
      f.sampler = c;
    } else if (j.contains("uniform")) {
      const auto& u = j["uniform"];
      UniformEigenvalues ue;
      ue.lo = as_double(require_field(u, sub(path, "uniform"), "lo"),
                        sub(sub(path, "uniform"), "lo"));
      ue.hi = as_double(require_field(u, sub(path, "uniform"), "hi"),
                        sub(sub(path, "uniform"), "hi"));
      if (!(ue.lo <= ue.hi)) {
        throw ConfigError(sub(path, "uniform"), "requires lo <= hi");
      }
      f.sampler = ue;
    } else {
      throw ConfigError(path, "fixed_eigenvalues needs 'values' or 'uniform'");
    }
    return {shape, f};
  }
  throw ConfigError(sub(path, "kind"), fmt::format("unknown ensemble kind '{}'", kind));
}

EinsteinTensor build_fixed_tensor(const nlohmann::json& j, const TensorShape& shape,
                                  const std::string& path) {
  const std::string kind = as_string(require_field(j, path, "kind"), sub(path, "kind"));
  if (kind == "identity") return EinsteinTensor::identity(shape);
  if (kind == "file") {
    const std::string file =
        as_string(require_field(j, path, "path"), sub(path, "path"));
    EinsteinTensor t = [&] {
      try {
        return load_tensor(file);
      } catch (const std::exception& e) {
        throw ConfigError(sub(path, "path"), e.what());
      }
    }();
    if (t.shape() != shape) {
      throw ConfigError(sub(path, "path"),
                        fmt::format("tensor in '{}' has shape {} but config needs {}",
                                    file, t.shape().to_string(), shape.to_string()));
    }
    return t;
  }
  if (kind == "random_hermitian") {
    double scale = 1.0;
    if (j.contains("scale")) scale = as_double(j["scale"], sub(path, "scale"));
    const std::uint64_t s = as_u64(require_field(j, path, "seed"), sub(path, "seed"));
    const EnsembleSpec ens{shape, GaussianHermitianSpec{scale}};
    return sample(ens, SeedSpec{s, streams::kFixedInput}, 0);
  }
  throw ConfigError(sub(path, "kind"), fmt::format("unknown tensor kind '{}'", kind));
}

double resolve_omega(const nlohmann::json& j, const std::string& path) {
  const std::string kind = as_string(require_field(j, path, "kind"), sub(path, "kind"));
  try {
    if (kind == "constant") {
      const double v = as_double(require_field(j, path, "value"), sub(path, "value"));
      if (!(v >= 0.0)) throw ConfigError(sub(path, "value"), "must be >= 0");
      return v;
    }
    if (kind == "polynomial") {
      const auto [a, b] =
          parse_window(require_field(j, path, "window"), sub(path, "window"));
      return omega_polynomial_bound(
                 as_double_array(require_field(j, path, "coeffs"), sub(path, "coeffs")),
                 a, b)
          .value;
    }
    if (kind == "polygamma") {
      const auto [a, b] =
          parse_window(require_field(j, path, "window"), sub(path, "window"));
      return omega_polygamma_bound(
                 as_int(require_field(j, path, "order"), sub(path, "order")), a, b)
          .value;
    }
    if (kind == "grid") {
      const auto [a, b] =
          parse_window(require_field(j, path, "window"), sub(path, "window"));
      int points = 200;
      if (j.contains("points")) points = as_int(j["points"], sub(path, "points"));
      const ScalarFunction f =
          parse_function(require_field(j, path, "function"), sub(path, "function"));
      return max_abs_on_grid(Kernel::first_divided_difference(f), a, b, points);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(sub(path, "kind"), fmt::format("unknown omega kind '{}'", kind));
}

TailExperimentConfig parse_tail_config(const nlohmann::json& j,
                                       const std::vector<StatisticKind>& allowed) {
  TailExperimentConfig cfg;
  const TensorShape shape = parse_shape(require_field(j, "", "shape"), "/shape");
  cfg.ensemble_a =
      parse_ensemble(require_field(j, "", "ensemble_a"), shape, "/ensemble_a");
  if (j.contains("ensemble_b")) {
    cfg.ensemble_b = parse_ensemble(j["ensemble_b"], shape, "/ensemble_b");
  }

  const nlohmann::json& st = require_field(j, "", "statistic");
  const std::string kind_name =
      as_string(require_field(st, "/statistic", "kind"), "/statistic/kind");
  StatisticKind kind;
  if (kind_name == "dti_norm") kind = StatisticKind::dti_norm;
  else if (kind_name == "lipschitz") kind = StatisticKind::lipschitz;
  else if (kind_name == "quasi_lipschitz") kind = StatisticKind::quasi_lipschitz;
  else if (kind_name == "derivative") kind = StatisticKind::derivative;
  else if (kind_name == "quasi_derivative") kind = StatisticKind::quasi_derivative;
  else {
    throw ConfigError("/statistic/kind",
                      fmt::format("unknown statistic kind '{}'", kind_name));
  }
  if (std::find(allowed.begin(), allowed.end(), kind) == allowed.end()) {
    throw ConfigError("/statistic/kind",
                      fmt::format("statistic '{}' not supported by this command",
                                  kind_name));
  }
  cfg.statistic.kind = kind;
  if (st.contains("kernel")) {
    cfg.statistic.kernel = parse_kernel(st["kernel"], "/statistic/kernel");
  }
  if (st.contains("f")) {
    cfg.statistic.f = parse_function(st["f"], "/statistic/f");
  }
  if (st.contains("x")) {
    cfg.statistic.x = build_fixed_tensor(st["x"], shape, "/statistic/x");
  }
  if (st.contains("d")) {
    cfg.statistic.d = build_fixed_tensor(st["d"], shape, "/statistic/d");
  }
  if (st.contains("d_poly")) {
    cfg.statistic.d_poly = as_double_array(st["d_poly"], "/statistic/d_poly");
  }
  if (st.contains("omega")) {
    cfg.statistic.omega = resolve_omega(st["omega"], "/statistic/omega");
  }

  if (j.contains("norm")) cfg.norm = parse_norm(j["norm"], "/norm");
  if (j.contains("theta")) cfg.theta = as_double_array(j["theta"], "/theta");
  if (j.contains("theta_percentiles")) {
    cfg.theta_percentiles = as_double_array(j["theta_percentiles"], "/theta_percentiles");
  }
  if (j.contains("samples")) cfg.n_samples = as_int(j["samples"], "/samples");
  cfg.n_expectation_samples = cfg.n_samples;
  if (j.contains("expectation_samples")) {
    cfg.n_expectation_samples = as_int(j["expectation_samples"], "/expectation_samples");
  }
  if (j.contains("confidence")) cfg.confidence = as_double(j["confidence"], "/confidence");
  if (j.contains("seed")) cfg.seed.master_seed = as_u64(j["seed"], "/seed");
  if (j.contains("threads")) cfg.threads = as_int(j["threads"], "/threads");
  return cfg;
}

std::uint64_t config_hash(const nlohmann::json& config) {
  const std::string dump = config.dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// --------------------------------------------------------------------------
// Verify suites.

VerifyConfig parse_verify_config(const nlohmann::json& j) {
  VerifyConfig cfg;
  if (j.contains("shapes")) {
    const auto& shapes = j["shapes"];
    if (!shapes.is_array() || shapes.empty()) {
      throw ConfigError("/shapes", "expected a non-empty array of shapes");
    }
    for (size_t i = 0; i < shapes.size(); ++i) {
      cfg.shapes.push_back(parse_shape(shapes[i], sub("/shapes", std::to_string(i))));
    }
  } else {
    for (std::vector<int> m : {std::vector<int>{2}, {3}, {2, 2}, {2, 3}}) {
      cfg.shapes.emplace_back(m);
    }
  }
  if (j.contains("instances")) {
    cfg.instances = as_int(j["instances"], "/instances");
    if (cfg.instances < 1) throw ConfigError("/instances", "must be >= 1");
  }
  if (j.contains("seed")) cfg.seed.master_seed = as_u64(j["seed"], "/seed");
  if (j.contains("tolerances")) {
    const auto& tols = j["tolerances"];
    if (!tols.is_object()) throw ConfigError("/tolerances", "expected an object");
    for (auto it = tols.begin(); it != tols.end(); ++it) {
      cfg.tolerances[it.key()] =
          as_double(it.value(), sub("/tolerances", it.key()));
    }
  }
  if (j.contains("x_file")) cfg.x_file = as_string(j["x_file"], "/x_file");
  return cfg;
}

bool VerifyReport::all_pass() const {
  if (checks.empty()) return false;
  return std::all_of(checks.begin(), checks.end(),
                     [](const VerifyCheck& c) { return c.pass; });
}

namespace {

EinsteinTensor random_complex_tensor(const TensorShape& shape, const SeedSpec& seed,
                                     std::uint64_t index) {
  RandomStream rng(seed, index);
  const int d = shape.dim();
  Matrix m(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) m(r, c) = rng.complex_gaussian();
  return fold(std::move(m), shape);
}

// Literal contraction over multi-indices, the reference for the unfolding
// homomorphism.
EinsteinTensor naive_einstein_product(const EinsteinTensor& x, const EinsteinTensor& y) {
  const TensorShape& shape = x.shape();
  EinsteinTensor out = EinsteinTensor::zero(shape);
  const int d = shape.dim();
  for (int r = 0; r < d; ++r) {
    const auto ri = shape.unflatten(r);
    for (int c = 0; c < d; ++c) {
      const auto ci = shape.unflatten(c);
      Complex acc = 0.0;
      for (int k = 0; k < d; ++k) {
        const auto ki = shape.unflatten(k);
        acc += x.at(ri, ki) * y.at(ki, ci);
      }
      out.set(ri, ci, acc);
    }
  }
  return out;
}

struct SuiteRecorder {
  const VerifyConfig& cfg;
  VerifyReport& report;

  double tolerance_for(const std::string& name, double fallback) const {
    auto all = cfg.tolerances.find("all");
    if (all != cfg.tolerances.end()) return all->second;
    auto it = cfg.tolerances.find(name);
    return it != cfg.tolerances.end() ? it->second : fallback;
  }

  void add(const std::string& name, double residual, double default_tol,
           int instances) const {
    VerifyCheck c;
    c.name = name;
    c.residual = residual;
    c.tolerance = tolerance_for(name, default_tol);
    c.instances = instances;
    c.pass = residual <= c.tolerance;
    report.checks.push_back(c);
  }
};

}  // namespace

VerifyReport run_verify(const VerifyConfig& cfg) {
  VerifyReport report;
  SuiteRecorder rec{cfg, report};
  const SeedSpec seed = cfg.seed;

  std::optional<EinsteinTensor> x_file;
  if (cfg.x_file) {
    try {
      x_file = load_tensor(*cfg.x_file);
    } catch (const std::exception& e) {
      throw ConfigError("/x_file", e.what());
    }
  }

  const ScalarFunction fns[] = {
      ScalarFunction::polynomial({0.0, 0.0, 1.0}),
      ScalarFunction::polynomial({0.0, 0.0, 0.0, 1.0}),
      ScalarFunction::exponential(),
      ScalarFunction::logarithm(),
  };
  const char* fn_tags[] = {"x2", "x3", "exp", "log"};

  for (const TensorShape& shape : cfg.shapes) {
    const std::string tag = shape.to_string();
    const EnsembleSpec hermitian{shape, GaussianHermitianSpec{1.0}};
    const EnsembleSpec pd{shape, WishartSpec{2 * shape.dim(), 1.0, 0.15}};

    // Unfolding is a ring homomorphism: product, adjoint, fold round trip.
    double ring_res = 0.0;
    for (int t = 0; t < cfg.instances; ++t) {
      const EinsteinTensor x =
          random_complex_tensor(shape, seed.with_stream(11), 2 * t);
      const EinsteinTensor y =
          random_complex_tensor(shape, seed.with_stream(11), 2 * t + 1);
      const EinsteinTensor fast = einstein_product(x, y);
      const EinsteinTensor naive = naive_einstein_product(x, y);
      ring_res = std::max(ring_res, frobenius_norm(subtract(fast, naive)));
      ring_res = std::max(
          ring_res, frobenius_norm(subtract(fold(unfold(x), shape), x)));
      ring_res = std::max(ring_res,
                          frobenius_norm(subtract(adjoint(adjoint(x)), x)));
    }
    rec.add("ring_isomorphism" + tag, ring_res, 1e-12, cfg.instances);

    // Coefficient decomposition: X = sum_ij <X V_j, U_i> U_i V_j^H.
    double rec_res = 0.0, had_res = 0.0, lin_res = 0.0;
    for (int t = 0; t < cfg.instances; ++t) {
      const SpectralDecomposition da =
          eigh(sample(hermitian, seed.with_stream(12), 2 * t));
      const SpectralDecomposition db =
          eigh(sample(hermitian, seed.with_stream(12), 2 * t + 1));
      const EinsteinTensor x = (x_file && x_file->shape() == shape)
                                   ? *x_file
                                   : random_complex_tensor(shape, seed.with_stream(13), t);
      const Matrix coeff = coefficient_matrix(x, da, db);
      rec_res = std::max(
          rec_res,
          frobenius_norm(subtract(reconstruct_from_coefficients(coeff, da, db), x)));

      const Kernel psi = Kernel::mean(MeanKind::arithmetic);
      had_res = std::max(
          had_res, frobenius_norm(subtract(dti_apply(da, db, psi, x),
                                           dti_apply_naive(da, db, psi, x))));

      const EinsteinTensor y = random_complex_tensor(shape, seed.with_stream(14), t);
      RandomStream coeff_rng(seed.with_stream(15), t);
      const Complex a_coef = coeff_rng.complex_gaussian();
      const Complex b_coef = coeff_rng.complex_gaussian();
      const EinsteinTensor lhs =
          dti_apply(da, db, psi, add(scale(a_coef, x), scale(b_coef, y)));
      const EinsteinTensor rhs = add(scale(a_coef, dti_apply(da, db, psi, x)),
                                     scale(b_coef, dti_apply(da, db, psi, y)));
      lin_res = std::max(lin_res, frobenius_norm(subtract(lhs, rhs)));
    }
    rec.add("coefficient_reconstruction" + tag, rec_res, 1e-12, cfg.instances);
    rec.add("hadamard_action" + tag, had_res, 1e-12, cfg.instances);
    rec.add("linearity" + tag, lin_res, 1e-10, cfg.instances);

    // Perturbation and quasi-commutator identities per function family.
    for (int fi = 0; fi < 4; ++fi) {
      const ScalarFunction& f = fns[fi];
      const bool needs_pd = fi == 3;
      const EnsembleSpec& ens = needs_pd ? pd : hermitian;
      double pert = 0.0, quasi = 0.0;
      for (int t = 0; t < cfg.instances; ++t) {
        const EinsteinTensor a = sample(ens, seed.with_stream(16), 2 * t);
        const EinsteinTensor b = sample(ens, seed.with_stream(16), 2 * t + 1);
        const double fa = frobenius_norm(apply_function(f, a));
        const double fb = frobenius_norm(apply_function(f, b));
        pert = std::max(pert, perturbation_residual(f, a, b, NormSpec::schatten(2.0)) /
                                  (1.0 + fa + fb));
        const EinsteinTensor d =
            sample(EnsembleSpec{shape, GaussianHermitianSpec{1.0}},
                   seed.with_stream(17), t);
        quasi = std::max(quasi,
                         quasi_commutator_residual(f, a, b, d, NormSpec::schatten(2.0)) /
                             (1.0 + frobenius_norm(d) * (fa + fb)));
      }
      rec.add(fmt::format("perturbation_{}{}", fn_tags[fi], tag), pert, 1e-7,
              cfg.instances);
      rec.add(fmt::format("quasi_commutator_{}{}", fn_tags[fi], tag), quasi, 1e-7,
              cfg.instances);
    }

    // Triple-integral checks stay at naive-affordable dimensions.
    if (shape.dim() <= 4) {
      const ScalarFunction tti_fns[] = {ScalarFunction::polynomial({0, 0, 0, 1.0}),
                                        ScalarFunction::exponential()};
      double oracle_res = 0.0, margin = 0.0;
      for (int t = 0; t < cfg.instances; ++t) {
        const SpectralDecomposition da =
            eigh(sample(hermitian, seed.with_stream(18), 3 * t));
        const SpectralDecomposition db =
            eigh(sample(hermitian, seed.with_stream(18), 3 * t + 1));
        const SpectralDecomposition dc =
            eigh(sample(hermitian, seed.with_stream(18), 3 * t + 2));
        const EinsteinTensor x = random_complex_tensor(shape, seed.with_stream(19), 2 * t);
        const EinsteinTensor y =
            random_complex_tensor(shape, seed.with_stream(19), 2 * t + 1);
        const ScalarFunction& f = tti_fns[t % 2];
        const Kernel phi = Kernel::second_divided_difference(f);
        const EinsteinTensor fast = tti_apply(da, db, dc, phi, x, y);
        oracle_res = std::max(
            oracle_res,
            frobenius_norm(subtract(fast, tti_apply_naive(da, db, dc, phi, x, y))));
        const double lo = std::min({da.eigenvalues.minCoeff(), db.eigenvalues.minCoeff(),
                                    dc.eigenvalues.minCoeff()});
        const double hi = std::max({da.eigenvalues.maxCoeff(), db.eigenvalues.maxCoeff(),
                                    dc.eigenvalues.maxCoeff()});
        const double omega = max_abs_on_grid(phi, lo, hi, 25);
        const NormSpec rho = NormSpec::schatten(2.0);
        const double lhs = norm(fast, rho);
        const double cube = static_cast<double>(shape.dim()) * shape.dim() * shape.dim();
        margin = std::max(margin, lhs - cube * omega * norm(x, rho) * norm(y, rho));
      }
      rec.add("tti_oracle" + tag, oracle_res, 1e-9, cfg.instances);
      rec.add("tti_norm_bound" + tag, std::max(margin, 0.0), 1e-12, cfg.instances);
    }

    // Kernel-sum norm chain and the norm-gauge identities.
    const NormSpec gauges[] = {NormSpec::schatten(1.0), NormSpec::schatten(2.0),
                               NormSpec::kyfan(1), NormSpec::ktrace(1),
                               NormSpec::operator_norm()};
    double chain_margin = 0.0;
    for (int t = 0; t < cfg.instances; ++t) {
      const SpectralDecomposition da = eigh(sample(pd, seed.with_stream(20), 2 * t));
      const SpectralDecomposition db = eigh(sample(pd, seed.with_stream(20), 2 * t + 1));
      const EinsteinTensor x = random_complex_tensor(shape, seed.with_stream(21), t);
      const Kernel psi = Kernel::mean(MeanKind::geometric);
      double abs_sum = 0.0;
      for (int i = 0; i < shape.dim(); ++i)
        for (int jj = 0; jj < shape.dim(); ++jj)
          abs_sum += std::abs(psi(da.eigenvalues(i), db.eigenvalues(jj)));
      const EinsteinTensor t_x = dti_apply(da, db, psi, x);
      for (const NormSpec& rho : gauges) {
        chain_margin = std::max(chain_margin,
                                norm(t_x, rho) - abs_sum * norm(x, rho));
      }
    }
    rec.add("kernel_norm_chain" + tag, std::max(chain_margin, 0.0), 1e-12,
            cfg.instances);

    double reduction_res = 0.0, invariance_res = 0.0;
    for (int t = 0; t < cfg.instances; ++t) {
      const EinsteinTensor x = random_complex_tensor(shape, seed.with_stream(22), t);
      reduction_res = std::max(
          reduction_res, std::abs(norm(x, NormSpec::ktrace(1)) -
                                  norm(x, NormSpec::schatten(1.0))));
      reduction_res = std::max(
          reduction_res, std::abs(norm(x, NormSpec::kyfan(1)) -
                                  norm(x, NormSpec::operator_norm())));
      reduction_res = std::max(
          reduction_res,
          std::abs(norm(x, NormSpec::schatten(2.0)) - frobenius_norm(x)));
      reduction_res = std::max(
          reduction_res, std::abs(norm(x, NormSpec::kyfan(shape.dim())) -
                                  norm(x, NormSpec::schatten(1.0))));
      // Haar-ish unitary from the fixed-spectrum sampler's basis machinery.
      const EnsembleSpec basis_src{
          shape, FixedEigenvaluesSpec{UniformEigenvalues{1.0, 2.0}}};
      const SpectralDecomposition qdec =
          eigh(sample(basis_src, seed.with_stream(23), t));
      const EinsteinTensor u = fold(qdec.basis, shape);
      for (const NormSpec& rho : gauges) {
        invariance_res =
            std::max(invariance_res, verify_unitary_invariance(x, u, rho));
      }
    }
    rec.add("norm_reductions" + tag, reduction_res, 1e-10, cfg.instances);
    rec.add("norm_unitary_invariance" + tag, invariance_res, 1e-10, cfg.instances);
  }
  return report;
}

// --------------------------------------------------------------------------
// Means comparison.

MeansConfig parse_means_config(const nlohmann::json& j) {
  MeansConfig cfg;
  cfg.shape = parse_shape(require_field(j, "", "shape"), "/shape");
  cfg.ensemble_a =
      parse_ensemble(require_field(j, "", "ensemble_a"), cfg.shape, "/ensemble_a");
  cfg.ensemble_b =
      parse_ensemble(require_field(j, "", "ensemble_b"), cfg.shape, "/ensemble_b");
  const nlohmann::json& kinds = require_field(j, "", "kinds");
  if (!kinds.is_array() || kinds.empty()) {
    throw ConfigError("/kinds", "expected a non-empty array");
  }
  for (size_t i = 0; i < kinds.size(); ++i) {
    const std::string path = sub("/kinds", std::to_string(i));
    const auto& k = kinds[i];
    if (k.is_string()) {
      const std::string name = k.get<std::string>();
      if (name == "arithmetic") cfg.kinds.emplace_back(MeanKind::arithmetic, 0.0);
      else if (name == "geometric") cfg.kinds.emplace_back(MeanKind::geometric, 0.0);
      else if (name == "harmonic") cfg.kinds.emplace_back(MeanKind::harmonic, 0.0);
      else throw ConfigError(path, fmt::format("unknown mean kind '{}'", name));
    } else if (k.is_object()) {
      const std::string name = as_string(require_field(k, path, "kind"), sub(path, "kind"));
      if (name != "general") {
        throw ConfigError(sub(path, "kind"), "object form is only for 'general'");
      }
      cfg.kinds.emplace_back(MeanKind::general,
                             as_double(require_field(k, path, "alpha"), sub(path, "alpha")));
    } else {
      throw ConfigError(path, "expected a string or {kind, alpha} object");
    }
  }
  if (j.contains("theta")) cfg.theta = as_double(j["theta"], "/theta");
  if (!(cfg.theta > 0.0)) throw ConfigError("/theta", "must be positive");
  if (j.contains("norm")) cfg.norm = parse_norm(j["norm"], "/norm");
  if (j.contains("x")) {
    cfg.x = build_fixed_tensor(j["x"], cfg.shape, "/x");
  } else {
    cfg.x = EinsteinTensor::identity(cfg.shape);
  }
  if (j.contains("samples")) cfg.n_samples = as_int(j["samples"], "/samples");
  if (cfg.n_samples < 1) throw ConfigError("/samples", "must be >= 1");
  if (j.contains("seed")) cfg.seed.master_seed = as_u64(j["seed"], "/seed");
  if (j.contains("ratio_truncation")) {
    cfg.ratio_truncation = as_int(j["ratio_truncation"], "/ratio_truncation");
    if (cfg.ratio_truncation < 0) throw ConfigError("/ratio_truncation", "must be >= 0");
  }
  return cfg;
}

bool MeansReport::all_consistent() const {
  if (rows.empty()) return false;
  return std::all_of(rows.begin(), rows.end(),
                     [](const MeansRow& r) { return r.consistent; });
}

MeansReport run_means(const MeansConfig& cfg) {
  MeansReport report;
  report.theta = cfg.theta;
  report.norm_x = norm(cfg.x, cfg.norm);
  const int d = cfg.shape.dim();
  for (const auto& [kind, alpha] : cfg.kinds) {
    const MeanCorollaryResult res =
        mean_corollary_bound(kind, alpha, cfg.ensemble_a, cfg.ensemble_b, cfg.theta,
                             report.norm_x, cfg.n_samples, cfg.seed,
                             cfg.ratio_truncation);
    MeansRow row;
    row.kind = mean_kind_name(kind);
    row.alpha = alpha;
    row.corollary_bound = res.bound;
    row.direct_bound = theorem1_bound(cfg.theta, report.norm_x, res.direct.estimate, d);
    row.direct_std_error = res.direct.std_error;
    row.series_pairs = res.series_pairs;
    row.fallback_pairs = res.fallback_pairs;
    // Corollary must not undercut the direct estimate beyond Monte Carlo slack.
    const double slack =
        static_cast<double>(d) * d * report.norm_x *
        (6.0 * res.direct.std_error + 1e-12) / cfg.theta;
    row.consistent = row.corollary_bound >= row.direct_bound - slack;
    report.rows.push_back(row);
  }
  return report;
}

// --------------------------------------------------------------------------
// Ratio series.

RatioConfig parse_ratio_config(const nlohmann::json& j) {
  RatioConfig cfg;
  if (j.contains("truncation")) {
    cfg.truncation = as_int(j["truncation"], "/truncation");
    if (cfg.truncation < 0) throw ConfigError("/truncation", "must be >= 0");
  }
  if (j.contains("x") || j.contains("y")) {
    cfg.x = as_double_array(require_field(j, "", "x"), "/x");
    cfg.y = as_double_array(require_field(j, "", "y"), "/y");
    if (cfg.x.size() != cfg.y.size() || cfg.x.empty()) {
      throw ConfigError("/y", "x and y must be equal-length non-empty arrays");
    }
    return cfg;
  }
  const nlohmann::json& gen = require_field(j, "", "generator");
  const std::string kind =
      as_string(require_field(gen, "/generator", "kind"), "/generator/kind");
  if (kind == "two_point_exhaustive") {
    const std::vector<double> values =
        as_double_array(require_field(gen, "/generator", "values"), "/generator/values");
    if (values.size() < 2) {
      throw ConfigError("/generator/values", "need at least two support points");
    }
    cfg.x = values;
    cfg.y = values;
    return cfg;
  }
  if (kind == "uniform_independent") {
    const int n = as_int(require_field(gen, "/generator", "n"), "/generator/n");
    if (n < 1) throw ConfigError("/generator/n", "must be >= 1");
    const auto [xlo, xhi] =
        parse_window(require_field(gen, "/generator", "x_range"), "/generator/x_range");
    const auto [ylo, yhi] =
        parse_window(require_field(gen, "/generator", "y_range"), "/generator/y_range");
    const std::uint64_t s =
        as_u64(require_field(gen, "/generator", "seed"), "/generator/seed");
    RandomStream xr(SeedSpec{s, 31}, 0);
    RandomStream yr(SeedSpec{s, 32}, 0);
    cfg.x.resize(n);
    cfg.y.resize(n);
    for (int t = 0; t < n; ++t) {
      cfg.x[t] = xlo + (xhi - xlo) * xr.uniform();
      cfg.y[t] = ylo + (yhi - ylo) * yr.uniform();
    }
    return cfg;
  }
  throw ConfigError("/generator/kind", fmt::format("unknown generator '{}'", kind));
}

RatioReport run_ratio(const RatioConfig& cfg) {
  RatioReport report;
  report.series = expectation_ratio_series(cfg.x, cfg.y, cfg.truncation);
  report.n_samples = static_cast<int>(cfg.x.size());
  return report;
}

// --------------------------------------------------------------------------
// Serialization.

nlohmann::json tail_report_json(const TailExperimentReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const TailRow& r : report.rows) {
    rows.push_back({{"theta", r.theta},
                    {"p_hat", r.p_hat},
                    {"ci_lo", r.ci_lo},
                    {"ci_hi", r.ci_hi},
                    {"bound", r.bound},
                    {"bound_clipped", r.bound_clipped},
                    {"verdict", verdict_name(r.verdict)}});
  }
  return {{"statistic", report.statistic_name},
          {"n_samples", report.n_samples},
          {"n_failed_samples", report.n_failed_samples},
          {"confidence", report.confidence},
          {"seed", report.master_seed},
          {"expectation", {{"estimate", report.expectation_value},
                           {"std_error", report.expectation_std_error}}},
          {"rows", rows},
          {"all_pass", report.all_pass()},
          {"config_hash", fmt::format("{:016x}", report.config_hash)},
          {"runtime_seconds", report.runtime_seconds}};
}

std::string tail_report_csv(const TailExperimentReport& report) {
  std::string csv = "theta,p_hat,ci_lo,ci_hi,bound,verdict\n";
  for (const TailRow& r : report.rows) {
    csv += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{}\n", r.theta,
                       r.p_hat, r.ci_lo, r.ci_hi, r.bound, verdict_name(r.verdict));
  }
  return csv;
}

nlohmann::json verify_report_json(const VerifyReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const VerifyCheck& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"residual", c.residual},
                      {"tolerance", c.tolerance},
                      {"instances", c.instances},
                      {"pass", c.pass}});
  }
  return {{"checks", checks}, {"all_pass", report.all_pass()}};
}

nlohmann::json means_report_json(const MeansReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const MeansRow& r : report.rows) {
    rows.push_back({{"kind", r.kind},
                    {"alpha", r.alpha},
                    {"corollary_bound", r.corollary_bound},
                    {"direct_bound", r.direct_bound},
                    {"direct_std_error", r.direct_std_error},
                    {"series_pairs", r.series_pairs},
                    {"fallback_pairs", r.fallback_pairs},
                    {"consistent", r.consistent}});
  }
  return {{"theta", report.theta},
          {"norm_x", report.norm_x},
          {"rows", rows},
          {"all_consistent", report.all_consistent()}};
}

nlohmann::json ratio_report_json(const RatioReport& report) {
  return {{"truncation", report.series.truncation},
          {"partial_sums", report.series.partial_sums},
          {"y_centered_moments", report.series.y_centered_moments},
          {"xy_moments", report.series.xy_moments},
          {"mean_x", report.series.mean_x},
          {"mean_y", report.series.mean_y},
          {"brute_force_reference", report.series.brute_force_reference},
          {"n_samples", report.n_samples}};
}

}  // namespace dti
