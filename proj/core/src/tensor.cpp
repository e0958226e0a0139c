#include "dti/tensor.hpp"

#include <fstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

namespace dti {

TensorShape::TensorShape(std::vector<int> modes) : modes_(std::move(modes)) {
  if (modes_.empty()) {
    throw std::invalid_argument("TensorShape: mode list must be non-empty");
  }
  dim_ = 1;
  for (int m : modes_) {
    if (m < 1) {
      throw std::invalid_argument(
          fmt::format("TensorShape: every mode must be >= 1, got {}", m));
    }
    dim_ *= m;
  }
}

int TensorShape::flatten(const std::vector<int>& idx) const {
  if (idx.size() != modes_.size()) {
    throw std::invalid_argument(
        fmt::format("TensorShape::flatten: index has {} entries, shape has {} modes",
                    idx.size(), modes_.size()));
  }
  int flat = 0;
  for (size_t k = 0; k < modes_.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= modes_[k]) {
      throw std::out_of_range(
          fmt::format("TensorShape::flatten: index {} out of range for mode {} (size {})",
                      idx[k], k, modes_[k]));
    }
    flat = flat * modes_[k] + idx[k];
  }
  return flat;
}

std::vector<int> TensorShape::unflatten(int flat) const {
  if (flat < 0 || flat >= dim_) {
    throw std::out_of_range(
        fmt::format("TensorShape::unflatten: {} out of range for dim {}", flat, dim_));
  }
  std::vector<int> idx(modes_.size());
  for (size_t k = modes_.size(); k-- > 0;) {
    idx[k] = flat % modes_[k];
    flat /= modes_[k];
  }
  return idx;
}

std::string TensorShape::to_string() const {
  std::string s = "[";
  for (size_t k = 0; k < modes_.size(); ++k) {
    s += (k ? "," : "") + std::to_string(modes_[k]);
  }
  return s + "]";
}

EinsteinTensor::EinsteinTensor(TensorShape shape, Matrix unfolded)
    : shape_(std::move(shape)), mat_(std::move(unfolded)) {
  if (mat_.rows() != shape_.dim() || mat_.cols() != shape_.dim()) {
    throw std::invalid_argument(
        fmt::format("EinsteinTensor: unfolded matrix is {}x{}, shape {} needs {}x{}",
                    mat_.rows(), mat_.cols(), shape_.to_string(), shape_.dim(),
                    shape_.dim()));
  }
}

EinsteinTensor EinsteinTensor::zero(const TensorShape& shape) {
  return EinsteinTensor(shape, Matrix::Zero(shape.dim(), shape.dim()));
}

EinsteinTensor EinsteinTensor::identity(const TensorShape& shape) {
  return EinsteinTensor(shape, Matrix::Identity(shape.dim(), shape.dim()));
}

Complex EinsteinTensor::at(const std::vector<int>& row_idx,
                           const std::vector<int>& col_idx) const {
  return mat_(shape_.flatten(row_idx), shape_.flatten(col_idx));
}

void EinsteinTensor::set(const std::vector<int>& row_idx,
                         const std::vector<int>& col_idx, Complex v) {
  mat_(shape_.flatten(row_idx), shape_.flatten(col_idx)) = v;
}

double EinsteinTensor::max_abs_entry() const {
  return mat_.size() == 0 ? 0.0 : mat_.cwiseAbs().maxCoeff();
}

double EinsteinTensor::hermiticity_error() const {
  return (mat_ - mat_.adjoint()).cwiseAbs().maxCoeff();
}

namespace {

void require_same_shape(const EinsteinTensor& x, const EinsteinTensor& y,
                        const char* op) {
  if (x.shape() != y.shape()) {
    throw std::invalid_argument(fmt::format("{}: shape mismatch {} vs {}", op,
                                            x.shape().to_string(),
                                            y.shape().to_string()));
  }
}

}  // namespace

EinsteinTensor add(const EinsteinTensor& x, const EinsteinTensor& y) {
  require_same_shape(x, y, "add");
  return EinsteinTensor(x.shape(), x.unfolded() + y.unfolded());
}

EinsteinTensor subtract(const EinsteinTensor& x, const EinsteinTensor& y) {
  require_same_shape(x, y, "subtract");
  return EinsteinTensor(x.shape(), x.unfolded() - y.unfolded());
}

EinsteinTensor scale(Complex a, const EinsteinTensor& x) {
  return EinsteinTensor(x.shape(), a * x.unfolded());
}

EinsteinTensor einstein_product(const EinsteinTensor& x, const EinsteinTensor& y) {
  require_same_shape(x, y, "einstein_product");
  return EinsteinTensor(x.shape(), x.unfolded() * y.unfolded());
}

EinsteinTensor adjoint(const EinsteinTensor& x) {
  return EinsteinTensor(x.shape(), x.unfolded().adjoint());
}

Matrix unfold(const EinsteinTensor& x) { return x.unfolded(); }

EinsteinTensor fold(const Matrix& m, const TensorShape& shape) {
  if (m.rows() != shape.dim() || m.cols() != shape.dim()) {
    throw std::invalid_argument(
        fmt::format("fold: matrix is {}x{} but shape {} needs side {}", m.rows(),
                    m.cols(), shape.to_string(), shape.dim()));
  }
  return EinsteinTensor(shape, m);
}

bool is_hermitian(const EinsteinTensor& x, double tol) {
  if (tol < 0.0) tol = 1e-10 * (1.0 + x.max_abs_entry());
  return x.hermiticity_error() <= tol;
}

double frobenius_norm(const EinsteinTensor& x) { return x.unfolded().norm(); }

EinsteinTensor load_tensor(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error(fmt::format("load_tensor: cannot open '{}'", path));
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(
        fmt::format("load_tensor: '{}' is not valid JSON: {}", path, e.what()));
  }
  if (!j.is_object() || !j.contains("modes") || !j.contains("entries")) {
    throw std::runtime_error(fmt::format(
        "load_tensor: '{}' must be an object with 'modes' and 'entries'", path));
  }
  std::vector<int> modes;
  try {
    modes = j.at("modes").get<std::vector<int>>();
  } catch (const nlohmann::json::exception&) {
    throw std::runtime_error(
        fmt::format("load_tensor: '{}': 'modes' must be an integer array", path));
  }
  const TensorShape shape = [&] {
    try {
      return TensorShape(modes);
    } catch (const std::exception& e) {
      throw std::runtime_error(
          fmt::format("load_tensor: '{}': {}", path, e.what()));
    }
  }();
  const auto& entries = j.at("entries");
  const int d = shape.dim();
  if (!entries.is_array() || static_cast<int>(entries.size()) != d * d) {
    throw std::runtime_error(fmt::format(
        "load_tensor: '{}': 'entries' must hold {} [re, im] pairs, found {}", path,
        d * d, entries.size()));
  }
  Matrix m(d, d);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      const auto& e = entries[static_cast<size_t>(r) * d + c];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
        throw std::runtime_error(fmt::format(
            "load_tensor: '{}': entry {} is not an [re, im] number pair", path,
            static_cast<size_t>(r) * d + c));
      }
      m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  }
  return EinsteinTensor(shape, std::move(m));
}

void save_tensor(const EinsteinTensor& x, const std::string& path) {
  nlohmann::json j;
  j["modes"] = x.shape().modes();
  nlohmann::json entries = nlohmann::json::array();
  const int d = x.dim();
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      const Complex v = x.unfolded()(r, c);
      entries.push_back({v.real(), v.imag()});
    }
  }
  j["entries"] = std::move(entries);
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error(fmt::format("save_tensor: cannot write '{}'", path));
  }
  out << j.dump(2) << "\n";
}

}  // namespace dti
