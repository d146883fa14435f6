#include "wntf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

#include "wntf/kernels.hpp"

namespace wntf {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

DataTensor::DataTensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_.size() < 2) throw std::invalid_argument("DataTensor: order must be >= 2");
  for (std::size_t e : shape_)
    if (e == 0) throw std::invalid_argument("DataTensor: extents must be positive");
  if (values_.size() != element_count(shape_))
    throw std::invalid_argument("DataTensor: value count " + std::to_string(values_.size()) +
                                " does not match shape (" +
                                std::to_string(element_count(shape_)) + ")");
  for (double v : values_)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("DataTensor: entries must be finite and nonnegative");
}

DataTensor DataTensor::filled(Shape shape, double value) {
  const std::size_t n = element_count(shape);
  return DataTensor(std::move(shape), std::vector<double>(n, value));
}

double DataTensor::at(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) throw std::invalid_argument("DataTensor::at: bad index order");
  std::size_t linear = 0;
  std::size_t stride = 1;
  for (std::size_t m = 0; m < shape_.size(); ++m) {
    if (index[m] >= shape_[m]) throw std::out_of_range("DataTensor::at: index out of range");
    linear += index[m] * stride;
    stride *= shape_[m];
  }
  return values_[linear];
}

double DataTensor::max() const { return *std::max_element(values_.begin(), values_.end()); }

double DataTensor::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

DataTensor DataTensor::scaled(double factor) const {
  std::vector<double> out(values_.size());
  std::transform(values_.begin(), values_.end(), out.begin(),
                 [factor](double v) { return v * factor; });
  return DataTensor(shape_, std::move(out));
}

KruskalFactors::KruskalFactors(std::vector<Matrix> factors) : factors_(std::move(factors)) {
  if (factors_.size() < 2) throw std::invalid_argument("KruskalFactors: need at least 2 factors");
  const Eigen::Index rank = factors_.front().cols();
  if (rank < 1) throw std::invalid_argument("KruskalFactors: rank must be >= 1");
  for (const Matrix& f : factors_) {
    if (f.cols() != rank) throw std::invalid_argument("KruskalFactors: factors disagree on rank");
    if (f.rows() < 1) throw std::invalid_argument("KruskalFactors: empty factor");
    if (!f.allFinite() || (f.array() < 0.0).any())
      throw std::invalid_argument("KruskalFactors: entries must be finite and nonnegative");
  }
}

Shape KruskalFactors::shape() const {
  Shape s;
  for (const Matrix& f : factors_) s.push_back(static_cast<std::size_t>(f.rows()));
  return s;
}

void KruskalFactors::set_factor(std::size_t mode, Matrix value) {
  Matrix& slot = factors_.at(mode);
  if (value.rows() != slot.rows() || value.cols() != slot.cols())
    throw std::invalid_argument("KruskalFactors::set_factor: shape mismatch");
  slot = std::move(value);
}

namespace {

void check_mode(std::size_t mode, std::size_t order) {
  if (mode >= order)
    throw std::out_of_range("mode " + std::to_string(mode) + " out of range for order " +
                            std::to_string(order));
}

}  // namespace

Matrix matricize(const DataTensor& t, std::size_t mode) {
  check_mode(mode, t.order());
  Matrix out;
  kernels::parallel::unfold(t.values(), t.shape(), mode, out);
  return out;
}

DataTensor refold(const Matrix& m, const Shape& shape, std::size_t mode) {
  check_mode(mode, shape.size());
  const std::size_t total = element_count(shape);
  if (static_cast<std::size_t>(m.rows()) != shape[mode] ||
      static_cast<std::size_t>(m.size()) != total)
    throw std::invalid_argument("refold: matrix dimensions do not match shape and mode");
  std::vector<double> values(total);
  kernels::parallel::fold(m, shape, mode, values);
  return DataTensor(shape, std::move(values));
}

Matrix khatri_rao(std::span<const Matrix* const> mats) {
  if (mats.empty()) throw std::invalid_argument("khatri_rao: no inputs");
  const Eigen::Index rank = mats.front()->cols();
  for (const Matrix* m : mats)
    if (m->cols() != rank) throw std::invalid_argument("khatri_rao: mismatched column counts");
  Matrix out = *mats.front();
  for (std::size_t k = 1; k < mats.size(); ++k) {
    const Matrix& next = *mats[k];
    Matrix grown(out.rows() * next.rows(), rank);
    for (Eigen::Index r = 0; r < rank; ++r)
      for (Eigen::Index a = 0; a < out.rows(); ++a)
        grown.col(r).segment(a * next.rows(), next.rows()) = out(a, r) * next.col(r);
    out = std::move(grown);
  }
  return out;
}

Matrix khatri_rao(std::span<const Matrix> mats) {
  std::vector<const Matrix*> ptrs;
  for (const Matrix& m : mats) ptrs.push_back(&m);
  return khatri_rao(std::span<const Matrix* const>(ptrs));
}

Matrix coproduct_matrix(const KruskalFactors& f, std::size_t mode) {
  check_mode(mode, f.order());
  std::vector<const Matrix*> ptrs;
  for (std::size_t m = f.order(); m-- > 0;)
    if (m != mode) ptrs.push_back(&f.factor(m));
  return khatri_rao(std::span<const Matrix* const>(ptrs));
}

Matrix reconstruct_unfolded(const KruskalFactors& f, std::size_t mode) {
  const Matrix coproduct = coproduct_matrix(f, mode);
  Matrix out;
  kernels::parallel::product_transpose(f.factor(mode), coproduct, out);
  return out;
}

DataTensor reconstruct(const KruskalFactors& f) {
  return refold(reconstruct_unfolded(f, 0), f.shape(), 0);
}

}  // namespace wntf
