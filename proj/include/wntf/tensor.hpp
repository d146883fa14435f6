#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace wntf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);

// Dense N-way nonnegative array (N >= 2). Values are stored column-major:
// the first index varies fastest. Modes are 0-based throughout the library.
class DataTensor {
 public:
  DataTensor(Shape shape, std::vector<double> values);

  static DataTensor filled(Shape shape, double value);

  const Shape& shape() const { return shape_; }
  std::size_t order() const { return shape_.size(); }
  std::size_t extent(std::size_t mode) const { return shape_.at(mode); }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  double operator[](std::size_t linear) const { return values_[linear]; }
  double at(std::span<const std::size_t> index) const;

  double max() const;
  double sum() const;
  DataTensor scaled(double factor) const;

  friend bool operator==(const DataTensor&, const DataTensor&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

// Rank-R CP model: factor n has shape I_n x R, all entries >= 0.
class KruskalFactors {
 public:
  explicit KruskalFactors(std::vector<Matrix> factors);

  std::size_t rank() const { return static_cast<std::size_t>(factors_.front().cols()); }
  std::size_t order() const { return factors_.size(); }
  Shape shape() const;

  const Matrix& factor(std::size_t mode) const { return factors_.at(mode); }
  const std::vector<Matrix>& factors() const { return factors_; }

  // Replaces one factor. Shape must match the current factor.
  void set_factor(std::size_t mode, Matrix value);

 private:
  std::vector<Matrix> factors_;
};

// Mode-n unfolding: column j holds the mode-n fiber whose remaining indices,
// enumerated with the lowest remaining mode fastest, give j.
Matrix matricize(const DataTensor& t, std::size_t mode);

// Inverse of matricize.
DataTensor refold(const Matrix& m, const Shape& shape, std::size_t mode);

// Column-wise Kronecker product; row index of the last matrix varies fastest.
Matrix khatri_rao(std::span<const Matrix> mats);
Matrix khatri_rao(std::span<const Matrix* const> mats);

// Khatri-Rao of every factor but `mode`, ordered so that
//   matricize(reconstruct(f), mode) == f.factor(mode) * coproduct_matrix(f, mode)^T.
// Under the column-major unfolding this is A(N-1) (.) ... (.) A(n+1) (.) A(n-1) (.) ... (.) A(0).
Matrix coproduct_matrix(const KruskalFactors& f, std::size_t mode);

DataTensor reconstruct(const KruskalFactors& f);

// matricize(reconstruct(f), mode) without materializing the tensor first.
Matrix reconstruct_unfolded(const KruskalFactors& f, std::size_t mode);

}  // namespace wntf
