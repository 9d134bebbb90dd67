#pragma once

#include <optional>
#include <vector>

namespace trichome::linalg {

/// Dense row-major matrix, sized for the handful of small systems the
/// library solves (9x9 DLT normal matrix, p x p OLS normal equations).
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    double& operator()(int r, int c) { return data_[r * cols_ + c]; }
    double operator()(int r, int c) const { return data_[r * cols_ + c]; }

    static Matrix identity(int n);

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

Matrix transpose(const Matrix& a);
Matrix multiply(const Matrix& a, const Matrix& b);

/// Solves A x = b by Gaussian elimination with partial pivoting. Returns
/// nullopt when a pivot falls below rel_tol times the largest |A| entry.
std::optional<std::vector<double>> solve(Matrix a, std::vector<double> b, double rel_tol = 1e-12);

struct SymmetricEigen {
    std::vector<double> values;  // ascending
    Matrix vectors;              // column j pairs with values[j]
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
SymmetricEigen eigen_symmetric(Matrix a);

}  // namespace trichome::linalg
