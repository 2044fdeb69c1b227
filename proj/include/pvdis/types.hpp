#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>

namespace pvdis {

// Dense storage is row-major so that serialized buffers and in-memory
// layout agree without copies.
template <typename Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// All model arithmetic runs in 64-bit reals; finite-difference gradient
// checks rely on that precision.
using Matrix = MatrixT<double>;
using Vector = VectorT<double>;
using Index = Eigen::Index;

// Half-hour slots per day.
inline constexpr Index kSlotsPerDay = 48;

} // namespace pvdis
