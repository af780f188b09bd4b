#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace lwg {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file (JSON, tensor container, PNG).
class ParseError : public Error {
public:
    using Error::Error;
};

// Input that parsed but violates a data invariant.
class InvariantError : public Error {
public:
    using Error::Error;
};

// Operands whose shapes or lengths do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

// A dense H x W plane, row-major so that (i, j) addresses row i, column j.
template <typename T>
using Plane = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Points3 = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;

using FaceIndices = Eigen::Matrix<int32_t, Eigen::Dynamic, 3, Eigen::RowMajor>;

using Mask = Plane<bool>;

// Normalized image coordinates: (-1, -1) is the top-left corner of the image,
// x grows to the right and y grows downward. Pixel (i, j) has its center at
// ((2j + 1) / W - 1, (2i + 1) / H - 1).
inline double pixel_center_x(int j, int width) { return (2.0 * j + 1.0) / width - 1.0; }
inline double pixel_center_y(int i, int height) { return (2.0 * i + 1.0) / height - 1.0; }

// Inverse of pixel_center_*: continuous pixel index of a normalized coordinate.
inline double to_pixel_x(double x, int width) { return ((x + 1.0) * width - 1.0) * 0.5; }
inline double to_pixel_y(double y, int height) { return ((y + 1.0) * height - 1.0) * 0.5; }

// Number of worker threads. Reads LWF_THREADS (0 or unset = hardware concurrency).
int thread_count();

// Runs body(begin, end) over contiguous chunks of [0, n). Chunks are disjoint so
// callers that write only inside their chunk stay deterministic.
void parallel_for(int n, const std::function<void(int, int)>& body);

}  // namespace lwg
