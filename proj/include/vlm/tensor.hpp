#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace vlm {

// Dense row-major double tensor. Shapes are small (rank <= 3 in practice),
// data is always contiguous.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<int> shape_, std::vector<double> data_);

    static Tensor zeros(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, double value);
    static Tensor identity(int n);

    std::int64_t numel() const;
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    int rank() const { return static_cast<int>(shape.size()); }

    double &operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

    double &at(int i, int j);
    double at(int i, int j) const;
    double &at(int i, int j, int k);
    double at(int i, int j, int k) const;

    bool same_shape(const Tensor &other) const { return shape == other.shape; }
};

// C = A @ B with row-major, left-to-right accumulation.
Tensor matmul(const Tensor &a, const Tensor &b);

// Numerically stable softmax over a 1-D tensor.
Tensor softmax(const Tensor &x);

// y_i = gain_i * x_i / sqrt(mean(x^2) + eps)
Tensor rms_norm(const Tensor &x, const Tensor &gain, double eps);

// xoshiro256** with splitmix64 seeding; identical stream on every platform
// for a given seed.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);
    double normal(double mean = 0.0, double stddev = 1.0);
    int uniform_int(int lo, int hi);        // inclusive bounds

    Tensor normal_tensor(std::vector<int> shape, double stddev);

  private:
    std::uint64_t state_[4];
};

// f evaluates a scalar and, when grad != nullptr, writes the analytic
// gradient wrt x into *grad (same shape as x).
using ScalarFn = std::function<double(const Tensor &x, Tensor *grad)>;

// Max relative error between the analytic gradient and central finite
// differences, denominator max(|a|, |b|, 1e-8). Checks every coordinate.
double grad_check(const ScalarFn &f, const Tensor &x, double h);

// Same, restricted to a subset of coordinates (for large parameter vectors).
double grad_check(const ScalarFn &f, const Tensor &x, double h,
                  const std::vector<std::int64_t> &coords);

} // namespace vlm
