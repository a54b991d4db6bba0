#include "vlm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vlm {

namespace {

std::int64_t product(const std::vector<int> &shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        // Zero is allowed: MLA with d_rope = 0 carries empty rotary weights.
        if (d < 0)
            throw std::invalid_argument("tensor dimensions must be non-negative");
        n *= d;
    }
    return n;
}

} // namespace

Tensor::Tensor(std::vector<int> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    if (product(shape) != static_cast<std::int64_t>(data.size()))
        throw std::invalid_argument("tensor data length does not match shape");
}

Tensor Tensor::zeros(std::vector<int> shape) {
    std::int64_t n = product(shape);
    return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0));
}

Tensor Tensor::full(std::vector<int> shape, double value) {
    std::int64_t n = product(shape);
    return Tensor(std::move(shape), std::vector<double>(static_cast<std::size_t>(n), value));
}

Tensor Tensor::identity(int n) {
    Tensor t = zeros({n, n});
    for (int i = 0; i < n; ++i)
        t.at(i, i) = 1.0;
    return t;
}

std::int64_t Tensor::numel() const { return static_cast<std::int64_t>(data.size()); }

double &Tensor::at(int i, int j) {
    return data[static_cast<std::size_t>(i) * static_cast<std::size_t>(shape[1]) +
                static_cast<std::size_t>(j)];
}

double Tensor::at(int i, int j) const {
    return data[static_cast<std::size_t>(i) * static_cast<std::size_t>(shape[1]) +
                static_cast<std::size_t>(j)];
}

double &Tensor::at(int i, int j, int k) {
    std::size_t s1 = static_cast<std::size_t>(shape[1]);
    std::size_t s2 = static_cast<std::size_t>(shape[2]);
    return data[(static_cast<std::size_t>(i) * s1 + static_cast<std::size_t>(j)) * s2 +
                static_cast<std::size_t>(k)];
}

double Tensor::at(int i, int j, int k) const {
    std::size_t s1 = static_cast<std::size_t>(shape[1]);
    std::size_t s2 = static_cast<std::size_t>(shape[2]);
    return data[(static_cast<std::size_t>(i) * s1 + static_cast<std::size_t>(j)) * s2 +
                static_cast<std::size_t>(k)];
}

Tensor matmul(const Tensor &a, const Tensor &b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw std::invalid_argument("matmul expects rank-2 tensors");
    if (a.dim(1) != b.dim(0))
        throw std::invalid_argument("matmul inner dimensions do not match");
    int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor c = Tensor::zeros({m, n});
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p)
                acc += a.at(i, p) * b.at(p, j);
            c.at(i, j) = acc;
        }
    }
    return c;
}

Tensor softmax(const Tensor &x) {
    if (x.rank() != 1 || x.numel() < 1)
        throw std::invalid_argument("softmax expects a nonempty 1-D tensor");
    double mx = *std::max_element(x.data.begin(), x.data.end());
    Tensor y = Tensor::zeros({x.dim(0)});
    double sum = 0.0;
    for (std::int64_t i = 0; i < x.numel(); ++i) {
        y[i] = std::exp(x[i] - mx);
        sum += y[i];
    }
    for (std::int64_t i = 0; i < y.numel(); ++i)
        y[i] /= sum;
    return y;
}

Tensor rms_norm(const Tensor &x, const Tensor &gain, double eps) {
    if (!x.same_shape(gain))
        throw std::invalid_argument("rms_norm gain shape must match x");
    if (eps <= 0.0)
        throw std::invalid_argument("rms_norm eps must be positive");
    double ms = 0.0;
    for (double v : x.data)
        ms += v * v;
    ms /= static_cast<double>(x.numel());
    double inv = 1.0 / std::sqrt(ms + eps);
    Tensor y = x;
    for (std::int64_t i = 0; i < y.numel(); ++i)
        y[i] = gain[i] * x[i] * inv;
    return y;
}

namespace {

std::uint64_t splitmix64(std::uint64_t &s) {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

} // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto &w : state_)
        w = splitmix64(s);
}

std::uint64_t Rng::next_u64() {
    std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal(double mean, double stddev) {
    // Box-Muller; u clamped away from 0 so log stays finite.
    double u = uniform();
    if (u < 1e-300)
        u = 1e-300;
    double v = uniform();
    double r = std::sqrt(-2.0 * std::log(u));
    return mean + stddev * r * std::cos(2.0 * M_PI * v);
}

int Rng::uniform_int(int lo, int hi) {
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
}

Tensor Rng::normal_tensor(std::vector<int> shape, double stddev) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto &v : t.data)
        v = normal(0.0, stddev);
    return t;
}

double grad_check(const ScalarFn &f, const Tensor &x, double h) {
    std::vector<std::int64_t> coords(static_cast<std::size_t>(x.numel()));
    for (std::int64_t i = 0; i < x.numel(); ++i)
        coords[static_cast<std::size_t>(i)] = i;
    return grad_check(f, x, h, coords);
}

double grad_check(const ScalarFn &f, const Tensor &x, double h,
                  const std::vector<std::int64_t> &coords) {
    if (h < 1e-7 || h > 1e-3)
        throw std::invalid_argument("grad_check step h must lie in [1e-7, 1e-3]");
    Tensor analytic = Tensor::zeros(x.shape);
    f(x, &analytic);
    Tensor xp = x;
    double max_err = 0.0;
    for (std::int64_t i : coords) {
        double orig = xp[i];
        xp[i] = orig + h;
        double fp = f(xp, nullptr);
        xp[i] = orig - h;
        double fm = f(xp, nullptr);
        xp[i] = orig;
        double numeric = (fp - fm) / (2.0 * h);
        double a = analytic[i];
        double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
        max_err = std::max(max_err, std::fabs(a - numeric) / denom);
    }
    return max_err;
}

} // namespace vlm
