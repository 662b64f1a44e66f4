#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dgline {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Error categories. Everything derives from std::runtime_error (or
// std::invalid_argument) so callers can catch broadly at the CLI boundary.
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CapabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AssemblyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {
inline std::atomic<unsigned>& thread_count_ref() {
    static std::atomic<unsigned> n{1};
    return n;
}
} // namespace detail

/// Number of worker threads used by element loops and matrix-vector products.
inline unsigned thread_count() { return detail::thread_count_ref().load(); }
inline void set_thread_count(unsigned n) { detail::thread_count_ref().store(std::max(1u, n)); }

/// Runs fn(begin, end) over contiguous chunks of [0, n). Chunks write to
/// disjoint outputs, so results do not depend on the thread count.
template <typename Fn>
void parallel_for_chunks(std::size_t n, Fn&& fn) {
    const unsigned nt = std::min<std::size_t>(thread_count(), std::max<std::size_t>(n / 256, 1));
    if (nt <= 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::jthread> workers;
    workers.reserve(nt - 1);
    const std::size_t chunk = (n + nt - 1) / nt;
    for (unsigned t = 1; t < nt; ++t) {
        const std::size_t b = std::min(n, t * chunk);
        const std::size_t e = std::min(n, b + chunk);
        workers.emplace_back([&fn, b, e] { fn(b, e); });
    }
    fn(std::size_t{0}, std::min(n, chunk));
}

} // namespace dgline
