#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace lampsde {

/// Uniform grid t_k = k dt, k = 0..n_steps, with n_steps = ceil(T / dt).
struct GridSpec {
    double horizon = 1.0;
    double dt = 1.0;
    std::size_t n_steps = 1;

    static GridSpec make(double horizon, double dt);
    double time(std::size_t k) const { return static_cast<double>(k) * dt; }
    bool operator==(const GridSpec&) const = default;
};

struct SeedId {
    std::uint64_t stream = 0;
    std::uint64_t path = 0;
    bool operator==(const SeedId&) const = default;
};

/// Philox4x32 with 10 rounds: a keyed bijection on 128-bit counters.
class Philox4x32 {
public:
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Block generate(Block counter, Key key);
};

/// Uniform in the open interval (0, 1) for draw `index` of (stream, path).
double counter_uniform(SeedId seed, std::uint64_t index);

/// Standard normal quantile.
double normal_quantile(double u);

/// Increments of a Brownian path on a uniform grid. Each increment also has an
/// exact fixed-point representation so that coarsening is exact summation.
class BrownianPath {
public:
    __extension__ typedef __int128 Fixed;

    BrownianPath(GridSpec grid, SeedId seed, std::vector<Fixed> exact);
    /// Path from explicit increments (rounded to the fixed-point lattice).
    static BrownianPath from_increments(GridSpec grid, const std::vector<double>& increments, SeedId seed = {});

    const GridSpec& grid() const { return grid_; }
    const SeedId& seed() const { return seed_; }
    const std::vector<double>& increments() const { return increments_; }
    const std::vector<Fixed>& exact() const { return exact_; }
    std::size_t size() const { return increments_.size(); }
    double operator[](std::size_t k) const { return increments_[k]; }

    /// Exact W(T) - W(0), rounded once.
    double total() const;

    static Fixed to_fixed(double v);
    static double to_double(Fixed v);

private:
    GridSpec grid_;
    SeedId seed_;
    std::vector<Fixed> exact_;
    std::vector<double> increments_;
};

/// Deterministic in (grid, seed); independent of evaluation order.
BrownianPath sample_path(const GridSpec& grid, SeedId seed);

/// Coarse increment j is the exact sum of fine increments j*factor .. (j+1)*factor - 1.
/// Throws std::invalid_argument unless factor >= 2 divides the step count.
BrownianPath coarsen(const BrownianPath& path, std::size_t factor);

// Increment dumps for external verification. Binary layout (little-endian):
// "LSDW" u32 version=1, f64 T, f64 dt, u64 n, u64 stream, u64 path, n x f64.
void write_increments_binary(const BrownianPath& path, const std::filesystem::path& file);
BrownianPath read_increments_binary(const std::filesystem::path& file);
void write_increments_csv(const BrownianPath& path, const std::filesystem::path& file);

}  // namespace lampsde
