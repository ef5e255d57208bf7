#include "lampsde/brownian.hpp"

#include "lampsde/errors.hpp"

#include <bit>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lampsde {

GridSpec GridSpec::make(double horizon, double dt) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be positive and finite");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("step size must be positive and finite");
    double ratio = std::ceil(horizon / dt);
    if (ratio > 1e12) throw ConfigError("grid has too many steps");
    auto n = static_cast<std::size_t>(ratio);
    while (n > 1 && static_cast<double>(n - 1) * dt >= horizon) --n;
    while (static_cast<double>(n) * dt < horizon) ++n;
    return {horizon, dt, n};
}

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(Philox4x32::Block& ctr, const Philox4x32::Key& key) {
    std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

constexpr double kFixedScale = 0x1p96;
constexpr double kFixedLimit = 0x1p30;

}  // namespace

Philox4x32::Block Philox4x32::generate(Block counter, Key key) {
    philox_round(counter, key);
    for (int r = 1; r < 10; ++r) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
        philox_round(counter, key);
    }
    return counter;
}

double counter_uniform(SeedId seed, std::uint64_t index) {
    std::uint64_t block = index >> 1;
    Philox4x32::Block ctr{static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                          static_cast<std::uint32_t>(seed.path), static_cast<std::uint32_t>(seed.path >> 32)};
    Philox4x32::Key key{static_cast<std::uint32_t>(seed.stream), static_cast<std::uint32_t>(seed.stream >> 32)};
    auto out = Philox4x32::generate(ctr, key);
    std::uint64_t bits = (index & 1) ? (static_cast<std::uint64_t>(out[3]) << 32 | out[2])
                                     : (static_cast<std::uint64_t>(out[1]) << 32 | out[0]);
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1p-53;
}

double normal_quantile(double u) {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

BrownianPath::Fixed BrownianPath::to_fixed(double v) {
    if (!(std::abs(v) < kFixedLimit)) throw std::invalid_argument("Brownian increment out of fixed-point range");
    return static_cast<Fixed>(v * kFixedScale);
}

double BrownianPath::to_double(Fixed v) { return static_cast<double>(v) / kFixedScale; }

BrownianPath::BrownianPath(GridSpec grid, SeedId seed, std::vector<Fixed> exact)
    : grid_(grid), seed_(seed), exact_(std::move(exact)) {
    if (exact_.size() != grid_.n_steps) throw std::invalid_argument("increment count does not match the grid");
    increments_.reserve(exact_.size());
    for (Fixed v : exact_) increments_.push_back(to_double(v));
}

BrownianPath BrownianPath::from_increments(GridSpec grid, const std::vector<double>& increments, SeedId seed) {
    std::vector<Fixed> exact;
    exact.reserve(increments.size());
    for (double v : increments) exact.push_back(to_fixed(v));
    return BrownianPath(grid, seed, std::move(exact));
}

double BrownianPath::total() const {
    Fixed acc = 0;
    for (Fixed v : exact_) acc += v;
    return to_double(acc);
}

BrownianPath sample_path(const GridSpec& grid, SeedId seed) {
    double scale = std::sqrt(grid.dt);
    std::vector<BrownianPath::Fixed> exact(grid.n_steps);
    for (std::size_t k = 0; k < grid.n_steps; ++k)
        exact[k] = BrownianPath::to_fixed(scale * normal_quantile(counter_uniform(seed, k)));
    return BrownianPath(grid, seed, std::move(exact));
}

BrownianPath coarsen(const BrownianPath& path, std::size_t factor) {
    const GridSpec& g = path.grid();
    if (factor < 2) throw std::invalid_argument("coarsening factor must be at least 2");
    if (g.n_steps % factor != 0)
        throw std::invalid_argument("coarsening factor " + std::to_string(factor) + " does not divide " +
                                    std::to_string(g.n_steps) + " steps");
    std::size_t n = g.n_steps / factor;
    std::vector<BrownianPath::Fixed> exact(n);
    const auto& fine = path.exact();
    for (std::size_t j = 0; j < n; ++j) {
        BrownianPath::Fixed acc = 0;
        for (std::size_t i = j * factor; i < (j + 1) * factor; ++i) acc += fine[i];
        exact[j] = acc;
    }
    return BrownianPath({g.horizon, g.dt * static_cast<double>(factor), n}, path.seed(), std::move(exact));
}

namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os.write(buf, 8);
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (!is) throw IoError("truncated increment file");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
}

}  // namespace

void write_increments_binary(const BrownianPath& path, const std::filesystem::path& file) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw IoError("cannot open " + file.string() + " for writing");
    os.write("LSDW", 4);
    const std::uint32_t version = 1;
    for (int i = 0; i < 4; ++i) os.put(static_cast<char>((version >> (8 * i)) & 0xFF));
    put_u64(os, std::bit_cast<std::uint64_t>(path.grid().horizon));
    put_u64(os, std::bit_cast<std::uint64_t>(path.grid().dt));
    put_u64(os, path.size());
    put_u64(os, path.seed().stream);
    put_u64(os, path.seed().path);
    for (double v : path.increments()) put_u64(os, std::bit_cast<std::uint64_t>(v));
    if (!os) throw IoError("write failed for " + file.string());
}

BrownianPath read_increments_binary(const std::filesystem::path& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw IoError("cannot open " + file.string());
    char magic[4];
    is.read(magic, 4);
    unsigned char ver[4];
    is.read(reinterpret_cast<char*>(ver), 4);
    if (!is || std::string(magic, 4) != "LSDW") throw IoError(file.string() + " is not an increment dump");
    std::uint32_t version = ver[0] | ver[1] << 8 | ver[2] << 16 | static_cast<std::uint32_t>(ver[3]) << 24;
    if (version != 1) throw IoError("unsupported increment dump version " + std::to_string(version));
    double horizon = std::bit_cast<double>(get_u64(is));
    double dt = std::bit_cast<double>(get_u64(is));
    std::uint64_t n = get_u64(is);
    SeedId seed{get_u64(is), get_u64(is)};
    std::vector<double> inc(n);
    for (auto& v : inc) v = std::bit_cast<double>(get_u64(is));
    return BrownianPath::from_increments({horizon, dt, n}, inc, seed);
}

void write_increments_csv(const BrownianPath& path, const std::filesystem::path& file) {
    std::ofstream os(file);
    if (!os) throw IoError("cannot open " + file.string() + " for writing");
    const auto& g = path.grid();
    os << "# T=" << std::setprecision(17) << g.horizon << " dt=" << g.dt << " n=" << g.n_steps
       << " stream=" << path.seed().stream << " path=" << path.seed().path << '\n';
    os << "k,dw\n";
    for (std::size_t k = 0; k < path.size(); ++k) os << k << ',' << path[k] << '\n';
    if (!os) throw IoError("write failed for " + file.string());
}

}  // namespace lampsde
