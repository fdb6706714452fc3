#ifndef CALIBREX_RNG_HPP
#define CALIBREX_RNG_HPP

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace calibrex {

/// Seedable generator with explicit, serializable state.
///
/// Distributions are derived from raw engine words here rather than through
/// <random> distribution objects, so a draw consumes a fixed number of engine
/// steps and the serialized engine state fully determines the future stream.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    /// Derive an independent stream from a root seed and a purpose label.
    /// This is the project-wide splitting rule: root seed, then stream id.
    static Rng stream(std::uint64_t root_seed, std::string_view purpose);

    std::uint64_t next_u64();

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal();

    /// Fisher-Yates permutation of {0, ..., n-1}.
    std::vector<int> permutation(int n);

    std::string save_state() const;
    void restore_state(const std::string& state);

  private:
    std::mt19937_64 engine_;
};

/// Named streams hanging off one root seed; streams are created on first use
/// and their states can be captured/restored for run resumption.
class RngBank {
  public:
    RngBank() = default;
    explicit RngBank(std::uint64_t root_seed) : root_(root_seed) {}

    std::uint64_t root() const { return root_; }
    Rng& stream(const std::string& purpose);

    std::map<std::string, std::string> save_states() const;
    void restore_states(std::uint64_t root_seed,
                        const std::map<std::string, std::string>& states);

  private:
    std::uint64_t root_ = 0;
    std::map<std::string, Rng> streams_;
};

}  // namespace calibrex

#endif
