#include "calibrex/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

namespace calibrex {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

Rng Rng::stream(std::uint64_t root_seed, std::string_view purpose) {
    return Rng(splitmix64(root_seed ^ fnv1a64(purpose)));
}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal() {
    // 1 - u keeps the log argument in (0, 1].
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<int> Rng::permutation(int n) {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
        auto j = static_cast<int>(next_u64() % static_cast<std::uint64_t>(i + 1));
        std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
    }
    return p;
}

std::string Rng::save_state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

void Rng::restore_state(const std::string& state) {
    std::istringstream is(state);
    is >> engine_;
}

Rng& RngBank::stream(const std::string& purpose) {
    auto it = streams_.find(purpose);
    if (it == streams_.end()) {
        it = streams_.emplace(purpose, Rng::stream(root_, purpose)).first;
    }
    return it->second;
}

std::map<std::string, std::string> RngBank::save_states() const {
    std::map<std::string, std::string> out;
    for (const auto& [name, rng] : streams_) out[name] = rng.save_state();
    return out;
}

void RngBank::restore_states(std::uint64_t root_seed,
                             const std::map<std::string, std::string>& states) {
    root_ = root_seed;
    streams_.clear();
    for (const auto& [name, state] : states) {
        Rng r(0);
        r.restore_state(state);
        streams_.emplace(name, std::move(r));
    }
}

}  // namespace calibrex
