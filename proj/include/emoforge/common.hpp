#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace emoforge {

// Error categories map 1:1 onto the CLI exit codes.
enum class ErrKind { usage = 1, data = 2, training = 3, io = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrKind kind() const { return kind_; }
    int exit_code() const { return static_cast<int>(kind_); }

private:
    ErrKind kind_;
};

inline Error usage_error(const std::string& m) { return Error(ErrKind::usage, m); }
inline Error data_error(const std::string& m) { return Error(ErrKind::data, m); }
inline Error training_error(const std::string& m) { return Error(ErrKind::training, m); }
inline Error io_error(const std::string& m) { return Error(ErrKind::io, m); }

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a master seed and a stream index.
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
    return splitmix64(master ^ splitmix64(stream + 0x632be59bd9b4e019ull));
}

// Deterministic RNG. All draws use explicit algorithms on top of the
// standardized mt19937_64 stream, so results never depend on the standard
// library's distribution implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // Uniform in [0,1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n > 0. Rejection sampling, bias-free.
    uint64_t uniform_int(uint64_t n) {
        if (n == 0) throw training_error("uniform_int: empty range");
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller with cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// In-place Fisher-Yates shuffle with our own index draws.
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
    if (v.size() < 2) return;
    for (size_t i = v.size() - 1; i > 0; --i) {
        size_t j = static_cast<size_t>(rng.uniform_int(i + 1));
        std::swap(v[i], v[j]);
    }
}

inline uint64_t fnv1a64(std::string_view bytes) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint32_t fnv1a32(std::string_view bytes) {
    uint32_t h = 0x811c9dc5u;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

}  // namespace emoforge
