#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace uie::util {

/// Trim leading/trailing whitespace and collapse internal runs to one space.
std::string normalize_ws(std::string_view s);

std::string lower_ascii(std::string_view s);

bool iequals_ascii(std::string_view a, std::string_view b);

/// Lowercased tokens; ASCII alphanumerics and non-ASCII bytes are token
/// characters, everything else separates. No stemming, no stopword removal.
std::vector<std::string> tokenize(std::string_view s);

std::uint64_t fnv1a64(std::string_view s);

std::string hex64(std::uint64_t v);

/// mt19937_64 with hand-rolled draws so results do not depend on the
/// standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    /// Unbiased integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);

    /// Double in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 eng_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

std::string replace_all(std::string text, std::string_view from, std::string_view to);

} // namespace uie::util
