#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "fsqd/errors.hpp"

namespace fsqd {

// A computational-basis label: one '0'/'1' character per site, site 1 leftmost.
// Site 1 is the most significant bit of the basis-state integer.
using Bitstring = std::string;

// Sorted map so that every iteration over counts is deterministic.
using SampleCounts = std::map<Bitstring, std::int64_t>;

inline void validate_bitstring(const Bitstring& x, long n) {
    if (static_cast<long>(x.size()) != n)
        throw validation_error("bitstring length " + std::to_string(x.size()) +
                               " does not match site count " + std::to_string(n));
    for (char c : x)
        if (c != '0' && c != '1') throw validation_error("bitstring may contain only 0/1");
}

inline Bitstring zero_bitstring(long n) { return Bitstring(static_cast<std::size_t>(n), '0'); }

inline std::uint64_t bitstring_to_index(const Bitstring& x) {
    if (x.size() > 63) throw validation_error("bitstring too long for integer index");
    std::uint64_t v = 0;
    for (char c : x) v = (v << 1) | static_cast<std::uint64_t>(c == '1');
    return v;
}

inline Bitstring index_to_bitstring(std::uint64_t idx, long n) {
    Bitstring x(static_cast<std::size_t>(n), '0');
    for (long i = n - 1; i >= 0; --i) {
        if (idx & 1ULL) x[static_cast<std::size_t>(i)] = '1';
        idx >>= 1;
    }
    return x;
}

[[nodiscard]] inline SampleCounts merge_counts(const SampleCounts& a, const SampleCounts& b) {
    SampleCounts out = a;
    for (const auto& [k, v] : b) out[k] += v;
    return out;
}

}  // namespace fsqd
