#pragma once

// Plain-text snapshot format:
//   L J lambda h
//   L rows of L characters from {-, 0, +}, top row (y = L) first.

#include <iosfwd>
#include <string>

#include "bcm/model.hpp"

namespace bcm {

struct Snapshot {
    int L = 0;
    double J = 0;
    double lambda = 0;
    double h = 0;
    SpinConfiguration config;

    bool operator==(const Snapshot&) const = default;
};

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

void write_snapshot(std::ostream& os, const SpinConfiguration& eta, const Parameters& p);
std::string snapshot_string(const SpinConfiguration& eta, const Parameters& p);

/// Throws std::runtime_error on malformed input.
Snapshot read_snapshot(std::istream& is);
Snapshot read_snapshot_file(const std::string& path);
void write_snapshot_file(const std::string& path, const SpinConfiguration& eta,
                         const Parameters& p);

}  // namespace bcm
