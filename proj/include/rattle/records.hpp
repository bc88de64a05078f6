#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace rattle {

inline constexpr double kNever = std::numeric_limits<double>::infinity();

/// Switching moment of lattice node n; kNever if it did not switch.
struct SwitchRecord {
    long n = 0;
    double t_switch = kNever;

    bool switched() const noexcept { return std::isfinite(t_switch); }
};

/// Switch records together with the horizon they were observed over.
struct SwitchLog {
    std::vector<SwitchRecord> records;
    double horizon = 0.0;

    const SwitchRecord* find(long n) const noexcept {
        for (const auto& r : records)
            if (r.n == n) return &r;
        return nullptr;
    }
};

} // namespace rattle
