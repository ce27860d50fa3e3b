#pragma once

// One-sided CUSUM accumulator with tolerance q and trigger threshold e,
// shared by both estimators to switch between stable and changed regimes.

#include "wifiload/errors.hpp"

namespace wifiload {

struct CusumState {
    double g = 0.0;        // accumulated statistic
    double tolerance;      // q: expected statistic level in the stable regime
    double threshold;      // e: trigger level
    bool triggered = false;  // whether the current step is a trigger

    CusumState(double q, double e) : tolerance(q), threshold(e) {
        if (!(q > 0.0)) throw ConfigError("cusum: tolerance q must be > 0");
        if (!(e > 0.0)) throw ConfigError("cusum: threshold e must be > 0");
    }

    // One step: if the previous g was <= e, accumulate
    // g' = max(0, g + stat - q); otherwise (previous step exceeded the
    // threshold) restart from the drift alone, g' = stat - q. The step
    // triggers when g' reaches the threshold.
    void update(double stat) {
        if (g <= threshold) {
            g = g + stat - tolerance;
            if (g < 0.0) g = 0.0;
        } else {
            g = stat - tolerance;
        }
        triggered = g >= threshold;
    }
};

}  // namespace wifiload
