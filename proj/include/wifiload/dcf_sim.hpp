#pragma once

// Slot-level simulation of n saturated WiFi stations running CSMA/CA with
// binary exponential backoff, plus windowed channel observation.

#include <cstdint>
#include <random>
#include <vector>

#include "wifiload/bianchi.hpp"

namespace wifiload {

enum class SubframeOutcome { Idle, Success, Collision };

// How the observer turns one window of sub-frame counts into p_hat.
enum class MeasurementMode {
    BusyFraction,    // (k_busy + k_coll) / k_all       (default)
    CollisionShare,  // k_coll / max(1, k_busy + k_coll)
    PerTxCollision,  // collided transmissions / total transmissions
};

struct StationState {
    int stage = 0;    // backoff stage, in [0, m]
    int counter = 0;  // remaining backoff slots, in [0, G*2^stage - 1]
};

// One observation window.
struct Measurement {
    std::int64_t k_busy = 0;  // successful-transmission sub-frames
    std::int64_t k_coll = 0;  // collision sub-frames
    std::int64_t k_all = 0;   // total sub-frames observed
    double p_hat = 0.0;       // per-mode collision-probability measurement
    double n_hat = 1.0;       // f(clamp(p_hat))
    double elapsed_us = 0.0;  // modeled window duration
};

struct LoadSegment {
    int users = 1;
    std::int64_t duration_slots = 1;
};

struct LoadSchedule {
    std::vector<LoadSegment> segments;

    void validate() const;  // non-empty, users >= 1, durations > 0
    std::int64_t total_slots() const;
};

// A measurement tagged with its decision-slot index and the true user count.
struct TaggedMeasurement {
    std::int64_t slot = 0;
    int n_true = 0;
    Measurement meas;
};

class DcfSimulator {
  public:
    // Throws ConfigError for n_stations < 1 or invalid params.
    DcfSimulator(int n_stations, std::uint64_t seed, ProtocolParams params);

    // Advances one sub-frame: stations with counter 0 transmit; exactly one
    // transmitter is a Success (reset to stage 0), two or more a Collision
    // (stage <- min(stage+1, m)); with no transmitter the slot is Idle and
    // every counter decrements. Counters freeze during busy sub-frames.
    SubframeOutcome step_subframe();

    // Number of stations that transmitted in the most recent sub-frame.
    int last_transmitter_count() const { return last_tx_count_; }

    // Advances k_all sub-frames and aggregates them into one Measurement.
    Measurement observe_window(std::int64_t k_all,
                               MeasurementMode mode = MeasurementMode::BusyFraction);

    // Adds fresh stage-0 stations or removes existing ones uniformly at
    // random until the count matches. Throws ConfigError for n < 1.
    void set_station_count(int n);

    int station_count() const { return static_cast<int>(stations_.size()); }
    const std::vector<StationState>& stations() const { return stations_; }
    const ProtocolParams& params() const { return params_; }

    // Conditional collision statistics of station 0 ("tagged" station),
    // meaningful while membership is fixed.
    std::uint64_t tagged_transmissions() const { return tagged_tx_; }
    std::uint64_t tagged_collisions() const { return tagged_coll_; }

  private:
    int draw_counter(int stage);

    ProtocolParams params_;
    std::mt19937_64 rng_;
    std::vector<StationState> stations_;
    std::vector<int> tx_buf_;
    int last_tx_count_ = 0;
    std::uint64_t tagged_tx_ = 0;
    std::uint64_t tagged_coll_ = 0;
};

// Runs a full schedule: one simulator seeded once, segment membership changes
// applied at boundaries, one Measurement per decision slot.
std::vector<TaggedMeasurement> run_schedule(
    const LoadSchedule& schedule, std::int64_t k_all, std::uint64_t seed,
    const ProtocolParams& params,
    MeasurementMode mode = MeasurementMode::BusyFraction);

}  // namespace wifiload
