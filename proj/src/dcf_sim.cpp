#include "wifiload/dcf_sim.hpp"

#include <string>

#include "wifiload/errors.hpp"

namespace wifiload {

void LoadSchedule::validate() const {
    if (segments.empty()) throw ConfigError("schedule must not be empty");
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (segments[i].users < 1)
            throw ConfigError("schedule segment " + std::to_string(i) +
                              ": users must be >= 1");
        if (segments[i].duration_slots <= 0)
            throw ConfigError("schedule segment " + std::to_string(i) +
                              ": duration_slots must be > 0");
    }
}

std::int64_t LoadSchedule::total_slots() const {
    std::int64_t total = 0;
    for (const auto& s : segments) total += s.duration_slots;
    return total;
}

DcfSimulator::DcfSimulator(int n_stations, std::uint64_t seed,
                           ProtocolParams params)
    : params_(params), rng_(seed) {
    params_.validate();
    if (n_stations < 1)
        throw ConfigError("simulator needs at least one station, got " +
                          std::to_string(n_stations));
    stations_.reserve(static_cast<std::size_t>(n_stations));
    for (int i = 0; i < n_stations; ++i)
        stations_.push_back(StationState{0, draw_counter(0)});
}

int DcfSimulator::draw_counter(int stage) {
    int window = params_.cw_min << stage;
    return std::uniform_int_distribution<int>(0, window - 1)(rng_);
}

SubframeOutcome DcfSimulator::step_subframe() {
    tx_buf_.clear();
    for (std::size_t i = 0; i < stations_.size(); ++i)
        if (stations_[i].counter == 0) tx_buf_.push_back(static_cast<int>(i));
    last_tx_count_ = static_cast<int>(tx_buf_.size());

    if (tx_buf_.empty()) {
        for (auto& st : stations_) --st.counter;
        return SubframeOutcome::Idle;
    }
    if (tx_buf_.size() == 1) {
        auto& st = stations_[static_cast<std::size_t>(tx_buf_[0])];
        st.stage = 0;
        st.counter = draw_counter(0);
        if (tx_buf_[0] == 0) ++tagged_tx_;
        return SubframeOutcome::Success;
    }
    for (int idx : tx_buf_) {
        auto& st = stations_[static_cast<std::size_t>(idx)];
        if (st.stage < params_.max_stage) ++st.stage;
        st.counter = draw_counter(st.stage);
        if (idx == 0) {
            ++tagged_tx_;
            ++tagged_coll_;
        }
    }
    return SubframeOutcome::Collision;
}

Measurement DcfSimulator::observe_window(std::int64_t k_all,
                                         MeasurementMode mode) {
    if (k_all < 1) throw ConfigError("observe_window: k_all must be >= 1");
    Measurement m;
    m.k_all = k_all;
    std::int64_t tx_total = 0;
    std::int64_t tx_collided = 0;
    for (std::int64_t k = 0; k < k_all; ++k) {
        switch (step_subframe()) {
            case SubframeOutcome::Idle:
                break;
            case SubframeOutcome::Success:
                ++m.k_busy;
                tx_total += 1;
                break;
            case SubframeOutcome::Collision:
                ++m.k_coll;
                tx_total += last_tx_count_;
                tx_collided += last_tx_count_;
                break;
        }
    }
    switch (mode) {
        case MeasurementMode::BusyFraction:
            m.p_hat = static_cast<double>(m.k_busy + m.k_coll) /
                      static_cast<double>(k_all);
            break;
        case MeasurementMode::CollisionShare:
            m.p_hat = static_cast<double>(m.k_coll) /
                      static_cast<double>(std::max<std::int64_t>(
                          1, m.k_busy + m.k_coll));
            break;
        case MeasurementMode::PerTxCollision:
            m.p_hat = static_cast<double>(tx_collided) /
                      static_cast<double>(std::max<std::int64_t>(1, tx_total));
            break;
    }
    m.n_hat = users_of_p_clamped(m.p_hat, params_);
    std::int64_t k_idle = k_all - m.k_busy - m.k_coll;
    m.elapsed_us = static_cast<double>(m.k_busy) * params_.t_success_us +
                   static_cast<double>(m.k_coll) * params_.t_collision_us +
                   static_cast<double>(k_idle) * params_.t_idle_us;
    return m;
}

void DcfSimulator::set_station_count(int n) {
    if (n < 1)
        throw ConfigError("set_station_count: need at least one station");
    while (static_cast<int>(stations_.size()) > n) {
        auto idx = std::uniform_int_distribution<std::size_t>(
            0, stations_.size() - 1)(rng_);
        stations_.erase(stations_.begin() + static_cast<std::ptrdiff_t>(idx));
    }
    while (static_cast<int>(stations_.size()) < n)
        stations_.push_back(StationState{0, draw_counter(0)});
}

std::vector<TaggedMeasurement> run_schedule(const LoadSchedule& schedule,
                                            std::int64_t k_all,
                                            std::uint64_t seed,
                                            const ProtocolParams& params,
                                            MeasurementMode mode) {
    schedule.validate();
    if (k_all < 1) throw ConfigError("run_schedule: k_all must be >= 1");
    std::vector<TaggedMeasurement> out;
    out.reserve(static_cast<std::size_t>(schedule.total_slots()));
    DcfSimulator sim(schedule.segments.front().users, seed, params);
    std::int64_t slot = 0;
    bool first = true;
    for (const auto& seg : schedule.segments) {
        if (!first) sim.set_station_count(seg.users);
        first = false;
        for (std::int64_t s = 0; s < seg.duration_slots; ++s, ++slot)
            out.push_back(TaggedMeasurement{slot, seg.users,
                                            sim.observe_window(k_all, mode)});
    }
    return out;
}

}  // namespace wifiload
