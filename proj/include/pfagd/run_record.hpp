#pragma once

#include <string>
#include <vector>

#include "pfagd/oracle.hpp"

namespace pfagd {

enum class EventTag { NcDetected, NcExploited, Restart, MIncrease, QIncrease };

inline const char* to_string(EventTag tag) {
    switch (tag) {
        case EventTag::NcDetected: return "NC_detected";
        case EventTag::NcExploited: return "NC_exploited";
        case EventTag::Restart: return "Restart";
        case EventTag::MIncrease: return "M_increase";
        case EventTag::QIncrease: return "Q_increase";
    }
    return "unknown";
}

enum class Terminal { Converged, Budget, Error };

inline const char* to_string(Terminal t) {
    switch (t) {
        case Terminal::Converged: return "Converged";
        case Terminal::Budget: return "Budget";
        case Terminal::Error: return "Error";
    }
    return "unknown";
}

struct Sample {
    long grad_calls = 0;
    double f = 0.0;
    double grad_norm = 0.0;
};

struct Event {
    long grad_calls = 0;
    EventTag tag = EventTag::NcDetected;
};

// One solver run: trajectory sampled against the gradient-call counter,
// tagged events, and the terminal status.
struct RunRecord {
    std::string method;
    long seed = 0;
    std::vector<Sample> samples;
    std::vector<Event> events;
    Terminal terminal = Terminal::Budget;
    long total_grad_calls = 0;
};

// Binds a RunRecord to the counting oracle of the run. Keeps samples strictly
// increasing in grad_calls by replacing a same-count tail entry.
class RunRecorder {
public:
    RunRecorder(RunRecord& record, const CountingOracle& oracle) : record_(&record), oracle_(&oracle) {}

    void sample(double f, double grad_norm) {
        const long calls = oracle_->grad_calls();
        if (!record_->samples.empty() && record_->samples.back().grad_calls == calls) {
            record_->samples.back() = {calls, f, grad_norm};
        } else {
            record_->samples.push_back({calls, f, grad_norm});
        }
    }

    void event(EventTag tag) { record_->events.push_back({oracle_->grad_calls(), tag}); }

    void finish(Terminal terminal) {
        record_->terminal = terminal;
        record_->total_grad_calls = oracle_->grad_calls();
    }

private:
    RunRecord* record_;
    const CountingOracle* oracle_;
};

}  // namespace pfagd
