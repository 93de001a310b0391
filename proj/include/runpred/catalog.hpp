#pragma once

#include <optional>
#include <string>
#include <vector>

namespace runpred {

struct Event {
    std::string label;
    double distance_m = 0.0;
};

// Ordered list of running events. Distances are strictly increasing.
class EventCatalog {
public:
    EventCatalog() = default;
    explicit EventCatalog(std::vector<Event> events);

    // The ten standard events, 100m through Marathon.
    static EventCatalog standard();

    std::size_t size() const { return events_.size(); }
    const Event& operator[](std::size_t i) const { return events_[i]; }
    const std::vector<Event>& events() const { return events_; }

    std::optional<std::size_t> index_of(const std::string& label) const;
    double distance(std::size_t i) const { return events_[i].distance_m; }

    bool operator==(const EventCatalog&) const = default;

private:
    std::vector<Event> events_;
};

}  // namespace runpred
