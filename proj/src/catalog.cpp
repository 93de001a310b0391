#include "runpred/catalog.hpp"

#include <stdexcept>

namespace runpred {

EventCatalog::EventCatalog(std::vector<Event> events) : events_(std::move(events)) {
    for (std::size_t i = 1; i < events_.size(); ++i) {
        if (events_[i].distance_m <= events_[i - 1].distance_m) {
            throw std::invalid_argument("EventCatalog: distances must be strictly increasing");
        }
    }
}

EventCatalog EventCatalog::standard() {
    return EventCatalog({
        {"100m", 100.0},
        {"200m", 200.0},
        {"400m", 400.0},
        {"800m", 800.0},
        {"1500m", 1500.0},
        {"Mile", 1609.344},
        {"5000m", 5000.0},
        {"10000m", 10000.0},
        {"HM", 21097.5},
        {"Marathon", 42195.0},
    });
}

std::optional<std::size_t> EventCatalog::index_of(const std::string& label) const {
    for (std::size_t i = 0; i < events_.size(); ++i) {
        if (events_[i].label == label) return i;
    }
    return std::nullopt;
}

}  // namespace runpred
