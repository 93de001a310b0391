#include <istream>

#include <json.hpp>

#include "runpred/ingest.hpp"

namespace runpred {

namespace {

WorldRecords build_default_records() {
    // Men's outdoor record progression, approximate era boundaries. Editable
    // copy ships as data/world_records.json.
    WorldRecords wr;
    wr["100m"] = {{{1968, 10, 14}, 9.95}, {{1991, 8, 25}, 9.86}, {{1999, 6, 16}, 9.79},
                  {{2008, 8, 16}, 9.69},  {{2009, 8, 16}, 9.58}};
    wr["200m"] = {{{1968, 10, 16}, 19.83}, {{1979, 9, 12}, 19.72}, {{1996, 8, 1}, 19.32},
                  {{2009, 8, 20}, 19.19}};
    wr["400m"] = {{{1968, 10, 18}, 43.86}, {{1988, 8, 17}, 43.29}, {{1999, 8, 26}, 43.18},
                  {{2016, 8, 14}, 43.03}};
    wr["800m"] = {{{1981, 6, 10}, 101.73}, {{1997, 7, 7}, 101.11}, {{2012, 8, 9}, 100.91}};
    wr["1500m"] = {{{1985, 7, 16}, 209.46}, {{1995, 7, 12}, 207.37}, {{1998, 7, 14}, 206.00}};
    wr["Mile"] = {{{1981, 8, 28}, 227.33}, {{1993, 9, 5}, 224.39}, {{1999, 7, 7}, 223.13}};
    wr["5000m"] = {{{1987, 7, 22}, 778.39}, {{1995, 6, 8}, 764.39}, {{1998, 6, 13}, 759.36},
                   {{2004, 5, 31}, 757.35}, {{2020, 8, 14}, 755.36}};
    wr["10000m"] = {{{1989, 8, 18}, 1628.23}, {{1995, 6, 5}, 1598.08}, {{1998, 6, 1}, 1582.75},
                    {{2005, 8, 26}, 1577.53}, {{2020, 10, 7}, 1571.00}};
    wr["HM"] = {{{1993, 4, 3}, 3600.0}, {{2010, 3, 21}, 3503.0}, {{2020, 12, 6}, 3451.0}};
    wr["Marathon"] = {{{1988, 4, 17}, 7610.0}, {{2003, 9, 28}, 7495.0}, {{2014, 9, 28}, 7377.0},
                      {{2018, 9, 16}, 7299.0}, {{2023, 10, 8}, 7235.0}};
    return wr;
}

}  // namespace

const WorldRecords& default_world_records() {
    static const WorldRecords wr = build_default_records();
    return wr;
}

WorldRecords load_world_records(std::istream& in) {
    nlohmann::json j = nlohmann::json::parse(in);
    WorldRecords wr;
    for (auto& [event, prog] : j.items()) {
        std::vector<RecordEntry> entries;
        for (const auto& e : prog) {
            auto date = parse_date(e.at("date").get<std::string>());
            if (!date) throw DataError("world records: bad date for " + event);
            entries.push_back({*date, e.at("seconds").get<double>()});
        }
        std::sort(entries.begin(), entries.end(),
                  [](const RecordEntry& a, const RecordEntry& b) { return a.effective < b.effective; });
        wr[event] = std::move(entries);
    }
    return wr;
}

}  // namespace runpred
