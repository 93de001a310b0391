#include "runpred/table_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace runpred {

using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

void write_table_tsv(const PerformanceTable& table, std::ostream& out) {
    for (std::size_t c = 0; c < table.cols(); ++c) {
        if (c) out << '\t';
        out << table.catalog()[c].label;
    }
    out << '\n';
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t c = 0; c < table.cols(); ++c) {
            if (c) out << '\t';
            if (auto v = table.value(r, c)) out << format_double(*v);
        }
        out << '\n';
    }
}

void write_table_meta(const PerformanceTable& table, std::ostream& out,
                      const std::map<std::string, std::string>& provenance) {
    json meta;
    if (!provenance.empty()) {
        json prov = json::object();
        for (const auto& [k, v] : provenance) prov[k] = v;
        meta["provenance"] = prov;
    }
    meta["parameterization"] = to_string(table.parameterization());
    json catalog = json::array();
    for (const auto& ev : table.catalog().events()) {
        catalog.push_back({{"label", ev.label}, {"distance_m", ev.distance_m}});
    }
    meta["catalog"] = catalog;

    json athletes = json::array();
    for (std::size_t r = 0; r < table.rows(); ++r) {
        const auto& m = table.meta(r);
        json a;
        a["id"] = m.id;
        a["gender"] = to_string(m.gender);
        if (m.birth_date) a["birth_date"] = format_date(*m.birth_date);
        athletes.push_back(a);
    }
    meta["athletes"] = athletes;

    // Dates per present entry, row-major; null for missing or undated.
    json dates = json::array();
    for (std::size_t r = 0; r < table.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < table.cols(); ++c) {
            const auto& cl = table.cell(r, c);
            if (cl && cl->date) {
                row.push_back(format_date(*cl->date));
            } else {
                row.push_back(nullptr);
            }
        }
        dates.push_back(row);
    }
    meta["dates"] = dates;

    if (!table.normalization_means().empty()) {
        meta["normalization_means"] = table.normalization_means();
    }
    out << meta.dump(2) << '\n';
}

void save_table(const PerformanceTable& table, const std::string& prefix,
                const std::map<std::string, std::string>& provenance) {
    {
        std::ofstream tsv(prefix + ".tsv");
        if (!tsv) throw DataError("cannot write " + prefix + ".tsv");
        write_table_tsv(table, tsv);
    }
    {
        std::ofstream meta(prefix + ".meta.json");
        if (!meta) throw DataError("cannot write " + prefix + ".meta.json");
        write_table_meta(table, meta, provenance);
    }
}

PerformanceTable read_table(std::istream& tsv, std::istream& meta_in) {
    json meta = json::parse(meta_in);

    std::vector<Event> events;
    for (const auto& ev : meta.at("catalog")) {
        events.push_back({ev.at("label").get<std::string>(), ev.at("distance_m").get<double>()});
    }
    EventCatalog catalog(std::move(events));

    const auto& athletes = meta.at("athletes");
    PerformanceTable table(catalog, athletes.size());
    for (std::size_t r = 0; r < athletes.size(); ++r) {
        auto& m = table.meta(r);
        m.id = athletes[r].at("id").get<std::int64_t>();
        m.gender = gender_from_string(athletes[r].at("gender").get<std::string>());
        if (athletes[r].contains("birth_date")) {
            m.birth_date = parse_date(athletes[r].at("birth_date").get<std::string>());
        }
    }

    std::string line;
    if (!std::getline(tsv, line)) throw DataError("table TSV is empty");
    // Header — validated against the catalog.
    {
        std::stringstream ss(line);
        std::string label;
        std::size_t c = 0;
        while (std::getline(ss, label, '\t')) {
            if (c >= catalog.size() || label != catalog[c].label) {
                throw DataError("table TSV header does not match catalog");
            }
            ++c;
        }
        if (c != catalog.size()) throw DataError("table TSV header does not match catalog");
    }

    const auto& dates = meta.at("dates");
    std::size_t r = 0;
    while (std::getline(tsv, line)) {
        if (r >= table.rows()) throw DataError("table TSV has more rows than metadata");
        std::size_t c = 0;
        std::size_t pos = 0;
        while (c < catalog.size()) {
            std::size_t tab = line.find('\t', pos);
            std::string cell = line.substr(pos, tab == std::string::npos ? tab : tab - pos);
            if (!cell.empty()) {
                double v = 0.0;
                auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
                if (ec != std::errc() || p != cell.data() + cell.size()) {
                    throw DataError("bad numeric cell in TSV row " + std::to_string(r + 1));
                }
                std::optional<Date> date;
                const auto& dj = dates.at(r).at(c);
                if (!dj.is_null()) date = parse_date(dj.get<std::string>());
                table.set(r, c, v, date);
            }
            if (tab == std::string::npos) {
                ++c;
                break;
            }
            pos = tab + 1;
            ++c;
        }
        ++r;
    }
    if (r != table.rows()) throw DataError("table TSV has fewer rows than metadata");

    table.set_parameterization(
        parameterization_from_string(meta.at("parameterization").get<std::string>()));
    if (meta.contains("normalization_means")) {
        table.set_normalization_means(meta.at("normalization_means").get<std::vector<double>>());
    }
    return table;
}

PerformanceTable load_table(const std::string& prefix) {
    std::ifstream tsv(prefix + ".tsv");
    if (!tsv) throw DataError("cannot open " + prefix + ".tsv");
    std::ifstream meta(prefix + ".meta.json");
    if (!meta) throw DataError("cannot open " + prefix + ".meta.json");
    return read_table(tsv, meta);
}

}  // namespace runpred
