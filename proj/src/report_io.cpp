#include "runpred/report_io.hpp"

#include <ostream>

#include <json.hpp>

#include "runpred/table_io.hpp"

namespace runpred {

using nlohmann::json;

namespace {

void write_provenance_comment(const Provenance& prov, std::ostream& out) {
    out << "#";
    for (const auto& [k, v] : prov) out << ' ' << k << '=' << v;
    out << '\n';
}

json provenance_json(const Provenance& prov) {
    json j = json::object();
    for (const auto& [k, v] : prov) j[k] = v;
    return j;
}

}  // namespace

void write_validation_tsv(const ValidationReport& report, const EventCatalog& catalog,
                          const Provenance& prov, std::ostream& out) {
    write_provenance_comment(prov, out);
    out << "method\tscope\tn\trmse\trmse_se\tmae\tmae_se\trel_rmse\trel_mae\tskipped\n";
    out << report.method << "\tall\t" << report.n_evaluated << '\t' << format_double(report.rmse)
        << '\t' << format_double(report.rmse_se) << '\t' << format_double(report.mae) << '\t'
        << format_double(report.mae_se) << '\t' << format_double(report.rel_rmse) << '\t'
        << format_double(report.rel_mae) << '\t' << report.n_skipped << '\n';
    for (const auto& ev : report.per_event) {
        out << report.method << '\t' << catalog[ev.col].label << '\t' << ev.n << '\t'
            << format_double(ev.rmse) << "\t\t" << format_double(ev.mae) << "\t\t\t\t\n";
    }
}

void write_validation_json(const ValidationReport& report, const EventCatalog& catalog,
                           const Provenance& prov, std::ostream& out) {
    json j;
    j["provenance"] = provenance_json(prov);
    j["method"] = report.method;
    j["n_evaluated"] = report.n_evaluated;
    j["n_skipped"] = report.n_skipped;
    j["rmse"] = report.rmse;
    j["rmse_se"] = report.rmse_se;
    j["mae"] = report.mae;
    j["mae_se"] = report.mae_se;
    j["rel_rmse"] = report.rel_rmse;
    j["rel_mae"] = report.rel_mae;
    j["rel_rmse_se"] = report.rel_rmse_se;
    j["rel_mae_se"] = report.rel_mae_se;
    json holdouts = json::array();
    for (const auto& h : report.holdouts) {
        json hj;
        hj["row"] = h.row;
        hj["event"] = catalog[h.col].label;
        if (h.skipped) {
            hj["skipped"] = h.skip_reason;
        } else {
            hj["truth"] = h.truth;
            hj["prediction"] = h.prediction;
        }
        holdouts.push_back(hj);
    }
    j["holdouts"] = holdouts;
    out << j.dump(2) << '\n';
}

void write_comparison_tsv(const MethodComparison& cmp, const Provenance& prov,
                          std::ostream& out) {
    write_provenance_comment(prov, out);
    out << "method\tn\trmse\trmse_se\tmae\tmae_se\trel_rmse\trel_mae\tp_vs_reference\tpaired_n"
           "\tskipped\n";
    for (const auto& cell : cmp.cells) {
        out << cell.method << '\t' << cell.report.n_evaluated << '\t'
            << format_double(cell.report.rmse) << '\t' << format_double(cell.report.rmse_se)
            << '\t' << format_double(cell.report.mae) << '\t' << format_double(cell.report.mae_se)
            << '\t' << format_double(cell.report.rel_rmse) << '\t'
            << format_double(cell.report.rel_mae) << '\t' << format_double(cell.p_vs_reference)
            << '\t' << cell.paired_n << '\t' << cell.report.n_skipped << '\n';
    }
}

void write_comparison_json(const MethodComparison& cmp, const Provenance& prov,
                           std::ostream& out) {
    json j;
    j["provenance"] = provenance_json(prov);
    j["reference"] = cmp.cells[cmp.reference].method;
    json holdouts = json::array();
    for (const auto& h : cmp.holdouts) holdouts.push_back({h.row, h.col});
    j["holdouts"] = holdouts;
    json cells = json::array();
    for (const auto& cell : cmp.cells) {
        json cj;
        cj["method"] = cell.method;
        cj["rmse"] = cell.report.rmse;
        cj["rmse_se"] = cell.report.rmse_se;
        cj["mae"] = cell.report.mae;
        cj["mae_se"] = cell.report.mae_se;
        cj["rel_rmse"] = cell.report.rel_rmse;
        cj["rel_mae"] = cell.report.rel_mae;
        cj["p_vs_reference"] = cell.p_vs_reference;
        cj["paired_n"] = cell.paired_n;
        cj["n_skipped"] = cell.report.n_skipped;
        json residuals = json::array();
        for (const auto& h : cell.report.holdouts) {
            if (h.skipped) {
                residuals.push_back(nullptr);
            } else {
                residuals.push_back(h.prediction - h.truth);
            }
        }
        cj["residuals"] = residuals;
        cells.push_back(cj);
    }
    j["methods"] = cells;
    out << j.dump(2) << '\n';
}

void write_model_json(const ComponentModel& model, const Provenance& prov, std::ostream& out) {
    json j;
    j["provenance"] = provenance_json(prov);
    j["parameterization"] = to_string(model.parameterization);
    j["scale_in_coefficients"] = model.scale_in_coefficients;
    json catalog = json::array();
    for (const auto& ev : model.catalog.events()) {
        catalog.push_back({{"label", ev.label}, {"distance_m", ev.distance_m}});
    }
    j["catalog"] = catalog;
    json components = json::array();
    for (Eigen::Index i = 0; i < model.components.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index c = 0; c < model.components.cols(); ++c) {
            row.push_back(model.components(i, c));
        }
        components.push_back(row);
    }
    j["components"] = components;
    json singular = json::array();
    for (Eigen::Index i = 0; i < model.singular_values.size(); ++i) {
        singular.push_back(model.singular_values(i));
    }
    j["singular_values"] = singular;
    json coeff = json::array();
    for (Eigen::Index r = 0; r < model.coefficients.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index i = 0; i < model.coefficients.cols(); ++i) {
            row.push_back(model.coefficients(r, i));
        }
        coeff.push_back(row);
    }
    j["coefficients"] = coeff;
    out << j.dump(2) << '\n';
}

void write_impute_report_json(const ImputeReport& report, const Provenance& prov,
                              std::ostream& out) {
    json j;
    j["provenance"] = provenance_json(prov);
    j["n_imputed"] = report.n_imputed;
    j["n_column_mean"] = report.n_column_mean;
    j["imputed_per_rank"] = report.imputed_per_rank;
    json entries = json::array();
    for (const auto& e : report.entries) {
        entries.push_back({{"row", e.row},
                           {"col", e.col},
                           {"rank_used", e.rank_used},
                           {"column_mean", e.column_mean_fallback}});
    }
    j["entries"] = entries;
    out << j.dump(2) << '\n';
}

void write_pivot_tsv(const PivotResult& result, const EventCatalog& catalog,
                     const Provenance& prov, std::ostream& out) {
    write_provenance_comment(prov, out);
    out << "lower\tpivot\tupper\tepsilon\trel_change\n";
    for (const auto& triple : result.triples) {
        for (std::size_t e = 0; e < result.epsilons.size(); ++e) {
            out << catalog[triple.lower].label << '\t' << catalog[triple.pivot].label << '\t'
                << catalog[triple.upper].label << '\t' << format_double(result.epsilons[e])
                << '\t' << format_double(triple.rel_change[e]) << '\n';
        }
    }
}

}  // namespace runpred
