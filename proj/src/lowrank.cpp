#include "runpred/lowrank.hpp"

#include <cmath>

namespace runpred {

ComponentModel extract_components(const PerformanceTable& table, int r,
                                  bool scale_in_coefficients) {
    const auto n = static_cast<Eigen::Index>(table.rows());
    const auto d = static_cast<Eigen::Index>(table.cols());
    if (r < 1 || r > d) throw DataError("extract_components: rank out of range");

    Eigen::MatrixXd m(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            auto v = table.value(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            if (!v) throw DataError("extract_components: table must be complete");
            m(i, j) = *v;
        }
    }

    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    if (r > s.size() || s(r - 1) <= 1e-12 * s(0)) {
        throw DataError("extract_components: requested rank exceeds matrix rank");
    }

    ComponentModel model;
    model.catalog = table.catalog();
    model.parameterization = table.parameterization();
    model.scale_in_coefficients = scale_in_coefficients;
    model.components.resize(r, d);
    model.singular_values = s.head(r);
    model.coefficients.resize(n, r);

    Eigen::VectorXd log_dist(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        log_dist(j) = std::log(table.catalog().distance(static_cast<std::size_t>(j)));
    }
    const Eigen::VectorXd log_dist_centered = log_dist.array() - log_dist.mean();

    for (int i = 0; i < r; ++i) {
        Eigen::VectorXd f = svd.matrixV().col(i);
        // Sign convention: f_1 slopes upward against log-distance; later
        // components are positive at the longest event (falling back to the
        // next-longest if that value vanishes).
        double ref;
        if (i == 0) {
            ref = f.dot(log_dist_centered);
        } else {
            ref = 0.0;
            for (Eigen::Index j = d - 1; j >= 0; --j) {
                if (std::abs(f(j)) > 1e-12) {
                    ref = f(j);
                    break;
                }
            }
        }
        const double sign = ref < 0.0 ? -1.0 : 1.0;
        model.components.row(i) = sign * f.transpose();
        const double coeff_scale = scale_in_coefficients ? s(i) : 1.0;
        model.coefficients.col(i) = sign * coeff_scale * svd.matrixU().col(i);
    }
    return model;
}

LinearFit individual_exponent_diagnostic(const Eigen::VectorXd& f1, const EventCatalog& catalog) {
    const auto d = f1.size();
    if (static_cast<std::size_t>(d) != catalog.size()) {
        throw DataError("individual_exponent_diagnostic: size mismatch");
    }
    Eigen::VectorXd x(d);
    for (Eigen::Index j = 0; j < d; ++j) x(j) = std::log(catalog.distance(static_cast<std::size_t>(j)));

    const double mx = x.mean(), my = f1.mean();
    const double sxx = (x.array() - mx).square().sum();
    const double sxy = ((x.array() - mx) * (f1.array() - my)).sum();

    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    const double ss_tot = (f1.array() - my).square().sum();
    if (ss_tot == 0.0) {
        fit.r_squared = 0.0;
    } else {
        const double ss_res = (f1.array() - (fit.intercept + fit.slope * x.array())).square().sum();
        fit.r_squared = 1.0 - ss_res / ss_tot;
    }
    return fit;
}

WorldRecordFit fit_world_records(const Eigen::VectorXd& wr_log_times, const ComponentModel& model,
                                 int r) {
    if (r < 1 || r > model.components.rows()) {
        throw DataError("fit_world_records: rank out of range");
    }
    if (wr_log_times.size() != model.components.cols()) {
        throw DataError("fit_world_records: record vector does not match catalog");
    }
    Eigen::MatrixXd basis = model.components.topRows(r).transpose();  // d x r
    WorldRecordFit fit;
    fit.coefficients = basis.colPivHouseholderQr().solve(wr_log_times);
    fit.fitted = basis * fit.coefficients;
    fit.residuals = wr_log_times - fit.fitted;
    fit.residual_norm = fit.residuals.norm();
    return fit;
}

ThreeNumberSummary three_number_summary(const ComponentModel& model, std::size_t athlete_row) {
    if (model.components.rows() < 3) {
        throw DataError("three_number_summary: model rank must be at least 3");
    }
    if (athlete_row >= static_cast<std::size_t>(model.coefficients.rows())) {
        throw DataError("three_number_summary: athlete outside model");
    }
    const auto i = static_cast<Eigen::Index>(athlete_row);
    return ThreeNumberSummary{model.coefficients(i, 0), model.coefficients(i, 1),
                              model.coefficients(i, 2)};
}

double individual_exponent(const ComponentModel& model, std::size_t athlete_row) {
    if (athlete_row >= static_cast<std::size_t>(model.coefficients.rows())) {
        throw DataError("individual_exponent: athlete outside model");
    }
    auto fit = individual_exponent_diagnostic(model.components.row(0).transpose(), model.catalog);
    double lambda1 = model.coefficients(static_cast<Eigen::Index>(athlete_row), 0);
    if (!model.scale_in_coefficients) lambda1 *= model.singular_values(0);
    return lambda1 * fit.slope;
}

}  // namespace runpred
