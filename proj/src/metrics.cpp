#include "melm/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace melm {

EvaluationReport evaluate_predictions(const std::vector<std::uint32_t>& truth,
                                      const std::vector<std::uint32_t>& predicted,
                                      std::vector<std::string> class_names) {
    if (truth.size() != predicted.size()) {
        throw std::invalid_argument("evaluate: truth and prediction counts differ");
    }
    if (truth.empty()) throw std::invalid_argument("evaluate: empty test set");

    EvaluationReport report;
    report.class_names = std::move(class_names);
    const std::size_t m = report.class_names.size();
    report.confusion.assign(m * m, 0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= m || predicted[i] >= m) {
            throw std::invalid_argument("evaluate: label index out of range");
        }
        ++report.confusion[truth[i] * m + predicted[i]];
    }
    report.total = truth.size();

    std::size_t diag_sum = 0;
    report.recall.assign(m, 0.0);
    report.precision.assign(m, 0.0);
    report.f1.assign(m, 0.0);
    for (std::size_t c = 0; c < m; ++c) {
        std::size_t row_sum = 0, col_sum = 0;
        for (std::size_t j = 0; j < m; ++j) {
            row_sum += report.confusion[c * m + j];
            col_sum += report.confusion[j * m + c];
        }
        const std::size_t diag = report.confusion[c * m + c];
        diag_sum += diag;
        report.recall[c] = row_sum ? static_cast<double>(diag) / row_sum : 0.0;
        report.precision[c] = col_sum ? static_cast<double>(diag) / col_sum : 0.0;
        const double pr = report.precision[c] + report.recall[c];
        report.f1[c] = pr > 0.0 ? 2.0 * report.precision[c] * report.recall[c] / pr : 0.0;
    }
    report.accuracy = static_cast<double>(diag_sum) / static_cast<double>(report.total);
    return report;
}

EvaluationReport evaluate(const std::function<std::uint32_t(const FeatureVector&)>& predict,
                          const Dataset& testset) {
    if (testset.size() == 0) throw std::invalid_argument("evaluate: empty test set");
    std::vector<std::uint32_t> predicted;
    predicted.reserve(testset.size());
    for (std::size_t i = 0; i < testset.size(); ++i) {
        predicted.push_back(predict(testset.feature_row(i)));
    }
    return evaluate_predictions(testset.labels, predicted, testset.catalog.names);
}

namespace {

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::size_t row_count(const EvaluationReport& r, std::size_t c) {
    std::size_t sum = 0;
    for (std::size_t j = 0; j < r.num_classes(); ++j) sum += r.at(c, j);
    return sum;
}

}  // namespace

std::string report_csv(const EvaluationReport& report) {
    std::ostringstream os;
    os << "class,count,recall,precision,f1\n";
    for (std::size_t c = 0; c < report.num_classes(); ++c) {
        os << report.class_names[c] << "," << row_count(report, c) << ","
           << fixed4(report.recall[c]) << "," << fixed4(report.precision[c]) << ","
           << fixed4(report.f1[c]) << "\n";
    }
    os << "__overall__," << report.total << "," << fixed4(report.accuracy) << ",,\n";
    return os.str();
}

std::string report_table(const EvaluationReport& report) {
    std::size_t name_width = 12;
    for (const auto& n : report.class_names) name_width = std::max(name_width, n.size());

    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-*s %8s %8s %9s %8s\n", static_cast<int>(name_width),
                  "class", "count", "recall", "precision", "f1");
    os << line;
    for (std::size_t c = 0; c < report.num_classes(); ++c) {
        std::snprintf(line, sizeof line, "%-*s %8zu %8.4f %9.4f %8.4f\n",
                      static_cast<int>(name_width), report.class_names[c].c_str(),
                      row_count(report, c), report.recall[c], report.precision[c], report.f1[c]);
        os << line;
    }
    std::snprintf(line, sizeof line, "%-*s %8zu %8.4f\n", static_cast<int>(name_width),
                  "overall", report.total, report.accuracy);
    os << line;
    return os.str();
}

}  // namespace melm
