#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "melm/dataset.hpp"

namespace melm {

// Confusion matrix with derived per-class statistics. Rows are true
// classes, columns predictions; per-class accuracy is recall (the diagonal
// fraction of the row). F1 edge cases follow the 0/0 -> 0 convention.
struct EvaluationReport {
    std::vector<std::string> class_names;
    std::vector<std::size_t> confusion;  // m*m, row-major [true][predicted]
    std::size_t total = 0;
    double accuracy = 0.0;
    std::vector<double> recall;     // a.k.a. per-class accuracy
    std::vector<double> precision;
    std::vector<double> f1;

    std::size_t num_classes() const { return class_names.size(); }
    std::size_t at(std::size_t truth, std::size_t predicted) const {
        return confusion[truth * num_classes() + predicted];
    }
};

EvaluationReport evaluate_predictions(const std::vector<std::uint32_t>& truth,
                                      const std::vector<std::uint32_t>& predicted,
                                      std::vector<std::string> class_names);

// Runs the classifier over every sample of the test set. Throws on an
// empty test set.
EvaluationReport evaluate(const std::function<std::uint32_t(const FeatureVector&)>& predict,
                          const Dataset& testset);

// CSV schema: header "class,count,recall,precision,f1", one row per class
// in catalog order, then a final row "__overall__,total,accuracy,,".
// Numbers carry 4 decimal places.
std::string report_csv(const EvaluationReport& report);

// Aligned human-readable table.
std::string report_table(const EvaluationReport& report);

}  // namespace melm
