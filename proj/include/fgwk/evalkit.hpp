#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fgwk::evalkit {

// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t classes);

    // IndexError when either label is outside [0, classes).
    void accumulate(int true_label, int predicted);
    // ContractError on a class-count mismatch.
    void merge(const ConfusionMatrix& other);

    std::size_t classes() const { return classes_; }
    std::size_t count(std::size_t true_label, std::size_t predicted) const;
    std::size_t total() const { return total_; }
    std::size_t row_sum(std::size_t true_label) const;
    std::size_t column_sum(std::size_t predicted) const;
    std::size_t trace() const;

private:
    std::size_t classes_;
    std::vector<std::size_t> counts_;
    std::size_t total_ = 0;
};

// One-vs-rest counts and ratios for one class. A ratio with a zero
// denominator is absent.
struct ClassMetrics {
    std::size_t tp = 0, fn = 0, fp = 0, tn = 0;
    std::optional<double> sensitivity;
    std::optional<double> specificity;
    std::optional<double> precision;
};

struct Metrics {
    std::vector<ClassMetrics> per_class;
    double accuracy = 0.0;
    std::size_t total = 0;
};

// ContractError on an empty matrix.
Metrics per_class_metrics(const ConfusionMatrix& cm);

// One evaluated configuration (a model variant or the ensemble).
struct ConfigMetrics {
    std::string config;
    Metrics metrics;
};

// CSV with header config,class,sensitivity,specificity,precision,accuracy:
// one row per class (accuracy empty) and a summary row per config with
// class "all" and only accuracy set. Full precision; absent values empty.
void write_metrics_csv(std::ostream& out, const std::vector<ConfigMetrics>& configs,
                       const std::vector<std::string>& class_names);

// Text table, one row per class and sensitivity / specificity / precision
// columns per config, as percentages with two decimals ("-" when absent),
// followed by an accuracy row.
std::string render_metrics_table(const std::vector<ConfigMetrics>& configs,
                                 const std::vector<std::string>& class_names);

} // namespace fgwk::evalkit
