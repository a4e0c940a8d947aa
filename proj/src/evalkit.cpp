#include "fgwk/evalkit.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "fgwk/errors.hpp"

namespace fgwk::evalkit {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) {
        return std::nullopt;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

std::string full(const std::optional<double>& v) {
    if (!v) {
        return "";
    }
    std::ostringstream s;
    s << std::setprecision(17) << *v;
    return s.str();
}

std::string percent(const std::optional<double>& v) {
    if (!v) {
        return "-";
    }
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << *v * 100.0;
    return s.str();
}

void check_names(const std::vector<ConfigMetrics>& configs,
                 const std::vector<std::string>& class_names) {
    for (const auto& c : configs) {
        if (c.metrics.per_class.size() != class_names.size()) {
            throw ContractError("config '" + c.config + "' has " +
                                std::to_string(c.metrics.per_class.size()) + " classes, " +
                                std::to_string(class_names.size()) + " names given");
        }
    }
}

} // namespace

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : classes_(classes), counts_(classes * classes, 0) {
    if (classes == 0) {
        throw ContractError("confusion matrix needs at least one class");
    }
}

void ConfusionMatrix::accumulate(int true_label, int predicted) {
    const auto n = static_cast<int>(classes_);
    if (true_label < 0 || true_label >= n || predicted < 0 || predicted >= n) {
        throw IndexError("confusion matrix labels (" + std::to_string(true_label) + ", " +
                         std::to_string(predicted) + ") outside [0, " + std::to_string(n) + ")");
    }
    ++counts_[static_cast<std::size_t>(true_label) * classes_ + static_cast<std::size_t>(predicted)];
    ++total_;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.classes_ != classes_) {
        throw ContractError("cannot merge confusion matrices of " + std::to_string(classes_) +
                            " and " + std::to_string(other.classes_) + " classes");
    }
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        counts_[i] += other.counts_[i];
    }
    total_ += other.total_;
}

std::size_t ConfusionMatrix::count(std::size_t true_label, std::size_t predicted) const {
    if (true_label >= classes_ || predicted >= classes_) {
        throw IndexError("confusion matrix index out of range");
    }
    return counts_[true_label * classes_ + predicted];
}

std::size_t ConfusionMatrix::row_sum(std::size_t true_label) const {
    std::size_t s = 0;
    for (std::size_t p = 0; p < classes_; ++p) {
        s += count(true_label, p);
    }
    return s;
}

std::size_t ConfusionMatrix::column_sum(std::size_t predicted) const {
    std::size_t s = 0;
    for (std::size_t t = 0; t < classes_; ++t) {
        s += count(t, predicted);
    }
    return s;
}

std::size_t ConfusionMatrix::trace() const {
    std::size_t s = 0;
    for (std::size_t c = 0; c < classes_; ++c) {
        s += count(c, c);
    }
    return s;
}

Metrics per_class_metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) {
        throw ContractError("per_class_metrics: confusion matrix is empty");
    }
    Metrics m;
    m.total = cm.total();
    m.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
    for (std::size_t c = 0; c < cm.classes(); ++c) {
        ClassMetrics k;
        k.tp = cm.count(c, c);
        k.fn = cm.row_sum(c) - k.tp;
        k.fp = cm.column_sum(c) - k.tp;
        k.tn = cm.total() - k.tp - k.fn - k.fp;
        k.sensitivity = ratio(k.tp, k.tp + k.fn);
        k.specificity = ratio(k.tn, k.tn + k.fp);
        k.precision = ratio(k.tp, k.tp + k.fp);
        m.per_class.push_back(k);
    }
    return m;
}

void write_metrics_csv(std::ostream& out, const std::vector<ConfigMetrics>& configs,
                       const std::vector<std::string>& class_names) {
    check_names(configs, class_names);
    out << "config,class,sensitivity,specificity,precision,accuracy\n";
    for (const auto& c : configs) {
        for (std::size_t k = 0; k < class_names.size(); ++k) {
            const auto& m = c.metrics.per_class[k];
            out << c.config << ',' << class_names[k] << ',' << full(m.sensitivity) << ','
                << full(m.specificity) << ',' << full(m.precision) << ",\n";
        }
        out << c.config << ",all,,,," << full(c.metrics.accuracy) << '\n';
    }
}

std::string render_metrics_table(const std::vector<ConfigMetrics>& configs,
                                 const std::vector<std::string>& class_names) {
    check_names(configs, class_names);
    std::size_t name_width = 8;
    for (const auto& n : class_names) {
        name_width = std::max(name_width, n.size());
    }
    std::size_t col = 7;
    for (const auto& c : configs) {
        col = std::max(col, (c.config.size() + 2) / 3 + 1);
    }
    const auto group = 3 * col;
    std::ostringstream s;
    s << std::left << std::setw(static_cast<int>(name_width)) << "class";
    for (const auto& c : configs) {
        s << " | " << std::setw(static_cast<int>(group)) << c.config;
    }
    s << '\n' << std::setw(static_cast<int>(name_width)) << "";
    for (std::size_t i = 0; i < configs.size(); ++i) {
        s << " | " << std::right << std::setw(static_cast<int>(col)) << "Sens"
          << std::setw(static_cast<int>(col)) << "Spec" << std::setw(static_cast<int>(col)) << "Prec"
          << std::left;
    }
    s << '\n';
    for (std::size_t k = 0; k < class_names.size(); ++k) {
        s << std::left << std::setw(static_cast<int>(name_width)) << class_names[k];
        for (const auto& c : configs) {
            const auto& m = c.metrics.per_class[k];
            s << " | " << std::right << std::setw(static_cast<int>(col)) << percent(m.sensitivity)
              << std::setw(static_cast<int>(col)) << percent(m.specificity)
              << std::setw(static_cast<int>(col)) << percent(m.precision) << std::left;
        }
        s << '\n';
    }
    s << std::left << std::setw(static_cast<int>(name_width)) << "accuracy";
    for (const auto& c : configs) {
        s << " | " << std::right << std::setw(static_cast<int>(group))
          << percent(c.metrics.accuracy) << std::left;
    }
    s << '\n';
    return s.str();
}

} // namespace fgwk::evalkit
