#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "fgwk/errors.hpp"
#include "fgwk/evalkit.hpp"
#include "fgwk/rng.hpp"
#include "metric_cases.hpp"

using namespace fgwk;
using namespace fgwk::evalkit;

namespace {

void expect_optional_near(const std::optional<double>& actual, const std::optional<double>& expected,
                          const std::string& what) {
    ASSERT_EQ(actual.has_value(), expected.has_value()) << what;
    if (expected) {
        EXPECT_NEAR(*actual, *expected, 1e-6) << what;
    }
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        lines.push_back(line);
    }
    return lines;
}

} // namespace

TEST(ConfusionMatrix, Accumulate) {
    ConfusionMatrix cm(4);
    cm.accumulate(0, 0);
    EXPECT_EQ(cm.count(0, 0), 1u);
    EXPECT_EQ(cm.total(), 1u);
    EXPECT_THROW(cm.accumulate(4, 0), IndexError);
    EXPECT_THROW(cm.accumulate(0, -1), IndexError);
    EXPECT_EQ(cm.total(), 1u);
}

TEST(ConfusionMatrix, OrderIrrelevantAndTotalsCount) {
    Rng rng(1);
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < 80; ++i) {
        pairs.emplace_back(static_cast<int>(rng.below(4)), static_cast<int>(rng.below(4)));
    }
    ConfusionMatrix a(4), b(4);
    for (auto [t, p] : pairs) {
        a.accumulate(t, p);
    }
    rng.shuffle(pairs.begin(), pairs.end());
    for (auto [t, p] : pairs) {
        b.accumulate(t, p);
    }
    EXPECT_EQ(a.total(), 80u);
    for (std::size_t t = 0; t < 4; ++t) {
        for (std::size_t p = 0; p < 4; ++p) {
            EXPECT_EQ(a.count(t, p), b.count(t, p));
        }
    }
}

TEST(ConfusionMatrix, MergeOfPartialsEqualsWhole) {
    Rng rng(2);
    ConfusionMatrix whole(3), left(3), right(3);
    for (int i = 0; i < 50; ++i) {
        const int t = static_cast<int>(rng.below(3)), p = static_cast<int>(rng.below(3));
        whole.accumulate(t, p);
        (i % 2 ? left : right).accumulate(t, p);
    }
    left.merge(right);
    EXPECT_EQ(left.total(), whole.total());
    EXPECT_EQ(left.trace(), whole.trace());
    EXPECT_THROW(left.merge(ConfusionMatrix(4)), ContractError);
}

TEST(PerClassMetrics, HandComputedCases) {
    for (const auto& c : fgwk::testing::hand_metric_cases()) {
        auto m = per_class_metrics(fgwk::testing::build_matrix(c));
        ASSERT_EQ(m.per_class.size(), c.expected.size());
        EXPECT_NEAR(m.accuracy, c.accuracy, 1e-6) << c.name;
        for (std::size_t k = 0; k < c.expected.size(); ++k) {
            const auto tag = c.name + " class " + std::to_string(k);
            expect_optional_near(m.per_class[k].sensitivity, c.expected[k].sensitivity, tag);
            expect_optional_near(m.per_class[k].specificity, c.expected[k].specificity, tag);
            expect_optional_near(m.per_class[k].precision, c.expected[k].precision, tag);
        }
    }
}

TEST(PerClassMetrics, EmptyMatrix) {
    EXPECT_THROW(per_class_metrics(ConfusionMatrix(4)), ContractError);
}

TEST(PerClassMetrics, CountIdentities) {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        ConfusionMatrix cm(4);
        for (int i = 0; i < 60; ++i) {
            cm.accumulate(static_cast<int>(rng.below(4)), static_cast<int>(rng.below(4)));
        }
        auto m = per_class_metrics(cm);
        EXPECT_DOUBLE_EQ(m.accuracy, static_cast<double>(cm.trace()) / 60.0);
        for (std::size_t c = 0; c < 4; ++c) {
            const auto& k = m.per_class[c];
            EXPECT_EQ(k.tp + k.fn, cm.row_sum(c));
            EXPECT_EQ(k.tp + k.fp, cm.column_sum(c));
            EXPECT_EQ(k.tp + k.fn + k.fp + k.tn, 60u);
        }
    }
}

TEST(PerClassMetrics, RelabellingPermutesTheReport) {
    Rng rng(4);
    const int perm[] = {2, 0, 3, 1};
    ConfusionMatrix cm(4), relabelled(4);
    for (int i = 0; i < 100; ++i) {
        const int t = static_cast<int>(rng.below(4)), p = static_cast<int>(rng.below(4));
        cm.accumulate(t, p);
        relabelled.accumulate(perm[t], perm[p]);
    }
    auto a = per_class_metrics(cm), b = per_class_metrics(relabelled);
    EXPECT_EQ(a.accuracy, b.accuracy);
    for (std::size_t c = 0; c < 4; ++c) {
        EXPECT_EQ(a.per_class[c].sensitivity, b.per_class[static_cast<std::size_t>(perm[c])].sensitivity);
        EXPECT_EQ(a.per_class[c].specificity, b.per_class[static_cast<std::size_t>(perm[c])].specificity);
        EXPECT_EQ(a.per_class[c].precision, b.per_class[static_cast<std::size_t>(perm[c])].precision);
    }
}

TEST(Report, CsvLayout) {
    auto cases = fgwk::testing::hand_metric_cases();
    auto m = per_class_metrics(fgwk::testing::build_matrix(cases[3]));
    std::vector<ConfigMetrics> configs{{"base", m}, {"ensemble", m}};
    const std::vector<std::string> names{"a", "b", "c", "d"};
    std::ostringstream out;
    write_metrics_csv(out, configs, names);
    auto lines = split_lines(out.str());
    ASSERT_EQ(lines.size(), 1u + 2u * 5u);
    EXPECT_EQ(lines[0], "config,class,sensitivity,specificity,precision,accuracy");
    EXPECT_EQ(lines[1], "base,a,0.75,0.80000000000000004,0.75,");
    // Class c is never predicted: precision left empty.
    EXPECT_EQ(lines[3], "base,c,0,1,,");
    EXPECT_TRUE(lines[5].starts_with("base,all,,,,0.77777777777777"));
    EXPECT_TRUE(lines[6].starts_with("ensemble,a,"));
    EXPECT_THROW(write_metrics_csv(out, configs, {"a"}), ContractError);
}

TEST(Report, TableHasTwoDecimalPercentages) {
    auto cases = fgwk::testing::hand_metric_cases();
    auto m = per_class_metrics(fgwk::testing::build_matrix(cases[3]));
    std::vector<ConfigMetrics> configs{{"base", m}, {"lion", m}, {"lionfpn", m}, {"ensemble", m}};
    auto table = render_metrics_table(configs, {"a", "b", "c", "d"});
    auto lines = split_lines(table);
    ASSERT_EQ(lines.size(), 2u + 4u + 1u);
    EXPECT_NE(lines[0].find("ensemble"), std::string::npos);
    EXPECT_NE(lines[2].find("75.00"), std::string::npos);
    EXPECT_NE(lines[2].find("80.00"), std::string::npos);
    EXPECT_NE(lines[3].find("85.71"), std::string::npos);
    EXPECT_NE(lines[4].find("-"), std::string::npos);
    EXPECT_NE(lines[6].find("77.78"), std::string::npos);
    EXPECT_EQ(std::count(lines[1].begin(), lines[1].end(), '|'), 4);
}
