#include <gtest/gtest.h>

#include "holosub/report.hpp"

namespace report = holosub::report;

namespace {

report::AccuracyTable sample_table() {
    report::AccuracyTable table;
    report::EvalColumn a;
    a.variant = "squares";
    a.loss = "hrr";
    a.acc = {1.0, 0.914, 0.964, 0.944, 0.9, 0.888};
    a.mean_pred = {1.0, 2.1, 3.0, 3.9, 5.0, 5.9};
    a.mean_acc = 0.935;
    a.boundary_mass = 0.41;
    a.images = 600;
    a.overcount6 = report::overcount_flag(a.acc, a.mean_pred);
    report::EvalColumn b;
    b.variant = "squares";
    b.loss = "ce";
    b.acc = {0.876, 0.811, 0.641, 0.686, 0.549, 0.978};
    b.mean_pred = {1.2, 2.4, 3.6, 4.5, 5.7, 5.95};
    b.mean_acc = 0.757;
    b.boundary_mass = 0.22;
    b.images = 600;
    b.overcount6 = report::overcount_flag(b.acc, b.mean_pred);
    table.columns = {a, b};
    return table;
}

}  // namespace

TEST(Report, OvercountFlagRule) {
    std::array<double, 6> acc{1, 1, 1, 1, 0.5, 0.9};
    std::array<double, 6> mean_pred{1, 2, 3, 4, 5.6, 6.0};
    EXPECT_TRUE(report::overcount_flag(acc, mean_pred));
    mean_pred[4] = 5.2;  // class-5 predictions not piled at the ceiling
    EXPECT_FALSE(report::overcount_flag(acc, mean_pred));
    mean_pred[4] = 5.6;
    acc[5] = 0.65;  // jump no longer exceeds 0.2
    EXPECT_FALSE(report::overcount_flag(acc, mean_pred));
}

TEST(Report, AlwaysAnswerSixGetsFlagged) {
    // A degenerate predictor that always answers 6: class-6 accuracy 1.0,
    // class-5 accuracy 0, and true-5 images all predicted as 6.
    std::array<double, 6> acc{0, 0, 0, 0, 0, 1.0};
    std::array<double, 6> mean_pred{6, 6, 6, 6, 6, 6};
    EXPECT_TRUE(report::overcount_flag(acc, mean_pred));
}

TEST(Report, MachineTableRoundTrip) {
    const report::AccuracyTable table = sample_table();
    const std::string text = report::serialize_accuracy_table(table);
    const report::AccuracyTable back = report::parse_accuracy_table(text);
    ASSERT_EQ(back.columns.size(), table.columns.size());
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        EXPECT_EQ(back.columns[i].variant, table.columns[i].variant);
        EXPECT_EQ(back.columns[i].loss, table.columns[i].loss);
        EXPECT_EQ(back.columns[i].overcount6, table.columns[i].overcount6);
        EXPECT_EQ(back.columns[i].images, table.columns[i].images);
        for (int c = 0; c < 6; ++c) {
            EXPECT_DOUBLE_EQ(back.columns[i].acc[c], table.columns[i].acc[c]);
            EXPECT_DOUBLE_EQ(back.columns[i].mean_pred[c],
                             table.columns[i].mean_pred[c]);
        }
        EXPECT_DOUBLE_EQ(back.columns[i].mean_acc, table.columns[i].mean_acc);
        EXPECT_DOUBLE_EQ(back.columns[i].boundary_mass,
                         table.columns[i].boundary_mass);
    }
    EXPECT_EQ(report::serialize_accuracy_table(back), text);
}

TEST(Report, TextTableShape) {
    const std::string text = report::format_accuracy_text(sample_table());
    // Header + six class rows + mean row + legend.
    int lines = 0;
    for (char ch : text)
        if (ch == '\n') ++lines;
    EXPECT_EQ(lines, 9);
    EXPECT_NE(text.find("squares/hrr"), std::string::npos);
    EXPECT_NE(text.find("squares/ce"), std::string::npos);
}
