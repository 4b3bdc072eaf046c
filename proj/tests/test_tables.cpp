#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include <prtebounds/report.hpp>
#include <prtebounds/tables.hpp>

using namespace prte;

TEST(Reference, ParsesIntervalsAndEmptyCells) {
    const auto cells = parse_reference("format 1\n# comment\n4 a 0.5 mst empty\n3 b 0.1 cvr -0.1 0.25  # trailing\n");
    ASSERT_EQ(cells.size(), 2u);
    EXPECT_EQ(cells[0].table, 4);
    EXPECT_FALSE(cells[0].expected.has_value());
    EXPECT_EQ(cells[1].panel, 'b');
    EXPECT_EQ(cells[1].row, "cvr");
    ASSERT_TRUE(cells[1].expected.has_value());
    EXPECT_DOUBLE_EQ(cells[1].expected->first, -0.1);
    EXPECT_DOUBLE_EQ(cells[1].expected->second, 0.25);
}

TEST(Reference, MalformedLinesThrow) {
    EXPECT_THROW(parse_reference("x a 0.1 cvr 0 1\n"), ValidationError);
    EXPECT_THROW(parse_reference("3 ab 0.1 cvr 0 1\n"), ValidationError);
    EXPECT_THROW(parse_reference("3 a 0.1 cvr 0\n"), ValidationError);
}

TEST(Reference, EmbeddedDataCoversEveryTable) {
    std::set<int> tables;
    for (const auto& c : reference_cells()) {
        tables.insert(c.table);
        EXPECT_TRUE(c.panel == 'a' || c.panel == 'b');
        EXPECT_TRUE(c.sigma == 0.1 || c.sigma == 0.5 || c.sigma == 0.9);
        if (c.expected) {
            EXPECT_LE(c.expected->first, c.expected->second);
        }
    }
    EXPECT_EQ(tables, (std::set<int>{3, 4, 5, 6, 7, 8, 9, 10}));
}

TEST(Reference, KnownCells) {
    auto find = [](int t, char p, double s, const std::string& row) {
        for (const auto& c : reference_cells()) {
            if (c.table == t && c.panel == p && c.sigma == s && c.row == row) return c;
        }
        ADD_FAILURE() << "missing cell";
        return ReferenceCell{};
    };
    const auto a = find(3, 'a', 0.1, "cvr");
    ASSERT_TRUE(a.expected);
    EXPECT_DOUBLE_EQ(a.expected->first, -0.188);
    EXPECT_DOUBLE_EQ(a.expected->second, 0.462);
    EXPECT_FALSE(find(4, 'a', 0.5, "mst").expected.has_value());
    const auto b = find(8, 'b', 0.9, "cvr-r2");
    ASSERT_TRUE(b.expected);
    EXPECT_DOUBLE_EQ(b.expected->first, -0.231);
    EXPECT_DOUBLE_EQ(b.expected->second, 0.229);
}

TEST(Layout, TablesMapToModelAndTarget) {
    EXPECT_EQ(table_layout(3).model, TreatmentModel::LocalDeparture);
    EXPECT_EQ(table_layout(6).model, TreatmentModel::RandomCoefficient);
    EXPECT_EQ(table_layout(6).target, TargetKind::PRTE);
    EXPECT_EQ(table_layout(8).target, TargetKind::ATE);
    EXPECT_THROW(table_layout(2), ValidationError);
    EXPECT_THROW(table_layout(11), ValidationError);
    EXPECT_FALSE(valid_table_id(99));
    EXPECT_EQ(panel_v_dim('a'), 1);
    EXPECT_EQ(panel_v_dim('b'), 2);
}

TEST(Cells, EmptyNeedsCertificate) {
    TableCell c;
    c.ref.row = "mst";
    c.got.status = BoundsStatus::Empty;
    EXPECT_FALSE(check_cell(c, TargetKind::ATE));
    c.got.certificate = Eigen::VectorXd::Ones(2);
    EXPECT_TRUE(check_cell(c, TargetKind::ATE));
}

TEST(Cells, PrteRelaxationMustBeAPoint) {
    TableCell c;
    c.ref.row = "cvr";
    c.ref.expected = std::make_pair(0.1, 0.1);
    c.got.status = BoundsStatus::Bounded;
    c.got.lower = 0.099;
    c.got.upper = 0.101;
    EXPECT_TRUE(check_cell(c, TargetKind::ATE));
    EXPECT_FALSE(check_cell(c, TargetKind::PRTE));
    c.got.lower = c.got.upper = 0.1004;
    EXPECT_TRUE(check_cell(c, TargetKind::PRTE));
    c.got.lower = c.got.upper = 0.106;
    EXPECT_FALSE(check_cell(c, TargetKind::PRTE));
}

TEST(Cells, RowsOutsideTheirTargetAreRejected) {
    const DgpSpec g = local_departure_design(1, 0.1);
    const MomentSet m = population_moments(g);
    EXPECT_THROW(compute_row("manski", g, m, TargetSpec::prte()), ValidationError);
    EXPECT_THROW(compute_row("bogus", g, m, TargetSpec::ate()), ValidationError);
    const BoundsResult t = compute_row("true", g, m, TargetSpec::ate());
    EXPECT_EQ(t.lower, t.upper);
}

TEST(Report, JsonRecord) {
    BoundsRecord rec;
    rec.method = "cvr";
    rec.target = "ate";
    rec.sigma = 0.5;
    rec.v_dim = 2;
    rec.result.status = BoundsStatus::Bounded;
    rec.result.lower = -0.25;
    rec.result.upper = 0.5;
    const auto j = to_json(rec);
    EXPECT_EQ(j["method"], "cvr");
    EXPECT_EQ(j["status"], status_name(BoundsStatus::Bounded));
    EXPECT_DOUBLE_EQ(j["lower"].get<double>(), -0.25);
    EXPECT_EQ(j["restrictions"], "none");
    rec.result.status = BoundsStatus::Empty;
    const auto e = to_json(rec);
    EXPECT_TRUE(e["lower"].is_null());
    EXPECT_TRUE(e["upper"].is_null());
    EXPECT_EQ(to_json(std::vector<BoundsRecord>{rec, rec}).size(), 2u);
}
