#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <tfrac/io.hpp>

using namespace tfrac;

TEST(Format, ShortestRoundTrip) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 2000; ++i) {
        const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
        EXPECT_EQ(io::parse_double(io::format_double(v)), v);
    }
    EXPECT_EQ(io::format_double(0.1), "0.1");
    EXPECT_EQ(io::format_double(5e-3), "0.005");
    EXPECT_TRUE(std::isnan(io::parse_double(io::format_double(std::nan("")))));
    EXPECT_THROW(io::parse_double("1.5x"), io::FormatError);
    EXPECT_THROW(io::parse_integer("7.0"), io::FormatError);
    EXPECT_EQ(io::parse_unsigned("18446744073709551615"), std::numeric_limits<std::uint64_t>::max());
}

TEST(MeshTable, RoundTrip) {
    const Mesh mesh(3, 2);
    std::stringstream ss;
    io::write_mesh_table(ss, mesh);
    const auto rows = io::read_mesh_table(ss);
    EXPECT_EQ(rows, io::mesh_table(mesh));
    ASSERT_EQ(rows.size(), mesh.num_edges());
    EXPECT_TRUE(rows[0].boundary);
    EXPECT_FALSE(rows[1].boundary);
}

TEST(CellField, RoundTripWithMetadata) {
    const Mesh mesh(4, 4);
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(16, 0.1, 9.7);
    v[3] = 1.0 / 3.0;
    const auto f = io::make_cell_field(mesh, v, "q_value", {{"experiment", "jump"}, {"seed", "9"}});
    std::stringstream ss;
    io::write_cell_field(ss, f);
    const auto g = io::read_cell_field(ss);
    EXPECT_EQ(g, f);
    EXPECT_EQ(io::lookup(g.meta, "seed"), "9");
    EXPECT_EQ(io::lookup(g.meta, "missing", "x"), "x");
    EXPECT_THROW(io::make_cell_field(mesh, Eigen::VectorXd::Zero(3), "q"), std::invalid_argument);
}

TEST(Measurements, RoundTripAndReordering) {
    io::Measurements m;
    m.meta = {{"experiment", "smooth"}};
    m.experiments = 2;
    m.times = {61, 71};
    m.edges = {0, 3, 7};
    m.values = Eigen::VectorXd::LinSpaced(12, -1.0, 1.0);
    std::stringstream ss;
    io::write_measurements(ss, m);
    const std::string text = ss.str();
    EXPECT_EQ(io::read_measurements(ss), m);

    // same rows reversed
    std::istringstream lines(text);
    std::vector<std::string> all;
    for (std::string l; std::getline(lines, l);) all.push_back(l);
    std::string reversed;
    for (auto it = all.rbegin(); it != all.rend(); ++it) reversed += *it + "\n";
    std::istringstream rs(reversed);
    const auto back = io::read_measurements(rs);
    EXPECT_EQ(back.values, m.values);
    EXPECT_EQ(back.times, m.times);
}

TEST(Measurements, RejectsIncompleteOrDuplicateData) {
    std::istringstream missing("0 1 0 1.0\n0 1 1 2.0\n0 2 0 3.0\n");
    EXPECT_THROW(io::read_measurements(missing), io::FormatError);
    std::istringstream dup("0 1 0 1.0\n0 1 0 2.0\n");
    EXPECT_THROW(io::read_measurements(dup), io::FormatError);
    std::istringstream bad_exp("1 1 0 1.0\n");
    EXPECT_THROW(io::read_measurements(bad_exp), io::FormatError);
    std::istringstream cols("0 1 0\n");
    EXPECT_THROW(io::read_measurements(cols), io::FormatError);
    std::istringstream empty("# nothing\n");
    EXPECT_THROW(io::read_measurements(empty), io::FormatError);
}

TEST(IterationLog, RoundTripWithNan) {
    io::IterationLog log;
    log.meta = {{"experiment", "jump"}};
    log.rows = {{0, 4.1, 9.1, 0.88, 0.0}, {1, 3.2, std::nan(""), 0.80, 1.25}};
    std::stringstream ss;
    io::write_iteration_log(ss, log);
    EXPECT_EQ(io::read_iteration_log(ss), log);
}

TEST(Summary, RoundTripAndMerge) {
    std::vector<io::SummaryRow> rows;
    io::SummaryRow a{"jump", 0.4, 0.0, 5e-3, 0.01, 1, 1, 50, 0.0766};
    io::SummaryRow b = a;
    b.alpha = 0.6;
    io::merge_summary_row(rows, a);
    io::merge_summary_row(rows, b);
    a.final_epsilon = 0.05;
    io::merge_summary_row(rows, a);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].final_epsilon, 0.05);
    std::stringstream ss;
    io::write_summary(ss, rows);
    EXPECT_EQ(io::read_summary(ss), rows);
    EXPECT_EQ(io::format_summary_row(a), "jump 0.4 0 0.005 0.01 1 1 50 0.05");
}
