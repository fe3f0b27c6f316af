#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include <qdrift/io.hpp>

using namespace qdrift;

TEST(Io, NumbersRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0564189583548}) {
        EXPECT_EQ(std::stod(io::format_number(v)), v);
    }
    EXPECT_EQ(io::format_number(0.0), "0");
    EXPECT_EQ(io::format_number(-0.0), "0");
}

TEST(Io, CsvCarriesMetadataAheadOfHeader) {
    io::CsvTable t;
    t.metadata = {{"config", "{}"}, {"convention", "c"}};
    t.columns = {"a", "b"};
    t.add_row({1.0, 0.5});
    EXPECT_EQ(io::to_csv(t), "# config: {}\n# convention: c\na,b\n1,0.5\n");
    EXPECT_THROW(t.add_row({1.0}), ValidationError);
}

TEST(Io, SvgHasOnePolylinePerSeries) {
    io::LineChart c;
    c.title = "a < b";
    c.metadata = "{\"k\":1}";
    c.series = {{"s1", {0, 1, 2}, {0, 1, 0}}, {"s2", {0, 1, 2}, {1, 0, 1}}};
    const auto svg = io::to_svg(c);
    std::size_t count = 0;
    for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++count;
    EXPECT_EQ(count, 2u);
    EXPECT_NE(svg.find("a &lt; b"), std::string::npos);
    EXPECT_NE(svg.find("<metadata>{&quot;k&quot;:1}</metadata>"), std::string::npos);
    EXPECT_EQ(svg, io::to_svg(c));
}

TEST(Io, AtomicWriteReplacesAndCleansUp) {
    const auto dir = std::filesystem::temp_directory_path() / "qdrift_io_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "out.txt";
    io::write_atomic(path, "first");
    io::write_atomic(path, "second");
    std::ifstream is(path);
    std::stringstream ss;
    ss << is.rdbuf();
    EXPECT_EQ(ss.str(), "second");
    EXPECT_FALSE(std::filesystem::exists(dir / "out.txt.tmp"));
    std::filesystem::remove_all(dir);
    EXPECT_THROW(io::write_atomic("/nonexistent-dir/x.csv", "x"), IoError);
}
