#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "rtucker/io.hpp"
#include "support.hpp"

namespace rtucker {
namespace {

AnyTensor round_trip(const AnyTensor& t) {
    std::stringstream ss;
    write_tensor(ss, t);
    return read_tensor(ss);
}

AnyTensor parse(const std::string& text) {
    std::istringstream in(text);
    return read_tensor(in, "text");
}

std::string parse_error(const std::string& text) {
    try {
        parse(text);
    } catch (const ParseError& e) {
        return e.what();
    }
    return "";
}

TEST(DenseFormat, ExactLayout) {
    DenseTensor t({2, 1, 2}, {1.0, -0.5, 1.0 / 3.0, 2e-300});
    std::ostringstream out;
    write_tensor(out, t);
    EXPECT_EQ(out.str(), "dense 3\n2 1 2\n1\n-0.5\n0.3333333333333333\n2e-300\n");
}

TEST(DenseFormat, RoundTripIsBitExact) {
    const DenseTensor t = testing::random_tensor({5, 4, 3}, 1);
    EXPECT_EQ(std::get<DenseTensor>(round_trip(t)), t);
    const std::vector<double> awkward{0.1, 1.0 / 3.0, std::nextafter(1.0, 2.0), 5e-324, -1.7976931348623157e308, -0.0};
    const DenseTensor u({6}, awkward);
    const DenseTensor back = std::get<DenseTensor>(round_trip(u));
    for (std::size_t i = 0; i < awkward.size(); ++i) {
        EXPECT_EQ(back[i], awkward[i]);
        EXPECT_EQ(std::signbit(back[i]), std::signbit(awkward[i]));
    }
}

TEST(SparseFormat, OneBasedIndices) {
    const SparseTensor s({3, 3, 3}, {{0, 1, 2}}, {125.0});
    std::ostringstream out;
    write_tensor(out, s);
    EXPECT_EQ(out.str(), "sparse 3 1\n3 3 3\n1 2 3 125\n");
    const SparseTensor back = std::get<SparseTensor>(parse(out.str()));
    EXPECT_EQ(back.coord(0, 2), 2u);
    EXPECT_EQ(back.value(0), 125.0);
}

TEST(SparseFormat, RoundTripIsBitExact) {
    const SparseTensor s = testing::random_sparse({7, 6, 5, 4}, 40, 2);
    const SparseTensor back = std::get<SparseTensor>(round_trip(s));
    ASSERT_EQ(back.nnz(), s.nnz());
    EXPECT_EQ(densify(back), densify(s));
    const SparseTensor empty({3, 3});
    EXPECT_EQ(std::get<SparseTensor>(round_trip(empty)).nnz(), 0u);
}

TEST(Parse, AcceptsBlankTrailingLinesAndCrlf) {
    const DenseTensor t = std::get<DenseTensor>(parse("dense 1\r\n2\r\n1.5\r\n-2\r\n\n"));
    EXPECT_EQ(t.dims(), (Dims{2}));
    EXPECT_EQ(t[1], -2.0);
}

TEST(Parse, ErrorsNameTheField) {
    EXPECT_NE(parse_error("matrix 2\n2 2\n").find("kind"), std::string::npos);
    EXPECT_NE(parse_error("dense x\n2\n1\n2\n").find("'N'"), std::string::npos);
    EXPECT_NE(parse_error("dense 2\n2\n1\n2\n").find("dims"), std::string::npos);
    EXPECT_NE(parse_error("dense 1\n2\n1\n").find("value 2 of 2"), std::string::npos);
    EXPECT_NE(parse_error("dense 1\n2\n1\nabc\n").find("value"), std::string::npos);
    EXPECT_NE(parse_error("dense 1\n2\n1\n2\n3\n").find("trailing"), std::string::npos);
    EXPECT_NE(parse_error("dense 1\n0\n").find("dims"), std::string::npos);
    EXPECT_NE(parse_error("sparse 2 1\n2 2\n0 1 1.0\n").find("index"), std::string::npos);
    EXPECT_NE(parse_error("sparse 2 1\n2 2\n3 1 1.0\n").find("index"), std::string::npos);
    EXPECT_NE(parse_error("sparse 2 2\n2 2\n1 1 1.0\n").find("entry 2 of 2"), std::string::npos);
    EXPECT_NE(parse_error("sparse 2 2\n2 2\n1 1 1.0\n1 1 2.0\n").find("duplicate"), std::string::npos);
    EXPECT_NE(parse_error("").find("header"), std::string::npos);
}

TEST(Parse, ReportsLineNumbers) {
    EXPECT_NE(parse_error("dense 1\n3\n1\n2\nfoo\n").find("text:5"), std::string::npos);
}

TEST(MatrixFormat, RowMajorRoundTrip) {
    Matrix m(2, 3);
    m << 1, 2, 3, 4, 5, 6;
    std::stringstream ss;
    write_matrix(ss, m);
    EXPECT_EQ(ss.str(), "2 3\n1\n2\n3\n4\n5\n6\n");
    EXPECT_EQ(read_matrix(ss), m);
}

TEST(TuckerArchive, SaveAndLoad) {
    const auto dir = std::filesystem::temp_directory_path() / "rtucker_test_archive";
    std::filesystem::remove_all(dir);
    const DenseTensor a = testing::random_tensor({6, 5, 4}, 3);
    const TuckerApprox t = truncated_hosvd(a, {2, 3, 2});
    save_tucker(dir, t, {{"rlne", "0.5"}});
    EXPECT_TRUE(std::filesystem::exists(dir / "factor_3"));
    const TuckerApprox back = load_tucker(dir);
    EXPECT_EQ(back.core, t.core);
    EXPECT_EQ(back.factors, t.factors);
    EXPECT_EQ(back.source_dims, a.dims());
    std::ifstream metrics(dir / "metrics");
    const auto kv = read_key_values(metrics, "metrics");
    EXPECT_EQ(kv.at("rlne"), "0.5");
    std::filesystem::remove_all(dir);
}

TEST(KeyValues, CommentsBlanksAndErrors) {
    std::istringstream ok("# c\n\n a = 1 \nb=x,y\n");
    const auto kv = read_key_values(ok, "cfg");
    EXPECT_EQ(kv.at("a"), "1");
    EXPECT_EQ(kv.at("b"), "x,y");
    std::istringstream dup("a=1\na=2\n");
    EXPECT_THROW(read_key_values(dup, "cfg"), ParseError);
    std::istringstream bad("novalue\n");
    EXPECT_THROW(read_key_values(bad, "cfg"), ParseError);
}

}  // namespace
}  // namespace rtucker
