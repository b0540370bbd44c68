#include <doctest.h>

#include <sstream>

#include "slope/errors.hpp"
#include "slope/io.hpp"

using namespace slope;

TEST_SUITE("io") {

TEST_CASE("format_double round trips") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
        CHECK(std::stod(format_double(x)) == x);
    }
    CHECK(format_double(0.2) == "0.20000000000000001");
}

TEST_CASE("CSV parsing skips comments and blank lines") {
    std::istringstream in("# header\n1,2\n\n 3 , +4\n");
    const Matrix A = parse_matrix_csv(in, "mem");
    CHECK(A.rows() == 2);
    CHECK(A.cols() == 2);
    CHECK(A(1, 1) == 4.0);
}

TEST_CASE("CSV parsing errors") {
    std::istringstream ragged("1,2\n3\n");
    CHECK_THROWS_AS(parse_matrix_csv(ragged, "mem"), InputError);
    std::istringstream bad("1,abc\n");
    CHECK_THROWS_AS(parse_matrix_csv(bad, "mem"), InputError);
    std::istringstream empty("# nothing\n");
    CHECK_THROWS_AS(parse_matrix_csv(empty, "mem"), InputError);
    std::istringstream inf("1,inf\n");
    CHECK_THROWS_AS(parse_matrix_csv(inf, "mem"), InputError);
    CHECK_THROWS_AS(read_matrix_csv("/nonexistent/x.csv"), InputError);
}

TEST_CASE("manifest header and write/read round trip") {
    RunManifest man;
    man.command = "solve";
    man.seed = 7;
    man.outputs = {"a.csv"};
    std::ostringstream os;
    man.write(os);
    const std::string text = os.str();
    CHECK(text.find("# tool: slope") == 0);
    CHECK(text.find("# seed: 7") != std::string::npos);
    CHECK(text.find("# output: a.csv") != std::string::npos);

    const std::string path = "io_roundtrip_test.csv";
    Matrix A(2, 3);
    A << 0.1, -2, 1e-17, 3, 1.0 / 3, 5;
    write_matrix_csv(path, A, &man);
    CHECK(read_matrix_csv(path) == A);
    write_vector_csv(path, A.row(0).transpose(), &man);
    CHECK(read_vector_csv(path) == A.row(0).transpose());
    std::remove(path.c_str());
}

}
