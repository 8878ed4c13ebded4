#include "lagmc/config.hpp"
#include "lagmc/expression.hpp"
#include "lagmc/report.hpp"
#include "lagmc/solver.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace lagmc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("lagmc-test-" + name);
    fs::remove_all(p);
    return p;
}

template <class E>
int error_line(const std::string& text) {
    try {
        parse_config(text);
    } catch (const E& e) {
        return e.line();
    } catch (const std::exception& e) {
        ADD_FAILURE() << "wrong error type: " << e.what();
        return -1;
    }
    ADD_FAILURE() << "no error";
    return -1;
}

const std::string kMinimal = "[run]\ncommand = solve\nn = 2\n\n[grid]\npoints = 33\n\n[phase]\nkind = constant\nvalue = 2\n";

}  // namespace

TEST(Config, MinimalSolveParses) {
    RunConfig c = parse_config(kMinimal);
    EXPECT_EQ(*c.command, Command::Solve);
    EXPECT_EQ(*c.n, 2);
    EXPECT_EQ(*c.points, 33);
    EXPECT_EQ(*c.kind, PhaseKind::Constant);
    EXPECT_DOUBLE_EQ(*c.value, 2.0);
    EXPECT_FALSE(c.seed.has_value());
}

TEST(Config, CorpusRoundTripsByteIdentical) {
    int files = 0;
    for (const auto& entry : fs::directory_iterator(LAGMC_TEST_DATA "/configs")) {
        const std::string text = slurp(entry.path());
        const RunConfig c = parse_config(text);
        EXPECT_EQ(emit_config(c), text) << entry.path();
        EXPECT_EQ(parse_config(emit_config(c)), c);
        ++files;
    }
    EXPECT_GE(files, 6);
}

TEST(Config, CommentsAndSpacingNormalize) {
    const std::string loose = "# header\n[run]\n  command=solve ; trailing\nn =2\n[grid]\npoints= 33\n[phase]\nkind = constant\nvalue = 2.0\n";
    EXPECT_EQ(emit_config(parse_config(loose)), kMinimal);
}

TEST(Config, DistinctErrorsWithLines) {
    EXPECT_EQ(error_line<UnknownKeyError>("[run]\ncommand = solve\nn = 2\ncolour = red\n"), 4);
    EXPECT_EQ(error_line<UnknownKeyError>("[run]\ncommand = solve\n[mesh]\n"), 3);
    EXPECT_EQ(error_line<OutOfRangeError>("[run]\ncommand = solve\nn = 9\n"), 3);
    EXPECT_EQ(error_line<OutOfRangeError>("[run]\ncommand = fly\n"), 2);
    EXPECT_EQ(error_line<MissingKeyError>("[run]\ncommand = solve\n"), 1);
    EXPECT_EQ(error_line<MissingKeyError>("[run]\ncommand = solve\nn = 2\n\n[grid]\npoints = 9\n"), 6);
    EXPECT_EQ(error_line<ConfigSyntaxError>("[run]\ncommand solve\n"), 2);
    EXPECT_EQ(error_line<ConfigSyntaxError>("[run]\nn = two\n"), 2);
    EXPECT_EQ(error_line<ConfigSyntaxError>("n = 2\n"), 1);
    EXPECT_EQ(error_line<ConfigSyntaxError>("[run]\nn = 2\nn = 3\n"), 3);
    // Each family is its own type, none derives from another.
    EXPECT_THROW(parse_config("[run]\ncommand = solve\nn = 2\ncolour = red\n"), UnknownKeyError);
    try {
        parse_config("[run]\ncommand = solve\nn = 2\ncolour = red\n");
    } catch (const OutOfRangeError&) {
        FAIL();
    } catch (const MissingKeyError&) {
        FAIL();
    } catch (const UnknownKeyError& e) {
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
    }
}

TEST(Config, PhaseRangeRejection) {
    std::string text = kMinimal;
    text.replace(text.find("value = 2"), 9, "value = 3.141592653589793");
    EXPECT_EQ(error_line<OutOfRangeError>(text), 10);
    text.replace(text.find("value = 3.141592653589793"), 25, "value = 3.14159");
    EXPECT_NO_THROW(parse_config(text));
}

TEST(Config, CommandSpecificRequirements) {
    EXPECT_THROW(parse_config("[run]\ncommand = jacobi\nn = 2\n[grid]\npoints = 9\n[phase]\nkind = constant\nvalue = 1\n"), OutOfRangeError);
    EXPECT_THROW(parse_config("[run]\ncommand = approx\nn = 2\n[grid]\npoints = 9\n[phase]\nkind = kink\nslope = 1\ntheta = 0.3\n"), MissingKeyError);
    EXPECT_THROW(parse_config("[run]\ncommand = solve\nn = 4\n[grid]\npoints = 9\n"), OutOfRangeError);
    EXPECT_NO_THROW(parse_config("[run]\ncommand = verify-forms\nn = 6\n"));
    EXPECT_THROW(parse_config("[run]\ncommand = refine\nn = 2\n[grid]\nrefine = 33,17\n"), OutOfRangeError);
    EXPECT_THROW(parse_config("[run]\ncommand = solve\nn = 2\n[grid]\npoints = 9\n[phase]\nkind = expression\nexpression = sin(x3)\nlipschitz = 1\n"),
                 ConfigSyntaxError);
}

TEST(Fnv1a, ReferenceVectors) {
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
    EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ull);
}

TEST(Expression, PrecedenceAndFunctions) {
    const std::array<double, 3> x{0.5, -2.0, 3.0};
    auto ev = [&](const std::string& s) { return Expression::parse(s, 3)(x); };
    EXPECT_DOUBLE_EQ(ev("1 + 2 * 3"), 7.0);
    EXPECT_DOUBLE_EQ(ev("-2^2"), -4.0);
    EXPECT_DOUBLE_EQ(ev("2^3^2"), 512.0);
    EXPECT_DOUBLE_EQ(ev("(1 + 2) * 3"), 9.0);
    EXPECT_DOUBLE_EQ(ev("x1 + y * z"), 0.5 - 6.0);
    EXPECT_DOUBLE_EQ(ev("abs(x2) + max(x1, x3) - min(1, 2)"), 4.0);
    EXPECT_DOUBLE_EQ(ev("pow(2, 10)"), 1024.0);
    EXPECT_DOUBLE_EQ(ev("atan(1) * 4"), std::numbers::pi);
    EXPECT_DOUBLE_EQ(ev("exp(log(3)) + sqrt(16) + tanh(0) + e - e"), 7.0);
    EXPECT_DOUBLE_EQ(ev("1e-3 * 1000"), 1.0);
}

TEST(Expression, ErrorsCarryColumns) {
    try {
        Expression::parse("1 + foo(2)", 2);
        FAIL();
    } catch (const ExpressionError& e) {
        EXPECT_EQ(e.column(), 4u);
    }
    EXPECT_THROW(Expression::parse("1 +", 2), ExpressionError);
    EXPECT_THROW(Expression::parse("(1", 2), ExpressionError);
    EXPECT_THROW(Expression::parse("x3", 2), ExpressionError);
    EXPECT_THROW(Expression::parse("1 2", 2), ExpressionError);
    EXPECT_THROW(Expression::parse("max(1)", 2), ExpressionError);
}

TEST(Run, VerifyFormsIsDeterministic) {
    RunConfig c = parse_config(slurp(LAGMC_TEST_DATA "/configs/verify_forms.ini"));
    const fs::path a = scratch("forms-a"), b = scratch("forms-b");
    c.out = a.string();
    const ReportBundle ra = run(c);
    c.out = b.string();
    const ReportBundle rb = run(c);
    EXPECT_TRUE(ra.passed());
    ASSERT_EQ(ra.tables.size(), rb.tables.size());
    for (const auto& t : ra.tables) EXPECT_EQ(slurp(a / t.file), slurp(b / t.file)) << t.file;
    EXPECT_EQ(slurp(a / "summary.txt"), slurp(b / "summary.txt"));
    EXPECT_EQ(ra.config_hash, rb.config_hash);
    EXPECT_EQ(slurp(a / "manifest.txt"), slurp(b / "manifest.txt"));
    const std::string m = slurp(a / "manifest.txt");
    EXPECT_NE(m.find("table = forms.csv module=jacobi_forms suite=verify-forms"), std::string::npos);
    EXPECT_NE(m.find("seed = 42"), std::string::npos);
}

TEST(Run, RefineHasOneRowPerGrid) {
    RunConfig c = parse_config(slurp(LAGMC_TEST_DATA "/configs/refine.ini"));
    const fs::path out = scratch("refine");
    c.out = out.string();
    const ReportBundle r = run(c);
    EXPECT_TRUE(r.passed());
    std::istringstream csv(slurp(out / "refine.csv"));
    std::string line;
    int rows = -1;
    while (std::getline(csv, line)) ++rows;
    EXPECT_EQ(rows, 3);
}

TEST(Run, SubcriticalSolveIsRejectedAndLeftPartial) {
    RunConfig c = parse_config(kMinimal);
    c.n = 3;
    c.value = 1.0;
    const fs::path out = scratch("subcritical");
    c.out = out.string();
    try {
        run(c);
        FAIL();
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("subcritical"), std::string::npos);
    }
    EXPECT_TRUE(fs::exists(out / "summary.txt.partial"));
    EXPECT_FALSE(fs::exists(out / "summary.txt"));
}

TEST(Run, SolverFailureKeepsPartialArtifacts) {
    RunConfig c = parse_config(slurp(LAGMC_TEST_DATA "/configs/solve_catalog.ini"));
    c.max_iter = 1;
    const fs::path out = scratch("nonconvergent");
    c.out = out.string();
    EXPECT_THROW(run(c), SolveFailure);
    EXPECT_TRUE(fs::exists(out / "solve_history.csv.partial"));
    EXPECT_TRUE(fs::exists(out / "best.lmf.partial"));
    EXPECT_FALSE(fs::exists(out / "manifest.txt"));
}

TEST(Run, SolveFieldRoundTrips) {
    RunConfig c = parse_config(slurp(LAGMC_TEST_DATA "/configs/solve_catalog.ini"));
    const fs::path out = scratch("field");
    c.out = out.string();
    ASSERT_TRUE(run(c).passed());
    const GridField u = read_field_file((out / "solution.lmb").string());
    EXPECT_EQ(u.grid().points(0), 17);
    EXPECT_NE(slurp(out / "solve.csv").find("n,points,iterations"), std::string::npos);
}

namespace {

int cli(const std::string& args) {
    const std::string cmd = std::string(LAGMC_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
    const fs::path dir = scratch("cli");
    fs::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream(dir / name) << text;
        return (dir / name).string();
    };
    const std::string ok = write("ok.ini", kMinimal);
    EXPECT_EQ(cli("solve --config " + ok + " --out " + (dir / "ok").string()), 0);
    EXPECT_EQ(cli("solve --config " + write("bad.ini", "[run]\ncommand = solve\nn = 2\nwat = 1\n")), 2);
    EXPECT_EQ(cli("jacobi --config " + ok), 2);
    EXPECT_EQ(cli("solve --config " + (dir / "missing.ini").string()), 2);
    const std::string slow = write("slow.ini",
                                   "[run]\ncommand = solve\nn = 3\n\n[grid]\npoints = 17\n\n[phase]\nkind = catalog\ncatalog = "
                                   "supercritical\n\n[solver]\nmax_iter = 1\n");
    EXPECT_EQ(cli("solve --config " + slow + " --out " + (dir / "slow").string()), 3);
    // --seed overrides the file and lands in the manifest.
    const std::string strict = write("strict.ini",
                                     "[run]\ncommand = verify-forms\nn = 2\n\n[forms]\nsamples = 1000\n");
    EXPECT_EQ(cli("verify-forms --config " + strict + " --seed 9 --out " + (dir / "forms").string()), 0);
    EXPECT_NE(slurp(dir / "forms" / "manifest.txt").find("seed = 9"), std::string::npos);
}
