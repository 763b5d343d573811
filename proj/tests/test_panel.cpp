#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "riskshare/dgp.hpp"
#include "riskshare/panel.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace riskshare;

namespace {

const char* kLongCsv =
    "unit,year,variable,value\n"
    "AA,2000,GDP,100\nAA,2000,C,60\nAA,2000,G,20\nAA,2000,NI,92\nAA,2000,DNI,80\n"
    "AA,2001,GDP,104\nAA,2001,C,62\nAA,2001,G,21\nAA,2001,NI,95\nAA,2001,DNI,83\n"
    "AA,2002,GDP,103\nAA,2002,C,61\nAA,2002,G,22\nAA,2002,NI,94\nAA,2002,DNI,82\n"
    "BB,2000,GDP,95\nBB,2000,C,57\nBB,2000,G,18\nBB,2000,NI,88\nBB,2000,DNI,76\n"
    "BB,2001,GDP,96\nBB,2001,C,58\nBB,2001,G,19\nBB,2001,NI,90\nBB,2001,DNI,78\n"
    "BB,2002,GDP,99\nBB,2002,C,60\nBB,2002,G,19\nBB,2002,NI,91\nBB,2002,DNI,79\n";

}  // namespace

TEST_CASE("long CSV loads a complete 2x3x5 panel") {
    fixtures::TempDir dir;
    fixtures::write_file(dir.file("p.csv"), kLongCsv);
    const PanelDataset p = load_panel(dir.file("p.csv"), CsvFormat::LongCsv);
    CHECK(p.units == std::vector<std::string>{"AA", "BB"});
    CHECK(p.years == std::vector<int>{2000, 2001, 2002});
    CHECK(p.variables.size() == 5);
    CHECK(p.n_units() * p.n_years() * p.variables.size() == 30);
    CHECK(p.cell("AA", 2001, "GDP") == doctest::Approx(104.0));
    CHECK(p.cell("BB", 2002, "DNI") == doctest::Approx(79.0));
}

TEST_CASE("a deleted row surfaces as MissingCell naming the gap") {
    std::string csv = kLongCsv;
    const auto pos = csv.find("BB,2001,NI,90\n");
    REQUIRE(pos != std::string::npos);
    csv.erase(pos, std::string("BB,2001,NI,90\n").size());
    fixtures::TempDir dir;
    fixtures::write_file(dir.file("p.csv"), csv);
    try {
        load_panel(dir.file("p.csv"), CsvFormat::LongCsv);
        FAIL("expected MissingCell");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingCell);
        CHECK(std::string(e.what()).find("BB") != std::string::npos);
        CHECK(std::string(e.what()).find("2001") != std::string::npos);
        CHECK(std::string(e.what()).find("NI") != std::string::npos);
    }
}

TEST_CASE("duplicate cells and non-contiguous years are rejected") {
    fixtures::TempDir dir;
    fixtures::write_file(dir.file("dup.csv"),
                         "unit,year,variable,value\nAA,2000,GDP,1\nAA,2000,GDP,2\n");
    CHECK_THROWS_AS(load_panel(dir.file("dup.csv"), CsvFormat::LongCsv), Error);

    fixtures::write_file(dir.file("gap.csv"),
                         "unit,year,variable,value\nAA,2000,GDP,1\nAA,2002,GDP,2\n");
    try {
        load_panel(dir.file("gap.csv"), CsvFormat::LongCsv);
        FAIL("expected NonContiguousYears");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonContiguousYears);
    }

    fixtures::write_file(dir.file("bad.csv"), "unit,year,variable,value\nAA,2000,GDP,abc\n");
    try {
        load_panel(dir.file("bad.csv"), CsvFormat::LongCsv);
        FAIL("expected NonNumericValue");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonNumericValue);
    }
}

TEST_CASE("simulated panel round-trips through wide CSV") {
    DgpConfig cfg;
    cfg.n_treated = 2;
    cfg.n_donors = 4;
    cfg.first_year = 1990;
    cfg.last_year = 2000;
    cfg.treatment_year = 1996;
    cfg.seed = 7;
    const PanelDataset sim = simulate_panel(cfg).panel;

    fixtures::TempDir dir;
    write_panel(sim, dir.file("wide.csv"), CsvFormat::WideCsv);
    const PanelDataset loaded = load_panel(dir.file("wide.csv"), CsvFormat::WideCsv);

    REQUIRE(loaded.years == sim.years);
    // 12-significant-digit output: first pass agrees to write precision,
    // a second write/load cycle is an exact fixed point
    const PanelDataset aligned = loaded.select_units(sim.units);
    for (const auto& [name, m] : sim.variables) {
        const Eigen::MatrixXd& l = aligned.variable(name);
        CHECK(((l - m).array().abs() / m.array().abs()).maxCoeff() < 1e-11);
    }
    write_panel(loaded, dir.file("wide2.csv"), CsvFormat::WideCsv);
    const PanelDataset loaded2 = load_panel(dir.file("wide2.csv"), CsvFormat::WideCsv);
    for (const auto& [name, m] : loaded.variables) {
        CHECK((loaded2.variable(name) - m).cwiseAbs().maxCoeff() == 0.0);
    }

    // same fixed-point property through the long layout
    write_panel(loaded, dir.file("long.csv"), CsvFormat::LongCsv);
    const PanelDataset from_long = load_panel(dir.file("long.csv"), CsvFormat::LongCsv);
    for (const auto& [name, m] : loaded.variables) {
        CHECK((from_long.variable(name) - m).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("first differences") {
    Series s{"AA", "x", Eigen::VectorXd(3), false};

    s.values << 1, 1, 1;
    Series d = first_differences(s);
    CHECK(d.differenced);
    CHECK(d.values.size() == 2);
    CHECK(d.values[0] == 0.0);
    CHECK(d.values[1] == 0.0);

    s.values << 0, 1, 3;
    d = first_differences(s);
    CHECK(d.values[0] == doctest::Approx(1.0));
    CHECK(d.values[1] == doctest::Approx(2.0));

    Series one{"AA", "x", Eigen::VectorXd::Ones(1), false};
    CHECK_THROWS_AS(first_differences(one), Error);
}

TEST_CASE("dlog of exp(k t) is the constant k") {
    for (const double k : {-0.3, 0.01, 1.7}) {
        Series s{"AA", "x", Eigen::VectorXd(6), false};
        for (int t = 0; t < 6; ++t) s.values[t] = std::exp(k * t);
        const Series d = first_differences(log_series(s));
        for (int t = 0; t < 5; ++t) CHECK(d.values[t] == doctest::Approx(k).epsilon(1e-12));
    }
}

TEST_CASE("differencing then cumulative summation reconstructs the series") {
    Series s{"AA", "x", Eigen::VectorXd(9), false};
    s.values << 3.5, 2.25, 8.125, 4, 4, -1.5, 0.75, 2, 9.5;
    const Series d = first_differences(s);
    Eigen::VectorXd rebuilt(9);
    rebuilt[0] = s.values[0];
    for (int t = 1; t < 9; ++t) rebuilt[t] = rebuilt[t - 1] + d.values[t - 1];
    CHECK((rebuilt - s.values).cwiseAbs().maxCoeff() < 1e-12 * s.values.cwiseAbs().maxCoeff());
}

TEST_CASE("quadratic detrend") {
    SUBCASE("exact quadratic leaves zero residuals") {
        Series s{"AA", "x", Eigen::VectorXd(8), false};
        for (int t = 0; t < 8; ++t) s.values[t] = 3.0 + 2.0 * t - t * t;
        const Series r = detrend_quadratic(s);
        CHECK(r.values.cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("constant series leaves zero residuals") {
        Series s{"AA", "x", Eigen::VectorXd::Constant(6, 4.2), false};
        CHECK(detrend_quadratic(s).values.cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("noisy quadratic matches the normal-equations oracle") {
        const int n = 12;
        Series s{"AA", "x", Eigen::VectorXd(n), false};
        // fixed stored noise vector
        Eigen::VectorXd noise(n);
        noise << 0.3, -0.1, 0.25, -0.4, 0.05, 0.6, -0.33, 0.12, -0.2, 0.08, 0.41, -0.5;
        for (int t = 0; t < n; ++t) s.values[t] = 1.0 + 0.5 * t + 0.02 * t * t + noise[t];
        const Series r = detrend_quadratic(s);

        Eigen::MatrixXd x(n, 3);
        for (int t = 0; t < n; ++t) {
            x(t, 0) = 1;
            x(t, 1) = t;
            x(t, 2) = static_cast<double>(t) * t;
        }
        const Eigen::VectorXd beta = oracles::ols_normal_equations(s.values, x);
        const Eigen::VectorXd expected = s.values - x * beta;
        CHECK((r.values - expected).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("residuals are orthogonal to the trend regressors") {
        const int n = 15;
        Series s{"AA", "x", Eigen::VectorXd(n), false};
        for (int t = 0; t < n; ++t) s.values[t] = std::sin(0.9 * t) + 0.1 * t;
        const Series r = detrend_quadratic(s);
        Eigen::VectorXd tvec(n), t2vec(n);
        for (int t = 0; t < n; ++t) {
            tvec[t] = t;
            t2vec[t] = static_cast<double>(t) * t;
        }
        CHECK(std::fabs(r.values.sum()) < 1e-8 * r.values.norm() * std::sqrt(double(n)));
        CHECK(std::fabs(r.values.dot(tvec)) < 1e-8 * r.values.norm() * tvec.norm());
        CHECK(std::fabs(r.values.dot(t2vec)) < 1e-8 * r.values.norm() * t2vec.norm());
    }
    SUBCASE("too short errors") {
        Series s{"AA", "x", Eigen::VectorXd::Ones(3), false};
        CHECK_THROWS_AS(detrend_quadratic(s), Error);
    }
}

TEST_CASE("log transform rejects non-positive values") {
    PanelDataset p = fixtures::tiny_accounts_panel();
    p.variables["GDP"](0, 0) = -1.0;
    CHECK_THROWS_AS(apply_transform(p, {TransformKind::Log, {"GDP"}}), Error);
}

TEST_CASE("unit and year subsetting") {
    const PanelDataset p = fixtures::tiny_accounts_panel();
    const PanelDataset sub = p.select_units({"BB"});
    CHECK(sub.units == std::vector<std::string>{"BB"});
    CHECK(sub.cell("BB", 1996, "GDP") == doctest::Approx(96.0));
    const PanelDataset win = p.select_years(1996, 1997);
    CHECK(win.years == std::vector<int>{1996, 1997});
    CHECK(win.cell("AA", 1997, "C") == doctest::Approx(61.0));
}

TEST_CASE("panel-level transforms") {
    const PanelDataset p = fixtures::tiny_accounts_panel();
    const PanelDataset diffed = apply_transform(p, {TransformKind::FirstDifference, {"GDP"}});
    CHECK(diffed.years == std::vector<int>{1996, 1997, 1998});
    CHECK(diffed.variable("GDP")(0, 0) == doctest::Approx(4.0));

    const PanelDataset logged = apply_transform(p, {TransformKind::Log, {"GDP"}});
    CHECK(logged.variable("GDP")(0, 0) == doctest::Approx(std::log(100.0)));

    const PanelDataset passthrough =
        apply_transform(p, {TransformKind::PerCapitaPassthrough, {"GDP"}});
    CHECK((passthrough.variable("GDP") - p.variable("GDP")).cwiseAbs().maxCoeff() == 0.0);

    // detrending an exact quadratic panel row leaves zeros
    PanelDataset quad = p;
    Eigen::MatrixXd m(2, 4);
    for (int u = 0; u < 2; ++u) {
        for (int t = 0; t < 4; ++t) m(u, t) = 1.0 + u + 0.5 * t + 0.25 * t * t;
    }
    quad.variables["GDP"] = m;
    const PanelDataset detrended = apply_transform(quad, {TransformKind::QuadraticDetrend, {"GDP"}});
    CHECK(detrended.variable("GDP").cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("comment lines are skipped on load and written on request") {
    const PanelDataset p = fixtures::tiny_accounts_panel();
    fixtures::TempDir dir;
    write_panel(p, dir.file("stamped.csv"), CsvFormat::WideCsv, "config_hash=abc123");
    const std::string text = [&]() {
        std::ifstream in(dir.file("stamped.csv"));
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }();
    CHECK(text.find("# config_hash=abc123") != std::string::npos);
    const PanelDataset loaded = load_panel(dir.file("stamped.csv"), CsvFormat::WideCsv);
    CHECK(loaded.n_units() == p.n_units());
    CHECK(loaded.cell("AA", 1995, "GDP") == doctest::Approx(100.0));
}
