#include "affect/metrics.hpp"
#include "affect/model.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace affect;

namespace {

/// Independent two-pass evaluation of the concordance formula.
double ccc_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (double v : x) mx += v;
    for (double v : y) my += v;
    mx /= n;
    my /= n;
    double sx = 0, sy = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += (x[i] - mx) * (x[i] - mx);
        sy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    sx /= n;
    sy /= n;
    sxy /= n;
    return 2 * sxy / (sx + sy + (mx - my) * (mx - my));
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (double v : x) mx += v;
    for (double v : y) my += v;
    mx /= n;
    my /= n;
    double sx = 0, sy = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += (x[i] - mx) * (x[i] - mx);
        sy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxy / std::sqrt(sx * sy);
}

}  // namespace

TEST_CASE("ccc basic values") {
    std::vector<double> x{1, 2, 3}, rev{3, 2, 1};
    CHECK(ccc<double>(x, x) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(ccc<double>(x, rev) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("ccc matches the two-pass oracle on random pairs") {
    Rng rng(555);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_u64() % 64);
        std::vector<double> x(n), y(n);
        for (int i = 0; i < n; ++i) {
            x[i] = rng.uniform(-3.0, 3.0);
            y[i] = 0.4 * x[i] + rng.uniform(-1.0, 1.0);
        }
        CHECK(std::abs(ccc<double>(x, y) - ccc_oracle(x, y)) < 1e-12);
    }
}

TEST_CASE("ccc is symmetric in its arguments") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x(16), y(16);
        for (int i = 0; i < 16; ++i) {
            x[i] = rng.uniform(-1, 1);
            y[i] = rng.uniform(-1, 1);
        }
        CHECK(ccc<double>(x, y) == ccc<double>(y, x));
    }
}

TEST_CASE("|ccc| never exceeds |pearson|") {
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(24), y(24);
        for (int i = 0; i < 24; ++i) {
            x[i] = rng.uniform(-2, 2);
            y[i] = rng.uniform(-0.5, 0.5) + 0.8 * x[i] + 0.3;
        }
        CHECK(std::abs(ccc<double>(x, y)) <= std::abs(pearson(x, y)) + 1e-9);
    }
}

TEST_CASE("constant shifts are penalized") {
    std::vector<double> x{0.1, 0.7, 0.4, 0.9, 0.2};
    for (double shift : {0.2, -0.5, 1.0}) {
        std::vector<double> y = x;
        for (double& v : y) v += shift;
        CHECK(ccc<double>(x, y) < 1.0);
    }
}

TEST_CASE("strict mode rejects the degenerate denominator, loss mode guards it") {
    std::vector<double> c1{0.5, 0.5, 0.5}, c2{0.5, 0.5, 0.5};
    CHECK_THROWS_AS(ccc<double>(c1, c2, CccMode::strict), AffectError);
    CHECK(ccc<double>(c1, c2, CccMode::loss) == doctest::Approx(0.0));
}

TEST_CASE("ccc input validation") {
    std::vector<double> x{1, 2}, y{1};
    CHECK_THROWS_AS(ccc<double>(x, y), AffectError);
    std::vector<double> one{1}, oneb{2};
    CHECK_THROWS_AS(ccc<double>(one, oneb), AffectError);
    std::vector<double> bad{1, std::nan("")}, ok{1, 2};
    CHECK_THROWS_AS(ccc<double>(bad, ok), AffectError);
}

TEST_CASE("ccc_loss reference points") {
    MatX<double> p(4, 2), t(4, 2);
    for (int i = 0; i < 4; ++i) {
        t(i, 0) = 0.1 + 0.2 * i;
        t(i, 1) = 0.9 - 0.2 * i;
    }

    SUBCASE("perfect predictions give zero loss") {
        p = t;
        CHECK(ccc_loss<double>(p, t) == doctest::Approx(0.0).epsilon(1e-7));
    }
    SUBCASE("one dimension perfectly discordant gives loss 1") {
        p.col(0) = t.col(0);
        // arousal mirrored around its own mean: ccc = -1
        const double mean = t.col(1).mean();
        for (int i = 0; i < 4; ++i) p(i, 1) = 2 * mean - t(i, 1);
        CHECK(ccc_loss<double>(p, t) == doctest::Approx(1.0).epsilon(1e-7));
    }
    SUBCASE("constant equal series under the guard give loss ~1") {
        p.setConstant(0.5);
        MatX<double> tc = MatX<double>::Constant(4, 2, 0.5);
        CHECK(ccc_loss<double>(p, tc) == doctest::Approx(1.0).epsilon(1e-7));
    }
    SUBCASE("loss is bounded by [0, 2]") {
        Rng rng(3);
        for (int trial = 0; trial < 50; ++trial) {
            MatX<double> q(4, 2);
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 2; ++j) q(i, j) = rng.uniform(0, 1);
            const double loss = ccc_loss<double>(q, t);
            CHECK(loss >= 0.0);
            CHECK(loss <= 2.0);
        }
    }
}

TEST_CASE("ccc_loss gradient matches finite differences") {
    Rng rng(99);
    MatX<double> p(6, 2), t(6, 2);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 2; ++j) {
            p(i, j) = rng.uniform(0.1, 0.9);
            t(i, j) = rng.uniform(0.1, 0.9);
        }
    auto [loss, grad] = ccc_loss_with_grad<double>(p, t);
    CHECK(loss == doctest::Approx(ccc_loss<double>(p, t)).epsilon(1e-12));
    const double h = 1e-6;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 2; ++j) {
            MatX<double> pp = p, pm = p;
            pp(i, j) += h;
            pm(i, j) -= h;
            const double fd = (ccc_loss<double>(pp, t) - ccc_loss<double>(pm, t)) / (2 * h);
            CHECK(grad(i, j) == doctest::Approx(fd).epsilon(1e-5));
        }
}

TEST_CASE("mse basics and oracle") {
    std::vector<double> x{0, 0}, y{1, 1};
    CHECK(mse<double>(x, x) == doctest::Approx(0.0));
    CHECK(mse<double>(x, y) == doctest::Approx(1.0));
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(12), b(12);
        double acc = 0;
        for (int i = 0; i < 12; ++i) {
            a[i] = rng.uniform(-4, 4);
            b[i] = rng.uniform(-4, 4);
            acc += (a[i] - b[i]) * (a[i] - b[i]);
        }
        CHECK(std::abs(mse<double>(a, b) - acc / 12) < 1e-12);
    }
}

TEST_CASE("metric report round-trips through JSON and formats a table") {
    std::vector<std::string> ids{"a", "b"};
    std::vector<MatX<double>> preds, truths;
    Rng rng(21);
    for (int c = 0; c < 2; ++c) {
        MatX<double> p(10, 2), t(10, 2);
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 2; ++j) {
                t(i, j) = rng.uniform(-8, 8);
                p(i, j) = t(i, j) + rng.uniform(-1, 1);
            }
        preds.push_back(p);
        truths.push_back(t);
    }
    MetricReport rep = compute_report(ids, preds, truths, 0.01, -0.02);
    CHECK(rep.n_frames == 20);
    CHECK(rep.per_clip.size() == 2);
    CHECK(rep.ccc_valence > 0.8);

    const auto path = std::filesystem::temp_directory_path() / "affect_report.json";
    save_report(rep, path);
    MetricReport r2 = load_report(path);
    CHECK(r2.ccc_valence == rep.ccc_valence);
    CHECK(r2.per_clip.size() == 2);
    CHECK(r2.baseline_ccc_arousal == rep.baseline_ccc_arousal);
    CHECK(format_report_table(rep).find("CCC") != std::string::npos);
}
