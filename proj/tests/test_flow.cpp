#include "affect/flow.hpp"

#include <doctest.h>

#include <cmath>

using namespace affect;

namespace {

/// Unit-amplitude Gaussian blob on an n x n canvas.
ArrXX<double> gaussian_blob(int n, double cx, double cy, double sigma) {
    ArrXX<double> img(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            img(y, x) = std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) /
                                 (2.0 * sigma * sigma));
    return img;
}

}  // namespace

TEST_CASE("identical frames yield exactly zero flow") {
    ArrXX<double> a = gaussian_blob(96, 47.5, 47.5, 8.0);
    auto f = horn_schunck<double>(a, a, 1.0, 200, 0.0);
    CHECK(f.u.abs().maxCoeff() < 1e-6);
    CHECK(f.v.abs().maxCoeff() < 1e-6);
}

TEST_CASE("translation oracle: 1 px shift is recovered") {
    // The data-term coupling at alpha=1 on [0,1] intensities is weak, so the
    // oracle lives on a compact canvas where 200 iterations genuinely
    // converge; the blob then covers most of the field.
    const int n = 10;
    ArrXX<double> a = gaussian_blob(n, 4.5, 4.5, 2.0);
    ArrXX<double> b = gaussian_blob(n, 5.5, 4.5, 2.0);
    auto f = horn_schunck<double>(a, b, 1.0, 200, 0.0);
    const double mean_u = f.u.mean();
    const double mean_av = f.v.abs().mean();
    CHECK(mean_u > 0.7);
    CHECK(mean_u < 1.3);
    CHECK(mean_av < 0.2);

    SUBCASE("reversed order flips the recovered direction") {
        auto r = horn_schunck<double>(b, a, 1.0, 200, 0.0);
        CHECK(r.u.mean() < -0.7);
        CHECK(r.u.mean() > -1.3);
    }
}

TEST_CASE("textureless frames carry no motion signal") {
    ArrXX<double> a = ArrXX<double>::Constant(32, 32, 0.37);
    ArrXX<double> b = ArrXX<double>::Constant(32, 32, 0.37);
    auto f = horn_schunck<double>(a, b, 1.0, 50, 0.0);
    CHECK(f.u.abs().maxCoeff() < 1e-9);
    CHECK(f.v.abs().maxCoeff() < 1e-9);
}

TEST_CASE("pipeline-scale sanity: flow points the right way at 96x96") {
    ArrXX<double> a = gaussian_blob(96, 47.5, 47.5, 4.0);
    ArrXX<double> b = gaussian_blob(96, 48.5, 47.5, 4.0);
    auto f = horn_schunck<double>(a, b, 1.0, 200, 0.0);
    double wu = 0, wv = 0, wsum = 0;
    for (int y = 0; y < 96; ++y)
        for (int x = 0; x < 96; ++x) {
            wu += a(y, x) * f.u(y, x);
            wv += a(y, x) * std::abs(f.v(y, x));
            wsum += a(y, x);
        }
    CHECK(wu / wsum > 0.2);       // clearly positive motion along +x
    CHECK(wv / wsum < 0.1);       // and nearly none along y
}

TEST_CASE("residual trace is nonincreasing after the first iterations") {
    ArrXX<double> a = gaussian_blob(48, 23.5, 23.5, 4.0);
    ArrXX<double> b = gaussian_blob(48, 24.5, 23.5, 4.0);
    auto f = horn_schunck<double>(a, b, 1.0, 200, 0.0);
    REQUIRE(f.residual_trace.size() == 200);
    for (size_t i = 5; i + 1 < f.residual_trace.size(); ++i)
        CHECK(f.residual_trace[i + 1] <= f.residual_trace[i] + 1e-9);
}

TEST_CASE("eps stopping ends the iteration early") {
    ArrXX<double> a = gaussian_blob(32, 15.5, 15.5, 3.0);
    ArrXX<double> b = gaussian_blob(32, 16.5, 15.5, 3.0);
    auto f = horn_schunck<double>(a, b, 1.0, 200, 1e-3);
    CHECK(f.iterations_run < 200);
    CHECK(f.residual < 1e-3);
}

TEST_CASE("horn_schunck input validation") {
    ArrXX<double> a = ArrXX<double>::Zero(8, 8);
    ArrXX<double> b = ArrXX<double>::Zero(8, 9);
    CHECK_THROWS_AS(horn_schunck<double>(a, b, 1.0), AffectError);
    ArrXX<double> c = ArrXX<double>::Constant(8, 8, std::nan(""));
    CHECK_THROWS_AS(horn_schunck<double>(a, c, 1.0), AffectError);
    CHECK_THROWS_AS(horn_schunck<double>(a, a, 0.0), AffectError);
}

TEST_CASE("encode_flow formula cases") {
    FlowField<double> f;
    f.u = ArrXX<double>::Zero(4, 4);
    f.v = ArrXX<double>::Zero(4, 4);

    SUBCASE("zero flow maps to (0.5, 0.5, 0)") {
        Image img = encode_flow<double>(f, 5.0);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) {
                CHECK(img.at(y, x, 0) == 128);
                CHECK(img.at(y, x, 1) == 128);
                CHECK(img.at(y, x, 2) == 0);
            }
    }
    SUBCASE("u at max_mag maps to (1.0, 0.5, 1.0)") {
        f.u.setConstant(5.0);
        Image img = encode_flow<double>(f, 5.0);
        CHECK(img.at(0, 0, 0) == 255);
        CHECK(img.at(0, 0, 1) == 128);
        CHECK(img.at(0, 0, 2) == 255);
    }
    SUBCASE("u far below range clamps to 0") {
        f.u.setConstant(-15.0);
        Image img = encode_flow<double>(f, 5.0);
        CHECK(img.at(0, 0, 0) == 0);
    }
    SUBCASE("max_mag must be positive") {
        CHECK_THROWS_AS(encode_flow<double>(f, 0.0), AffectError);
    }
}

TEST_CASE("encode_flow is monotone inside the clamp region") {
    FlowField<double> f;
    f.u = ArrXX<double>::Zero(1, 5);
    f.v = ArrXX<double>::Zero(1, 5);
    for (int i = 0; i < 5; ++i) f.u(0, i) = -4.0 + 2.0 * i;  // -4..4, max_mag 5
    Image img = encode_flow<double>(f, 5.0);
    for (int i = 1; i < 5; ++i) CHECK(img.at(0, i, 0) > img.at(0, i - 1, 0));
}

TEST_CASE("flow_sequence pads to the input length") {
    std::vector<Image> crops;
    for (int i = 0; i < 10; ++i) {
        Image img(96, 96, 3, 0);
        // a moving bright square
        for (int y = 30; y < 50; ++y)
            for (int x = 30 + 2 * i; x < 50 + 2 * i; ++x)
                for (int c = 0; c < 3; ++c) img.at(y, x, c) = 255;
        crops.push_back(img);
    }
    FlowConfig cfg;
    cfg.max_iters = 30;
    auto enc = flow_sequence<float>(crops, cfg);
    REQUIRE(enc.size() == 10);
    CHECK(enc[0].data == enc[1].data);  // front padding duplicates the first

    SUBCASE("identical crops give the zero-flow encoding everywhere") {
        std::vector<Image> same(5, crops[0]);
        auto e = flow_sequence<float>(same, cfg);
        REQUIRE(e.size() == 5);
        for (const auto& img : e)
            for (int y = 0; y < 96; ++y)
                for (int x = 0; x < 96; ++x) {
                    CHECK(img.at(y, x, 0) == 128);
                    CHECK(img.at(y, x, 1) == 128);
                    CHECK(img.at(y, x, 2) == 0);
                }
    }
    SUBCASE("too few crops is an error") {
        std::vector<Image> one(1, crops[0]);
        CHECK_THROWS_AS(flow_sequence<float>(one, cfg), AffectError);
    }
}

TEST_CASE("reversed crop order negates the recovered u field") {
    std::vector<Image> crops;
    for (int i = 0; i < 3; ++i) {
        Image img(96, 96, 1, 0);
        for (int y = 0; y < 96; ++y)
            for (int x = 0; x < 96; ++x) {
                const double d2 = (x - 40.0 - 3 * i) * (x - 40.0 - 3 * i) + (y - 48.0) * (y - 48.0);
                img.at(y, x, 0) = static_cast<uint8_t>(255.0 * std::exp(-d2 / (2 * 36.0)));
            }
        crops.push_back(img);
    }
    FlowConfig cfg;
    cfg.max_iters = 120;
    cfg.eps = 0.0;
    auto gray = [&](const Image& im) { return to_intensity<double>(im); };
    auto fwd = horn_schunck<double>(gray(crops[0]), gray(crops[1]), cfg.alpha, cfg.max_iters, 0.0);
    auto rev = horn_schunck<double>(gray(crops[1]), gray(crops[0]), cfg.alpha, cfg.max_iters, 0.0);
    CHECK(fwd.u.mean() > 0.0);
    CHECK(rev.u.mean() < 0.0);
    CHECK(fwd.u.mean() + rev.u.mean() == doctest::Approx(0.0).epsilon(0.3));
}
