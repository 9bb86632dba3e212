#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fuzzyifs/systems.hpp"

using namespace fuzzyifs;

namespace {

MapSpec affine_map(const Box& box, int arity, std::vector<std::string> coords) {
    MapSpec m = MapSpec::parse(box.dim, arity, coords);
    auto form = detect_affine(m, box);
    if (form)
        m.set_affine(*form);
    return m;
}

SystemSpec make_system(const Box& box, int arity, const std::vector<std::vector<std::string>>& maps) {
    SystemSpec s;
    s.box = box;
    s.arity = arity;
    for (const auto& c : maps)
        s.maps.push_back(affine_map(box, arity, c));
    return s;
}

AffineForm random_form(std::mt19937_64& rng, int arity) {
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    AffineForm f;
    f.dim = 2;
    f.arity = arity;
    for (int i = 0; i < 4 * arity; ++i)
        f.matrix.push_back(u(rng));
    f.offset = {u(rng), u(rng)};
    return f;
}

} // namespace

TEST(Lipschitz, FernFirstMap) {
    const MapSpec m = affine_map(Box::unit(2), 1, {"0.856*x + 0.0414*y + 0.07", "-0.0205*x + 0.858*y + 0.147"});
    EXPECT_NEAR(lipschitz_affine(m), 0.8680563766, 1e-6);
}

TEST(Lipschitz, Scaling) {
    const MapSpec m = affine_map(Box::unit(2), 1, {"0.5*x", "0.5*y"});
    EXPECT_EQ(lipschitz_affine(m), 0.5);
}

TEST(Lipschitz, OneDimensionalArityTwo) {
    const MapSpec m = affine_map(Box::unit(1), 2, {"0.25*x1 + 0.2*x2"});
    EXPECT_DOUBLE_EQ(lipschitz_affine(m), 0.45);
}

TEST(Lipschitz, MapleSystem) {
    const SystemSpec s = make_system(Box::unit(2), 1,
                                     {{"0.8*x + 0.1", "0.8*y + 0.04"},
                                      {"0.5*x + 0.25", "0.5*y + 0.4"},
                                      {"0.355*x - 0.355*y + 0.266", "0.355*x + 0.355*y + 0.078"},
                                      {"0.355*x + 0.355*y + 0.378", "-0.355*x + 0.355*y + 0.434"}});
    EXPECT_DOUBLE_EQ(lipschitz_system(s), 0.8);
}

TEST(Lipschitz, GifsExample) {
    const SystemSpec s = make_system(
        Box::rect(0, 2.1, 0.1, 2.4), 2,
        {{"0.1*x1 + 0.15*x2 + 0.04*y2", "0.16*y1 - 0.04*x2 + 0.15*y2 + 1.6"},
         {"0.1*x1 - 0.15*y1 - 0.1*x2 + 0.15*y2 + 1.6", "0.15*x1 + 0.15*y1 + 0.15*x2 + 0.07"}});
    const double alpha = lipschitz_system(s);
    EXPECT_NEAR(alpha, 0.4209556069, 1e-3);
    // exact supremum from an independent dense-grid + Newton oracle
    EXPECT_NEAR(alpha, 0.42126540805561535, 1e-9);
}

TEST(Lipschitz, ProductSphereClosedFormCase) {
    // (0.25 x1 + 0.2 y2, 0.25 y1 + 0.2 y2): sup is 0.25 + 0.2*sqrt(2)
    const MapSpec m = affine_map(Box::rect(0, 0.77, 0, 0.77), 2, {"0.25*x1 + 0.2*y2", "0.25*y1 + 0.2*y2"});
    EXPECT_NEAR(lipschitz_affine(m), 0.25 + 0.2 * std::sqrt(2.0), 1e-9);
}

TEST(Lipschitz, SingleMapSystem) {
    const SystemSpec s = make_system(Box::unit(2), 1, {{"0.3*x - 0.1*y", "0.2*y + 0.1"}});
    EXPECT_EQ(lipschitz_system(s), lipschitz_affine(s.maps[0]));
}

TEST(Lipschitz, NonAffineNeedsOverride) {
    MapSpec m = affine_map(Box::unit(2), 1, {"0.5*x^2", "0.5*y"});
    EXPECT_FALSE(m.affine().has_value());
    EXPECT_THROW(lipschitz_map(m, Box::unit(2)), Error);
    m.set_lipschitz_override(0.9);
    EXPECT_EQ(lipschitz_map(m, Box::unit(2)), 0.9);
}

TEST(Lipschitz, SampledRatioBelowConstant) {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        const AffineForm f = random_form(rng, 1);
        const MapSpec m = MapSpec::from_affine(f);
        const double lip = lipschitz_affine(f);
        double best = 0;
        for (int i = 0; i < 100000 / 20; ++i) {
            const Point p{g(rng), g(rng)}, q{g(rng), g(rng)};
            best = std::max(best, euclidean(m.apply(p), m.apply(q)) / euclidean(p, q));
        }
        EXPECT_LE(best, lip + 1e-6);
        EXPECT_GT(best, 0.95 * lip);
    }
}

TEST(Lipschitz, ArityTwoBetweenSamplesAndTriangleBound) {
    std::mt19937_64 rng(22);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        const AffineForm f = random_form(rng, 2);
        const MapSpec m = MapSpec::from_affine(f);
        const double lip = lipschitz_affine(f);
        double triangle = 0;
        for (int b = 0; b < 2; ++b)
            triangle += detail::spectral_norm_2x2(f.at(0, 2 * b), f.at(0, 2 * b + 1), f.at(1, 2 * b), f.at(1, 2 * b + 1));
        double best = 0;
        for (int i = 0; i < 100000 / 20; ++i) {
            const Point a[2] = {{g(rng), g(rng)}, {g(rng), g(rng)}};
            const Point c[2] = {{g(rng), g(rng)}, {g(rng), g(rng)}};
            const double dm = std::max(euclidean(a[0], c[0]), euclidean(a[1], c[1]));
            best = std::max(best, euclidean(m.apply(a), m.apply(c)) / dm);
        }
        EXPECT_LE(best, lip + 1e-9);
        EXPECT_LE(lip, triangle + 1e-12);
    }
}

TEST(Resolution, TableValues) {
    EXPECT_NEAR(predicted_resolution(2.5e-4, 18, 0.5, std::sqrt(2.0)), 0.002505394797, 1e-9);
    EXPECT_NEAR(predicted_resolution(2.5e-4, 18, 0.8, std::sqrt(2.0)), 0.03172620668, 1e-8);
    EXPECT_NEAR(predicted_resolution(2.5e-4, 24, 0.8680563766, std::sqrt(2.0)), 0.05686141346, 1e-9);
    EXPECT_NEAR(predicted_resolution(0.0, 4000, 0.5, std::sqrt(2.0)), 0.0, 1e-300);
}

TEST(Resolution, Plan) {
    const ResolutionPlan p = plan_resolution(0.01, 0.5, std::sqrt(2.0), 0.5);
    EXPECT_DOUBLE_EQ(p.epsilon, 5e-4);
    EXPECT_EQ(p.iterations, 9);
    EXPECT_TRUE(p.feasible);
    EXPECT_FALSE(p.zero_iterations);

    const ResolutionPlan z = plan_resolution(4.0, 0.5, 1.5, 0.7);
    EXPECT_EQ(z.iterations, 0);
    EXPECT_TRUE(z.zero_iterations);

    EXPECT_THROW(plan_resolution(0.01, 1.0, 1.0, 0.5), Error);
    EXPECT_THROW(plan_resolution(0.01, 0.5, 1.0, 1.0), Error);
    EXPECT_THROW(plan_resolution(-1.0, 0.5, 1.0, 0.5), Error);
}

TEST(Resolution, FeasiblePlansMeetTheBound) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int i = 0; i < 10000; ++i) {
        const double delta = std::pow(10.0, -6 * u(rng)), theta = u(rng), alpha = u(rng), D = 3 * u(rng);
        const ResolutionPlan p = plan_resolution(delta, theta, D, alpha);
        if (p.feasible) {
            ASSERT_LE(predicted_resolution(p.epsilon, p.iterations, alpha, D), delta);
        }
    }
}

TEST(Validate, AdmissibleFuzzySystem) {
    SystemSpec s = make_system(Box::unit(2), 1,
                               {{"0.5*x", "0.5*y"}, {"0.5*x + 0.5", "0.5*y"}, {"0.5*x", "0.5*y + 0.5"},
                                {"0.5*x + 0.5", "0.5*y + 0.5"}});
    s.grey.push_back(GreyMap(PiecewiseMap({{0.0, 0.0}, {0.2505, 0.25}, {0.505, 0.5}, {0.7505, 0.75}})));
    for (int j = 0; j < 3; ++j)
        s.grey.push_back(GreyMap::identity());
    const ValidationReport r = validate_system(s);
    EXPECT_TRUE(r.ok());
    EXPECT_EQ(r.alpha, 0.5);
    EXPECT_TRUE(r.warnings.empty());
}

TEST(Validate, NoGreyMapReachesOne) {
    SystemSpec s = make_system(Box::unit(2), 1, {{"0.5*x", "0.5*y"}, {"0.5*x + 0.5", "0.5*y"}});
    s.grey = {GreyMap(parse_expression("0.9*t", {"t"})), GreyMap(parse_expression("0.5*t", {"t"}))};
    EXPECT_FALSE(validate_system(s).ok());
}

TEST(Validate, GreyMapMustFixZeroAndIncrease) {
    SystemSpec s = make_system(Box::unit(2), 1, {{"0.5*x", "0.5*y"}});
    s.grey = {GreyMap(parse_expression("0.5*t + 0.5", {"t"}))};
    EXPECT_FALSE(validate_system(s).ok());
    s = make_system(Box::unit(2), 1, {{"0.5*x", "0.5*y"}, {"0.5*x + 0.5", "0.5*y"}});
    s.grey = {GreyMap::identity(), GreyMap(parse_expression("4*t*(1 - t)", {"t"}))};
    EXPECT_FALSE(validate_system(s).ok());
    s.grey[1] = GreyMap(parse_expression("t^2", {"t"}));
    EXPECT_TRUE(validate_system(s).ok());
}

TEST(Validate, NotAContraction) {
    const SystemSpec s = make_system(Box::unit(2), 1, {{"0.5*x", "0.5*y"}, {"x", "0.5*y"}});
    const ValidationReport r = validate_system(s);
    EXPECT_FALSE(r.ok());
    EXPECT_EQ(r.alpha, 1.0);
}

TEST(Validate, ImagesLeavingTheBoxAreWarnings) {
    const SystemSpec s = make_system(Box::unit(2), 1, {{"0.5*x + 0.7", "0.5*y"}});
    const ValidationReport r = validate_system(s);
    EXPECT_TRUE(r.ok());
    EXPECT_FALSE(r.warnings.empty());
}
