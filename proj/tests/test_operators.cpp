#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "fuzzyifs/metrics.hpp"
#include "fuzzyifs/operators.hpp"
#include "support.hpp"

using namespace fuzzyifs;
using namespace testsupport;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("fuzzyifs_test_" + name)).string();
}

std::uint32_t at(const Grid& g, double x, double y) {
    return g.linear({g.round_index(0, x), g.dim() == 2 ? g.round_index(1, y) : 0u});
}

DiscreteFuzzySet random_normal(const Grid& g, std::mt19937_64& rng, std::size_t count) {
    std::vector<std::pair<std::uint32_t, std::uint8_t>> pairs;
    for (std::size_t i = 0; i < count; ++i)
        pairs.emplace_back(static_cast<std::uint32_t>(rng() % g.size()), static_cast<std::uint8_t>(rng() % 256));
    pairs.emplace_back(static_cast<std::uint32_t>(rng() % g.size()), 255);
    return DiscreteFuzzySet::from_pairs(g, std::move(pairs));
}

} // namespace

TEST(Hutchinson, SierpinskiFromOrigin) {
    const Net net = Net::uniform(Box::unit(2), 4);
    const DiscreteSet w(net.grid(), {at(net.grid(), 0, 0)});
    const DiscreteSet out = hutchinson_step(sierpinski(), net, w);
    const Grid& g = net.grid();
    EXPECT_EQ(out, DiscreteSet(g, {at(g, 0, 0), at(g, 0.5, 0), at(g, 0.25, 0.5)}));
}

TEST(Hutchinson, ConstantMap) {
    const Net net = Net::uniform(Box::unit(2), 10);
    const SystemSpec s = make_system(Box::unit(2), 1, {{"0.33", "0.71"}});
    const DiscreteSet w(net.grid(), {0, 17, 55, 120});
    EXPECT_EQ(hutchinson_step(s, net, w), DiscreteSet(net.grid(), {project_uniform(net, {0.33, 0.71})}));
}

TEST(Hutchinson, NearFixedPointAfterConvergence) {
    const Net net = Net::uniform(Box::unit(2), 64);
    const SystemSpec s = sierpinski();
    DiscreteSet w(net.grid(), {0});
    for (int k = 0; k < 30; ++k)
        w = hutchinson_step(s, net, w);
    EXPECT_LE(hausdorff(w, hutchinson_step(s, net, w)), 2 * net.epsilon_eff());
}

TEST(Hutchinson, PairsAverage) {
    const Net net = Net::uniform(Box::unit(1), 2);
    const SystemSpec s = make_system(Box::unit(1), 2, {{"(x1 + x2)/2"}});
    const DiscreteSet w(net.grid(), {0, 2});
    EXPECT_EQ(generalized_hutchinson_step(s, net, w), DiscreteSet(net.grid(), {0, 1, 2}));
}

TEST(Hutchinson, SingleSourceTuple) {
    const Box box = Box::rect(0, 2.1, 0.1, 2.4);
    const SystemSpec s = make_system(
        box, 2,
        {{"0.1*x1 + 0.15*x2 + 0.04*y2", "0.16*y1 - 0.04*x2 + 0.15*y2 + 1.6"},
         {"0.1*x1 - 0.15*y1 - 0.1*x2 + 0.15*y2 + 1.6", "0.15*x1 + 0.15*y1 + 0.15*x2 + 0.07"}});
    const Net net = Net::uniform(box, 70);
    const DiscreteSet w(net.grid(), {at(net.grid(), 0, 0.1)});
    const DiscreteSet out = generalized_hutchinson_step(s, net, w);
    ASSERT_EQ(out.size(), 2u);
    const Point z[2] = {{0, 0.1}, {0, 0.1}};
    std::uint64_t clamps = 0; // phi_2 lands just below the box
    EXPECT_TRUE(out.contains(net.project_clamped(s.maps[0].apply(z), clamps)));
    EXPECT_TRUE(out.contains(net.project_clamped(s.maps[1].apply(z), clamps)));
    EXPECT_EQ(clamps, 1u);
}

TEST(Hutchinson, ArityTwoIgnoringSecondArgumentMatchesIfs) {
    const SystemSpec g = make_system(Box::unit(2), 2,
                                     {{"0.5*x1", "0.5*y1"}, {"0.5*x1 + 0.5", "0.5*y1"}, {"0.5*x1 + 0.25", "0.5*y1 + 0.5"}});
    const Net net = Net::uniform(Box::unit(2), 32);
    DiscreteSet a(net.grid(), {0}), b = a;
    for (int k = 0; k < 6; ++k) {
        a = hutchinson_step(sierpinski(), net, a);
        b = generalized_hutchinson_step(g, net, b);
        ASSERT_EQ(a, b);
    }
}

TEST(Hutchinson, Budget) {
    const Net net = Net::uniform(Box::rect(0, 0.77, 0, 0.77), 30);
    std::vector<std::uint32_t> all(net.size());
    for (std::uint32_t i = 0; i < all.size(); ++i)
        all[i] = i;
    Limits lim;
    lim.max_evaluations = 1000;
    EXPECT_THROW(generalized_hutchinson_step(gifs_three(), net, DiscreteSet(net.grid(), all), lim), BudgetError);
}

TEST(Hutchinson, ClampsPointsLeavingTheBox) {
    const SystemSpec s = make_system(Box::unit(2), 1, {{"0.5*x + 0.8", "0.5*y"}});
    const Net net = Net::uniform(Box::unit(2), 10);
    StepDiagnostics diag;
    const DiscreteSet out = hutchinson_step(s, net, DiscreteSet(net.grid(), {at(net.grid(), 1, 0)}), &diag);
    EXPECT_EQ(diag.clamp_events, 1u);
    EXPECT_EQ(out, DiscreteSet(net.grid(), {at(net.grid(), 1, 0)}));
}

TEST(Hutchinson, DiscreteContraction) {
    for (const SystemSpec& s : {sierpinski(), fern(), maple()}) {
        const Net net = Net::uniform(Box::unit(2), 64);
        const double alpha = lipschitz_system(s);
        std::mt19937_64 rng(9);
        for (int i = 0; i < 300; ++i) {
            const auto x = static_cast<std::uint32_t>(rng() % net.size());
            const auto y = static_cast<std::uint32_t>(rng() % net.size());
            const double h = hausdorff(hutchinson_step(s, net, DiscreteSet(net.grid(), {x})),
                                       hutchinson_step(s, net, DiscreteSet(net.grid(), {y})));
            ASSERT_LE(h, 2 * net.epsilon_eff() + alpha * net.grid().distance(x, y) + 1e-12);
        }
    }
}

TEST(Table, HandEnumeration) {
    const Net net = Net::uniform(Box::unit(1), 2);
    const SystemSpec s = make_system(Box::unit(1), 1, {{"0.5*x"}});
    const auto table = generate_inverse_table(s, net, TableBackend::ram);
    const std::vector<TableRecord> want{{1, {0}, 0}, {1, {1}, 1}, {1, {2}, 1}};
    EXPECT_EQ(table.records(), want);
    EXPECT_EQ(table.size(), 3u);
}

TEST(Table, RecordCount) {
    const Net net = Net::uniform(Box::unit(2), 12);
    const auto table = generate_inverse_table(squares_fuzzy(), net, TableBackend::ram);
    EXPECT_EQ(table.size(), 4u * net.size());
    const Net small = Net::uniform(Box::rect(0, 0.77, 0, 0.77), 5);
    EXPECT_EQ(generate_inverse_table(gifs_three(), small, TableBackend::ram).size(), 3u * 36 * 36);
}

TEST(Table, BackendsAgree) {
    const std::string path = temp_path("backends.phiinv");
    for (const SystemSpec& s : {squares_fuzzy(), gifs_three()}) {
        const Net net = Net::uniform(s.box, s.arity == 1 ? 20 : 6);
        const auto ram = generate_inverse_table(s, net, TableBackend::ram);
        Limits tiny;
        tiny.file_chunk_records = 97; // force many regeneration passes
        const auto file = generate_inverse_table(s, net, TableBackend::file, path, tiny);
        EXPECT_EQ(ram.records(), file.records());
        EXPECT_EQ(InverseImageTable::open(path, net.grid()).records(), ram.records());
    }
    std::filesystem::remove(path);
}

TEST(Table, FileLayout) {
    const std::string path = temp_path("layout.phiinv");
    const Net net = Net::uniform(Box::unit(1), 2);
    const SystemSpec s = make_system(Box::unit(1), 1, {{"0.5*x"}});
    generate_inverse_table(s, net, TableBackend::file, path);
    std::ifstream in(path, std::ios::binary);
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    // header: magic, version 1, L=1, m=1, d=1, n=2, count=3; then records (j, source, target)
    const std::vector<unsigned char> want{
        'P', 'H', 'I', 'I', 'N', 'V', '0', '1', 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0,
        3, 0, 0, 0, 0, 0, 0, 0,                                   //
        1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0,                       //
        1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0,                       //
        1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0};
    EXPECT_EQ(bytes, want);
    std::filesystem::remove(path);
}

TEST(Table, OpenRejectsOtherNets) {
    const std::string path = temp_path("other.phiinv");
    const Net net = Net::uniform(Box::unit(2), 8);
    generate_inverse_table(squares_fuzzy(), net, TableBackend::file, path);
    EXPECT_THROW(InverseImageTable::open(path, Grid(Box::unit(2), 9)), Error);
    EXPECT_THROW(InverseImageTable::open(temp_path("missing.phiinv"), net.grid()), IoError);
    std::filesystem::remove(path);
}

TEST(Table, RecordBudget) {
    const Net net = Net::uniform(Box::unit(2), 50);
    Limits lim;
    lim.max_ram_records = 1000;
    EXPECT_THROW(generate_inverse_table(squares_fuzzy(), net, TableBackend::ram, {}, lim), BudgetError);
}

TEST(FuzzyStep, HandEnumeration) {
    const Net net = Net::uniform(Box::unit(1), 2);
    SystemSpec s = make_system(Box::unit(1), 1, {{"0.5*x"}});
    s.grey = {GreyMap::identity()};
    const auto table = generate_inverse_table(s, net, TableBackend::ram);
    const auto u = DiscreteFuzzySet::from_pairs(net.grid(), {{2, 255}});
    const auto v = fuzzy_step(s, table, u);
    EXPECT_EQ(v.points, (std::vector<std::uint32_t>{1}));
    EXPECT_EQ(v.levels, (std::vector<std::uint8_t>{255}));
    EXPECT_EQ(v.level_at(0), 0); // no preimage carries mass
}

TEST(FuzzyStep, CrispReduction) {
    SystemSpec s = sierpinski();
    s.grey.assign(3, GreyMap::identity());
    const Net net = Net::uniform(Box::unit(2), 40);
    const auto table = generate_inverse_table(s, net, TableBackend::ram);
    DiscreteSet k(net.grid(), {at(net.grid(), 0.5, 0.5)});
    auto u = characteristic(k);
    for (int i = 0; i < 6; ++i) {
        k = hutchinson_step(s, net, k);
        u = fuzzy_step(s, table, u);
        ASSERT_EQ(u, characteristic(k));
    }
}

TEST(FuzzyStep, GeneralizedCrispReduction) {
    SystemSpec s = gifs_three();
    s.grey.assign(3, GreyMap::identity());
    const Net net = Net::uniform(s.box, 12);
    const auto table = generate_inverse_table(s, net, TableBackend::ram);
    DiscreteSet k(net.grid(), {0});
    auto u = characteristic(k);
    for (int i = 0; i < 4; ++i) {
        k = generalized_hutchinson_step(s, net, k);
        u = generalized_fuzzy_step(s, table, u);
        ASSERT_EQ(u, characteristic(k));
    }
}

TEST(FuzzyStep, MinOverTuple) {
    const Net net = Net::uniform(Box::unit(1), 4);
    SystemSpec s = make_system(Box::unit(1), 2, {{"0.5*(x2 - x1) + 0.5"}});
    s.grey = {GreyMap::identity()};
    const auto table = generate_inverse_table(s, net, TableBackend::ram);
    // u(0)=0.3, u(1)=0.8, u(0.5)=1; only (0, 1) reaches x=1 with both memberships positive
    const auto u = DiscreteFuzzySet::from_pairs(net.grid(), {{0, quantize(0.3)}, {4, quantize(0.8)}, {2, 255}});
    const auto v = generalized_fuzzy_step(s, table, u);
    EXPECT_EQ(v.level_at(4), quantize(0.3));
}

TEST(FuzzyStep, StepGreyMapClosedOnQuarterLevels) {
    SystemSpec s = gifs_three();
    s.grey = {step_grey(), GreyMap::identity(), GreyMap::identity()};
    const GreyTable lut = grey_tables(s);
    const std::set<int> allowed{0, 64, 128, 191, 255};
    for (int level : allowed)
        for (const auto& row : lut)
            EXPECT_TRUE(allowed.count(row[level])) << level;
    const Net net = Net::uniform(s.box, 10);
    const auto table = generate_inverse_table(s, net, TableBackend::ram);
    std::mt19937_64 rng(4);
    const std::uint8_t pick[] = {0, 64, 128, 191, 255};
    std::vector<std::pair<std::uint32_t, std::uint8_t>> pairs{{5, 255}};
    for (int i = 0; i < 40; ++i)
        pairs.emplace_back(static_cast<std::uint32_t>(rng() % net.size()), pick[rng() % 5]);
    const auto v = generalized_fuzzy_step(s, table, DiscreteFuzzySet::from_pairs(net.grid(), pairs));
    for (auto l : v.levels)
        EXPECT_TRUE(allowed.count(l));
}

TEST(FuzzyStep, Monotone) {
    SystemSpec s = squares_fuzzy();
    const Net net = Net::uniform(Box::unit(2), 16);
    const auto table = generate_inverse_table(s, net, TableBackend::ram);
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        const auto u = random_normal(net.grid(), rng, 30);
        auto dense = u.to_dense();
        for (auto& l : dense)
            if (rng() % 3 == 0)
                l = static_cast<std::uint8_t>(l + (255 - l) / 2);
        const auto w = DiscreteFuzzySet::from_dense(net.grid(), dense);
        const auto fu = fuzzy_step(s, table, u).to_dense(), fw = fuzzy_step(s, table, w).to_dense();
        for (std::size_t i = 0; i < fu.size(); ++i)
            ASSERT_LE(fu[i], fw[i]);
    }
}

TEST(FuzzyStep, SupportInsideImageOfNet) {
    SystemSpec s = squares_fuzzy();
    const Net net = Net::uniform(Box::unit(2), 16);
    std::vector<std::uint32_t> all(net.size());
    for (std::uint32_t i = 0; i < all.size(); ++i)
        all[i] = i;
    const DiscreteSet image = hutchinson_step(s, net, DiscreteSet(net.grid(), all));
    const auto table = generate_inverse_table(s, net, TableBackend::ram);
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial)
        for (auto p : fuzzy_step(s, table, random_normal(net.grid(), rng, 60)).points)
            ASSERT_TRUE(image.contains(p));
}

TEST(FuzzyStep, BackendsBitExact) {
    const std::string path = temp_path("fuzzy.phiinv");
    for (const SystemSpec& base : {squares_fuzzy(), gifs_three()}) {
        SystemSpec s = base;
        if (s.grey.empty())
            s.grey = {step_grey(), GreyMap::identity(), GreyMap::identity()};
        const Net net = Net::uniform(s.box, s.arity == 1 ? 24 : 7);
        const auto ram = generate_inverse_table(s, net, TableBackend::ram);
        const auto file = generate_inverse_table(s, net, TableBackend::file, path);
        std::mt19937_64 rng(14);
        for (int trial = 0; trial < 10; ++trial) {
            const auto u = random_normal(net.grid(), rng, 25);
            ASSERT_EQ(generalized_fuzzy_step(s, ram, u), generalized_fuzzy_step(s, file, u));
        }
    }
    std::filesystem::remove(path);
}

TEST(FuzzyStep, RejectsNonNormalAndMismatch) {
    SystemSpec s = squares_fuzzy();
    const Net net = Net::uniform(Box::unit(2), 8);
    const auto table = generate_inverse_table(s, net, TableBackend::ram);
    EXPECT_THROW(fuzzy_step(s, table, DiscreteFuzzySet::from_pairs(net.grid(), {{3, 200}})), Error);
    const Grid other(Box::unit(2), 9);
    EXPECT_THROW(fuzzy_step(s, table, DiscreteFuzzySet::from_pairs(other, {{3, 255}})), Error);
}

TEST(FuzzyStep, AleatoryNet) {
    SystemSpec s = squares_fuzzy();
    const Net net = Net::aleatory(Box::unit(2), 30, 400, 77);
    const auto table = generate_inverse_table(s, net, TableBackend::ram);
    EXPECT_EQ(table.size(), 4 * net.size());
    auto u = characteristic(DiscreteSet(net.grid(), {net.point(0)}));
    for (int i = 0; i < 5; ++i) {
        u = fuzzy_step(s, table, u);
        for (auto p : u.points)
            ASSERT_TRUE(net.contains(p));
    }
}
