#include "cocycle/symbolic.hpp"
#include "cocycle/walk.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace cocycle;

namespace {

const FixedAngle golden = resolve_alpha(AlphaSpec::golden());

const DeskSchedule& demo()
{
    static const DeskSchedule d = make_desk_schedule({{2, 6}, {30, 300}}, BoundSpec::constant(2));
    return d;
}

const DeskSchedule& small()
{
    static const DeskSchedule d = make_desk_schedule({{2, 3}}, BoundSpec::constant(2));
    return d;
}

SymbolWindow random_window(std::mt19937_64& rng, std::int64_t radius)
{
    return sample_omega(radius, rng());
}

} // namespace

TEST_CASE("sample_omega", "[symbolic]")
{
    SECTION("radius 0 holds one symbol")
    {
        const auto w = sample_omega(0, 1);
        REQUIRE(w.radius() == 0);
        REQUIRE((w.at(0) == 1 || w.at(0) == -1));
        REQUIRE_THROWS_AS(w.at(1), WindowExceeded);
    }
    SECTION("deterministic in seed, consistent across radii")
    {
        REQUIRE(sample_omega(10, 42) == sample_omega(10, 42));
        const auto a = sample_omega(5, 42), b = sample_omega(40, 42);
        for (std::int64_t s = -5; s <= 5; ++s) REQUIRE(a.at(s) == b.at(s));
    }
    SECTION("fair coin at coordinate 0 over 1e6 seeds")
    {
        double sum = 0;
        for (std::uint64_t seed = 0; seed < 1000000; ++seed) sum += omega_symbol(seed, 0);
        REQUIRE(std::fabs(sum / 1e6) < 0.004);
    }
    SECTION("coordinates look independent")
    {
        double corr = 0;
        for (std::uint64_t seed = 0; seed < 200000; ++seed) corr += omega_symbol(seed, 0) * omega_symbol(seed, 1);
        REQUIRE(std::fabs(corr / 2e5) < 4 / std::sqrt(2e5));
    }
}

TEST_CASE("apply_T", "[symbolic]")
{
    SECTION("two steps from theta = 0 give net shift 0")
    {
        SymbolicPoint p{FixedAngle::zero(), sample_omega(4, 3)};
        p = apply_T(p, golden);
        REQUIRE(p.window.offset() == 1);
        p = apply_T(p, golden);
        REQUIRE(p.window.offset() == 0);
        REQUIRE(p.theta == advance(FixedAngle::zero(), golden, 2));
    }
    SECTION("radius 0 cannot shift")
    {
        SymbolicPoint p{FixedAngle::zero(), sample_omega(0, 3)};
        REQUIRE_THROWS_AS(apply_T(p, golden), WindowExceeded);
        try {
            apply_T(p, golden);
        } catch (const WindowExceeded& e) {
            REQUIRE(e.height() == 1);
            REQUIRE(e.radius() == 0);
        }
    }
    SECTION("n-fold iteration equals one shift by phi_n")
    {
        std::mt19937_64 rng(8);
        for (int trial = 0; trial < 200; ++trial) {
            const FixedAngle theta{(static_cast<u128>(rng()) << 64) | rng()};
            const std::uint64_t n = 1 + rng() % 1000;
            const auto omega = random_window(rng, 64);
            SymbolicPoint p{theta, omega};
            for (std::uint64_t k = 0; k < n; ++k) p = apply_T(p, golden);
            const auto h = run_walk(theta, golden, n, {{n}, 0}).checkpoints.at(0).height;
            REQUIRE(p.theta == advance(theta, golden, n));
            REQUIRE(p.window.offset() == h);
            SymbolWindow direct = omega;
            direct.shift(h);
            REQUIRE(p.window == direct);
            for (std::int64_t s = -10; s <= 10; ++s) REQUIRE(p.window.at(s) == omega.at(s + h));
        }
    }
}

TEST_CASE("apply_pi_E", "[symbolic]")
{
    std::mt19937_64 rng(12);
    SECTION("examples")
    {
        const auto w = sample_omega(8, 77);
        REQUIRE(apply_pi_E(w, AllHeights{}) == w);
        const auto flipped = apply_pi_E(w, NoHeights{});
        for (std::int64_t s = -8; s <= 8; ++s) REQUIRE(flipped.at(s) == -w.at(s));
        const auto pe = apply_pi_E(w, small().set);
        REQUIRE(pe.at(3) == w.at(3));
        REQUIRE(pe.at(-5) == w.at(-5));
        REQUIRE(pe.at(0) == -w.at(0));
        REQUIRE(pe.at(1) == -w.at(1));
        REQUIRE(pe.at(6) == -w.at(6));
    }
    SECTION("involution on 1e5 random windows, including shifted ones")
    {
        for (int i = 0; i < 100000; ++i) {
            auto w = random_window(rng, 12);
            w.shift(static_cast<std::int64_t>(rng() % 9) - 4);
            REQUIRE(apply_pi_E(apply_pi_E(w, demo().set), demo().set) == w);
        }
    }
    SECTION("acts in current coordinates")
    {
        auto w = sample_omega(10, 5);
        w.shift(3);
        const auto pe = apply_pi_E(w, small().set);
        for (std::int64_t s = -7; s <= 7; ++s) {
            REQUIRE(pe.at(s) == (small().set.contains(s) ? w.at(s) : -w.at(s)));
        }
    }
}

TEST_CASE("apply_S", "[symbolic]")
{
    std::mt19937_64 rng(31);
    SECTION("E = Z gives T")
    {
        for (int i = 0; i < 100; ++i) {
            SymbolicPoint p{FixedAngle{(static_cast<u128>(rng()) << 64) | rng()}, random_window(rng, 20)};
            REQUIRE(apply_S(p, golden, AllHeights{}).window == apply_T(p, golden).window);
        }
    }
    SECTION("theta coordinate is a rotation")
    {
        SymbolicPoint p{sample_theta(1, 1), sample_omega(20, 1)};
        REQUIRE(apply_S(p, golden, demo().set).theta == advance(p.theta, golden, 1));
    }
    SECTION("conjugacy S^n = pi T^n pi for n <= 1000 on 1000 points")
    {
        for (int i = 0; i < 1000; ++i) {
            const FixedAngle theta = sample_theta(2, static_cast<std::uint64_t>(i));
            const auto omega = sample_omega(default_radius(1000), rng());
            const std::uint64_t n = 1 + rng() % 1000;
            SymbolicPoint s{theta, omega};
            for (std::uint64_t k = 0; k < n; ++k) s = apply_S(s, golden, small().set);
            SymbolicPoint t{theta, apply_pi_E(omega, small().set)};
            for (std::uint64_t k = 0; k < n; ++k) t = apply_T(t, golden);
            t.window = apply_pi_E(t.window, small().set);
            REQUIRE(s.theta == t.theta);
            REQUIRE(s.window == t.window);
        }
    }
    SECTION("symbol at phi_n after S^n")
    {
        for (int i = 0; i < 2000; ++i) {
            const FixedAngle theta = sample_theta(4, static_cast<std::uint64_t>(i));
            const auto omega = sample_omega(60, rng());
            const std::uint64_t n = 1 + rng() % 200;
            SymbolicPoint s{theta, omega};
            for (std::uint64_t k = 0; k < n; ++k) s = apply_S(s, golden, small().set);
            const auto h = s.window.offset();
            // Coordinate 0 of S^n x reads position h of w, flipped by both conjugations.
            const int sign_h = small().set.contains(h) ? 1 : -1;
            const int sign_0 = small().set.contains(0) ? 1 : -1;
            REQUIRE(s.window.at(0) == sign_0 * sign_h * omega.at(h));
        }
    }
}

TEST_CASE("CylinderSpec", "[symbolic]")
{
    const CylinderSpec c({{0, 1}, {-2, -1}});
    REQUIRE(c.measure() == 0.25);
    REQUIRE(c.reach() == 2);
    REQUIRE_THROWS_AS(CylinderSpec({{0, 1}, {0, -1}}), Error);
    REQUIRE_THROWS_AS(CylinderSpec({{0, 2}}), Error);
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 40000; ++seed) hits += c.contains(sample_omega(2, seed));
    REQUIRE(std::fabs(hits / 40000.0 - 0.25) < 4 * std::sqrt(0.25 * 0.75 / 40000));
}

TEST_CASE("triple_indicator", "[symbolic]")
{
    SECTION("n = 0 with 0 not in E: fires exactly when w(0) = 1")
    {
        for (std::uint64_t seed = 0; seed < 64; ++seed) {
            const auto w = sample_omega(4, seed);
            const auto t = triple_indicator(sample_theta(1, seed), w, golden, demo().set, 0);
            REQUIRE(t.literal == (w.at(0) == 1));
            REQUIRE_FALSE(t.occupancy);
        }
    }
    SECTION("n = 0 with 0 in E")
    {
        const auto w = sample_omega(4, 9);
        const auto t = triple_indicator(FixedAngle::zero(), w, golden, AllHeights{}, 0);
        REQUIRE(t.literal == (w.at(0) == 1));
        REQUIRE(t.occupancy == (w.at(0) == 1));
    }
    SECTION("height 3 inside E: literal indicator is 0, occupancy form is [w(3) = 1]")
    {
        const auto E = make_desk_schedule({{2, 3}}, BoundSpec::constant(2)).set;
        bool seen = false;
        for (std::uint64_t i = 0; i < 500 && !seen; ++i) {
            const FixedAngle theta = sample_theta(6, i);
            WalkState st = WalkState::start(theta, golden);
            for (std::uint64_t n = 0; n < 60; ++n, st = walk_step(st)) {
                if (st.height != 3) continue;
                for (std::uint64_t seed = 0; seed < 8; ++seed) {
                    const auto w = sample_omega(40, seed);
                    const auto t = triple_indicator(theta, w, golden, E, n);
                    REQUIRE_FALSE(t.literal);
                    REQUIRE(t.occupancy == (w.at(3) == 1));
                }
                seen = true;
                break;
            }
        }
        REQUIRE(seen);
    }
    SECTION("literal orbit equals [w(h)=1][h in E <=> 0 in E] on random triples")
    {
        std::mt19937_64 rng(2024);
        int literal_hits = 0, occupancy_hits = 0;
        for (int i = 0; i < 1000; ++i) {
            const FixedAngle theta{(static_cast<u128>(rng()) << 64) | rng()};
            const auto w = sample_omega(default_radius(1000), rng());
            const std::uint64_t n = rng() % 1001;
            const auto t = triple_indicator(theta, w, golden, small().set, n);
            REQUIRE(t.literal == t.collapsed);
            literal_hits += t.literal;
            occupancy_hits += t.occupancy;
            REQUIRE_FALSE((t.literal && t.occupancy));
        }
        REQUIRE(literal_hits > 0);
        REQUIRE(occupancy_hits > 0);
    }
}

TEST_CASE("mc_triple_average", "[symbolic]")
{
    const std::vector<std::uint64_t> Ns{16, 64, 128};
    MonteCarloOptions opt;
    opt.samples = 4000;
    opt.seed = 3;
    SECTION("E empty: occupancy form is exactly zero")
    {
        const auto s = mc_triple_average(golden, NoHeights{}, Ns, opt);
        for (const auto& e : s.entries) {
            REQUIRE(e.A == 0);
            REQUIRE(e.stderr_A == 0);
        }
    }
    SECTION("E = Z: both forms estimate 1/2")
    {
        const auto s = mc_triple_average(golden, AllHeights{}, Ns, opt);
        for (const auto& e : s.entries) {
            REQUIRE(std::fabs(e.A - 0.5) <= 3 * e.stderr_A);
            REQUIRE(e.A == e.triple);
        }
    }
    SECTION("rejecting every theta is an error")
    {
        opt.filter = [](FixedAngle) { return false; };
        REQUIRE_THROWS_AS(mc_triple_average(golden, AllHeights{}, Ns, opt), Error);
    }
    SECTION("half-circle filter scales the estimate")
    {
        opt.filter = [](FixedAngle t) { return phi(t) == 1; };
        const auto s = mc_triple_average(golden, AllHeights{}, Ns, opt);
        for (const auto& e : s.entries) {
            REQUIRE(std::fabs(e.accepted - 0.5) < 0.05);
            REQUIRE(std::fabs(e.A - 0.25) <= 4 * e.stderr_A);
        }
    }
    SECTION("too-small window is widened automatically")
    {
        opt.radius = 1;
        const auto a = mc_triple_average(golden, demo().set, Ns, opt);
        opt.radius = 0;
        const auto b = mc_triple_average(golden, demo().set, Ns, opt);
        for (std::size_t k = 0; k < Ns.size(); ++k) REQUIRE(a.entries[k].A == b.entries[k].A);
    }
    SECTION("thread count does not change results")
    {
        opt.threads = 1;
        const auto a = mc_triple_average(golden, demo().set, Ns, opt);
        opt.threads = 3;
        const auto b = mc_triple_average(golden, demo().set, Ns, opt);
        REQUIRE(to_csv(a) == to_csv(b));
    }
}
