#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "evoforge/problems.hpp"
#include "evoforge/rng.hpp"

using namespace evoforge;
using namespace evoforge::problems;

namespace {

TspInstance unit_square() {
    return make_tsp_instance("unit-square", {{0, 0}, {0, 1}, {1, 1}, {1, 0}});
}

BppInstance bpp(std::vector<double> items, double cap = 10.0) {
    return make_bpp_instance("t", cap, std::move(items));
}

bool same_packing(const Packing& a, const Packing& b) {
    return a.bins == b.bins;
}

std::filesystem::path temp_file(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "evoforge_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

} // namespace

TEST_CASE("tour length on the unit square") {
    const TspInstance inst = unit_square();
    CHECK(tsp_tour_length(inst, {{0, 1, 2, 3}}) == doctest::Approx(4.0));
    CHECK(tsp_tour_length(inst, {{0, 2, 1, 3}}) == doctest::Approx(2.0 + 2.0 * std::sqrt(2.0)));
    CHECK_THROWS_AS(tsp_tour_length(inst, {{0, 1, 1, 3}}), InvalidPermutation);
}

TEST_CASE("tsp_validate names the first violation") {
    CHECK(!tsp_validate(std::vector<int>{2, 0, 1}, 3).has_value());
    auto length_err = tsp_validate(std::vector<int>{0, 1, 2}, 4);
    REQUIRE(length_err.has_value());
    CHECK(length_err->find("4") != std::string::npos);
    auto dup_err = tsp_validate(std::vector<int>{0, 0, 1, 2}, 4);
    REQUIRE(dup_err.has_value());
    CHECK(dup_err->find("duplicate") != std::string::npos);
    auto range_err = tsp_validate(std::vector<int>{0, 1, 5}, 3);
    REQUIRE(range_err.has_value());
    CHECK(range_err->find("range") != std::string::npos);
}

TEST_CASE("nearest neighbor breaks ties by lowest index") {
    // From (0,0) both city 1 and city 3 are at distance 1; the tie goes to 1.
    const TourPermutation tour = tsp_nearest_neighbor(unit_square(), 0);
    CHECK(tour.order == std::vector<int>{0, 1, 2, 3});

    const TspInstance line = make_tsp_instance("line", {{0, 0}, {1, 0}, {2, 0}});
    const TourPermutation forced = tsp_nearest_neighbor(line, 0);
    CHECK(forced.order == std::vector<int>{0, 1, 2});
    CHECK(tsp_tour_length(line, forced) == doctest::Approx(4.0));

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const TspInstance inst = gen_tsp(seed, 12, 1.0);
        const TourPermutation t = tsp_nearest_neighbor(inst, 0);
        CHECK(!tsp_validate(t.order, inst.size()).has_value());
    }
}

TEST_CASE("brute force is the exhaustive oracle") {
    const BruteForceResult square = tsp_brute_force(unit_square());
    CHECK(square.length == doctest::Approx(4.0));

    const TspInstance tri = make_tsp_instance("tri", {{0, 0}, {1, 0}, {0, 1}});
    const BruteForceResult single = tsp_brute_force(tri);
    CHECK(single.tour.order == std::vector<int>{0, 1, 2});

    // Canonical representative: starts at 0, second city below the last.
    CHECK(square.tour.order[0] == 0);
    CHECK(square.tour.order[1] < square.tour.order.back());

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const TspInstance inst = gen_tsp(seed, 8, 1.0);
        const BruteForceResult best = tsp_brute_force(inst);
        CHECK(best.length <= tsp_tour_length(inst, tsp_nearest_neighbor(inst, 0)) + 1e-12);

        // Spot-check against random tours.
        Rng rng(seed * 31 + 7);
        std::vector<int> order(8);
        std::iota(order.begin(), order.end(), 0);
        for (int trial = 0; trial < 1000; ++trial) {
            for (int i = 7; i > 0; --i) {
                const auto j = static_cast<std::size_t>(
                    uniform_below(rng, static_cast<std::uint64_t>(i) + 1));
                std::swap(order[static_cast<std::size_t>(i)], order[j]);
            }
            CHECK(best.length <= tsp_tour_length(inst, {order}) + 1e-12);
        }
    }

    CHECK_THROWS_AS(tsp_brute_force(gen_tsp(1, 11, 1.0)), TooLarge);
}

TEST_CASE("bpp_pack worked examples") {
    const hdsl::ExprPtr neg_index = hdsl::parse("-index");
    const hdsl::ExprPtr best_fit_expr = hdsl::parse("-(cap - item)");

    const Packing a = bpp_pack(bpp({5, 5, 4, 3, 3}), neg_index);
    CHECK(a.bins == std::vector<std::vector<double>>{{5, 5}, {4, 3, 3}});

    const Packing b = bpp_pack(bpp({6, 6, 6, 6}), neg_index);
    CHECK(b.bin_count() == 4);

    const Packing c = bpp_pack(bpp({4, 3, 5, 5, 3}), best_fit_expr);
    CHECK(c.bins == std::vector<std::vector<double>>{{4, 3, 3}, {5, 5}});

    CHECK_THROWS_AS(bpp_pack(bpp({5, 5}), hdsl::parse("item / (cap - cap)")),
                    hdsl::DomainError);
}

TEST_CASE("first fit and best fit hand simulations") {
    CHECK(bpp_first_fit(bpp({5, 5, 4, 3, 3})).bin_count() == 2);
    CHECK(bpp_best_fit(bpp({5, 5, 4, 3, 3})).bin_count() == 2);
    CHECK(bpp_first_fit(bpp({7, 6, 5, 4})).bins ==
          std::vector<std::vector<double>>{{7}, {6, 4}, {5}});
    CHECK(bpp_best_fit(bpp({4, 3, 5, 5, 3})).bins ==
          std::vector<std::vector<double>>{{4, 3, 3}, {5, 5}});
}

TEST_CASE("the DSL routes reproduce the baselines bin-by-bin") {
    const hdsl::ExprPtr ff = hdsl::parse("-index");
    const hdsl::ExprPtr bf = hdsl::parse("-(cap - item)");
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const BppInstance inst = gen_bpp(seed, 50, 100.0, 10.0, 40.0);
        CHECK(same_packing(bpp_pack(inst, ff), bpp_first_fit(inst)));
        CHECK(same_packing(bpp_pack(inst, bf), bpp_best_fit(inst)));
    }
}

TEST_CASE("packings conserve items and respect capacity") {
    const hdsl::ExprPtr exprs[] = {hdsl::parse("-index"), hdsl::parse("-(cap - item)"),
                                   hdsl::parse("cap - item * 2"),
                                   hdsl::parse("if(ge(cap, item * 2), -index, index)")};
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const BppInstance inst = gen_bpp(seed, 40, 50.0, 5.0, 25.0);
        for (const auto& expr : exprs) {
            const Packing packing = bpp_pack(inst, expr);
            std::multiset<double> packed;
            for (const auto& bin : packing.bins) {
                double load = 0.0;
                for (double item : bin) {
                    packed.insert(item);
                    load += item;
                }
                CHECK(load <= inst.capacity + 1e-9);
            }
            CHECK(packed == std::multiset<double>(inst.items.begin(), inst.items.end()));
        }
    }
}

TEST_CASE("lower bound") {
    CHECK(bpp_lower_bound(bpp({5, 5, 4, 3, 3})) == 2);
    CHECK(bpp_lower_bound(bpp({6, 6, 6, 6})) == 3);
    CHECK(bpp_lower_bound(make_bpp_instance("one", 1.0, {1.0})) == 1);
}

TEST_CASE("generators are pure functions of their seeds") {
    CHECK(gen_tsp(42, 9, 1.0).digest == gen_tsp(42, 9, 1.0).digest);
    CHECK(gen_bpp(7, 50, 100.0, 10.0, 40.0).digest == gen_bpp(7, 50, 100.0, 10.0, 40.0).digest);

    const BppInstance ranged = gen_bpp(7, 50, 100.0, 10.0, 40.0);
    for (double item : ranged.items) {
        CHECK(item >= 10.0);
        CHECK(item <= 40.0);
    }

    std::set<std::uint64_t> tsp_digests;
    std::set<std::uint64_t> bpp_digests;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        tsp_digests.insert(gen_tsp(seed, 9, 1.0).digest);
        bpp_digests.insert(gen_bpp(seed, 20, 100.0, 10.0, 40.0).digest);
    }
    CHECK(tsp_digests.size() == 1000);
    CHECK(bpp_digests.size() == 1000);

    CHECK_THROWS_AS(gen_tsp(1, 2, 1.0), ValidationError);
    CHECK_THROWS_AS(gen_bpp(1, 10, 100.0, 50.0, 40.0), ValidationError);
    CHECK_THROWS_AS(gen_bpp(1, 10, 100.0, 10.0, 200.0), ValidationError);
}

TEST_CASE("instance files round-trip on digest") {
    const TspInstance tsp = unit_square();
    const auto tsp_path = temp_file("unit_square.json");
    save_instance(tsp, tsp_path);
    CHECK(load_tsp(tsp_path).digest == tsp.digest);

    const BppInstance inst = gen_bpp(3, 20, 100.0, 10.0, 40.0);
    const auto bpp_path = temp_file("bpp3.json");
    save_instance(inst, bpp_path);
    CHECK(load_bpp(bpp_path).digest == inst.digest);
}

TEST_CASE("instance file schema errors name the field") {
    const auto missing_cap = temp_file("missing_cap.json");
    std::ofstream(missing_cap) << R"({"name": "x", "items": [1, 2]})";
    try {
        load_bpp(missing_cap);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("capacity") != std::string::npos);
    }

    const auto oversized = temp_file("oversized.json");
    std::ofstream(oversized) << R"({"name": "x", "capacity": 10, "items": [5, 11]})";
    CHECK_THROWS_AS(load_bpp(oversized), IoError);

    const auto unknown = temp_file("unknown_field.json");
    std::ofstream(unknown) << R"({"name": "x", "capacity": 10, "items": [5], "extra": 1})";
    try {
        load_bpp(unknown);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("extra") != std::string::npos);
    }

    const auto bad_json = temp_file("bad.json");
    std::ofstream(bad_json) << "{ not json";
    CHECK_THROWS_AS(load_tsp(bad_json), IoError);
}

TEST_CASE("tour text round trip") {
    const TourPermutation tour{{0, 2, 1, 3}};
    CHECK(tour_text(tour) == "0,2,1,3");
    auto parsed = tour_from_text("0,2,1,3");
    REQUIRE(parsed.has_value());
    CHECK(parsed->order == tour.order);
    CHECK(tour_from_text(" 0 , 2 , 1 , 3 ").has_value());
    CHECK(!tour_from_text("0,2,").has_value());
    CHECK(!tour_from_text("a,b").has_value());
    CHECK(!tour_from_text("").has_value());
}
