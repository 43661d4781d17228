#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "evoforge/hdsl.hpp"

// Problem plugins for the two demo domains: Euclidean TSP (solution search)
// and online bin packing driven by a scoring heuristic (heuristic search).
namespace evoforge::problems {

struct Point {
    double x;
    double y;
};

class InvalidPermutation : public std::runtime_error {
  public:
    explicit InvalidPermutation(const std::string& what) : std::runtime_error(what) {}
};

class TooLarge : public std::runtime_error {
  public:
    explicit TooLarge(const std::string& what) : std::runtime_error(what) {}
};

class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
  public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

struct TspInstance {
    std::string name;
    std::vector<Point> points;
    std::uint64_t digest = 0;

    int size() const { return static_cast<int>(points.size()); }
};

// Validates (>= 3 points, finite coordinates) and computes the digest.
TspInstance make_tsp_instance(std::string name, std::vector<Point> points);

struct TourPermutation {
    std::vector<int> order;
};

// Canonical text form used in prompts, candidate payloads, and serialization:
// comma-separated indices, no spaces.
std::string tour_text(const TourPermutation& tour);
std::optional<TourPermutation> tour_from_text(std::string_view text);

struct BppInstance {
    std::string name;
    double capacity = 0.0;
    std::vector<double> items;
    std::uint64_t digest = 0;
};

BppInstance make_bpp_instance(std::string name, double capacity, std::vector<double> items);

struct TrainingSet {
    std::vector<BppInstance> instances;
    std::vector<double> weights; // empty = unweighted; else normalized, same length

    std::uint64_t digest() const;
};

TrainingSet make_training_set(std::vector<BppInstance> instances,
                              std::vector<double> weights = {});

// --- TSP ------------------------------------------------------------------

// nullopt when `order` is a permutation of 0..n-1, otherwise the first
// violation (length, range, or duplicate).
std::optional<std::string> tsp_validate(std::span<const int> order, int n);

// Cyclic tour length including the closing edge. Throws InvalidPermutation.
double tsp_tour_length(const TspInstance& inst, const TourPermutation& tour);

// Greedy construction, ties broken by lowest index.
TourPermutation tsp_nearest_neighbor(const TspInstance& inst, int start);

struct BruteForceResult {
    TourPermutation tour;
    double length = 0.0;
};

// Exhaustive minimum over the (n-1)!/2 distinct cyclic tours; the returned
// representative starts at 0 with order[1] < order[n-1]. Throws TooLarge for
// n > 10.
BruteForceResult tsp_brute_force(const TspInstance& inst);

// --- Online bin packing -----------------------------------------------------

struct Packing {
    std::vector<std::vector<double>> bins;

    int bin_count() const { return static_cast<int>(bins.size()); }
};

// Online protocol: items in order; feasible bins (remaining >= item) are
// scored with env {cap = remaining capacity, item = size, index = 0-based bin
// index, n_bins = open bin count}; the item goes to the argmax-score bin,
// ties to the lowest index; a new bin opens only when nothing fits.
// hdsl::DomainError and UnboundVariableError propagate to the caller.
Packing bpp_pack(const BppInstance& inst, const hdsl::ExprPtr& expr);

// ceil(sum(items) / capacity), guarded against float summation noise.
int bpp_lower_bound(const BppInstance& inst);

// Textbook baselines, written independently of bpp_pack on purpose: they are
// the oracles the DSL route is checked against.
Packing bpp_first_fit(const BppInstance& inst);
Packing bpp_best_fit(const BppInstance& inst);

// (bins - lower_bound) / lower_bound. The normalized per-instance score.
double excess_ratio(int bins, int lower_bound);

// The variable set bpp_pack exposes to heuristic expressions.
std::span<const std::string> bpp_variables();

// --- Generators -------------------------------------------------------------

TspInstance gen_tsp(std::uint64_t seed, int n, double box);
BppInstance gen_bpp(std::uint64_t seed, int n_items, double capacity, double size_min,
                    double size_max);

// --- Instance files ----------------------------------------------------------

// JSON, UTF-8, unknown fields rejected.
// TSP: {"name", "points": [[x, y], ...]}   BPP: {"name", "capacity", "items": [...]}
TspInstance load_tsp(const std::filesystem::path& path);
BppInstance load_bpp(const std::filesystem::path& path);
void save_instance(const TspInstance& inst, const std::filesystem::path& path);
void save_instance(const BppInstance& inst, const std::filesystem::path& path);

// Human-readable problem statements used as the prompt's problem description.
std::string problem_description(const TspInstance& inst);
std::string problem_description(const TrainingSet& train);

} // namespace evoforge::problems
