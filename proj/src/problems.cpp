#include "evoforge/problems.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "evoforge/digest.hpp"
#include "evoforge/rng.hpp"

namespace evoforge::problems {

namespace {

std::string double_text(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::uint64_t tsp_digest(const std::string& name, const std::vector<Point>& points) {
    std::uint64_t h = fnv1a64("tsp|" + name);
    for (const Point& p : points) {
        h = fnv1a64_double(p.x, h);
        h = fnv1a64_double(p.y, h);
    }
    return h;
}

std::uint64_t bpp_digest(const std::string& name, double capacity,
                         const std::vector<double>& items) {
    std::uint64_t h = fnv1a64("bpp|" + name);
    h = fnv1a64_double(capacity, h);
    for (double item : items) {
        h = fnv1a64_double(item, h);
    }
    return h;
}

} // namespace

TspInstance make_tsp_instance(std::string name, std::vector<Point> points) {
    if (points.size() < 3) {
        throw ValidationError("TSP instance needs at least 3 points, got " +
                              std::to_string(points.size()));
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!std::isfinite(points[i].x) || !std::isfinite(points[i].y)) {
            throw ValidationError("point " + std::to_string(i) + " has a non-finite coordinate");
        }
    }
    TspInstance inst{std::move(name), std::move(points), 0};
    inst.digest = tsp_digest(inst.name, inst.points);
    return inst;
}

std::string tour_text(const TourPermutation& tour) {
    std::string out;
    for (std::size_t i = 0; i < tour.order.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += std::to_string(tour.order[i]);
    }
    return out;
}

std::optional<TourPermutation> tour_from_text(std::string_view text) {
    TourPermutation tour;
    std::size_t i = 0;
    const auto skip_ws = [&] {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    };
    skip_ws();
    while (i < text.size()) {
        int value = 0;
        auto res = std::from_chars(text.data() + i, text.data() + text.size(), value);
        if (res.ec != std::errc{}) {
            return std::nullopt;
        }
        tour.order.push_back(value);
        i = static_cast<std::size_t>(res.ptr - text.data());
        skip_ws();
        if (i == text.size()) {
            break;
        }
        if (text[i] != ',') {
            return std::nullopt;
        }
        ++i;
        skip_ws();
        if (i == text.size()) {
            return std::nullopt; // trailing comma
        }
    }
    if (tour.order.empty()) {
        return std::nullopt;
    }
    return tour;
}

BppInstance make_bpp_instance(std::string name, double capacity, std::vector<double> items) {
    if (!(capacity > 0.0) || !std::isfinite(capacity)) {
        throw ValidationError("capacity must be a positive finite number");
    }
    if (items.empty()) {
        throw ValidationError("instance has no items");
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!(items[i] > 0.0) || !std::isfinite(items[i])) {
            throw ValidationError("item " + std::to_string(i) + " must be positive and finite");
        }
        if (items[i] > capacity) {
            throw ValidationError("item " + std::to_string(i) + " (" + double_text(items[i]) +
                                  ") exceeds capacity " + double_text(capacity));
        }
    }
    BppInstance inst{std::move(name), capacity, std::move(items), 0};
    inst.digest = bpp_digest(inst.name, inst.capacity, inst.items);
    return inst;
}

TrainingSet make_training_set(std::vector<BppInstance> instances, std::vector<double> weights) {
    if (instances.empty()) {
        throw ValidationError("training set must contain at least one instance");
    }
    if (!weights.empty()) {
        if (weights.size() != instances.size()) {
            throw ValidationError("training set has " + std::to_string(instances.size()) +
                                  " instances but " + std::to_string(weights.size()) + " weights");
        }
        double sum = 0.0;
        for (double w : weights) {
            if (!(w > 0.0) || !std::isfinite(w)) {
                throw ValidationError("weights must be positive and finite");
            }
            sum += w;
        }
        for (double& w : weights) {
            w /= sum;
        }
    }
    return TrainingSet{std::move(instances), std::move(weights)};
}

std::uint64_t TrainingSet::digest() const {
    std::uint64_t h = fnv1a64("train");
    for (const BppInstance& inst : instances) {
        h = fnv1a64_u64(inst.digest, h);
    }
    for (double w : weights) {
        h = fnv1a64_double(w, h);
    }
    return h;
}

// --- TSP ------------------------------------------------------------------

std::optional<std::string> tsp_validate(std::span<const int> order, int n) {
    if (static_cast<int>(order.size()) != n) {
        return "tour has " + std::to_string(order.size()) + " cities, expected " +
               std::to_string(n);
    }
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (int idx : order) {
        if (idx < 0 || idx >= n) {
            return "city index " + std::to_string(idx) + " out of range 0.." +
                   std::to_string(n - 1);
        }
        if (seen[static_cast<std::size_t>(idx)]) {
            return "duplicate city index " + std::to_string(idx);
        }
        seen[static_cast<std::size_t>(idx)] = true;
    }
    return std::nullopt;
}

namespace {

double edge_length(const Point& a, const Point& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

double cycle_length(const TspInstance& inst, std::span<const int> order) {
    double total = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Point& from = inst.points[static_cast<std::size_t>(order[i])];
        const Point& to = inst.points[static_cast<std::size_t>(order[(i + 1) % order.size()])];
        total += edge_length(from, to);
    }
    return total;
}

} // namespace

double tsp_tour_length(const TspInstance& inst, const TourPermutation& tour) {
    if (auto err = tsp_validate(tour.order, inst.size())) {
        throw InvalidPermutation(*err);
    }
    return cycle_length(inst, tour.order);
}

TourPermutation tsp_nearest_neighbor(const TspInstance& inst, int start) {
    const int n = inst.size();
    if (start < 0 || start >= n) {
        throw ValidationError("start index " + std::to_string(start) + " out of range");
    }
    std::vector<bool> visited(static_cast<std::size_t>(n), false);
    TourPermutation tour;
    tour.order.reserve(static_cast<std::size_t>(n));
    int current = start;
    visited[static_cast<std::size_t>(current)] = true;
    tour.order.push_back(current);
    for (int step = 1; step < n; ++step) {
        int best = -1;
        double best_dist = 0.0;
        for (int j = 0; j < n; ++j) {
            if (visited[static_cast<std::size_t>(j)]) {
                continue;
            }
            const double d = edge_length(inst.points[static_cast<std::size_t>(current)],
                                         inst.points[static_cast<std::size_t>(j)]);
            if (best < 0 || d < best_dist) { // strict <: ties keep the lowest index
                best = j;
                best_dist = d;
            }
        }
        visited[static_cast<std::size_t>(best)] = true;
        tour.order.push_back(best);
        current = best;
    }
    return tour;
}

BruteForceResult tsp_brute_force(const TspInstance& inst) {
    const int n = inst.size();
    if (n > 10) {
        throw TooLarge("brute force is limited to 10 cities, instance has " + std::to_string(n));
    }
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);

    BruteForceResult best;
    bool have = false;
    // First city fixed at 0; each cyclic tour appears once with
    // order[1] < order[n-1] (direction canonicalization).
    do {
        if (n > 2 && perm[1] > perm[static_cast<std::size_t>(n - 1)]) {
            continue;
        }
        const double len = cycle_length(inst, perm);
        if (!have || len < best.length) {
            best.tour.order = perm;
            best.length = len;
            have = true;
        }
    } while (std::next_permutation(perm.begin() + 1, perm.end()));
    return best;
}

// --- Online bin packing -----------------------------------------------------

Packing bpp_pack(const BppInstance& inst, const hdsl::ExprPtr& expr) {
    Packing packing;
    std::vector<double> remaining;
    hdsl::EvalEnv env;
    for (double item : inst.items) {
        int best = -1;
        double best_score = 0.0;
        const int n_bins = static_cast<int>(remaining.size());
        for (int b = 0; b < n_bins; ++b) {
            if (remaining[static_cast<std::size_t>(b)] < item) {
                continue;
            }
            env.set("cap", remaining[static_cast<std::size_t>(b)]);
            env.set("item", item);
            env.set("index", static_cast<double>(b));
            env.set("n_bins", static_cast<double>(n_bins));
            const double score = hdsl::eval(expr, env);
            if (best < 0 || score > best_score) { // strict >: ties keep the lowest index
                best = b;
                best_score = score;
            }
        }
        if (best < 0) {
            packing.bins.emplace_back();
            remaining.push_back(inst.capacity);
            best = static_cast<int>(packing.bins.size()) - 1;
        }
        packing.bins[static_cast<std::size_t>(best)].push_back(item);
        remaining[static_cast<std::size_t>(best)] -= item;
    }
    return packing;
}

int bpp_lower_bound(const BppInstance& inst) {
    const double total = std::accumulate(inst.items.begin(), inst.items.end(), 0.0);
    return static_cast<int>(std::ceil(total / inst.capacity - 1e-9));
}

Packing bpp_first_fit(const BppInstance& inst) {
    Packing packing;
    std::vector<double> remaining;
    for (double item : inst.items) {
        bool placed = false;
        for (std::size_t b = 0; b < remaining.size(); ++b) {
            if (remaining[b] >= item) {
                packing.bins[b].push_back(item);
                remaining[b] -= item;
                placed = true;
                break;
            }
        }
        if (!placed) {
            packing.bins.push_back({item});
            remaining.push_back(inst.capacity - item);
        }
    }
    return packing;
}

Packing bpp_best_fit(const BppInstance& inst) {
    Packing packing;
    std::vector<double> remaining;
    for (double item : inst.items) {
        int best = -1;
        for (std::size_t b = 0; b < remaining.size(); ++b) {
            if (remaining[b] < item) {
                continue;
            }
            if (best < 0 || remaining[b] < remaining[static_cast<std::size_t>(best)]) {
                best = static_cast<int>(b);
            }
        }
        if (best < 0) {
            packing.bins.push_back({item});
            remaining.push_back(inst.capacity - item);
        } else {
            packing.bins[static_cast<std::size_t>(best)].push_back(item);
            remaining[static_cast<std::size_t>(best)] -= item;
        }
    }
    return packing;
}

double excess_ratio(int bins, int lower_bound) {
    return static_cast<double>(bins - lower_bound) / static_cast<double>(lower_bound);
}

std::span<const std::string> bpp_variables() {
    static const std::vector<std::string> vars = {"cap", "item", "index", "n_bins"};
    return vars;
}

// --- Generators -------------------------------------------------------------

TspInstance gen_tsp(std::uint64_t seed, int n, double box) {
    if (n < 3) {
        throw ValidationError("TSP generator needs n >= 3");
    }
    if (!(box > 0.0) || !std::isfinite(box)) {
        throw ValidationError("box side must be positive and finite");
    }
    Rng rng(seed);
    std::vector<Point> points;
    points.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double x = uniform_real(rng, 0.0, box);
        const double y = uniform_real(rng, 0.0, box);
        points.push_back({x, y});
    }
    return make_tsp_instance("tsp-s" + std::to_string(seed) + "-n" + std::to_string(n),
                             std::move(points));
}

BppInstance gen_bpp(std::uint64_t seed, int n_items, double capacity, double size_min,
                    double size_max) {
    if (n_items < 1) {
        throw ValidationError("BPP generator needs at least 1 item");
    }
    if (!(size_min > 0.0) || size_min > size_max || size_max > capacity) {
        throw ValidationError("item size range must satisfy 0 < min <= max <= capacity");
    }
    Rng rng(seed);
    std::vector<double> items;
    items.reserve(static_cast<std::size_t>(n_items));
    for (int i = 0; i < n_items; ++i) {
        items.push_back(uniform_real(rng, size_min, size_max));
    }
    return make_bpp_instance("bpp-s" + std::to_string(seed) + "-n" + std::to_string(n_items),
                             capacity, std::move(items));
}

// --- Instance files ----------------------------------------------------------

namespace {

using nlohmann::json;

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw IoError(where + ": unknown field \"" + key + "\"");
        }
    }
}

const json& require_field(const json& j, const char* field, const std::string& where) {
    auto it = j.find(field);
    if (it == j.end()) {
        throw IoError(where + ": missing field \"" + field + "\"");
    }
    return *it;
}

void write_json(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

} // namespace

TspInstance load_tsp(const std::filesystem::path& path) {
    const json j = load_json(path);
    const std::string where = path.string();
    if (!j.is_object()) {
        throw IoError(where + ": expected a JSON object");
    }
    reject_unknown(j, {"name", "points"}, where);
    const json& name = require_field(j, "name", where);
    const json& pts = require_field(j, "points", where);
    if (!name.is_string()) {
        throw IoError(where + ": \"name\" must be a string");
    }
    if (!pts.is_array()) {
        throw IoError(where + ": \"points\" must be an array");
    }
    std::vector<Point> points;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const json& p = pts[i];
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            throw IoError(where + ": points[" + std::to_string(i) + "] must be [x, y]");
        }
        points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    try {
        return make_tsp_instance(name.get<std::string>(), std::move(points));
    } catch (const ValidationError& e) {
        throw IoError(where + ": " + e.what());
    }
}

BppInstance load_bpp(const std::filesystem::path& path) {
    const json j = load_json(path);
    const std::string where = path.string();
    if (!j.is_object()) {
        throw IoError(where + ": expected a JSON object");
    }
    reject_unknown(j, {"name", "capacity", "items"}, where);
    const json& name = require_field(j, "name", where);
    const json& capacity = require_field(j, "capacity", where);
    const json& items = require_field(j, "items", where);
    if (!name.is_string()) {
        throw IoError(where + ": \"name\" must be a string");
    }
    if (!capacity.is_number()) {
        throw IoError(where + ": \"capacity\" must be a number");
    }
    if (!items.is_array()) {
        throw IoError(where + ": \"items\" must be an array");
    }
    std::vector<double> sizes;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!items[i].is_number()) {
            throw IoError(where + ": items[" + std::to_string(i) + "] must be a number");
        }
        sizes.push_back(items[i].get<double>());
    }
    try {
        return make_bpp_instance(name.get<std::string>(), capacity.get<double>(),
                                 std::move(sizes));
    } catch (const ValidationError& e) {
        throw IoError(where + ": " + e.what());
    }
}

void save_instance(const TspInstance& inst, const std::filesystem::path& path) {
    json j;
    j["name"] = inst.name;
    json pts = json::array();
    for (const Point& p : inst.points) {
        pts.push_back(json::array({p.x, p.y}));
    }
    j["points"] = pts;
    write_json(j, path);
}

void save_instance(const BppInstance& inst, const std::filesystem::path& path) {
    json j;
    j["name"] = inst.name;
    j["capacity"] = inst.capacity;
    j["items"] = inst.items;
    write_json(j, path);
}

// --- Prompt-facing descriptions ----------------------------------------------

std::string problem_description(const TspInstance& inst) {
    std::string out;
    out += "Traveling salesman problem on " + std::to_string(inst.size()) +
           " cities with Euclidean distances (instance " + inst.name + ").\n";
    out += "City coordinates as index: (x, y):\n";
    for (int i = 0; i < inst.size(); ++i) {
        const Point& p = inst.points[static_cast<std::size_t>(i)];
        out += std::to_string(i) + ": (" + double_text(p.x) + ", " + double_text(p.y) + ")\n";
    }
    out += "A tour visits every city exactly once and returns to its start.\n";
    out += "Cost is the total tour length; lower is better.";
    return out;
}

std::string problem_description(const TrainingSet& train) {
    const double capacity = train.instances.front().capacity;
    std::string out;
    out += "Online bin packing with bin capacity " + double_text(capacity) + ".\n";
    out += "Items arrive one at a time in a fixed order and must be placed immediately.\n";
    out += "A candidate is a scoring expression over the variables cap (remaining capacity "
           "of the bin), item (size of the arriving item), index (0-based bin index), and "
           "n_bins (number of open bins).\n";
    out += "Each arriving item goes to the feasible bin with the highest score; a new bin "
           "opens when no bin fits.\n";
    out += "Cost is the mean excess over " + std::to_string(train.instances.size()) +
           " training instances, where excess = (bins used - lower bound) / lower bound; "
           "lower is better.";
    return out;
}

} // namespace evoforge::problems
