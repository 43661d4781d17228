#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "evoforge/config.hpp"

// Command implementations behind the CLI. Exit codes: 0 success, 1 config or
// input error, 2 runtime error, 3 replay divergence.
namespace evoforge::cli {

int cmd_run(const std::filesystem::path& config_path, const CliOverrides& overrides,
            std::ostream& out, std::ostream& err);

int cmd_replay(const std::filesystem::path& log_path, std::ostream& out, std::ostream& err);

int cmd_bench(const std::filesystem::path& suite_path, const std::filesystem::path& out_csv,
              std::ostream& out, std::ostream& err);

int cmd_eval_expr(const std::string& expr_text, const std::filesystem::path& instance_path,
                  std::ostream& out, std::ostream& err);

struct GenParams {
    std::string kind; // "tsp" or "bpp"
    std::uint64_t seed = 0;
    int count = 1;
    // tsp
    int n = 9;
    double box = 1.0;
    // bpp
    int n_items = 50;
    double capacity = 100.0;
    double size_min = 10.0;
    double size_max = 40.0;
};

int cmd_gen_instances(const GenParams& params, const std::filesystem::path& out_dir,
                      std::ostream& out, std::ostream& err);

} // namespace evoforge::cli
