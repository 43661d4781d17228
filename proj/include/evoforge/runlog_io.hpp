#pragma once

#include <filesystem>
#include <fstream>
#include <vector>

#include "evoforge/core.hpp"

// JSONL persistence of the run log: one record per line,
// {"seq", "kind", "generation", "time", "body"}, flushed per generation.
namespace evoforge::cli {

class LogIoError : public std::runtime_error {
  public:
    explicit LogIoError(const std::string& what) : std::runtime_error(what) {}
};

nlohmann::json record_to_json(const RunLogRecord& record);
RunLogRecord record_from_json(const nlohmann::json& j);

std::vector<RunLogRecord> read_jsonl(const std::filesystem::path& path);

class JsonlWriter {
  public:
    explicit JsonlWriter(const std::filesystem::path& path);

    void append(const RunLogRecord& record); // flushes on Generation and Result

  private:
    std::ofstream out_;
    std::filesystem::path path_;
};

} // namespace evoforge::cli
