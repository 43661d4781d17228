#include "evoforge/runlog_io.hpp"

namespace evoforge::cli {

nlohmann::json record_to_json(const RunLogRecord& record) {
    nlohmann::json j;
    j["seq"] = record.seq;
    j["kind"] = std::string(to_string(record.kind));
    j["generation"] = record.generation;
    j["time"] = record.time;
    j["body"] = record.body;
    return j;
}

RunLogRecord record_from_json(const nlohmann::json& j) {
    RunLogRecord record;
    try {
        record.seq = j.at("seq").get<std::uint64_t>();
        const auto kind = record_kind_from_string(j.at("kind").get<std::string>());
        if (!kind) {
            throw LogIoError("unknown record kind \"" + j.at("kind").get<std::string>() + "\"");
        }
        record.kind = *kind;
        record.generation = j.at("generation").get<int>();
        record.time = j.at("time").get<std::string>();
        record.body = j.at("body");
    } catch (const nlohmann::json::exception& e) {
        throw LogIoError(std::string("malformed record: ") + e.what());
    }
    return record;
}

std::vector<RunLogRecord> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw LogIoError("cannot open " + path.string());
    }
    std::vector<RunLogRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw LogIoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        records.push_back(record_from_json(j));
    }
    if (records.empty()) {
        throw LogIoError(path.string() + ": empty log");
    }
    return records;
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path) : out_(path), path_(path) {
    if (!out_) {
        throw LogIoError("cannot write " + path.string());
    }
}

void JsonlWriter::append(const RunLogRecord& record) {
    out_ << record_to_json(record).dump() << '\n';
    if (record.kind == RecordKind::Generation || record.kind == RecordKind::Result) {
        out_.flush();
    }
}

} // namespace evoforge::cli
