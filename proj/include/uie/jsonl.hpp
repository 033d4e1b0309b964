#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

namespace uie {

/// Line-oriented JSON reader. Accepts plain or gzip-compressed files
/// transparently. If the first line is an object carrying a "format" key it
/// is treated as the dataset header and exposed separately.
class JsonlReader {
public:
    explicit JsonlReader(const std::filesystem::path& path);

    const std::optional<nlohmann::json>& header() const { return header_; }

    /// Next record line, or nullopt at end of file. Blank lines are skipped.
    std::optional<nlohmann::json> next();

private:
    std::istringstream stream_;
    std::optional<nlohmann::json> header_;
    std::string path_;
    std::size_t line_no_ = 0;
};

class JsonlWriter {
public:
    explicit JsonlWriter(const std::filesystem::path& path);

    /// Header must be written first, if at all.
    void write_header(const std::string& format, const nlohmann::json& extra = nlohmann::json::object());
    void write(const nlohmann::json& record);

private:
    std::ofstream out_;
    std::string path_;
    bool wrote_any_ = false;
};

} // namespace uie
