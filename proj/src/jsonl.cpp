#include "uie/jsonl.hpp"

#include "uie/errors.hpp"
#include "uie/util.hpp"

#include <zlib.h>

namespace uie {

namespace {

bool looks_gzip(const std::string& raw) {
    return raw.size() >= 2 && static_cast<unsigned char>(raw[0]) == 0x1f &&
           static_cast<unsigned char>(raw[1]) == 0x8b;
}

std::string gunzip(const std::string& raw, const std::string& path) {
    z_stream zs{};
    // 15+32: zlib or gzip container, auto-detected.
    if (inflateInit2(&zs, 15 + 32) != Z_OK) {
        throw Error(ErrorCode::IoError, "inflateInit failed for " + path);
    }
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(raw.data()));
    zs.avail_in = static_cast<uInt>(raw.size());

    std::string out;
    char buf[1 << 15];
    int ret = Z_OK;
    do {
        zs.next_out = reinterpret_cast<Bytef*>(buf);
        zs.avail_out = sizeof(buf);
        ret = inflate(&zs, Z_NO_FLUSH);
        if (ret != Z_OK && ret != Z_STREAM_END) {
            inflateEnd(&zs);
            throw Error(ErrorCode::IoError, "corrupt gzip stream in " + path);
        }
        out.append(buf, sizeof(buf) - zs.avail_out);
    } while (ret != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
}

} // namespace

JsonlReader::JsonlReader(const std::filesystem::path& path) : path_(path.string()) {
    std::string raw = util::read_file(path);
    if (looks_gzip(raw)) raw = gunzip(raw, path_);
    stream_.str(std::move(raw));

    // Peek the first non-blank line for a header.
    std::streampos mark = stream_.tellg();
    std::string line;
    while (std::getline(stream_, line)) {
        ++line_no_;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) {
            mark = stream_.tellg();
            continue;
        }
        auto value = nlohmann::json::parse(line, nullptr, false);
        if (value.is_object() && value.contains("format")) {
            header_ = std::move(value);
        } else {
            stream_.clear();
            stream_.seekg(mark);
            --line_no_;
        }
        break;
    }
}

std::optional<nlohmann::json> JsonlReader::next() {
    std::string line;
    while (std::getline(stream_, line)) {
        ++line_no_;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        auto value = nlohmann::json::parse(line, nullptr, false);
        if (value.is_discarded()) {
            throw Error(ErrorCode::MalformedJson,
                        path_ + ":" + std::to_string(line_no_) + " is not valid JSON");
        }
        return value;
    }
    return std::nullopt;
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path) : path_(path.string()) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error(ErrorCode::IoError, "cannot write " + path_);
}

void JsonlWriter::write_header(const std::string& format, const nlohmann::json& extra) {
    if (wrote_any_) throw Error(ErrorCode::IoError, "header must be the first line of " + path_);
    nlohmann::json header = extra;
    header["format"] = format;
    write(header);
}

void JsonlWriter::write(const nlohmann::json& record) {
    out_ << record.dump() << '\n';
    wrote_any_ = true;
}

} // namespace uie
