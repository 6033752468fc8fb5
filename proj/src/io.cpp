#include "mrrlvr/io.hpp"

#include <fstream>
#include <sstream>

#include "mrrlvr/errors.hpp"
#include "mrrlvr/rng.hpp"

namespace mrrlvr::io {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path dir = path.parent_path();
    if (!dir.empty()) {
        std::error_code ec;
        fs::create_directories(dir, ec);
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open " + tmp.string() + " for writing");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            throw IoError("short write to " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        throw IoError("rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
    }
}

void for_each_jsonl_row(const std::filesystem::path& path,
                        const std::function<void(int, const json&)>& on_row) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string line;
    int line_num = 0;
    while (std::getline(in, line)) {
        ++line_num;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        // Blank lines are tolerated (trailing newline, hand-edited files).
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        json parsed = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (parsed.is_discarded()) {
            throw SchemaError(line_num, "", path.string() + ":" + std::to_string(line_num) +
                                            ": not valid JSON");
        }
        if (!parsed.is_object()) {
            throw SchemaError(line_num, "", path.string() + ":" + std::to_string(line_num) +
                                            ": expected a JSON object");
        }
        on_row(line_num, parsed);
    }
}

std::string to_jsonl(const std::vector<ojson>& rows) {
    std::string out;
    for (const auto& row : rows) {
        out += row.dump();
        out += '\n';
    }
    return out;
}

std::string file_fingerprint(const std::filesystem::path& path) {
    std::string bytes = read_file(path);
    std::uint64_t h = fnv1a64(bytes);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace mrrlvr::io
