#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace tutor::detail {

// Holds `contents` in a fresh file under the temp directory; removed on destruction.
class TempFile {
public:
    explicit TempFile(std::string_view contents, std::string_view suffix = ".txt");
    ~TempFile();
    TempFile(const TempFile&) = delete;
    TempFile& operator=(const TempFile&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

struct CommandResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr, interleaved
};

// Runs `command` through /bin/sh with `stdin_text` on its standard input.
CommandResult run_command(const std::string& command, std::string_view stdin_text);

std::string shell_quote(std::string_view text);

} // namespace tutor::detail
