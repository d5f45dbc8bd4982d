#include "process.hpp"

#include "tutor/error.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sys/wait.h>
#include <unistd.h>

namespace tutor::detail {

TempFile::TempFile(std::string_view contents, std::string_view suffix)
{
    auto pattern = (std::filesystem::temp_directory_path() / "tutor-XXXXXX").string();
    pattern += suffix;
    std::string buffer = pattern;
    const int fd = ::mkstemps(buffer.data(), static_cast<int>(suffix.size()));
    if (fd < 0) {
        throw Error("cannot create temporary file");
    }
    ::close(fd);
    path_ = buffer;
    std::ofstream out(path_, std::ios::binary);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

TempFile::~TempFile()
{
    std::error_code ec;
    std::filesystem::remove(path_, ec);
}

std::string shell_quote(std::string_view text)
{
    std::string quoted = "'";
    for (char c : text) {
        if (c == '\'') {
            quoted += "'\\''";
        } else {
            quoted += c;
        }
    }
    quoted += '\'';
    return quoted;
}

CommandResult run_command(const std::string& command, std::string_view stdin_text)
{
    TempFile input(stdin_text);
    const std::string full = "(" + command + ") < " + shell_quote(input.path().string()) + " 2>&1";

    struct PipeCloser {
        int* status;
        void operator()(FILE* f) const { *status = ::pclose(f); }
    };
    int raw_status = -1;
    CommandResult result;
    {
        std::unique_ptr<FILE, PipeCloser> pipe(::popen(full.c_str(), "r"), PipeCloser{&raw_status});
        if (!pipe) {
            throw Error("cannot start command: " + command);
        }
        std::array<char, 4096> chunk{};
        std::size_t got = 0;
        while ((got = std::fread(chunk.data(), 1, chunk.size(), pipe.get())) > 0) {
            result.output.append(chunk.data(), got);
        }
    }
    if (raw_status != -1 && WIFEXITED(raw_status)) {
        result.exit_code = WEXITSTATUS(raw_status);
    }
    return result;
}

} // namespace tutor::detail
