#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mp4bag {

struct ProcessResult {
  int exit_code = 0;
  std::string output;  // tail of merged stdout/stderr
  std::chrono::duration<double> wall_time{0};
};

// Runs argv[0] (PATH lookup applies) and waits for it. stdout and stderr are
// merged and the last `max_output` bytes are kept. Throws EnvironmentError if
// the executable cannot be started. A non-zero exit is reported, not thrown.
ProcessResult run_process(std::span<const std::string> argv, std::size_t max_output = 16 * 1024);

// True when `name` resolves to an executable file (directly or via PATH).
bool executable_available(std::string_view name);

// External command with {placeholder} tokens, e.g.
//   executable: ffmpeg
//   args: [-i, "{input}", -crf, "{crf}", "{output}"]
// Placeholders may sit inside a larger token ("{width}x{height}").
struct CommandTemplate {
  std::string executable;
  std::vector<std::string> args;

  friend bool operator==(const CommandTemplate&, const CommandTemplate&) = default;
};

// Expands `tmpl` into an argument vector (executable first). Every placeholder
// in `required` must occur exactly once, every other known placeholder at most
// once; names absent from `values` are rejected. Throws ParameterError.
std::vector<std::string> expand_template(const CommandTemplate& tmpl, const std::map<std::string, std::string>& values,
                                         std::span<const std::string_view> required);

// Runs task(i) for i in [0, count) on up to `workers` threads. The task must
// not throw; callers record failures per index.
void run_indexed(std::size_t count, int workers, const std::function<void(std::size_t)>& task);

// Uniquely named scratch directory, removed recursively on destruction.
class TempDir {
 public:
  explicit TempDir(std::string_view prefix = "mp4bag");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  TempDir(TempDir&& other) noexcept;
  TempDir& operator=(TempDir&& other) noexcept;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace mp4bag
