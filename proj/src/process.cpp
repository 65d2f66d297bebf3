#include "mp4bag/process.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "mp4bag/errors.hpp"

namespace mp4bag {

namespace fs = std::filesystem;

namespace {

struct Fd {
  int fd = -1;
  Fd() = default;
  explicit Fd(int f) : fd(f) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }
  void reset() {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
};

void make_pipe(Fd& read_end, Fd& write_end) {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) throw EnvironmentError(fmt::format("pipe failed: {}", std::strerror(errno)));
  read_end.fd = fds[0];
  write_end.fd = fds[1];
}

}  // namespace

ProcessResult run_process(std::span<const std::string> argv, std::size_t max_output) {
  if (argv.empty()) throw EnvironmentError("empty command line");

  std::vector<char*> cargv;
  cargv.reserve(argv.size() + 1);
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  Fd out_r, out_w, err_r, err_w;
  make_pipe(out_r, out_w);
  // Reports exec failure: closed by CLOEXEC on success, receives errno otherwise.
  make_pipe(err_r, err_w);

  const auto start = std::chrono::steady_clock::now();
  const pid_t pid = ::fork();
  if (pid < 0) throw EnvironmentError(fmt::format("fork failed: {}", std::strerror(errno)));
  if (pid == 0) {
    ::dup2(out_w.fd, STDOUT_FILENO);
    ::dup2(out_w.fd, STDERR_FILENO);
    const int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    ::execvp(cargv[0], cargv.data());
    const int e = errno;
    [[maybe_unused]] auto n = ::write(err_w.fd, &e, sizeof e);
    ::_exit(127);
  }
  out_w.reset();
  err_w.reset();

  int exec_errno = 0;
  const ssize_t got = ::read(err_r.fd, &exec_errno, sizeof exec_errno);

  std::string output;
  char buf[4096];
  for (;;) {
    const ssize_t n = ::read(out_r.fd, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    output.append(buf, static_cast<std::size_t>(n));
    if (output.size() > 2 * max_output) output.erase(0, output.size() - max_output);
  }
  if (output.size() > max_output) output.erase(0, output.size() - max_output);

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  const auto stop = std::chrono::steady_clock::now();

  if (got == static_cast<ssize_t>(sizeof exec_errno))
    throw EnvironmentError(fmt::format("cannot execute '{}': {}", argv[0], std::strerror(exec_errno)));

  ProcessResult result;
  result.output = std::move(output);
  result.wall_time = stop - start;
  if (WIFEXITED(status))
    result.exit_code = WEXITSTATUS(status);
  else if (WIFSIGNALED(status))
    result.exit_code = 128 + WTERMSIG(status);
  else
    result.exit_code = -1;
  return result;
}

std::vector<std::string> expand_template(const CommandTemplate& tmpl, const std::map<std::string, std::string>& values,
                                         std::span<const std::string_view> required) {
  if (tmpl.executable.empty()) throw ParameterError("command template has no executable");
  std::map<std::string, int> seen;
  std::vector<std::string> argv{tmpl.executable};
  for (const auto& arg : tmpl.args) {
    std::string out;
    std::size_t pos = 0;
    while (pos < arg.size()) {
      const auto open = arg.find('{', pos);
      if (open == std::string::npos) {
        out.append(arg, pos);
        break;
      }
      const auto close = arg.find('}', open);
      if (close == std::string::npos) throw ParameterError(fmt::format("unterminated placeholder in argument '{}'", arg));
      out.append(arg, pos, open - pos);
      const std::string name = arg.substr(open + 1, close - open - 1);
      const auto it = values.find(name);
      if (it == values.end())
        throw ParameterError(fmt::format("unknown placeholder '{{{}}}' in argument '{}'", name, arg));
      if (++seen[name] > 1) throw ParameterError(fmt::format("placeholder '{{{}}}' appears more than once", name));
      out += it->second;
      pos = close + 1;
    }
    argv.push_back(std::move(out));
  }
  for (const auto name : required) {
    if (seen[std::string(name)] != 1)
      throw ParameterError(fmt::format("command template must contain '{{{}}}' exactly once", name));
  }
  return argv;
}

void run_indexed(std::size_t count, int workers, const std::function<void(std::size_t)>& task) {
  const auto n_threads = static_cast<std::size_t>(std::max(1, workers));
  if (n_threads == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < std::min(n_threads, count); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) task(i);
    });
  }
}

bool executable_available(std::string_view name) {
  auto is_exec = [](const fs::path& p) { return ::access(p.c_str(), X_OK) == 0 && !fs::is_directory(p); };
  if (name.empty()) return false;
  if (name.find('/') != std::string_view::npos) return is_exec(fs::path(name));
  const char* path_env = std::getenv("PATH");
  if (!path_env) return false;
  std::string_view paths(path_env);
  while (!paths.empty()) {
    const auto colon = paths.find(':');
    const auto dir = paths.substr(0, colon);
    if (!dir.empty() && is_exec(fs::path(dir) / name)) return true;
    if (colon == std::string_view::npos) break;
    paths.remove_prefix(colon + 1);
  }
  return false;
}

TempDir::TempDir(std::string_view prefix) {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  const fs::path base = fs::temp_directory_path();
  for (int attempt = 0; attempt < 100; ++attempt) {
    auto candidate = base / fmt::format("{}-{}-{:08x}-{}", prefix, ::getpid(), rd(), counter++);
    std::error_code ec;
    if (fs::create_directory(candidate, ec)) {
      path_ = std::move(candidate);
      return;
    }
  }
  throw EnvironmentError("cannot create a temporary directory under " + base.string());
}

TempDir::~TempDir() {
  if (!path_.empty()) {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
}

TempDir::TempDir(TempDir&& other) noexcept : path_(std::exchange(other.path_, {})) {}

TempDir& TempDir::operator=(TempDir&& other) noexcept {
  if (this != &other) {
    std::error_code ec;
    if (!path_.empty()) fs::remove_all(path_, ec);
    path_ = std::exchange(other.path_, {});
  }
  return *this;
}

}  // namespace mp4bag
