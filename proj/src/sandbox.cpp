// Copyright 2026 The cdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cdp/sandbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/prctl.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "cdp/error.hpp"

namespace cdp {
namespace {

using Clock = std::chrono::steady_clock;

void process_setup_once() {
  static std::once_flag once;
  std::call_once(once, [] {
    // Writes to a child's stdin must not kill the supervisor.
    ::signal(SIGPIPE, SIG_IGN);
    // Orphaned grandchildren are re-parented here so they can be reaped.
    ::prctl(PR_SET_CHILD_SUBREAPER, 1);
  });
}

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  Fd(Fd&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Fd& operator=(Fd&& other) noexcept {
    if (this != &other) {
      reset();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  ~Fd() { reset(); }

  int get() const { return fd_; }
  explicit operator bool() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

struct Pipe {
  Fd read;
  Fd write;
};

Pipe make_pipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) {
    fail(ErrorCode::kSandboxSpawnFailure, std::string("pipe2: ") + std::strerror(errno));
  }
  return {Fd(fds[0]), Fd(fds[1])};
}

void set_nonblocking(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

// Temporary directory holding one candidate source file; removed on scope exit.
class ScratchDir {
 public:
  ScratchDir() {
    std::string templ = (std::filesystem::temp_directory_path() / "cdp-sandbox-XXXXXX").string();
    if (::mkdtemp(templ.data()) == nullptr) {
      fail(ErrorCode::kSandboxSpawnFailure, std::string("mkdtemp: ") + std::strerror(errno));
    }
    path_ = templ;
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

struct RawRun {
  bool timed_out = false;
  bool truncated = false;
  bool exited = false;
  int exit_status = -1;
  std::string out;
  std::string err;
  Seconds elapsed{0};
};

// Process groups currently under supervision, for terminate_active_sandboxes().
std::mutex g_active_mu;
std::set<pid_t> g_active;

void track(pid_t pgid, bool active) {
  std::lock_guard lock(g_active_mu);
  if (active) {
    g_active.insert(pgid);
  } else {
    g_active.erase(pgid);
  }
}

void kill_and_reap_group(pid_t pgid) {
  ::kill(-pgid, SIGKILL);
  int status = 0;
  while (::waitpid(-pgid, &status, 0) > 0 || errno == EINTR) {
  }
}

// Parent pid from /proc/<pid>/stat, or -1.
pid_t parent_of(const std::filesystem::path& stat_file) {
  std::ifstream in(stat_file);
  std::string line;
  if (!std::getline(in, line)) return -1;
  auto close = line.rfind(')');
  if (close == std::string::npos) return -1;
  char state = 0;
  long ppid = -1;
  if (std::sscanf(line.c_str() + close + 1, " %c %ld", &state, &ppid) != 2) return -1;
  return static_cast<pid_t>(ppid);
}

// Descendants that left their process group (setsid, setpgid) are
// re-parented to this subreaper once their parent dies. Any child that is
// not a supervised group leader is such an escapee. Caller holds g_active_mu.
void sweep_escaped_locked() {
  const pid_t self = ::getpid();
  for (int pass = 0; pass < 64; ++pass) {
    std::vector<pid_t> found;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator("/proc", ec)) {
      const std::string name = entry.path().filename().string();
      if (name.empty() || name.find_first_not_of("0123456789") != std::string::npos) continue;
      const auto pid = static_cast<pid_t>(std::stol(name));
      if (g_active.contains(pid) || parent_of(entry.path() / "stat") != self) continue;
      found.push_back(pid);
    }
    if (found.empty()) return;
    for (pid_t pid : found) ::kill(pid, SIGKILL);
    for (pid_t pid : found) {
      int status = 0;
      while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
      }
    }
  }
}

RawRun spawn_and_supervise(const std::vector<std::string>& argv, const std::string& stdin_data,
                           const ResourceLimits& limits) {
  process_setup_once();

  std::vector<char*> cargv;
  cargv.reserve(argv.size() + 1);
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  Pipe in = make_pipe();
  Pipe out = make_pipe();
  Pipe err = make_pipe();
  Pipe exec_status = make_pipe();

  rlimit as_limit{limits.memory_limit, limits.memory_limit};
  auto cpu_seconds = static_cast<rlim_t>(std::ceil(limits.wall_timeout.count())) + 1;
  rlimit cpu_limit{cpu_seconds, cpu_seconds + 1};

  const auto start = Clock::now();
  // Forking under the lock keeps a new group leader from looking like an
  // escapee to a concurrent sweep.
  std::unique_lock active_lock(g_active_mu);
  pid_t pid = ::fork();
  if (pid < 0) {
    fail(ErrorCode::kSandboxSpawnFailure, std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    // Child: async-signal-safe calls only until exec.
    ::setpgid(0, 0);
    ::dup2(in.read.get(), STDIN_FILENO);
    ::dup2(out.write.get(), STDOUT_FILENO);
    ::dup2(err.write.get(), STDERR_FILENO);
    ::setrlimit(RLIMIT_AS, &as_limit);
    ::setrlimit(RLIMIT_CPU, &cpu_limit);
    ::signal(SIGPIPE, SIG_DFL);
    ::execvp(cargv[0], cargv.data());
    int code = errno;
    [[maybe_unused]] auto n = ::write(exec_status.write.get(), &code, sizeof(code));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  g_active.insert(pid);
  active_lock.unlock();
  in.read.reset();
  out.write.reset();
  err.write.reset();
  exec_status.write.reset();

  int exec_errno = 0;
  ssize_t got;
  do {
    got = ::read(exec_status.read.get(), &exec_errno, sizeof(exec_errno));
  } while (got < 0 && errno == EINTR);
  if (got == static_cast<ssize_t>(sizeof(exec_errno))) {
    kill_and_reap_group(pid);
    track(pid, false);
    fail(ErrorCode::kSandboxSpawnFailure,
         "cannot exec '" + argv[0] + "': " + std::strerror(exec_errno));
  }

  RawRun run;
  set_nonblocking(in.write.get());
  set_nonblocking(out.read.get());
  set_nonblocking(err.read.get());
  if (stdin_data.empty()) in.write.reset();

  const auto deadline = start + std::chrono::duration_cast<Clock::duration>(limits.wall_timeout);
  std::size_t stdin_offset = 0;
  char buf[65536];

  auto drain = [&](Fd& fd, std::string& sink) {
    while (fd) {
      ssize_t n = ::read(fd.get(), buf, sizeof(buf));
      if (n > 0) {
        std::size_t room = limits.max_output_bytes > sink.size() ? limits.max_output_bytes - sink.size() : 0;
        if (static_cast<std::size_t>(n) > room) {
          sink.append(buf, room);
          run.truncated = true;
          return;
        }
        sink.append(buf, static_cast<std::size_t>(n));
      } else if (n == 0) {
        fd.reset();
      } else {
        if (errno != EINTR) return;
      }
    }
  };

  while (true) {
    int status = 0;
    pid_t w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid) {
      run.exited = true;
      run.exit_status = status;
      drain(out.read, run.out);
      drain(err.read, run.err);
      break;
    }
    auto now = Clock::now();
    if (now >= deadline) {
      run.timed_out = true;
      break;
    }

    pollfd fds[3];
    nfds_t nfds = 0;
    if (out.read) fds[nfds++] = {out.read.get(), POLLIN, 0};
    if (err.read) fds[nfds++] = {err.read.get(), POLLIN, 0};
    if (in.write) fds[nfds++] = {in.write.get(), POLLOUT, 0};
    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    int wait_ms = static_cast<int>(std::clamp<long long>(remaining, 1, 10));
    ::poll(fds, nfds, wait_ms);

    drain(out.read, run.out);
    drain(err.read, run.err);
    if (run.truncated) break;

    if (in.write) {
      ssize_t n = ::write(in.write.get(), stdin_data.data() + stdin_offset,
                          stdin_data.size() - stdin_offset);
      if (n > 0) stdin_offset += static_cast<std::size_t>(n);
      if ((n < 0 && errno == EPIPE) || stdin_offset == stdin_data.size()) in.write.reset();
    }
  }

  if (!run.exited) {
    ::kill(-pid, SIGKILL);
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    run.exit_status = status;
  }
  // Also collects background processes the candidate left behind.
  kill_and_reap_group(pid);
  {
    std::lock_guard lock(g_active_mu);
    g_active.erase(pid);
    sweep_escaped_locked();
  }
  run.elapsed = Clock::now() - start;
  return run;
}

bool is_blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

}  // namespace

void terminate_active_sandboxes() {
  std::lock_guard lock(g_active_mu);
  for (pid_t pgid : g_active) ::kill(-pgid, SIGKILL);
}

void ResourceLimits::validate() const {
  require(wall_timeout.count() > 0, "wall_timeout must be positive");
  require(memory_limit > 0, "memory_limit must be positive");
  require(max_output_bytes > 0, "max_output_bytes must be positive");
}

std::string_view outcome_name(Outcome outcome) {
  switch (outcome) {
    case Outcome::kPass: return "pass";
    case Outcome::kWrongOutput: return "wrong_output";
    case Outcome::kRuntimeError: return "runtime_error";
    case Outcome::kTimeout: return "timeout";
    case Outcome::kOutputTruncated: return "output_truncated";
  }
  return "unknown";
}

Outcome outcome_from_name(std::string_view name) {
  for (Outcome o : {Outcome::kPass, Outcome::kWrongOutput, Outcome::kRuntimeError,
                    Outcome::kTimeout, Outcome::kOutputTruncated}) {
    if (outcome_name(o) == name) return o;
  }
  fail(ErrorCode::kMalformedRecord, "unknown outcome '" + std::string(name) + "'");
}

void ExecutionReport::finalize() {
  std::int64_t passed = 0;
  for (const auto& v : verdicts) passed += v.outcome == Outcome::kPass ? 1 : 0;
  const auto total = static_cast<std::int64_t>(verdicts.size());
  all_passed = total > 0 && passed == total;
  pass_ratio = total > 0 ? Rational(passed, total) : Rational(0);
}

std::string normalize_output(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (true) {
    std::size_t end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? end : end - start);
    std::size_t last = line.find_last_not_of(" \t\r\f\v");
    lines.push_back(last == std::string_view::npos ? std::string_view{} : line.substr(0, last + 1));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  std::string result;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) result += '\n';
    result += lines[i];
  }
  return result;
}

Sandbox::Sandbox(SandboxConfig config) : config_(std::move(config)) {
  if (config_.interpreter_argv.empty()) fail(ErrorCode::kConfigInvalid, "empty interpreter argv");
  if (config_.parallelism < 1) fail(ErrorCode::kConfigInvalid, "parallelism must be >= 1");
  if (config_.require_external_jail && config_.jail_argv.empty()) {
    fail(ErrorCode::kConfigInvalid, "sandbox.require_external_jail is set but sandbox.jail_argv is empty");
  }
}

TestVerdict Sandbox::run_test(std::string_view program_source, const GoldenTest& test,
                              const ResourceLimits& limits) const {
  limits.validate();
  TestVerdict verdict;
  verdict.test_id = test.test_id;
  if (is_blank(program_source)) {
    verdict.outcome = Outcome::kRuntimeError;
    verdict.captured_stderr = "empty program";
    return verdict;
  }

  ScratchDir scratch;
  std::filesystem::path source_file = scratch.path() / "candidate.src";
  {
    std::ofstream f(source_file, std::ios::binary);
    f << program_source;
    if (test.mode == TestMode::kAssertion) f << "\n" << test.assertion_snippet << "\n";
    if (!f) fail(ErrorCode::kSandboxSpawnFailure, "cannot write " + source_file.string());
  }

  std::vector<std::string> argv = config_.jail_argv;
  for (const auto& arg : config_.interpreter_argv) {
    std::string a = arg;
    for (std::size_t pos; (pos = a.find("{source_file}")) != std::string::npos;) {
      a.replace(pos, 13, source_file.string());
    }
    argv.push_back(std::move(a));
  }

  const std::string& stdin_data = test.mode == TestMode::kStdinStdout ? test.input_text : std::string{};
  RawRun run = spawn_and_supervise(argv, stdin_data, limits);

  verdict.elapsed = run.elapsed;
  verdict.captured_stdout = std::move(run.out);
  verdict.captured_stderr = std::move(run.err);
  const bool clean_exit = WIFEXITED(run.exit_status) && WEXITSTATUS(run.exit_status) == 0;
  if (run.timed_out) {
    verdict.outcome = Outcome::kTimeout;
  } else if (run.truncated) {
    verdict.outcome = Outcome::kOutputTruncated;
  } else if (!clean_exit) {
    verdict.outcome = Outcome::kRuntimeError;
  } else if (test.mode == TestMode::kAssertion) {
    verdict.outcome = Outcome::kPass;
  } else {
    verdict.outcome = normalize_output(verdict.captured_stdout) == normalize_output(test.expected_output)
                          ? Outcome::kPass
                          : Outcome::kWrongOutput;
  }
  return verdict;
}

ExecutionReport Sandbox::run_suite(std::string_view program_source, const CorpusRecord& record,
                                   const ResourceLimits& limits, int candidate_index) const {
  require(!record.tests.empty(), "run_suite: record has no tests");
  ExecutionReport report;
  report.requirement_id = record.requirement_id;
  report.candidate_index = candidate_index;
  report.verdicts.resize(record.tests.size());

  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(config_.parallelism), record.tests.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < record.tests.size();) {
      try {
        report.verdicts[i] = run_test(program_source, record.tests[i], limits);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (first_error) std::rethrow_exception(first_error);
  report.finalize();
  return report;
}

}  // namespace cdp
