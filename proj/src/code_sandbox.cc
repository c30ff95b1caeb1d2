//
// Copyright 2026 The toolplan Authors
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
//

#include "toolplan/code_sandbox.h"

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <stdlib.h>
#include <sys/prctl.h>
#include <sys/resource.h>
#include <sys/syscall.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

namespace toolplan {
namespace {

// The system header may predate the ruleset fields for network and scope
// restrictions, so the kernel ABI is spelled out here.
struct LandlockRulesetAttr {
  uint64_t handled_access_fs;
  uint64_t handled_access_net;
  uint64_t scoped;
};
struct LandlockPathBeneathAttr {
  uint64_t allowed_access;
  int32_t parent_fd;
} __attribute__((packed));

constexpr uint32_t kLandlockVersionFlag = 1U << 0;
constexpr int kRulePathBeneath = 1;

constexpr uint64_t kFsWriteFile = 1ULL << 1;
constexpr uint64_t kFsRemoveDir = 1ULL << 4;
constexpr uint64_t kFsRemoveFile = 1ULL << 5;
constexpr uint64_t kFsMakeChar = 1ULL << 6;
constexpr uint64_t kFsMakeDir = 1ULL << 7;
constexpr uint64_t kFsMakeReg = 1ULL << 8;
constexpr uint64_t kFsMakeSock = 1ULL << 9;
constexpr uint64_t kFsMakeFifo = 1ULL << 10;
constexpr uint64_t kFsMakeBlock = 1ULL << 11;
constexpr uint64_t kFsMakeSym = 1ULL << 12;
constexpr uint64_t kFsRefer = 1ULL << 13;     // ABI 2
constexpr uint64_t kFsTruncate = 1ULL << 14;  // ABI 3
constexpr uint64_t kNetBindTcp = 1ULL << 0;   // ABI 4
constexpr uint64_t kNetConnectTcp = 1ULL << 1;
constexpr uint64_t kScopeAbstractUnix = 1ULL << 0;  // ABI 6
constexpr uint64_t kScopeSignal = 1ULL << 1;

int LandlockAbi() {
  static const int abi = [] {
    long v = syscall(SYS_landlock_create_ruleset, nullptr, 0, kLandlockVersionFlag);
    return v < 0 ? 0 : static_cast<int>(v);
  }();
  return abi;
}

// Everything the child needs, prepared before fork() so the child only
// makes async-signal-safe calls.
struct ChildPlan {
  std::vector<std::string> argv_storage;
  std::vector<char*> argv;
  std::vector<std::string> env_storage;
  std::vector<char*> env;
  std::string work_dir;
  int64_t memory_limit = 0;
  int64_t cpu_seconds = 0;
  int abi = 0;
};

// Writes "<stage> <errno>" to `fd` and exits. Async-signal-safe.
[[noreturn]] void ChildFail(int fd, const char* stage) {
  char buf[96];
  size_t n = 0;
  for (const char* p = stage; *p != '\0' && n < 64; ++p) buf[n++] = *p;
  buf[n++] = ' ';
  int e = errno;
  char digits[16];
  int d = 0;
  do {
    digits[d++] = static_cast<char>('0' + e % 10);
    e /= 10;
  } while (e > 0 && d < 15);
  while (d > 0) buf[n++] = digits[--d];
  ssize_t ignored = write(fd, buf, n);
  (void)ignored;
  _exit(127);
}

bool SetLimit(int resource, rlim_t value) {
  struct rlimit rl;
  rl.rlim_cur = value;
  rl.rlim_max = value;
  return setrlimit(resource, &rl) == 0;
}

bool AddPathRule(int ruleset, const char* path, uint64_t access) {
  int fd = open(path, O_PATH | O_CLOEXEC);
  if (fd < 0) return false;
  LandlockPathBeneathAttr attr{access, fd};
  long rc = syscall(SYS_landlock_add_rule, ruleset, kRulePathBeneath, &attr, 0);
  close(fd);
  return rc == 0;
}

[[noreturn]] void RunChild(const ChildPlan& plan, int in_fd, int out_fd, int err_fd,
                           int status_fd) {
  setpgid(0, 0);
  sigset_t all;
  sigemptyset(&all);
  sigprocmask(SIG_SETMASK, &all, nullptr);
  signal(SIGPIPE, SIG_DFL);
  if (dup2(in_fd, 0) < 0 || dup2(out_fd, 1) < 0 || dup2(err_fd, 2) < 0) {
    ChildFail(status_fd, "dup2");
  }
  // Other threads may have opened descriptors without O_CLOEXEC.
  syscall(SYS_close_range, 3U, ~0U, 4U /* CLOSE_RANGE_CLOEXEC */);
  if (chdir(plan.work_dir.c_str()) != 0) ChildFail(status_fd, "chdir");
  if (!SetLimit(RLIMIT_AS, static_cast<rlim_t>(plan.memory_limit)) ||
      !SetLimit(RLIMIT_CPU, static_cast<rlim_t>(plan.cpu_seconds)) ||
      !SetLimit(RLIMIT_FSIZE, 64u << 20) || !SetLimit(RLIMIT_CORE, 0) ||
      !SetLimit(RLIMIT_NOFILE, 256)) {
    ChildFail(status_fd, "setrlimit");
  }
  if (unshare(CLONE_NEWNET) != 0 && unshare(CLONE_NEWUSER | CLONE_NEWNET) != 0) {
    ChildFail(status_fd, "unshare-net");
  }
  if (prctl(PR_SET_NO_NEW_PRIVS, 1, 0, 0, 0) != 0) ChildFail(status_fd, "no_new_privs");

  uint64_t fs = kFsWriteFile | kFsRemoveDir | kFsRemoveFile | kFsMakeChar | kFsMakeDir |
                kFsMakeReg | kFsMakeSock | kFsMakeFifo | kFsMakeBlock | kFsMakeSym;
  if (plan.abi >= 2) fs |= kFsRefer;
  if (plan.abi >= 3) fs |= kFsTruncate;
  LandlockRulesetAttr attr{fs, 0, 0};
  size_t attr_size = sizeof(uint64_t);
  if (plan.abi >= 4) {
    attr.handled_access_net = kNetBindTcp | kNetConnectTcp;
    attr_size = 2 * sizeof(uint64_t);
  }
  if (plan.abi >= 6) {
    attr.scoped = kScopeAbstractUnix | kScopeSignal;
    attr_size = sizeof(attr);
  }
  int ruleset = static_cast<int>(syscall(SYS_landlock_create_ruleset, &attr, attr_size, 0));
  if (ruleset < 0) ChildFail(status_fd, "landlock-create");
  if (!AddPathRule(ruleset, plan.work_dir.c_str(), fs)) ChildFail(status_fd, "landlock-rule");
  uint64_t devnull = kFsWriteFile | (plan.abi >= 3 ? kFsTruncate : 0);
  if (!AddPathRule(ruleset, "/dev/null", devnull)) ChildFail(status_fd, "landlock-rule");
  if (syscall(SYS_landlock_restrict_self, ruleset, 0) != 0) {
    ChildFail(status_fd, "landlock-restrict");
  }
  close(ruleset);

  execvpe(plan.argv[0], plan.argv.data(), plan.env.data());
  ChildFail(status_fd, "exec");
}

void IgnoreSigpipeOnce() {
  static std::once_flag once;
  std::call_once(once, [] { signal(SIGPIPE, SIG_IGN); });
}

struct Pipe {
  int fds[2] = {-1, -1};
  bool Open() { return pipe2(fds, O_CLOEXEC) == 0; }
  void CloseRead() { CloseFd(fds[0]); }
  void CloseWrite() { CloseFd(fds[1]); }
  ~Pipe() {
    CloseRead();
    CloseWrite();
  }
  static void CloseFd(int& fd) {
    if (fd >= 0) close(fd);
    fd = -1;
  }
};

std::string Tail(const std::string& s, size_t n = 400) {
  std::string t = Trim(s);
  return t.size() <= n ? t : "..." + t.substr(t.size() - n);
}

std::string Unescape(std::string_view v) {
  std::string out;
  out.reserve(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    if (v[i] == '\\' && i + 1 < v.size() && (v[i + 1] == 'n' || v[i + 1] == '\\')) {
      out += v[i + 1] == 'n' ? '\n' : '\\';
      ++i;
    } else {
      out += v[i];
    }
  }
  return out;
}

}  // namespace

Status SandboxPolicy::Validate() const {
  if (interpreter_command.empty() || interpreter_command[0].empty()) {
    return Error(ErrorCode::kInvalidArgument, "interpreter command is empty");
  }
  if (wall_clock_limit.count() <= 0 || memory_limit <= 0 || output_limit <= 0 ||
      max_workers <= 0) {
    return Error(ErrorCode::kInvalidArgument, "sandbox limits must be positive");
  }
  return Status::Ok();
}

SandboxPolicy SandboxPolicy::Default() {
  SandboxPolicy p;
  const char* env = std::getenv("TOOLPLAN_INTERPRETER");
  if (env != nullptr && *env != '\0') {
    std::istringstream in(env);
    for (std::string word; in >> word;) p.interpreter_command.push_back(word);
  } else {
    p.interpreter_command = {"/bin/sh", (DataDir() / "sandbox" / "stub_interpreter.sh").string()};
  }
  return p;
}

bool SandboxSupported(std::string* why) {
  if (LandlockAbi() < 1) {
    if (why != nullptr) *why = "kernel has no Landlock support";
    return false;
  }
  return true;
}

Result<std::string> DecodeProtocol(const ChildOutput& out) {
  std::vector<std::string_view> lines;
  std::string_view text = out.stdout_text;
  while (!text.empty()) {
    size_t nl = text.find('\n');
    lines.push_back(text.substr(0, nl));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    std::string_view line = *it;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line == "OK") return std::string();
    if (line.substr(0, 3) == "OK ") return Unescape(line.substr(3));
    if (line == "ERR" || line.substr(0, 4) == "ERR ") {
      return Error(ErrorCode::kRuntimeError, Unescape(line.size() > 4 ? line.substr(4) : ""));
    }
  }
  if (out.term_signal != 0) {
    return Error(ErrorCode::kRuntimeError,
                 "interpreter terminated by signal " + std::to_string(out.term_signal) +
                     (out.stderr_text.empty() ? "" : ": " + Tail(out.stderr_text)));
  }
  if (out.exit_code != 0) {
    return Error(ErrorCode::kRuntimeError,
                 out.stderr_text.empty() ? "interpreter exited with code " +
                                               std::to_string(out.exit_code)
                                         : Tail(out.stderr_text));
  }
  return Error(ErrorCode::kSerializationError,
               "no result line in interpreter output: " + Tail(out.stdout_text, 200));
}

AnswerValue ParseReturnValue(std::string_view value) {
  std::string v = Trim(value);
  if (v.size() >= 2 && v.front() == '[' && v.back() == ']') {
    std::vector<AnswerValue> items;
    std::string inner = Trim(std::string_view(v).substr(1, v.size() - 2));
    if (!inner.empty()) {
      size_t start = 0;
      while (true) {
        size_t comma = inner.find(',', start);
        std::string item = Trim(std::string_view(inner).substr(
            start, comma == std::string::npos ? std::string::npos : comma - start));
        if (item.size() >= 2 && (item.front() == '\'' || item.front() == '"') &&
            item.back() == item.front()) {
          item = item.substr(1, item.size() - 2);
        }
        items.push_back(AnswerValue::Infer(item));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
    }
    return AnswerValue::Sequence(std::move(items));
  }
  return AnswerValue::Infer(v);
}

Sandbox::Sandbox(SandboxPolicy policy) : policy_(std::move(policy)) {}

Result<ChildOutput> Sandbox::Spawn(std::string_view input,
                                   const std::vector<std::string>& extra_args) {
  TOOLPLAN_RETURN_IF_ERROR(policy_.Validate());
  std::string why;
  if (!SandboxSupported(&why)) return Error(ErrorCode::kSandboxSpawnFailure, why);
  IgnoreSigpipeOnce();

  {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [this] { return running_ < policy_.max_workers; });
    ++running_;
  }
  struct Slot {
    Sandbox* s;
    ~Slot() {
      {
        std::lock_guard<std::mutex> lock(s->mu_);
        --s->running_;
      }
      s->cv_.notify_one();
    }
  } slot{this};

  std::string templ = (std::filesystem::temp_directory_path() / "toolplan-sbx-XXXXXX").string();
  if (mkdtemp(templ.data()) == nullptr) {
    return Error(ErrorCode::kSandboxSpawnFailure, std::string("mkdtemp: ") + std::strerror(errno));
  }
  struct DirGuard {
    std::string path;
    ~DirGuard() {
      std::error_code ec;
      std::filesystem::remove_all(path, ec);
    }
  } dir_guard{templ};

  ChildPlan plan;
  plan.work_dir = templ;
  plan.memory_limit = policy_.memory_limit;
  plan.cpu_seconds = policy_.wall_clock_limit.count() / 1000 + 2;
  plan.abi = LandlockAbi();
  plan.argv_storage = policy_.interpreter_command;
  plan.argv_storage.insert(plan.argv_storage.end(), extra_args.begin(), extra_args.end());
  for (std::string& a : plan.argv_storage) plan.argv.push_back(a.data());
  plan.argv.push_back(nullptr);
  const char* path_env = std::getenv("PATH");
  plan.env_storage = {
      "PATH=" + std::string(path_env != nullptr ? path_env : "/usr/local/bin:/usr/bin:/bin"),
      "HOME=" + templ,
      "TMPDIR=" + templ,
      "LANG=C.UTF-8",
      "PYTHONDONTWRITEBYTECODE=1",
      "PYTHONIOENCODING=utf-8",
  };
  for (std::string& e : plan.env_storage) plan.env.push_back(e.data());
  plan.env.push_back(nullptr);

  Pipe in, out, err, status;
  if (!in.Open() || !out.Open() || !err.Open() || !status.Open()) {
    return Error(ErrorCode::kSandboxSpawnFailure, std::string("pipe: ") + std::strerror(errno));
  }
  const auto start = std::chrono::steady_clock::now();
  const auto deadline = start + policy_.wall_clock_limit;
  pid_t pid = fork();
  if (pid < 0) {
    return Error(ErrorCode::kSandboxSpawnFailure, std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) RunChild(plan, in.fds[0], out.fds[1], err.fds[1], status.fds[1]);

  setpgid(pid, pid);  // also done by the child; whichever runs first wins
  in.CloseRead();
  out.CloseWrite();
  err.CloseWrite();
  status.CloseWrite();

  // The status pipe closes on a successful exec, or carries the failure.
  std::string failure;
  char buf[4096];
  for (;;) {
    ssize_t n = read(status.fds[0], buf, sizeof(buf));
    if (n > 0) {
      failure.append(buf, static_cast<size_t>(n));
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    break;
  }
  if (!failure.empty()) {
    int ws = 0;
    waitpid(pid, &ws, 0);
    size_t sp = failure.find(' ');
    int e = sp == std::string::npos ? 0 : std::atoi(failure.c_str() + sp + 1);
    return Error(ErrorCode::kSandboxSpawnFailure,
                 failure.substr(0, sp) + ": " + std::strerror(e), plan.argv_storage[0]);
  }

  fcntl(in.fds[1], F_SETFL, O_NONBLOCK);
  ChildOutput result;
  size_t written = 0;
  if (input.empty()) in.CloseWrite();
  auto append = [&](std::string& dst, const char* data, size_t n) {
    const size_t cap = static_cast<size_t>(policy_.output_limit);
    if (dst.size() < cap) dst.append(data, std::min(n, cap - dst.size()));
  };
  int status_code = 0;
  bool exited = false;
  while (true) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      result.timed_out = true;
      break;
    }
    if (out.fds[0] < 0 && err.fds[0] < 0) {
      pid_t w = waitpid(pid, &status_code, WNOHANG);
      if (w == pid) {
        exited = true;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
      continue;
    }
    pollfd fds[3];
    int nfds = 0;
    int idx_in = -1, idx_out = -1, idx_err = -1;
    if (in.fds[1] >= 0) {
      idx_in = nfds;
      fds[nfds++] = {in.fds[1], POLLOUT, 0};
    }
    if (out.fds[0] >= 0) {
      idx_out = nfds;
      fds[nfds++] = {out.fds[0], POLLIN, 0};
    }
    if (err.fds[0] >= 0) {
      idx_err = nfds;
      fds[nfds++] = {err.fds[0], POLLIN, 0};
    }
    auto wait_ms = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
    int rc = poll(fds, static_cast<nfds_t>(nfds), static_cast<int>(std::max<int64_t>(1, wait_ms)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (idx_in >= 0 && fds[idx_in].revents != 0) {
      if (fds[idx_in].revents & POLLOUT) {
        ssize_t n = write(in.fds[1], input.data() + written, input.size() - written);
        if (n > 0) written += static_cast<size_t>(n);
        if (n < 0 && errno != EAGAIN && errno != EINTR) in.CloseWrite();
        if (written == input.size()) in.CloseWrite();
      } else {
        in.CloseWrite();  // child closed its stdin
      }
    }
    for (auto [idx, pipe, dst] : {std::tuple{idx_out, &out, &result.stdout_text},
                                  std::tuple{idx_err, &err, &result.stderr_text}}) {
      if (idx < 0 || fds[idx].revents == 0) continue;
      ssize_t n = read(pipe->fds[0], buf, sizeof(buf));
      if (n > 0) {
        append(*dst, buf, static_cast<size_t>(n));
      } else if (n == 0 || (errno != EAGAIN && errno != EINTR)) {
        pipe->CloseRead();
      }
    }
  }
  // Take down the whole group, including anything the interpreter forked.
  kill(-pid, SIGKILL);
  if (!exited) waitpid(pid, &status_code, 0);
  if (WIFEXITED(status_code)) {
    result.exit_code = WEXITSTATUS(status_code);
  } else if (WIFSIGNALED(status_code)) {
    result.term_signal = WTERMSIG(status_code);
    if (result.timed_out && result.term_signal == SIGKILL) result.term_signal = 0;
  }
  return result;
}

Result<AnswerValue> Sandbox::RunSolution(std::string_view snippet) {
  TOOLPLAN_ASSIGN_OR_RETURN(ChildOutput out, Spawn(snippet, {}));
  if (out.timed_out) {
    return Error(ErrorCode::kTimeout, "solution exceeded " +
                                          std::to_string(policy_.wall_clock_limit.count()) + " ms");
  }
  TOOLPLAN_ASSIGN_OR_RETURN(std::string value, DecodeProtocol(out));
  return ParseReturnValue(value);
}

Result<std::string> Sandbox::RunStatement(std::string_view code_line) {
  if (Trim(code_line).empty()) return Error(ErrorCode::kInvalidArgument, "empty statement");
  TOOLPLAN_ASSIGN_OR_RETURN(ChildOutput out, Spawn(code_line, {"--statement"}));
  if (out.timed_out) {
    return Error(ErrorCode::kTimeout, "statement exceeded " +
                                          std::to_string(policy_.wall_clock_limit.count()) + " ms");
  }
  TOOLPLAN_ASSIGN_OR_RETURN(std::string value, DecodeProtocol(out));
  if (!value.empty() && value.back() == '\n') value.pop_back();
  return value;
}

}  // namespace toolplan
