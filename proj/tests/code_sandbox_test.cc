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

#include <signal.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "gtest/gtest.h"
#include "httplib.h"
#include "toolplan/response_parsers.h"

namespace toolplan {
namespace {

namespace fs = std::filesystem;
using std::chrono::milliseconds;

SandboxPolicy StubPolicy() {
  SandboxPolicy p;
  p.interpreter_command = {"/bin/sh", (DataDir() / "sandbox" / "stub_interpreter.sh").string()};
  return p;
}

SandboxPolicy ShellPolicy() {
  SandboxPolicy p;
  p.interpreter_command = {"/bin/bash", "-s"};
  p.wall_clock_limit = milliseconds(3000);
  return p;
}

TEST(SandboxPolicyTest, Validation) {
  EXPECT_TRUE(StubPolicy().Validate().ok());
  SandboxPolicy p = StubPolicy();
  p.wall_clock_limit = milliseconds(0);
  EXPECT_FALSE(p.Validate().ok());
  p = StubPolicy();
  p.memory_limit = -1;
  EXPECT_FALSE(p.Validate().ok());
  p.interpreter_command.clear();
  EXPECT_FALSE(p.Validate().ok());
}

TEST(SandboxPolicyTest, DefaultHonorsEnvironment) {
  ::setenv("TOOLPLAN_INTERPRETER", "python3  /opt/runner.py", 1);
  SandboxPolicy p = SandboxPolicy::Default();
  ::unsetenv("TOOLPLAN_INTERPRETER");
  EXPECT_EQ(p.interpreter_command, (std::vector<std::string>{"python3", "/opt/runner.py"}));
  EXPECT_EQ(p.wall_clock_limit, milliseconds(5000));
  EXPECT_EQ(SandboxPolicy::Default().interpreter_command.back(),
            (DataDir() / "sandbox" / "stub_interpreter.sh").string());
}

TEST(DecodeProtocolTest, OkLine) {
  ChildOutput out;
  out.exit_code = 0;
  out.stdout_text = "noise\nOK 2518731\n";
  EXPECT_EQ(DecodeProtocol(out).value(), "2518731");
}

TEST(DecodeProtocolTest, LastProtocolLineWins) {
  ChildOutput out;
  out.exit_code = 0;
  out.stdout_text = "OK 1\nprinted by user code\nOK 2\ntrailing chatter";
  EXPECT_EQ(DecodeProtocol(out).value(), "2");
}

TEST(DecodeProtocolTest, Escapes) {
  ChildOutput out;
  out.exit_code = 0;
  out.stdout_text = "OK a\\nb\\\\c\\t\r\n";
  EXPECT_EQ(DecodeProtocol(out).value(), "a\nb\\c\\t");
}

TEST(DecodeProtocolTest, ErrLineIsRuntimeError) {
  ChildOutput out;
  out.exit_code = 0;
  out.stdout_text = "ERR NameError: name 'x' is not defined\n";
  auto r = DecodeProtocol(out);
  EXPECT_EQ(r.error().code, ErrorCode::kRuntimeError);
  EXPECT_EQ(r.error().message, "NameError: name 'x' is not defined");
}

TEST(DecodeProtocolTest, NoLine) {
  ChildOutput out;
  out.exit_code = 0;
  out.stdout_text = "<object object at 0x1>";
  EXPECT_EQ(DecodeProtocol(out).error().code, ErrorCode::kSerializationError);
  out.exit_code = 1;
  out.stderr_text = "Traceback: boom";
  auto r = DecodeProtocol(out);
  EXPECT_EQ(r.error().code, ErrorCode::kRuntimeError);
  EXPECT_NE(r.error().message.find("boom"), std::string::npos);
  out.exit_code = -1;
  out.term_signal = SIGSEGV;
  EXPECT_EQ(DecodeProtocol(out).error().code, ErrorCode::kRuntimeError);
}

TEST(ParseReturnValueTest, Shapes) {
  EXPECT_EQ(ParseReturnValue("4"), AnswerValue::FromNumberText("4"));
  EXPECT_EQ(ParseReturnValue(" 20.085536923187668 "),
            AnswerValue::FromNumberText("20.085536923187668"));
  EXPECT_EQ(ParseReturnValue("Jolin Tsai"), AnswerValue::Text("Jolin Tsai"));
  EXPECT_EQ(ParseReturnValue("[1, 'a']"),
            AnswerValue::Sequence({AnswerValue::FromNumberText("1"), AnswerValue::Text("a")}));
  EXPECT_EQ(ParseReturnValue("[]"), AnswerValue::Sequence({}));
}

class SandboxTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::string why;
    if (!SandboxSupported(&why)) GTEST_SKIP() << why;
  }
};

TEST_F(SandboxTest, SolutionExamples) {
  Sandbox sb(StubPolicy());
  EXPECT_EQ(sb.RunSolution(WrapAsSolution("return 37593 * 67")).value(),
            AnswerValue::FromNumberText("2518731"));
  EXPECT_EQ(sb.RunSolution(WrapAsSolution("import math; return math.gcd(math.factorial(4), 212)"))
                .value(),
            AnswerValue::FromNumberText("4"));
  EXPECT_EQ(sb.RunSolution(WrapAsSolution("import math; return math.exp(3)")).value(),
            AnswerValue::FromNumberText("20.085536923187668"));
}

TEST_F(SandboxTest, InfiniteLoopTimesOut) {
  SandboxPolicy p = StubPolicy();
  p.wall_clock_limit = milliseconds(500);
  Sandbox sb(p);
  const auto start = std::chrono::steady_clock::now();
  auto r = sb.RunSolution("def solution():\n    while True: pass\n");
  const auto elapsed = std::chrono::steady_clock::now() - start;
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.error().code, ErrorCode::kTimeout);
  EXPECT_LT(elapsed, std::chrono::seconds(3));
}

TEST_F(SandboxTest, StatementExamples) {
  Sandbox sb(StubPolicy());
  EXPECT_EQ(sb.RunStatement("print(24**0.4)").value(), "3.565204915932007");
  EXPECT_EQ(sb.RunStatement("print(1+1)").value(), "2");
  auto bad = sb.RunStatement("print(undefined_name)");
  ASSERT_FALSE(bad.ok());
  EXPECT_EQ(bad.error().code, ErrorCode::kRuntimeError);
  EXPECT_NE(bad.error().message.find("undefined_name"), std::string::npos);
  EXPECT_EQ(sb.RunStatement("print('two\\nlines')").value(), "two\nlines");
  EXPECT_EQ(sb.RunStatement("  ").error().code, ErrorCode::kInvalidArgument);
}

TEST_F(SandboxTest, RuntimeAndSerializationErrors) {
  Sandbox sb(StubPolicy());
  EXPECT_EQ(sb.RunSolution(WrapAsSolution("return 1 / 0")).error().code, ErrorCode::kRuntimeError);
  EXPECT_EQ(sb.RunSolution(WrapAsSolution("return object()")).error().code,
            ErrorCode::kSerializationError);
  EXPECT_EQ(sb.RunSolution(WrapAsSolution("return [1, 2]")).value(),
            AnswerValue::Sequence(
                {AnswerValue::FromNumberText("1"), AnswerValue::FromNumberText("2")}));
}

TEST_F(SandboxTest, MissingInterpreterIsSpawnFailure) {
  SandboxPolicy p;
  p.interpreter_command = {"/nonexistent/interpreter"};
  auto r = Sandbox(p).RunSolution("def solution(): return 1");
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.error().code, ErrorCode::kSandboxSpawnFailure);
  EXPECT_NE(r.error().message.find("exec"), std::string::npos);
}

TEST_F(SandboxTest, WorkingDirectoryIsPrivateAndRemoved) {
  Sandbox sb(ShellPolicy());
  auto out = sb.Spawn("echo hi > note.txt && echo \"OK $(pwd):$(cat note.txt)\"", {});
  ASSERT_TRUE(out.ok()) << out.error().ToString();
  auto value = DecodeProtocol(*out);
  ASSERT_TRUE(value.ok()) << out->stderr_text;
  const std::string dir = value->substr(0, value->find(':'));
  EXPECT_NE(dir.find("toolplan-sbx-"), std::string::npos);
  EXPECT_EQ(value->substr(value->find(':') + 1), "hi");
  EXPECT_FALSE(fs::exists(dir));
}

class ProbeTest : public SandboxTest {
 protected:
  void SetUp() override {
    SandboxTest::SetUp();
    if (IsSkipped()) return;
    outside_ = fs::temp_directory_path() /
               ("toolplan-probe-" + std::to_string(::getpid()) + "-" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(outside_);
    std::ofstream(outside_ / "keep.txt") << "original";
  }
  void TearDown() override {
    if (!outside_.empty()) fs::remove_all(outside_);
  }
  // Runs a bash probe that prints OK when the escape worked.
  Result<std::string> Probe(const std::string& script) {
    Sandbox sb(ShellPolicy());
    TOOLPLAN_ASSIGN_OR_RETURN(ChildOutput out, sb.Spawn(script, {}));
    return DecodeProtocol(out);
  }
  fs::path outside_;
};

TEST_F(ProbeTest, CannotCreateFilesOutsideTempDir) {
  const std::string target = (outside_ / "escaped.txt").string();
  auto r = Probe("if echo pwned > '" + target + "' 2>/dev/null; then echo OK escaped; else echo ERR denied; fi");
  EXPECT_FALSE(r.ok());
  EXPECT_FALSE(fs::exists(target));
}

TEST_F(ProbeTest, CannotModifyOrDeleteExistingFiles) {
  const std::string keep = (outside_ / "keep.txt").string();
  EXPECT_FALSE(Probe("if echo x >> '" + keep + "' 2>/dev/null; then echo OK; else echo ERR; fi").ok());
  EXPECT_FALSE(Probe("if rm -f '" + keep + "' 2>/dev/null && [ ! -e '" + keep +
                     "' ]; then echo OK; else echo ERR; fi")
                   .ok());
  EXPECT_FALSE(Probe("if mv '" + keep + "' ./stolen 2>/dev/null; then echo OK; else echo ERR; fi").ok());
  std::ifstream in(keep);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_EQ(content, "original");
}

TEST_F(ProbeTest, CannotCreateDirectoriesOrLinksOutside) {
  EXPECT_FALSE(Probe("if mkdir '" + (outside_ / "d").string() +
                     "' 2>/dev/null; then echo OK; else echo ERR; fi")
                   .ok());
  EXPECT_FALSE(Probe("if ln -s /etc/passwd '" + (outside_ / "l").string() +
                     "' 2>/dev/null; then echo OK; else echo ERR; fi")
                   .ok());
  EXPECT_FALSE(fs::exists(outside_ / "d"));
  EXPECT_FALSE(fs::is_symlink(outside_ / "l"));
}

TEST_F(ProbeTest, CannotWriteToSharedTmp) {
  const std::string target = "/tmp/toolplan-probe-" + std::to_string(::getpid());
  EXPECT_FALSE(Probe("if : > '" + target + "' 2>/dev/null; then echo OK; else echo ERR; fi").ok());
  EXPECT_FALSE(fs::exists(target));
}

TEST_F(ProbeTest, CannotConnectToLocalServer) {
  httplib::Server server;
  const int port = server.bind_to_any_port("127.0.0.1");
  std::atomic<int> hits{0};
  server.Get("/", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.set_content("hello", "text/plain");
  });
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string script = "if exec 3<>/dev/tcp/127.0.0.1/" + std::to_string(port) +
                             " 2>/dev/null; then echo OK connected; else echo ERR refused; fi";
  // Control: the same probe connects when run unconfined.
  const std::string control = "bash -c '" + script + "' 2>/dev/null | grep -q 'OK connected'";
  EXPECT_EQ(std::system(control.c_str()), 0);
  auto r = Probe(script);
  server.stop();
  t.join();
  EXPECT_FALSE(r.ok());
}

TEST_F(ProbeTest, CannotReachExternalAddresses) {
  auto r = Probe(
      "if exec 3<>/dev/tcp/1.1.1.1/80 2>/dev/null; then echo OK; else echo ERR unreachable; fi");
  EXPECT_FALSE(r.ok());
  // /proc/self/net is per namespace; /sys/class/net follows the mount.
  auto ifaces = Probe("echo \"OK $(tail -n +3 /proc/self/net/dev | cut -d: -f1 | tr -d ' ')\"");
  ASSERT_TRUE(ifaces.ok());
  EXPECT_EQ(Trim(*ifaces), "lo");  // fresh namespace: loopback only, and down
}

TEST_F(ProbeTest, TimeoutKillsBackgroundChildren) {
  SandboxPolicy p = ShellPolicy();
  p.wall_clock_limit = milliseconds(400);
  Sandbox sb(p);
  auto out = sb.Spawn("sleep 30 &\necho $!\nwait\n", {});
  ASSERT_TRUE(out.ok());
  EXPECT_TRUE(out->timed_out);
  const pid_t bg = static_cast<pid_t>(std::atoi(out->stdout_text.c_str()));
  ASSERT_GT(bg, 0);
  bool gone = false;
  for (int i = 0; i < 100 && !gone; ++i) {
    std::ifstream stat("/proc/" + std::to_string(bg) + "/stat");
    std::string line;
    std::getline(stat, line);
    // Gone, or a zombie waiting for the container's init to reap it.
    gone = line.empty() || line.find(") Z") != std::string::npos;
    if (!gone) std::this_thread::sleep_for(milliseconds(10));
  }
  EXPECT_TRUE(gone);
}

TEST_F(ProbeTest, PythonProbesFail) {
  if (std::system("command -v python3 >/dev/null 2>&1") != 0) GTEST_SKIP() << "no python3";
  SandboxPolicy p;
  p.interpreter_command = {"python3", "-"};
  Sandbox sb(p);
  const std::string target = (outside_ / "py.txt").string();
  const std::string write_probe =
      "try:\n    open('" + target + "', 'w').write('x')\n    print('OK escaped')\n"
      "except Exception as e:\n    print('ERR', type(e).__name__)\n";
  auto w = sb.Spawn(write_probe, {});
  ASSERT_TRUE(w.ok());
  EXPECT_FALSE(DecodeProtocol(*w).ok()) << w->stdout_text;
  EXPECT_FALSE(fs::exists(target));
  const std::string net_probe =
      "import socket\ntry:\n    socket.create_connection(('1.1.1.1', 53), timeout=1)\n"
      "    print('OK escaped')\nexcept Exception as e:\n    print('ERR', type(e).__name__)\n";
  auto n = sb.Spawn(net_probe, {});
  ASSERT_TRUE(n.ok());
  EXPECT_FALSE(DecodeProtocol(*n).ok()) << n->stdout_text;
  const std::string mem_probe =
      "try:\n    b = bytearray(4 << 30)\n    print('OK allocated')\n"
      "except MemoryError:\n    print('ERR MemoryError')\n";
  auto m = sb.Spawn(mem_probe, {});
  ASSERT_TRUE(m.ok());
  EXPECT_FALSE(DecodeProtocol(*m).ok()) << m->stdout_text;
}

TEST_F(SandboxTest, ConcurrentRunsAreIndependent) {
  SandboxPolicy p = StubPolicy();
  p.max_workers = 2;
  Sandbox sb(p);
  std::atomic<int> ok{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      auto r = sb.RunStatement("print(1+1)");
      if (r.ok() && *r == "2") ++ok;
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(ok.load(), 8);
}

TEST_F(SandboxTest, LargeInputIsDelivered) {
  Sandbox sb(ShellPolicy());
  std::string script = "cat > /dev/null <<'END'\n" + std::string(1 << 20, 'x') + "\nEND\necho OK done\n";
  auto out = sb.Spawn(script, {});
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(DecodeProtocol(*out).value(), "done");
}

}  // namespace
}  // namespace toolplan
