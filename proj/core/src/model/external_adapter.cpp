#include "cfaudit/model/external_adapter.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

extern char** environ;

namespace cfaudit::model {

using nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

AdapterConfig AdapterConfig::from_json(const ordered_json& j) {
  AdapterConfig c;
  try {
    c.command = j.at("command").get<std::vector<std::string>>();
    if (j.contains("timeout_ms")) c.timeout = std::chrono::milliseconds(j.at("timeout_ms").get<long>());
    c.batch_size = j.value("batch_size", c.batch_size);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed adapter config: ") + e.what());
  }
  if (c.command.empty()) throw ValidationError("adapter command is empty");
  if (c.timeout.count() <= 0 || c.batch_size == 0) throw ValidationError("invalid adapter timeout or batch size");
  return c;
}

ordered_json AdapterConfig::to_json() const {
  return {{"command", command}, {"timeout_ms", timeout.count()}, {"batch_size", batch_size}};
}

AdapterProcess::AdapterProcess(const AdapterConfig& config, const ColumnMap& columns) : config_(config) {
  // A dead adapter must surface as EPIPE, not kill us.
  ::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2], out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw AdapterError(AdapterError::Kind::spawn, "pipe failed");
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw AdapterError(AdapterError::Kind::spawn, "pipe failed");
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::vector<char*> argv;
  for (const auto& a : config_.command) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    throw AdapterError(AdapterError::Kind::spawn,
                       "cannot start adapter '" + config_.command[0] + "': " + std::strerror(rc));
  }
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];

  ordered_json hello;
  hello["op"] = "hello";
  auto names = ordered_json::array();
  for (const auto& c : columns) names.push_back(c.label());
  hello["columns"] = std::move(names);
  send(hello.dump());
  const auto line = receive();
  ordered_json reply;
  try {
    reply = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    throw AdapterError(AdapterError::Kind::malformed, "malformed handshake reply: " + line);
  }
  if (!reply.is_object() || !reply.contains("ok") || reply["ok"] != true) {
    throw AdapterError(AdapterError::Kind::protocol, "adapter rejected handshake: " + line);
  }
}

AdapterProcess::~AdapterProcess() {
  if (pid_ > 0) {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    ::kill(pid_, SIGKILL);
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
}

void AdapterProcess::fail_exited(const std::string& context) {
  int status = 0;
  std::string detail;
  if (pid_ > 0 && ::waitpid(pid_, &status, WNOHANG) == pid_) {
    pid_ = -1;
    if (WIFEXITED(status)) detail = " (exit status " + std::to_string(WEXITSTATUS(status)) + ")";
    else if (WIFSIGNALED(status)) detail = " (signal " + std::to_string(WTERMSIG(status)) + ")";
  }
  throw AdapterError(AdapterError::Kind::exited, "adapter exited " + context + detail);
}

void AdapterProcess::send(const std::string& line) {
  std::string payload = line + '\n';
  const auto deadline = Clock::now() + config_.timeout;
  std::size_t written = 0;
  while (written < payload.size()) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) throw AdapterError(AdapterError::Kind::timeout, "timed out writing to adapter");
    pollfd pfd{to_child_, POLLOUT, 0};
    const int pr = ::poll(&pfd, 1, static_cast<int>(left));
    if (pr < 0 && errno == EINTR) continue;
    if (pr == 0) throw AdapterError(AdapterError::Kind::timeout, "timed out writing to adapter");
    const ssize_t n = ::write(to_child_, payload.data() + written, payload.size() - written);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail_exited("while receiving a request");
    }
    written += static_cast<std::size_t>(n);
  }
}

std::string AdapterProcess::receive() {
  const auto deadline = Clock::now() + config_.timeout;
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) throw AdapterError(AdapterError::Kind::timeout, "adapter reply timed out");
    pollfd pfd{from_child_, POLLIN, 0};
    const int pr = ::poll(&pfd, 1, static_cast<int>(left));
    if (pr < 0 && errno == EINTR) continue;
    if (pr == 0) throw AdapterError(AdapterError::Kind::timeout, "adapter reply timed out");
    char chunk[65536];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) fail_exited("before replying");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

Prediction AdapterProcess::predict(const Matrix& rows) {
  Prediction out;
  for (std::size_t start = 0; start < rows.rows(); start += config_.batch_size) {
    const std::size_t stop = std::min(rows.rows(), start + config_.batch_size);
    ordered_json req;
    req["op"] = "predict";
    auto arr = ordered_json::array();
    for (std::size_t i = start; i < stop; ++i) {
      auto r = rows.row(i);
      arr.push_back(std::vector<double>(r.begin(), r.end()));
    }
    req["rows"] = std::move(arr);
    send(req.dump());
    const auto line = receive();
    ordered_json reply;
    try {
      reply = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw AdapterError(AdapterError::Kind::malformed, "malformed adapter reply: " + line.substr(0, 200));
    }
    if (!reply.is_object() || !reply.contains("labels") || !reply.contains("probas") ||
        !reply["labels"].is_array() || !reply["probas"].is_array()) {
      throw AdapterError(AdapterError::Kind::malformed, "adapter reply lacks labels/probas");
    }
    const auto& labels = reply["labels"];
    const auto& probas = reply["probas"];
    const std::size_t expect = stop - start;
    if (labels.size() != expect || probas.size() != expect) {
      throw AdapterError(AdapterError::Kind::protocol,
                         "adapter returned " + std::to_string(labels.size()) + " labels / " +
                             std::to_string(probas.size()) + " probas for " + std::to_string(expect) + " rows");
    }
    for (std::size_t i = 0; i < expect; ++i) {
      if (!labels[i].is_number_integer() || (labels[i] != 0 && labels[i] != 1)) {
        throw AdapterError(AdapterError::Kind::protocol, "row " + std::to_string(start + i) + ": label not in {0,1}");
      }
      if (!probas[i].is_number()) {
        throw AdapterError(AdapterError::Kind::protocol, "row " + std::to_string(start + i) + ": proba not a number");
      }
      const double p = probas[i].get<double>();
      if (!(p >= 0.0 && p <= 1.0)) {
        throw AdapterError(AdapterError::Kind::protocol,
                           "row " + std::to_string(start + i) + ": proba " + probas[i].dump() + " outside [0,1]");
      }
      out.labels.push_back(labels[i].get<int>());
      out.probas.push_back(p);
    }
  }
  return out;
}

int AdapterProcess::shutdown() {
  if (pid_ <= 0) return -1;
  try {
    send(R"({"op":"bye"})");
  } catch (const AdapterError&) {
  }
  ::close(to_child_);
  to_child_ = -1;
  const auto deadline = Clock::now() + config_.timeout;
  int status = 0;
  for (;;) {
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) break;
    if (Clock::now() > deadline) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
      break;
    }
    ::usleep(1000);
  }
  pid_ = -1;
  ::close(from_child_);
  from_child_ = -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExternalClassifier::ExternalClassifier(AdapterConfig config, ColumnMap columns)
    : config_(std::move(config)), columns_(std::move(columns)) {}

ExternalClassifier::~ExternalClassifier() {
  for (auto& p : idle_) p->shutdown();
}

std::unique_ptr<AdapterProcess> ExternalClassifier::acquire() const {
  {
    std::lock_guard lock(mutex_);
    if (!idle_.empty()) {
      auto p = std::move(idle_.back());
      idle_.pop_back();
      return p;
    }
  }
  return std::make_unique<AdapterProcess>(config_, columns_);
}

void ExternalClassifier::release(std::unique_ptr<AdapterProcess> p) const {
  std::lock_guard lock(mutex_);
  idle_.push_back(std::move(p));
}

Prediction ExternalClassifier::predict(const Matrix& rows, double) const {
  auto process = acquire();
  auto result = process->predict(rows);  // a failed process is dropped, not reused
  release(std::move(process));
  return result;
}

void ExternalClassifier::predict_proba(const Matrix& rows, std::span<double> out) const {
  auto p = predict(rows, 0.5);
  std::copy(p.probas.begin(), p.probas.end(), out.begin());
}

Prediction external_predict(const AdapterConfig& config, const EncodedMatrix& batch) {
  AdapterProcess process(config, *batch.columns);
  auto result = process.predict(batch.values);
  const int status = process.shutdown();
  if (status != 0) {
    throw AdapterError(AdapterError::Kind::exited, "adapter exited with status " + std::to_string(status));
  }
  return result;
}

int serve_adapter(const ClassifierHandle& handle, std::istream& in, std::ostream& out) {
  std::string line;
  bool greeted = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ordered_json msg;
    try {
      msg = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      return 3;
    }
    const auto op = msg.value("op", std::string());
    if (op == "hello") {
      const auto& cols = handle.column_map();
      const auto& names = msg.at("columns");
      bool match = names.size() == cols.size();
      for (std::size_t i = 0; match && i < cols.size(); ++i) match = names[i] == cols[i].label();
      out << (match ? R"({"ok":true})" : R"({"ok":false,"error":"column mismatch"})") << '\n' << std::flush;
      if (!match) return 4;
      greeted = true;
    } else if (op == "predict") {
      if (!greeted) return 5;
      const auto& rows = msg.at("rows");
      Matrix m(rows.size(), handle.column_map().size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols()) return 6;
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j].get<double>();
      }
      const auto p = handle.predict(EncodedMatrix{std::move(m), handle.column_map_ptr()});
      ordered_json reply;
      reply["labels"] = p.labels;
      reply["probas"] = p.probas;
      out << reply.dump() << '\n' << std::flush;
    } else if (op == "bye") {
      return 0;
    } else {
      return 7;
    }
  }
  return 0;
}

}  // namespace cfaudit::model
