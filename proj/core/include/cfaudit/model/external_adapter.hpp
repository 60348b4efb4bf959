#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "cfaudit/common/error.hpp"
#include "cfaudit/model/classifier.hpp"

namespace cfaudit::model {

/// Failure talking to an adapter subprocess.
class AdapterError : public Error {
 public:
  enum class Kind { spawn, exited, malformed, timeout, protocol };

  AdapterError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct AdapterConfig {
  std::vector<std::string> command;  ///< argv; command[0] is looked up in PATH
  std::chrono::milliseconds timeout{30000};
  std::size_t batch_size = 512;

  static AdapterConfig from_json(const nlohmann::ordered_json& j);
  nlohmann::ordered_json to_json() const;
};

/// One adapter subprocess speaking the line-delimited JSON protocol:
///   -> {"op":"hello","columns":[...]}   <- {"ok":true}
///   -> {"op":"predict","rows":[[...]]}  <- {"labels":[...],"probas":[...]}
///   -> {"op":"bye"}                      (process exits with status 0)
/// Not thread-safe; use one process per worker.
class AdapterProcess {
 public:
  AdapterProcess(const AdapterConfig& config, const ColumnMap& columns);
  ~AdapterProcess();
  AdapterProcess(const AdapterProcess&) = delete;
  AdapterProcess& operator=(const AdapterProcess&) = delete;

  Prediction predict(const Matrix& rows);
  /// Sends bye and waits; returns the exit status.
  int shutdown();

 private:
  void send(const std::string& line);
  std::string receive();
  [[noreturn]] void fail_exited(const std::string& context);

  AdapterConfig config_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

/// Classifier backed by adapter subprocesses, one per concurrent caller.
class ExternalClassifier final : public Classifier {
 public:
  ExternalClassifier(AdapterConfig config, ColumnMap columns);
  ~ExternalClassifier() override;

  Family family() const override { return Family::external; }
  void predict_proba(const Matrix& rows, std::span<double> out) const override;
  Prediction predict(const Matrix& rows, double threshold) const override;
  nlohmann::ordered_json hyperparameters() const override { return config_.to_json(); }
  nlohmann::ordered_json parameters() const override { return nlohmann::ordered_json::object(); }

 private:
  std::unique_ptr<AdapterProcess> acquire() const;
  void release(std::unique_ptr<AdapterProcess> p) const;

  AdapterConfig config_;
  ColumnMap columns_;
  mutable std::mutex mutex_;
  mutable std::vector<std::unique_ptr<AdapterProcess>> idle_;
};

/// One-shot call: spawn, handshake, predict `batch`, shut down.
Prediction external_predict(const AdapterConfig& config, const EncodedMatrix& batch);

/// Serves a classifier over stdin/stdout with the adapter protocol.
/// Returns the process exit code.
int serve_adapter(const ClassifierHandle& handle, std::istream& in, std::ostream& out);

}  // namespace cfaudit::model
