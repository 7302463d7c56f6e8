// Copyright 2026 The advbin Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ADVBIN_REMOTE_ORACLE_HPP_
#define ADVBIN_REMOTE_ORACLE_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "advbin/oracles.hpp"

namespace advbin {

inline constexpr int kProtocolVersion = 1;

struct RemoteOptions {
  std::chrono::milliseconds timeout{30000};
};

// Client side of the line-delimited JSON protocol over TCP. Requests on one
// connection are serialized.
class RemoteOracle final : public SimilarityOracle {
 public:
  // Connects and performs the handshake. Throws TimeoutError or
  // ProtocolError.
  static std::shared_ptr<RemoteOracle> Connect(const std::string& host, std::uint16_t port,
                                               RemoteOptions options = {});
  ~RemoteOracle() override;

  RemoteOracle(const RemoteOracle&) = delete;
  RemoteOracle& operator=(const RemoteOracle&) = delete;

  std::string name() const override { return "remote:" + remote_name_; }
  double Similarity(const FunctionCfg& a, const FunctionCfg& b) const override;
  json Describe() const override;

 private:
  RemoteOracle(int fd, std::string endpoint, RemoteOptions options);
  void SendLine(const std::string& line) const;
  json ReadReply() const;

  int fd_;
  std::string endpoint_;
  RemoteOptions options_;
  std::string remote_name_;
  mutable std::mutex mutex_;
  mutable std::string buffer_;
  mutable std::uint64_t next_id_ = 1;
  mutable bool broken_ = false;
};

// "HOST:PORT".
OraclePtr ConnectRemoteOracle(const std::string& address, RemoteOptions options = {});

// Answers one protocol line. Exposed so other transports can reuse it.
json HandleOracleRequest(const SimilarityOracle& oracle, const std::string& line);

// Serves an oracle on 127.0.0.1, one thread per connection.
class OracleServer {
 public:
  // port 0 picks a free port.
  explicit OracleServer(OraclePtr oracle, std::uint16_t port = 0);
  ~OracleServer();

  OracleServer(const OracleServer&) = delete;
  OracleServer& operator=(const OracleServer&) = delete;

  std::uint16_t port() const { return port_; }
  void Stop();

 private:
  void AcceptLoop();
  void Serve(int fd);

  OraclePtr oracle_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex clients_mutex_;
  std::vector<int> client_fds_;
  std::vector<std::thread> workers_;
};

}  // namespace advbin

#endif  // ADVBIN_REMOTE_ORACLE_HPP_
