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

#include "advbin/remote_oracle.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>

#include "advbin/error.hpp"

namespace advbin {
namespace {

using Clock = std::chrono::steady_clock;

int RemainingMs(Clock::time_point deadline) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return static_cast<int>(std::max<std::int64_t>(0, left.count()));
}

void WriteAll(int fd, const std::string& data, Clock::time_point deadline) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    pollfd p{fd, POLLOUT, 0};
    const int ready = ::poll(&p, 1, RemainingMs(deadline));
    if (ready == 0) throw TimeoutError("timed out sending to the oracle");
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(std::string("poll failed: ") + std::strerror(errno));
    }
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw ProtocolError(std::string("connection lost while sending: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

// Reads up to the next newline. Returns false on orderly EOF with no data.
bool ReadLine(int fd, std::string& buffer, std::string& line, Clock::time_point deadline,
              bool use_deadline) {
  for (;;) {
    const std::size_t nl = buffer.find('\n');
    if (nl != std::string::npos) {
      line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      return true;
    }
    pollfd p{fd, POLLIN, 0};
    const int ready = ::poll(&p, 1, use_deadline ? RemainingMs(deadline) : -1);
    if (ready == 0) throw TimeoutError("timed out waiting for the oracle");
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(std::string("poll failed: ") + std::strerror(errno));
    }
    char chunk[65536];
    const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw ProtocolError(std::string("connection error: ") + std::strerror(errno));
    }
    if (n == 0) {
      if (buffer.empty()) return false;
      throw ProtocolError("connection closed in the middle of a line");
    }
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

int ConnectTcp(const std::string& host, std::uint16_t port, Clock::time_point deadline) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw ProtocolError("cannot resolve '" + host + "': " + ::gai_strerror(rc));
  }
  std::string last_error = "no address";
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    last_error = std::strerror(errno);
    ::close(fd);
    fd = -1;
    if (RemainingMs(deadline) == 0) break;
  }
  ::freeaddrinfo(res);
  if (fd < 0) {
    throw ProtocolError("cannot connect to " + host + ":" + service + ": " + last_error);
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

}  // namespace

RemoteOracle::RemoteOracle(int fd, std::string endpoint, RemoteOptions options)
    : fd_(fd), endpoint_(std::move(endpoint)), options_(options) {}

RemoteOracle::~RemoteOracle() {
  if (fd_ >= 0) ::close(fd_);
}

std::shared_ptr<RemoteOracle> RemoteOracle::Connect(const std::string& host, std::uint16_t port,
                                                    RemoteOptions options) {
  const auto deadline = Clock::now() + options.timeout;
  const int fd = ConnectTcp(host, port, deadline);
  std::shared_ptr<RemoteOracle> client(
      new RemoteOracle(fd, host + ":" + std::to_string(port), options));
  std::lock_guard lock(client->mutex_);
  client->SendLine(json{{"op", "hello"}, {"version", kProtocolVersion}}.dump());
  const json reply = client->ReadReply();
  if (!reply.is_object() || reply.value("ok", false) != true || !reply.contains("name") ||
      !reply["name"].is_string()) {
    throw ProtocolError("bad handshake reply from " + client->endpoint_ + ": " + reply.dump());
  }
  client->remote_name_ = reply["name"].get<std::string>();
  return client;
}

void RemoteOracle::SendLine(const std::string& line) const {
  WriteAll(fd_, line + "\n", Clock::now() + options_.timeout);
}

json RemoteOracle::ReadReply() const {
  std::string line;
  if (!ReadLine(fd_, buffer_, line, Clock::now() + options_.timeout, true)) {
    throw ProtocolError("oracle at " + endpoint_ + " closed the connection");
  }
  try {
    return json::parse(line);
  } catch (const json::exception&) {
    throw ProtocolError("malformed reply from " + endpoint_ + ": " + line.substr(0, 200));
  }
}

double RemoteOracle::Similarity(const FunctionCfg& a, const FunctionCfg& b) const {
  std::lock_guard lock(mutex_);
  if (broken_) throw ProtocolError("connection to " + endpoint_ + " is no longer usable");
  const std::uint64_t id = next_id_++;
  try {
    SendLine(json{{"id", id}, {"op", "sim"}, {"a", SerializeFunction(a)}, {"b", SerializeFunction(b)}}.dump());
    const json reply = ReadReply();
    if (!reply.is_object() || !reply.contains("id") || !reply["id"].is_number_unsigned()) {
      throw ProtocolError("reply without an id: " + reply.dump().substr(0, 200));
    }
    if (reply["id"].get<std::uint64_t>() != id) {
      throw ProtocolError("reply id " + reply["id"].dump() + " does not match request " + std::to_string(id));
    }
    if (reply.contains("error")) {
      throw RemoteFailure("oracle could not score the pair: " +
                          (reply["error"].is_string() ? reply["error"].get<std::string>() : reply["error"].dump()));
    }
    if (!reply.contains("score") || !reply["score"].is_number()) {
      throw ProtocolError("reply has neither score nor error: " + reply.dump().substr(0, 200));
    }
    const double score = reply["score"].get<double>();
    if (!std::isfinite(score)) throw ProtocolError("non-finite score");
    return score;
  } catch (const RemoteFailure&) {
    throw;
  } catch (const OracleError&) {
    broken_ = true;
    throw;
  }
}

json RemoteOracle::Describe() const {
  return {{"oracle", name()}, {"endpoint", endpoint_}, {"protocol_version", kProtocolVersion}};
}

OraclePtr ConnectRemoteOracle(const std::string& address, RemoteOptions options) {
  const std::size_t colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
    throw std::invalid_argument("remote oracle address must be HOST:PORT, got '" + address + "'");
  }
  int port = 0;
  try {
    port = std::stoi(address.substr(colon + 1));
  } catch (const std::exception&) {
    port = -1;
  }
  if (port <= 0 || port > 65535) throw std::invalid_argument("bad port in '" + address + "'");
  std::string host = address.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  return RemoteOracle::Connect(host, static_cast<std::uint16_t>(port), options);
}

json HandleOracleRequest(const SimilarityOracle& oracle, const std::string& line) {
  json request;
  try {
    request = json::parse(line);
  } catch (const json::exception&) {
    return {{"id", nullptr}, {"error", "request is not valid JSON"}};
  }
  if (!request.is_object()) return {{"id", nullptr}, {"error", "request must be an object"}};
  const std::string op = request.value("op", "");
  if (op == "hello") {
    if (request.value("version", 0) != kProtocolVersion) {
      return {{"ok", false}, {"error", "unsupported protocol version"}};
    }
    return {{"ok", true}, {"name", oracle.name()}};
  }
  const json id = request.contains("id") ? request["id"] : json(nullptr);
  if (op != "sim") return {{"id", id}, {"error", "unknown op '" + op + "'"}};
  try {
    const FunctionCfg a = ParseFunction(request.at("a"));
    const FunctionCfg b = ParseFunction(request.at("b"));
    return {{"id", id}, {"score", oracle.Similarity(a, b)}};
  } catch (const std::exception& e) {
    return {{"id", id}, {"error", e.what()}};
  }
}

OracleServer::OracleServer(OraclePtr oracle, std::uint16_t port) : oracle_(std::move(oracle)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 16) != 0) {
    const std::string reason = std::strerror(errno);
    ::close(listen_fd_);
    throw Error("cannot listen on port " + std::to_string(port) + ": " + reason);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { AcceptLoop(); });
}

OracleServer::~OracleServer() { Stop(); }

void OracleServer::Stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  if (acceptor_.joinable()) acceptor_.join();
  ::close(listen_fd_);
  {
    std::lock_guard lock(clients_mutex_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  for (auto& t : workers_) {
    if (t.joinable()) t.join();
  }
}

void OracleServer::AcceptLoop() {
  while (!stopping_) {
    pollfd p{listen_fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, 100);
    if (ready <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    std::lock_guard lock(clients_mutex_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    client_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { Serve(fd); });
  }
}

void OracleServer::Serve(int fd) {
  std::string buffer, line;
  try {
    while (ReadLine(fd, buffer, line, Clock::now(), false)) {
      WriteAll(fd, HandleOracleRequest(*oracle_, line).dump() + "\n",
               Clock::now() + std::chrono::seconds(30));
    }
  } catch (const std::exception&) {
    // The peer went away; nothing to report.
  }
  std::lock_guard lock(clients_mutex_);
  std::erase(client_fds_, fd);
  ::close(fd);
}

}  // namespace advbin
