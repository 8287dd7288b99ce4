#pragma once

#include "noetic/gateway/service.hpp"

#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>

#include <atomic>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace noetic::gateway {

// WebSocket close codes for /sessions/{id}/frames.
inline constexpr unsigned short kCloseUnknownSession = 4404;
inline constexpr unsigned short kCloseNotRunning = 4409;

// HTTP and WebSocket front end over a Service. Each connection gets its own
// thread; the engine only ever sees the plot bus.
class Server {
 public:
  Server(Service& service, int port = 0, const std::string& bind = "127.0.0.1");
  ~Server();

  int port() const { return port_; }
  void start();
  void stop();
  /// Blocks until stop() is called from elsewhere.
  void wait();

 private:
  struct Connection;
  void accept_loop();
  void serve(const std::shared_ptr<Connection>& c);

  Service& service_;
  boost::asio::io_context io_;
  boost::asio::ip::tcp::acceptor acceptor_;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_thread_;
  std::mutex mu_;
  std::condition_variable stopped_cv_;
  bool stopped_ = false;
  std::list<std::shared_ptr<Connection>> connections_;
};

}  // namespace noetic::gateway
