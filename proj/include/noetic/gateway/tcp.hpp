#pragma once

#include "noetic/io/wire.hpp"

#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>

#include <atomic>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace noetic::gateway {

// Client side of the wire protocol: connects to a producer and decodes
// frames as they arrive.
class TcpFrameSource {
 public:
  TcpFrameSource(const std::string& host, int port);

  /// Blocks for the next frame; nullopt once the producer closes or close() was called.
  std::optional<io::WireFrame> next();
  /// Unblocks a pending next() from another thread.
  void close();

 private:
  boost::asio::io_context io_;
  boost::asio::ip::tcp::socket socket_;
  io::FrameDecoder decoder_;
  std::atomic<bool> closed_{false};
};

// Producer side: listens on a port (0 picks a free one) and streams frames
// to the first client that connects.
class TcpFrameServer {
 public:
  explicit TcpFrameServer(int port = 0, const std::string& bind = "127.0.0.1");
  int port() const { return port_; }

  /// speed > 0 paces data frames at speed x real time; 0 sends as fast as possible.
  /// Returns the number of frames written.
  std::size_t serve(const std::vector<io::WireFrame>& frames, double speed = 0.0);

 private:
  boost::asio::io_context io_;
  boost::asio::ip::tcp::acceptor acceptor_;
  int port_ = 0;
};

/// Seconds after stream start at which a frame is due: data frames at their t0
/// relative to the first data frame, anything else immediately after the previous frame.
std::vector<double> frame_schedule(const std::vector<io::WireFrame>& frames);

}  // namespace noetic::gateway
