#include "noetic/gateway/tcp.hpp"

#include "noetic/error.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/read.hpp>
#include <boost/asio/write.hpp>

#include <array>
#include <chrono>
#include <thread>

namespace noetic::gateway {

namespace asio = boost::asio;
using tcp = asio::ip::tcp;

TcpFrameSource::TcpFrameSource(const std::string& host, int port) : socket_(io_) {
  boost::system::error_code ec;
  tcp::resolver resolver(io_);
  const auto endpoints = resolver.resolve(host, std::to_string(port), ec);
  if (!ec) asio::connect(socket_, endpoints, ec);
  if (ec) throw Error("cannot connect to " + host + ":" + std::to_string(port) + ": " + ec.message());
}

std::optional<io::WireFrame> TcpFrameSource::next() {
  std::array<char, 64 * 1024> buf;
  for (;;) {
    if (auto f = decoder_.next()) return f;
    if (closed_) return std::nullopt;
    boost::system::error_code ec;
    const auto n = socket_.read_some(asio::buffer(buf), ec);
    if (ec) {
      if (decoder_.buffered() > 0 && !closed_) throw ProtocolError("connection closed inside a frame");
      return std::nullopt;
    }
    decoder_.feed(std::string_view(buf.data(), n));
  }
}

void TcpFrameSource::close() {
  closed_ = true;
  boost::system::error_code ec;
  socket_.shutdown(tcp::socket::shutdown_both, ec);
}

TcpFrameServer::TcpFrameServer(int port, const std::string& bind) : acceptor_(io_) {
  const tcp::endpoint ep(asio::ip::make_address(bind), static_cast<unsigned short>(port));
  acceptor_.open(ep.protocol());
  acceptor_.set_option(tcp::acceptor::reuse_address(true));
  acceptor_.bind(ep);
  acceptor_.listen();
  port_ = acceptor_.local_endpoint().port();
}

std::vector<double> frame_schedule(const std::vector<io::WireFrame>& frames) {
  std::vector<double> due(frames.size(), 0.0);
  std::optional<double> first;
  double last = 0.0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (const auto* d = std::get_if<io::DataFrame>(&frames[i])) {
      if (!first) first = d->t0;
      last = d->t0 - *first;
    }
    due[i] = last;
  }
  return due;
}

std::size_t TcpFrameServer::serve(const std::vector<io::WireFrame>& frames, double speed) {
  tcp::socket socket(io_);
  acceptor_.accept(socket);
  const auto due = frame_schedule(frames);
  const auto start = std::chrono::steady_clock::now();
  std::size_t sent = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (speed > 0.0)
      std::this_thread::sleep_until(start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                std::chrono::duration<double>(due[i] / speed)));
    const auto bytes = io::encode_frame(frames[i]);
    boost::system::error_code ec;
    asio::write(socket, asio::buffer(bytes), ec);
    if (ec) break;
    ++sent;
  }
  boost::system::error_code ec;
  socket.shutdown(tcp::socket::shutdown_send, ec);
  // Wait for the reader to hang up so nothing in flight is lost.
  std::array<char, 256> sink;
  while (!ec) socket.read_some(asio::buffer(sink), ec);
  return sent;
}

}  // namespace noetic::gateway
