#include "noetic/gateway/server.hpp"

#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <algorithm>
#include <set>
#include <sstream>

namespace noetic::gateway {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using json = nlohmann::json;

struct Server::Connection {
  explicit Connection(tcp::socket s) : socket(std::move(s)) {}
  tcp::socket socket;
  std::thread thread;
  std::atomic<bool> done{false};
};

Server::Server(Service& service, int port, const std::string& bind) : service_(service), acceptor_(io_) {
  const tcp::endpoint ep(asio::ip::make_address(bind), static_cast<unsigned short>(port));
  acceptor_.open(ep.protocol());
  acceptor_.set_option(tcp::acceptor::reuse_address(true));
  acceptor_.bind(ep);
  acceptor_.listen();
  port_ = acceptor_.local_endpoint().port();
}

Server::~Server() { stop(); }

void Server::start() {
  acceptor_thread_ = std::thread([this] { accept_loop(); });
}

void Server::accept_loop() {
  while (!stopping_) {
    boost::system::error_code ec;
    tcp::socket socket(io_);
    acceptor_.accept(socket, ec);
    if (ec || stopping_) break;
    auto c = std::make_shared<Connection>(std::move(socket));
    std::lock_guard lock(mu_);
    // Reap finished connections as new ones arrive.
    for (auto it = connections_.begin(); it != connections_.end();) {
      if ((*it)->done) {
        (*it)->thread.join();
        it = connections_.erase(it);
      } else {
        ++it;
      }
    }
    connections_.push_back(c);
    c->thread = std::thread([this, c] {
      serve(c);
      c->done = true;
    });
  }
}

void Server::stop() {
  if (stopping_.exchange(true)) return;
  boost::system::error_code ec;
  // A blocked accept() is woken by connecting to ourselves.
  {
    tcp::socket poke(io_);
    poke.connect(acceptor_.local_endpoint(), ec);
  }
  if (acceptor_thread_.joinable()) acceptor_thread_.join();
  acceptor_.close(ec);
  service_.shutdown();  // closes every plot bus, ending frame streams
  std::list<std::shared_ptr<Connection>> all;
  {
    std::lock_guard lock(mu_);
    all.swap(connections_);
  }
  for (auto& c : all) c->socket.shutdown(tcp::socket::shutdown_both, ec);
  for (auto& c : all)
    if (c->thread.joinable()) c->thread.join();
  std::lock_guard lock(mu_);
  stopped_ = true;
  stopped_cv_.notify_all();
}

void Server::wait() {
  std::unique_lock lock(mu_);
  stopped_cv_.wait(lock, [&] { return stopped_; });
}

namespace {

std::set<std::string> node_filter(const std::string& target) {
  std::set<std::string> out;
  if (auto q = query_param(target, "nodes")) {
    std::stringstream ss(*q);
    std::string id;
    while (std::getline(ss, id, ','))
      if (!id.empty()) out.insert(id);
  }
  return out;
}

void stream_frames(Service& service, websocket::stream<tcp::socket&>& ws, const std::string& target,
                   const std::atomic<bool>& stopping) {
  const auto parts = split_path(target);
  auto session = service.session(parts[1]);
  if (!session) {
    ws.close(websocket::close_reason(static_cast<websocket::close_code>(kCloseUnknownSession), "unknown session '" + parts[1] + "'"));
    return;
  }
  if (session->state() == SessionState::stopped) {
    ws.close(websocket::close_reason(static_cast<websocket::close_code>(kCloseNotRunning), "session '" + parts[1] + "' is stopped"));
    return;
  }
  std::size_t capacity = 64;
  if (auto c = query_param(target, "capacity")) capacity = std::clamp<std::size_t>(std::stoul(*c), 1, 4096);
  auto sub = session->bus().subscribe(node_filter(target), capacity);
  ws.text(true);
  while (!stopping) {
    auto frame = sub->pop(200);
    if (!frame) {
      if (sub->closed()) break;
      continue;
    }
    ws.write(asio::buffer(flow::to_json(*frame).dump()));
  }
  session->bus().unsubscribe(sub);
  boost::system::error_code ec;
  ws.close(websocket::close_code::normal, ec);
}

}  // namespace

void Server::serve(const std::shared_ptr<Connection>& c) {
  beast::flat_buffer buffer;
  boost::system::error_code ec;
  try {
    for (;;) {
      http::request<http::string_body> req;
      http::read(c->socket, buffer, req, ec);
      if (ec) return;
      const std::string target(req.target());
      const auto parts = split_path(target);
      if (websocket::is_upgrade(req)) {
        if (parts.size() != 3 || parts[0] != "sessions" || parts[2] != "frames") {
          http::response<http::string_body> res{http::status::not_found, req.version()};
          res.set(http::field::content_type, "application/json");
          res.body() = json{{"error", "no WebSocket route at " + target}}.dump();
          res.prepare_payload();
          http::write(c->socket, res, ec);
          return;
        }
        // Keep the kernel from hiding a slow reader behind megabytes of buffer.
        c->socket.set_option(asio::socket_base::send_buffer_size(32 * 1024), ec);
        websocket::stream<tcp::socket&> ws(c->socket);
        ws.accept(req);
        stream_frames(service_, ws, target, stopping_);
        return;
      }
      const auto r = service_.handle(std::string(req.method_string()), target, req.body());
      http::response<http::string_body> res{static_cast<http::status>(r.status), req.version()};
      res.set(http::field::content_type, "application/json");
      res.keep_alive(req.keep_alive());
      res.body() = r.body.dump() + "\n";
      res.prepare_payload();
      http::write(c->socket, res, ec);
      if (ec || !req.keep_alive()) break;
    }
  } catch (const std::exception&) {
    // Client went away mid-message.
  }
  c->socket.shutdown(tcp::socket::shutdown_send, ec);
}

}  // namespace noetic::gateway
