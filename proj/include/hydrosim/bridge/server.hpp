#pragma once

#include <deque>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

#include "hydrosim/bridge/api.hpp"

namespace hydrosim::bridge {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace detail {

/// /ws/telemetry?session=ID: pushes the session's downlink as JSON text
/// frames and feeds client frames to ingest_command, answering each one.
class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  static constexpr std::size_t kMaxQueue = 256;

  WsSession(tcp::socket socket, BridgeApi& api) : ws_(std::move(socket)), api_(api) {}

  ~WsSession() {
    if (session_ && token_ >= 0) session_->unsubscribe(token_);
  }

  void run(http::request<http::string_body> req) {
    const Target t = parse_target(std::string(req.target()));
    try {
      const auto it = t.query.find("session");
      session_ = it != t.query.end() ? api_.sessions().get(it->second) : api_.sessions().current();
    } catch (const Error&) {
      session_.reset();
    }
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    if (!session_) {
      enqueue(nlohmann::json{{"error", "NotFound"}, {"message", "no running session"}}.dump());
    } else {
      std::weak_ptr<WsSession> weak = shared_from_this();
      token_ = session_->subscribe([weak, ex = ws_.get_executor()](const nlohmann::json& msg) {
        net::post(ex, [weak, text = msg.dump()]() mutable {
          if (auto self = weak.lock()) self->enqueue(std::move(text));
        });
      });
    }
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) return;
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    nlohmann::json reply;
    try {
      if (!session_) throw Error(Errc::NotFound, "no running session");
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(text);
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::BadCommand, e.what());
      }
      reply = session_->ingest_command(body);
      reply["type"] = "command_result";
    } catch (const Error& e) {
      reply = {{"type", "command_result"}, {"error", std::string(errc_name(e.code()))}, {"message", e.what()}};
    }
    enqueue(reply.dump());
    do_read();
  }

  void enqueue(std::string text) {
    if (queue_.size() >= kMaxQueue) queue_.pop_front();  // slow client: drop the oldest
    queue_.push_back(std::move(text));
    if (queue_.size() == 1 && !writing_) do_write();
  }

  void do_write() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) return;
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->do_write();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  BridgeApi& api_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  bool writing_ = false;
  std::shared_ptr<Session> session_;
  int token_ = -1;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, BridgeApi& api) : stream_(std::move(socket)), api_(api) {}

  void run() { do_read(); }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;
    if (websocket::is_upgrade(req_)) {
      const Target t = parse_target(std::string(req_.target()));
      if (t.segments == std::vector<std::string>{"ws", "telemetry"}) {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), api_)->run(std::move(req_));
        return;
      }
    }

    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->keep_alive(req_.keep_alive());
    res->set(http::field::server, "hydrosim");
    res->set(http::field::access_control_allow_origin, "*");
    if (req_.method() == http::verb::options) {
      res->result(http::status::no_content);
      res->set(http::field::access_control_allow_methods, "GET, POST, DELETE, OPTIONS");
      res->set(http::field::access_control_allow_headers, "Content-Type");
    } else {
      const ApiResponse r =
          api_.handle({std::string(req_.method_string()), std::string(req_.target()), std::move(req_.body())});
      res->result(static_cast<http::status>(r.status));
      res->set(http::field::content_type, "application/json");
      res->body() = r.body.dump();
    }
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (!res->keep_alive()) {
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
        return;
      }
      self->do_read();
    });
  }

  beast::tcp_stream stream_;
  BridgeApi& api_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace detail

/// HTTP + WebSocket front end. Port 0 binds an ephemeral port.
class Server {
 public:
  Server(BridgeApi& api, const std::string& address, unsigned short port, int threads = 4)
      : api_(api), acceptor_(ioc_), threads_(threads) {
    const tcp::endpoint ep{net::ip::make_address(address), port};
    acceptor_.open(ep.protocol());
    acceptor_.set_option(net::socket_base::reuse_address(true));
    acceptor_.bind(ep);
    acceptor_.listen(net::socket_base::max_listen_connections);
  }

  ~Server() { stop(); }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }

  void start() {
    do_accept();
    for (int i = 0; i < threads_; ++i) pool_.emplace_back([this] { ioc_.run(); });
  }

  /// Blocks the caller, serving until stop() is called elsewhere.
  void run() {
    start();
    for (auto& t : pool_) t.join();
    pool_.clear();
  }

  void stop() {
    ioc_.stop();
    for (auto& t : pool_)
      if (t.joinable()) t.join();
    pool_.clear();
  }

 private:
  void do_accept() {
    acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
      if (!ec) std::make_shared<detail::HttpSession>(std::move(socket), api_)->run();
      if (acceptor_.is_open()) do_accept();
    });
  }

  BridgeApi& api_;
  net::io_context ioc_;
  tcp::acceptor acceptor_;
  int threads_;
  std::vector<std::thread> pool_;
};

}  // namespace hydrosim::bridge
