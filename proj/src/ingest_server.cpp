#include <sys/socket.h>

#include <httplib.h>

#include "segtrack/ingest.hpp"

namespace segtrack {
namespace {

void allow_cross_origin(httplib::Response& res) {
  res.set_header("Access-Control-Allow-Origin", "*");
}

}  // namespace

struct IngestServer::Impl {
  httplib::Server server;
};

IngestServer::IngestServer(IngestService& service)
    : impl_(std::make_unique<Impl>()), service_(service) {
  auto& svr = impl_->server;
  // SO_REUSEADDR only: an occupied port must fail to bind.
  svr.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  svr.set_payload_max_length(service.config().max_batch_bytes);

  const std::string events(kEventsRoute);
  svr.Post(events, [this](const httplib::Request& req, httplib::Response& res) {
    const auto reply = service_.handle_event_batch(req.body, req.get_header_value(std::string(kTokenHeader)));
    res.status = reply.status;
    if (!reply.body.empty()) res.set_content(reply.body, "application/json");
    allow_cross_origin(res);
  });
  svr.Options(events, [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    allow_cross_origin(res);
    res.set_header("Access-Control-Allow-Methods", "POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, " + std::string(kTokenHeader));
    res.set_header("Access-Control-Max-Age", "86400");
  });
  svr.Get(std::string(kHealthRoute), [this](const httplib::Request&, httplib::Response& res) {
    const auto reply = service_.health();
    res.status = reply.status;
    res.set_content(reply.body, "application/json");
  });
}

IngestServer::~IngestServer() { stop(); }

bool IngestServer::bind() {
  auto [host, port] = split_host_port(service_.config().bind_address);
  host_ = host;
  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
    return port_ > 0;
  }
  if (!impl_->server.bind_to_port(host, port)) return false;
  port_ = port;
  return true;
}

void IngestServer::listen() { impl_->server.listen_after_bind(); }

void IngestServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void IngestServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace segtrack
