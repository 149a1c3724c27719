#include "sokoplan/service.hpp"

#include "httplib.h"

namespace sokoplan {

struct HttpServer::Impl {
  explicit Impl(SteeringService& s) : service(s) {}
  SteeringService& service;
  httplib::Server server;
};

HttpServer::HttpServer(SteeringService& service) : impl_(std::make_unique<Impl>(service)) {
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const ServiceResponse r = impl_->service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  const std::string any = R"(/.*)";
  impl_->server.Get(any, route);
  impl_->server.Post(any, route);
  impl_->server.Delete(any, route);
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::Io, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace sokoplan
