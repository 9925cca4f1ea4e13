#include <cctype>

#include <httplib.h>

#include "dstal/errors.hpp"
#include "dstal/service.hpp"

namespace dstal {

struct HttpServer::Impl {
  httplib::Server server;
  std::thread thread;
};

namespace {

std::string lowercase(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

HttpServer::HttpServer(AnnotationService& service, std::string host, int port) : impl_(std::make_unique<Impl>()) {
  auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
    HttpRequest request;
    request.method = req.method;
    request.path = req.path;
    request.body = req.body;
    for (const auto& [k, v] : req.params) request.query.emplace(k, v);
    for (const auto& [k, v] : req.headers) request.headers.emplace(lowercase(k), v);
    HttpResponse response = service.handle(request);
    res.status = response.status;
    res.set_content(response.body, response.content_type);
  };
  impl_->server.Get(".*", handler);
  impl_->server.Post(".*", handler);

  if (port == 0) {
    port_ = impl_->server.bind_to_any_port(host);
  } else {
    port_ = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

HttpServer::~HttpServer() {
  stop();
  wait();
}

void HttpServer::stop() { impl_->server.stop(); }

void HttpServer::wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace dstal
