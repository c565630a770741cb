#include "ctxbench/provider_server.hpp"

#include <thread>

#include <httplib.h>

#include "ctxbench/error.hpp"
#include "ctxbench/wire.hpp"

namespace ctxbench {

using nlohmann::json;

struct ProviderServer::Impl {
  FillMaskProvider* fill;
  ScoringProvider* scorer;
  GenerationProvider* generator;
  httplib::Server server;
  std::thread thread;
  std::string host;
  int port = 0;

  template <typename Handler>
  void route(const std::string& path, bool available, Handler handler) {
    auto wrap = [this, available, handler](bool batch) {
      return [available, handler, batch](const httplib::Request& req, httplib::Response& res) {
        if (req.has_header(wire::kRequestIdHeader)) {
          res.set_header(wire::kRequestIdHeader, req.get_header_value(wire::kRequestIdHeader));
        }
        if (!available) {
          res.status = 501;
          res.set_content(wire::error_body("NotImplemented", "capability not served").dump(), "application/json");
          return;
        }
        try {
          json body = json::parse(req.body);
          json out;
          if (batch) {
            if (!body.is_array()) throw Error(ErrorCode::ProtocolError, "batch body must be an array");
            out = json::array();
            for (const auto& item : body) out.push_back(handler(item));
          } else {
            out = handler(body);
          }
          res.set_content(out.dump(), "application/json");
        } catch (const json::exception& e) {
          res.status = 400;
          res.set_content(wire::error_body("ProtocolError", e.what()).dump(), "application/json");
        } catch (const Error& e) {
          const bool client_fault = e.code() == ErrorCode::BadMask || e.code() == ErrorCode::ModeMismatch ||
                                    e.code() == ErrorCode::ProtocolError ||
                                    e.code() == ErrorCode::InvalidArgument;
          res.status = client_fault ? 400 : 500;
          res.set_content(wire::error_body(to_string(e.code()), e.detail()).dump(), "application/json");
        } catch (const std::exception& e) {
          res.status = 500;
          res.set_content(wire::error_body("InternalError", e.what()).dump(), "application/json");
        }
      };
    };
    server.Post(path, wrap(false));
    server.Post(path + wire::kBatchSuffix, wrap(true));
  }

  void install() {
    route(wire::kFillMaskPath, fill != nullptr, [this](const json& j) {
      auto q = wire::decode_fill_mask_query(j);
      validate(q);
      return wire::encode(conform_candidates(fill->fill_mask(q), q.top_k));
    });
    route(wire::kScorePath, scorer != nullptr, [this](const json& j) {
      auto q = wire::decode_score_query(j);
      validate(q);
      return wire::encode(scorer->score(q));
    });
    route(wire::kGeneratePath, generator != nullptr, [this](const json& j) {
      auto q = wire::decode_generate_query(j);
      validate(q);
      return wire::encode(generator->generate(q));
    });
    server.Get(wire::kHealthPath, [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok"})", "application/json");
    });
  }
};

ProviderServer::ProviderServer(FillMaskProvider* fill, ScoringProvider* scorer, GenerationProvider* generator)
    : impl_(std::make_unique<Impl>()) {
  impl_->fill = fill;
  impl_->scorer = scorer;
  impl_->generator = generator;
  impl_->install();
}

ProviderServer::~ProviderServer() { stop(); }

int ProviderServer::start(const std::string& host, int port) {
  impl_->host = host;
  impl_->port = port == 0 ? impl_->server.bind_to_any_port(host) : port;
  if (port != 0 && !impl_->server.bind_to_port(host, port)) impl_->port = -1;
  if (impl_->port < 0) throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

void ProviderServer::run(const std::string& host, int port) {
  impl_->host = host;
  impl_->port = port;
  if (!impl_->server.listen(host, port)) throw Error(ErrorCode::Io, "cannot listen on " + host + ":" + std::to_string(port));
}

void ProviderServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string ProviderServer::base_url() const {
  return "http://" + impl_->host + ":" + std::to_string(impl_->port);
}

}  // namespace ctxbench
