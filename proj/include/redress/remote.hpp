#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "redress/classifier.hpp"
#include "redress/errors.hpp"

namespace redress {

struct RemoteOptions {
  int connect_timeout_ms = 2000;
  int read_timeout_ms = 10000;
};

namespace detail {

// "http://host:port" -> (host, port). Anything fancier is out of scope.
inline std::pair<std::string, int> parse_endpoint(const std::string& url) {
  std::string rest = url;
  const std::string scheme = "http://";
  if (rest.rfind(scheme, 0) == 0) rest = rest.substr(scheme.size());
  auto colon = rest.rfind(':');
  if (colon == std::string::npos)
    throw ConfigError("endpoint must look like http://host:port, got: " + url);
  std::string host = rest.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(rest.substr(colon + 1));
  } catch (const std::exception&) {
    throw ConfigError("bad port in endpoint: " + url);
  }
  if (host.empty() || port <= 0) throw ConfigError("bad endpoint: " + url);
  return {host, port};
}

}  // namespace detail

// Client side of the prediction wire protocol:
//   POST /predict  {"texts": [...]}  ->  {"probabilities": [[...], ...]}
class RemoteClassifier : public TextClassifier {
 public:
  RemoteClassifier(std::string host, int port, std::vector<std::string> label_space,
                   RemoteOptions opts = {})
      : host_(std::move(host)), port_(port), labels_(std::move(label_space)), opts_(opts) {
    if (labels_.empty()) throw ConfigError("remote classifier needs a label space");
  }

  PredictionResult predict_text(const std::string& text) const override {
    return predict_texts({text}).front();
  }

  std::vector<PredictionResult> predict_texts(const std::vector<std::string>& texts) const override {
    nlohmann::json body{{"texts", texts}};
    auto res = client().Post("/predict", body.dump(), "application/json");
    if (!res) throw TransportError("no response from " + host_ + ":" + std::to_string(port_));
    if (res->status != 200)
      throw TransportError("remote classifier returned HTTP " + std::to_string(res->status));

    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(std::string("unparseable response body: ") + e.what());
    }
    if (!reply.is_object() || !reply.contains("probabilities") ||
        !reply["probabilities"].is_array())
      throw ProtocolError("response missing \"probabilities\" array");
    const auto& rows = reply["probabilities"];
    if (rows.size() != texts.size())
      throw ProtocolError("expected " + std::to_string(texts.size()) + " rows, got " +
                          std::to_string(rows.size()));

    std::vector<PredictionResult> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
      if (!row.is_array() || row.size() != labels_.size())
        throw ProtocolError("probability vector length does not match label space (" +
                            std::to_string(row.size()) + " vs " +
                            std::to_string(labels_.size()) + ")");
      std::vector<double> dist;
      dist.reserve(row.size());
      double sum = 0.0;
      for (const auto& v : row) {
        if (!v.is_number()) throw ProtocolError("non-numeric probability entry");
        double p = v.get<double>();
        if (p < 0.0) throw ProtocolError("negative probability entry");
        dist.push_back(p);
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-6) throw ProtocolError("probabilities do not sum to 1");
      out.push_back(make_prediction(std::move(dist)));
    }
    return out;
  }

  const std::vector<std::string>& label_space() const override { return labels_; }
  std::string name() const override {
    return "remote(" + host_ + ":" + std::to_string(port_) + ")";
  }

 private:
  httplib::Client& client() const {
    // httplib clients are not safe to share across threads; one per thread.
    thread_local std::unique_ptr<httplib::Client> cli;
    thread_local std::string cli_key;
    std::string key = host_ + ":" + std::to_string(port_);
    if (!cli || cli_key != key) {
      cli = std::make_unique<httplib::Client>(host_, port_);
      cli->set_connection_timeout(opts_.connect_timeout_ms / 1000,
                                  (opts_.connect_timeout_ms % 1000) * 1000);
      cli->set_read_timeout(opts_.read_timeout_ms / 1000, (opts_.read_timeout_ms % 1000) * 1000);
      cli_key = key;
    }
    return *cli;
  }

  std::string host_;
  int port_;
  std::vector<std::string> labels_;
  RemoteOptions opts_;
};

// Probes the endpoint with an empty batch before handing out a handle.
inline ClassifierHandle connect_remote_classifier(const std::string& endpoint,
                                                  std::vector<std::string> label_space,
                                                  RemoteOptions opts = {}) {
  auto [host, port] = detail::parse_endpoint(endpoint);
  auto model = std::make_shared<RemoteClassifier>(host, port, std::move(label_space), opts);
  try {
    model->predict_texts({});
  } catch (const TransportError& e) {
    throw ConnectError("cannot reach " + endpoint + ": " + e.what());
  }
  return ClassifierHandle(model);
}

// Reference server for the wire protocol. Serves either a fixed distribution
// or a wrapped model, and logs every text it was asked about so tests can
// audit the round trip.
class StubServer {
 public:
  explicit StubServer(std::vector<double> fixed_distribution)
      : fixed_(std::move(fixed_distribution)) {}

  explicit StubServer(std::shared_ptr<const TextClassifier> model) : model_(std::move(model)) {}

  ~StubServer() { stop(); }

  // Binds and serves on a background thread. port 0 picks a free port.
  // Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    setup_routes();
    if (port == 0) {
      port_ = server_.bind_to_any_port(host);
    } else {
      if (!server_.bind_to_port(host, port)) throw ConfigError("cannot bind stub server port");
      port_ = port;
    }
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  // Serves on the calling thread (CLI serve-stub).
  void run_blocking(const std::string& host, int port) {
    setup_routes();
    if (!server_.listen(host, port)) throw ConfigError("cannot listen on port");
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  int port() const { return port_; }

  std::vector<std::string> logged_texts() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return log_;
  }

  // When nonzero, every /predict responds with this HTTP status and no body.
  void set_force_status(int status) { force_status_.store(status); }

 private:
  void setup_routes() {
    server_.Post("/predict", [this](const httplib::Request& req, httplib::Response& res) {
      int forced = force_status_.load();
      if (forced != 0) {
        res.status = forced;
        return;
      }
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(req.body);
      } catch (const nlohmann::json::exception&) {
        res.status = 400;
        return;
      }
      if (!body.contains("texts") || !body["texts"].is_array()) {
        res.status = 400;
        return;
      }
      std::vector<std::string> texts = body["texts"].get<std::vector<std::string>>();
      {
        std::lock_guard<std::mutex> lock(mutex_);
        log_.insert(log_.end(), texts.begin(), texts.end());
      }
      nlohmann::json rows = nlohmann::json::array();
      if (model_) {
        for (const auto& r : model_->predict_texts(texts)) rows.push_back(r.distribution);
      } else {
        for (std::size_t i = 0; i < texts.size(); ++i) rows.push_back(fixed_);
      }
      res.set_content(nlohmann::json{{"probabilities", rows}}.dump(), "application/json");
    });
  }

  std::vector<double> fixed_;
  std::shared_ptr<const TextClassifier> model_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mutex_;
  std::vector<std::string> log_;
  std::atomic<int> force_status_{0};
};

}  // namespace redress
