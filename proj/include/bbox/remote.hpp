#pragma once

#include <chrono>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bbox/models.hpp"

namespace bbox {

/// Metadata served at GET /meta.
struct RemoteMeta {
    Shape shape;
    std::size_t classes = 0;
};

/// JSON bodies of the logits protocol. Decoders throw OracleError (Malformed or
/// Shape) on bad payloads.
namespace protocol {

std::string encode_meta(const RemoteMeta& meta);
RemoteMeta decode_meta(std::string_view body);

std::string encode_logits_request(const ImageTensor& image);
/// Server side: returns the flat pixel array after checking its length.
std::vector<double> decode_logits_request(std::string_view body, std::size_t expected_length);

std::string encode_logits_response(const LogitsVector& logits);
LogitsVector decode_logits_response(std::string_view body, std::size_t expected_classes);

std::string encode_error(std::string_view message);

}  // namespace protocol

struct RemoteOptions {
    std::chrono::milliseconds connect_timeout{5000};
    std::chrono::milliseconds read_timeout{30000};
};

/// HTTP client for a model server. Fetches /meta once at construction; every
/// logits() call is exactly one POST /logits request and is never retried.
class RemoteModel final : public ModelOracle {
public:
    /// `base_url` is scheme://host:port, e.g. "http://127.0.0.1:8080".
    explicit RemoteModel(std::string base_url, RemoteOptions options = {});

    Shape input_shape() const override { return meta_.shape; }
    std::size_t num_classes() const override { return meta_.classes; }
    LogitsVector logits(const ImageTensor& x) const override;

    const std::string& base_url() const noexcept { return base_url_; }

private:
    std::string get(const std::string& path) const;
    std::string post(const std::string& path, const std::string& body) const;

    std::string base_url_;
    RemoteOptions options_;
    RemoteMeta meta_;
};

}  // namespace bbox
