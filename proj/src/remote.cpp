#include "bbox/remote.hpp"

#include <cmath>

#include <httplib.h>
#include <json.hpp>

#include "bbox/error.hpp"

namespace bbox {

using nlohmann::json;

namespace protocol {

namespace {

json parse_object(std::string_view body) {
    json doc = json::parse(body.begin(), body.end(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object())
        throw OracleError(OracleError::Kind::Malformed, "response is not a JSON object");
    return doc;
}

std::vector<double> number_array(const json& doc, const char* key) {
    const auto it = doc.find(key);
    if (it == doc.end() || !it->is_array())
        throw OracleError(OracleError::Kind::Malformed, std::string("missing array '") + key + "'");
    std::vector<double> values;
    values.reserve(it->size());
    for (const auto& v : *it) {
        if (!v.is_number())
            throw OracleError(OracleError::Kind::Malformed, std::string("non-numeric entry in '") + key + "'");
        const double x = v.get<double>();
        if (!std::isfinite(x))
            throw OracleError(OracleError::Kind::Malformed, std::string("non-finite entry in '") + key + "'");
        values.push_back(x);
    }
    return values;
}

}  // namespace

std::string encode_meta(const RemoteMeta& meta) {
    nlohmann::ordered_json doc;
    doc["shape"] = {meta.shape.channels, meta.shape.height, meta.shape.width};
    doc["classes"] = meta.classes;
    return doc.dump();
}

RemoteMeta decode_meta(std::string_view body) {
    const json doc = parse_object(body);
    const auto shape = doc.find("shape");
    const auto classes = doc.find("classes");
    if (shape == doc.end() || !shape->is_array() || shape->size() != 3 || classes == doc.end() ||
        !classes->is_number_integer())
        throw OracleError(OracleError::Kind::Malformed, "meta needs 'shape' [C,H,W] and integer 'classes'");
    RemoteMeta meta;
    int dims[3];
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& d = (*shape)[i];
        if (!d.is_number_integer() || d.get<long long>() < 1)
            throw OracleError(OracleError::Kind::Malformed, "meta shape entries must be positive integers");
        dims[i] = d.get<int>();
    }
    meta.shape = {dims[0], dims[1], dims[2]};
    const auto k = classes->get<long long>();
    if (k < 2) throw OracleError(OracleError::Kind::Malformed, "meta must declare at least two classes");
    meta.classes = static_cast<std::size_t>(k);
    return meta;
}

std::string encode_logits_request(const ImageTensor& image) {
    json doc;
    doc["image"] = std::vector<double>(image.data().begin(), image.data().end());
    return doc.dump();
}

std::vector<double> decode_logits_request(std::string_view body, std::size_t expected_length) {
    const json doc = parse_object(body);
    auto pixels = number_array(doc, "image");
    if (pixels.size() != expected_length)
        throw OracleError(OracleError::Kind::Shape, "image has " + std::to_string(pixels.size()) +
                                                        " values, expected " + std::to_string(expected_length));
    return pixels;
}

std::string encode_logits_response(const LogitsVector& logits) {
    json doc;
    doc["logits"] = std::vector<double>(logits.values().begin(), logits.values().end());
    return doc.dump();
}

LogitsVector decode_logits_response(std::string_view body, std::size_t expected_classes) {
    const json doc = parse_object(body);
    auto values = number_array(doc, "logits");
    if (values.size() != expected_classes)
        throw OracleError(OracleError::Kind::Shape, "server returned " + std::to_string(values.size()) +
                                                        " logits, expected " + std::to_string(expected_classes));
    return LogitsVector(std::move(values));
}

std::string encode_error(std::string_view message) {
    json doc;
    doc["error"] = std::string(message);
    return doc.dump();
}

}  // namespace protocol

namespace {

OracleError transport_error(httplib::Error err, const std::string& url) {
    const auto kind = (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
                          ? OracleError::Kind::Timeout
                          : OracleError::Kind::Transport;
    return OracleError(kind, "request to " + url + " failed: " + httplib::to_string(err));
}

std::string check_status(const httplib::Result& res, const std::string& url) {
    if (!res) throw transport_error(res.error(), url);
    if (res->status != 200) {
        std::string message = "HTTP " + std::to_string(res->status);
        const json doc = json::parse(res->body, nullptr, false);
        if (doc.is_object() && doc.contains("error") && doc["error"].is_string())
            message += ": " + doc["error"].get<std::string>();
        throw OracleError(OracleError::Kind::Http, "request to " + url + " failed with " + message);
    }
    return res->body;
}

}  // namespace

RemoteModel::RemoteModel(std::string base_url, RemoteOptions options)
    : base_url_(std::move(base_url)), options_(options) {
    meta_ = protocol::decode_meta(get("/meta"));
}

std::string RemoteModel::get(const std::string& path) const {
    httplib::Client client(base_url_);
    client.set_connection_timeout(options_.connect_timeout);
    client.set_read_timeout(options_.read_timeout);
    return check_status(client.Get(path), base_url_ + path);
}

std::string RemoteModel::post(const std::string& path, const std::string& body) const {
    httplib::Client client(base_url_);
    client.set_connection_timeout(options_.connect_timeout);
    client.set_read_timeout(options_.read_timeout);
    return check_status(client.Post(path, body, "application/json"), base_url_ + path);
}

LogitsVector RemoteModel::logits(const ImageTensor& x) const {
    if (x.shape() != meta_.shape) throw ShapeError("image shape does not match the server's declared shape");
    return protocol::decode_logits_response(post("/logits", protocol::encode_logits_request(x)),
                                            meta_.classes);
}

}  // namespace bbox
