#include "mmf/embedding.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

namespace mmf {

namespace {

// Splits http://host:port/path into (scheme://host:port, /path).
std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw config_error("provider url '" + url + "' has no scheme");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpProvider::HttpProvider(HttpProviderConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.url.empty()) throw config_error("http provider requires a url");
    if (cfg_.api_key.empty()) {
        throw config_error("http provider requires an API key (set MM_LLM_API_KEY)");
    }
}

std::string HttpProvider::complete(const std::string& prompt) {
    const auto [base, path] = split_url(cfg_.url);
    httplib::Client client(base);
    client.set_connection_timeout(cfg_.timeout_seconds, 0);
    client.set_read_timeout(cfg_.timeout_seconds, 0);
    client.set_write_timeout(cfg_.timeout_seconds, 0);

    nlohmann::json body = {
        {"model", cfg_.model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
    };
    httplib::Headers headers = {{"Authorization", "Bearer " + cfg_.api_key}};

    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        throw provider_error("http provider transport failure: " +
                             httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw provider_error("http provider returned status " + std::to_string(res->status));
    }
    try {
        auto parsed = nlohmann::json::parse(res->body);
        return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw provider_error(std::string("http provider response malformed: ") + e.what());
    }
}

}  // namespace mmf
