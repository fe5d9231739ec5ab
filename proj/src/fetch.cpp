#include "rescast/fetch.hpp"

#include "rescast/data_pipeline.hpp"
#include "rescast/error.hpp"

#include <httplib.h>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rescast {

namespace {

std::string percent_encode(std::string_view raw) {
    std::string out;
    for (unsigned char c : raw) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~' || c == '^') {
            out.push_back(static_cast<char>(c));
        } else {
            char buf[4];
            std::snprintf(buf, sizeof buf, "%%%02X", c);
            out += buf;
        }
    }
    return out;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
        s.replace(pos, from.size(), to);
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

std::filesystem::path cache_path(const std::filesystem::path& cache_dir, std::string_view symbol,
                                 Date start, Date end) {
    return cache_dir / (std::string(symbol) + "_" + format_iso_date(start) + "_" +
                        format_iso_date(end) + ".csv");
}

std::string expand_url_template(std::string_view url_template, std::string_view symbol, Date start,
                                Date end) {
    std::string url(url_template);
    replace_all(url, "{symbol}", percent_encode(symbol));
    replace_all(url, "{start_epoch}", std::to_string(to_epoch_seconds(start)));
    replace_all(url, "{end_epoch}", std::to_string(to_epoch_seconds(end + std::chrono::days{1})));
    return url;
}

FetchResult fetch_history(const FetchRequest& request) {
    const std::string url =
        expand_url_template(request.endpoint, request.symbol, request.start, request.end);
    const auto cached = cache_path(request.cache_dir, request.symbol, request.start, request.end);

    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorKind::Config, "endpoint is not an absolute URL: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_start);
    const std::string target = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    client.set_connection_timeout(request.timeout);
    client.set_read_timeout(request.timeout);
    client.set_follow_location(true);
    client.set_default_headers({{"User-Agent", "rescast/1.0"}});

    httplib::Result response = client.Get(target);
    if (!response) {
        const std::string reason = httplib::to_string(response.error());
        if (std::filesystem::exists(cached)) {
            return FetchResult{parse_ohlc_csv(read_file(cached)), true, cached};
        }
        throw Error(ErrorKind::Fetch, "could not reach " + origin + " (" + reason +
                                          "); no cached copy at " + cached.string());
    }
    if (response->status < 200 || response->status >= 300) {
        constexpr std::size_t kExcerpt = 200;
        throw Error(ErrorKind::HttpStatus, "GET " + url + " returned HTTP " +
                                               std::to_string(response->status) + ": " +
                                               response->body.substr(0, kExcerpt));
    }

    Series series = parse_ohlc_csv(response->body);
    std::filesystem::create_directories(request.cache_dir);
    std::ofstream out(cached, std::ios::binary | std::ios::trunc);
    out.write(response->body.data(), static_cast<std::streamsize>(response->body.size()));
    if (!out) {
        throw Error(ErrorKind::Fetch, "failed to write cache file " + cached.string());
    }
    return FetchResult{std::move(series), false, cached};
}

}  // namespace rescast
