#pragma once

#include "rescast/series.hpp"

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>

namespace rescast {

/// Yahoo Finance CSV download; `{symbol}`, `{start_epoch}` and `{end_epoch}`
/// are substituted per request.
inline constexpr std::string_view kDefaultEndpoint =
    "https://query1.finance.yahoo.com/v7/finance/download/"
    "{symbol}?period1={start_epoch}&period2={end_epoch}&interval=1d&events=history";

struct FetchRequest {
    std::string symbol;
    Date start;
    Date end;  // inclusive
    std::string endpoint = std::string(kDefaultEndpoint);
    std::filesystem::path cache_dir;
    std::chrono::seconds timeout{15};
};

struct FetchResult {
    Series series;
    bool stale = false;  // served from cache after a network failure
    std::filesystem::path cache_file;
};

/// Single HTTP GET of the templated endpoint. The raw body is cached at
/// `<cache_dir>/<symbol>_<start>_<end>.csv`; when the endpoint cannot be
/// reached, a cached copy is returned with `stale` set.
FetchResult fetch_history(const FetchRequest& request);

std::filesystem::path cache_path(const std::filesystem::path& cache_dir, std::string_view symbol,
                                 Date start, Date end);

/// Substitutes the placeholders. The symbol is percent-encoded; the end epoch
/// is midnight after `end` so the end date itself is included.
std::string expand_url_template(std::string_view url_template, std::string_view symbol, Date start,
                                Date end);

}  // namespace rescast
