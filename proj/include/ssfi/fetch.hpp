#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>

#include <httplib.h>

#include "ssfi/error.hpp"

namespace ssfi {

struct FetchConfig {
    std::string base_url = "https://phyaat.github.io/data";
    int timeout_seconds = 30;
};

namespace detail {

// One writer per destination file at a time.
inline std::mutex& fetch_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace detail

inline std::string subject_file_name(int subject_id) {
    return "subject_" + std::to_string(subject_id) + ".csv";
}

// Downloads one subject's recording CSV into dest_dir. Idempotent: an
// existing non-empty file is returned without touching the network.
// Transport failures raise http_error carrying the status; those are safe
// to retry.
inline std::string fetch_subject(int subject_id, const FetchConfig& cfg,
                                 const std::string& dest_dir) {
    if (subject_id < 1 || subject_id > 25)
        throw argument_error("subject id must be 1..25");

    namespace fs = std::filesystem;
    fs::create_directories(dest_dir);
    fs::path dest = fs::path(dest_dir) / subject_file_name(subject_id);

    std::lock_guard<std::mutex> lock(detail::fetch_mutex());
    if (fs::exists(dest) && fs::file_size(dest) > 0) return dest.string();

    // Split scheme://host from the path part.
    std::string url = cfg.base_url;
    std::string host = url, prefix;
    auto scheme_end = url.find("://");
    auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start != std::string::npos) {
        host = url.substr(0, path_start);
        prefix = url.substr(path_start);
    }
    if (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    httplib::Client client(host);
    client.set_connection_timeout(cfg.timeout_seconds);
    client.set_read_timeout(cfg.timeout_seconds);
    client.set_follow_location(true);

    auto res = client.Get(prefix + "/" + subject_file_name(subject_id));
    if (!res)
        throw http_error(0, "no response from " + host + " (connection failure)");
    if (res->status != 200)
        throw http_error(res->status, "GET " + prefix + "/" + subject_file_name(subject_id) +
                                          " returned status " + std::to_string(res->status));
    if (res->body.empty()) throw http_error(0, "server returned an empty file");

    fs::path partial = dest;
    partial += ".partial";
    {
        std::ofstream out(partial, std::ios::binary);
        if (!out) throw io_error("cannot write " + partial.string());
        out.write(res->body.data(), static_cast<std::streamsize>(res->body.size()));
    }
    fs::rename(partial, dest);
    return dest.string();
}

}  // namespace ssfi
