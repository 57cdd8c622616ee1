// Copyright 2026 The Orchard Edge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "orchard/simulate.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <thread>

#include <httplib.h>

#include "orchard/error.hpp"
#include "orchard/types.hpp"

namespace orchard {
namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string mime_for(const std::filesystem::path& p) {
    return lower(p.extension().string()) == ".png" ? "image/png" : "image/jpeg";
}

nlohmann::json read_sidecar(const std::filesystem::path& image) {
    for (const auto& candidate :
         {std::filesystem::path(image).replace_extension(".json"),
          std::filesystem::path(image.string() + ".json")}) {
        std::ifstream in(candidate);
        if (!in) continue;
        try {
            auto j = nlohmann::json::parse(in);
            if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, candidate.string() + ": not an object");
            return j;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::InvalidArgument, candidate.string() + ": " + e.what());
        }
    }
    return nlohmann::json::object();
}

}  // namespace

void apply_meta_override(nlohmann::json& overrides, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw Error(ErrorCode::InvalidArgument, "--meta expects key=value, got '" + kv + "'");
    }
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    if (key == "device_id" || key == "captured_at" || key == "frame_kind") {
        overrides[key] = value;
        return;
    }
    auto parsed = nlohmann::json::parse(value, nullptr, false);
    overrides[key] = parsed.is_discarded() ? nlohmann::json(value) : std::move(parsed);
}

nlohmann::json frame_meta(const std::filesystem::path& image, std::size_t index,
                          const nlohmann::json& overrides) {
    nlohmann::json meta = {
        {"device_id", "sim-01"},
        {"captured_at", format_rfc3339(std::chrono::time_point_cast<std::chrono::milliseconds>(
                            std::chrono::system_clock::now()))},
        {"altitude_m", 0.0},
        {"frame_kind", "unknown"},
        {"sequence_no", index},
    };
    meta.update(overrides);
    meta.update(read_sidecar(image));
    return meta;
}

std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = lower(entry.path().extension().string());
        if (ext == ".jpg" || ext == ".jpeg" || ext == ".png") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

SimulateReport simulate_device(const SimulateOptions& opts) {
    if (!std::filesystem::is_directory(opts.dir)) {
        throw Error(ErrorCode::InvalidArgument, "not a directory: " + opts.dir.string());
    }
    const auto frames = list_frames(opts.dir);
    httplib::Client client(opts.url);
    if (!client.is_valid()) throw Error(ErrorCode::InvalidArgument, "bad url '" + opts.url + "'");
    client.set_connection_timeout(std::chrono::seconds(5));
    client.set_read_timeout(std::chrono::seconds(30));
    client.set_write_timeout(std::chrono::seconds(30));

    SimulateReport report;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (opts.rate > 0.0) {
            std::this_thread::sleep_until(
                t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                         std::chrono::duration<double>(static_cast<double>(i) / opts.rate)));
        }
        const auto& path = frames[i];
        UploadOutcome out;
        out.file = path.filename().string();

        std::ifstream in(path, std::ios::binary);
        const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
        const httplib::MultipartFormDataItems items = {
            {"meta", frame_meta(path, i, opts.meta_overrides).dump(), "", "application/json"},
            {"image", bytes, out.file, mime_for(path)},
        };

        for (int attempt = 0; attempt <= opts.retries; ++attempt) {
            if (attempt > 0) std::this_thread::sleep_for(opts.backoff * (1 << (attempt - 1)));
            ++out.attempts;
            const auto res = client.Post("/api/v1/ingest", items);
            if (!res) {
                out.status = 0;
                out.error = httplib::to_string(res.error());
                continue;
            }
            out.status = res->status;
            auto body = nlohmann::json::parse(res->body, nullptr, false);
            if (res->status == 201 && body.is_object()) {
                out.image_id = body.value("image_id", "");
                out.task = body.value("task", "");
                out.error.clear();
                break;
            }
            out.error = body.is_object() ? body.value("error", "") + ": " + body.value("detail", "")
                                         : res->body;
            if (res->status != 503) break;
        }

        if (out.status == 201) {
            ++report.acknowledged;
            if (opts.log) *opts.log << out.file << " 201 " << out.image_id << ' ' << out.task << '\n';
        } else {
            ++report.failed;
            if (opts.log) {
                *opts.log << out.file << " FAILED status=" << out.status << " attempts=" << out.attempts
                          << ' ' << out.error << '\n';
            }
        }
        report.uploads.push_back(std::move(out));
    }
    if (opts.log) {
        *opts.log << "uploaded " << report.acknowledged << '/' << frames.size() << ", failed "
                  << report.failed << '\n';
    }
    return report;
}

}  // namespace orchard
