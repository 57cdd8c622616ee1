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
#include "orchard/result_store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <utility>

#include <sqlite3.h>

#include "orchard/backend.hpp"
#include "orchard/capture_meta.hpp"
#include "orchard/error.hpp"

namespace orchard {
namespace {

constexpr const char* kMigrationV1 = R"sql(
CREATE TABLE images (
    image_id     TEXT PRIMARY KEY,
    device_id    TEXT NOT NULL,
    captured_at  INTEGER NOT NULL,
    altitude_m   REAL NOT NULL,
    frame_kind   TEXT NOT NULL,
    sequence_no  INTEGER NOT NULL,
    width_px     INTEGER NOT NULL,
    height_px    INTEGER NOT NULL,
    byte_len     INTEGER NOT NULL,
    content_type TEXT NOT NULL,
    task         TEXT NOT NULL,
    status       TEXT NOT NULL,
    reason       TEXT NOT NULL DEFAULT '',
    stored_path  TEXT NOT NULL
);
CREATE INDEX images_by_status ON images(status, image_id);
CREATE INDEX images_by_device ON images(device_id, image_id);
CREATE TABLE results (
    result_id     TEXT PRIMARY KEY,
    image_id      TEXT NOT NULL UNIQUE REFERENCES images(image_id),
    task          TEXT NOT NULL,
    payload       TEXT NOT NULL,
    model_version TEXT NOT NULL,
    created_at    INTEGER NOT NULL,
    latency_ms    REAL NOT NULL,
    label         TEXT,
    detections    INTEGER NOT NULL DEFAULT 0
);
)sql";

[[noreturn]] void fail(sqlite3* db, int rc, std::string_view what) {
    const std::string msg = std::string(what) + ": " + (db ? sqlite3_errmsg(db) : sqlite3_errstr(rc));
    switch (rc & 0xff) {
        case SQLITE_CORRUPT:
        case SQLITE_NOTADB: throw Error(ErrorCode::Corrupt, msg);
        case SQLITE_BUSY:
        case SQLITE_LOCKED: throw Error(ErrorCode::Locked, msg);
        default: throw Error(ErrorCode::StorageFailure, msg);
    }
}

void exec(sqlite3* db, const char* sql) {
    char* err = nullptr;
    const int rc = sqlite3_exec(db, sql, nullptr, nullptr, &err);
    if (rc != SQLITE_OK) {
        const std::string msg = err ? err : sqlite3_errstr(rc);
        sqlite3_free(err);
        fail(db, rc, msg);
    }
}

class Stmt {
public:
    Stmt(sqlite3* db, std::string_view sql) : db_(db) {
        const int rc = sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &stmt_, nullptr);
        if (rc != SQLITE_OK) fail(db, rc, "prepare");
    }
    ~Stmt() { sqlite3_finalize(stmt_); }
    Stmt(const Stmt&) = delete;
    Stmt& operator=(const Stmt&) = delete;

    Stmt& bind(int i, std::string_view v) {
        check(sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
        return *this;
    }
    Stmt& bind(int i, std::int64_t v) {
        check(sqlite3_bind_int64(stmt_, i, v));
        return *this;
    }
    Stmt& bind(int i, double v) {
        check(sqlite3_bind_double(stmt_, i, v));
        return *this;
    }

    /// True while rows remain.
    bool step() {
        const int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        fail(db_, rc, "step");
    }
    /// Runs to completion; returns the extended result code instead of
    /// throwing so callers can map constraint failures.
    int run() {
        int rc;
        while ((rc = sqlite3_step(stmt_)) == SQLITE_ROW) {
        }
        return rc == SQLITE_DONE ? SQLITE_OK : sqlite3_extended_errcode(db_);
    }

    std::string text(int col) const {
        const auto* p = sqlite3_column_text(stmt_, col);
        return p ? std::string(reinterpret_cast<const char*>(p),
                               static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
                 : std::string();
    }
    std::int64_t i64(int col) const { return sqlite3_column_int64(stmt_, col); }
    double f64(int col) const { return sqlite3_column_double(stmt_, col); }
    bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }

private:
    void check(int rc) {
        if (rc != SQLITE_OK) fail(db_, rc, "bind");
    }

    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

/// Rolls back unless committed.
class Transaction {
public:
    Transaction(sqlite3* db, const char* begin) : db_(db) { exec(db_, begin); }
    ~Transaction() {
        if (!done_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
    }
    void commit() {
        exec(db_, "COMMIT");
        done_ = true;
    }

private:
    sqlite3* db_;
    bool done_ = false;
};

sqlite3* open_connection(const std::filesystem::path& path, int busy_ms) {
    sqlite3* db = nullptr;
    const int rc = sqlite3_open_v2(path.c_str(), &db,
                                   SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_NOMUTEX,
                                   nullptr);
    if (rc != SQLITE_OK) {
        const std::string msg = db ? sqlite3_errmsg(db) : sqlite3_errstr(rc);
        sqlite3_close(db);
        if ((rc & 0xff) == SQLITE_CORRUPT || (rc & 0xff) == SQLITE_NOTADB) {
            throw Error(ErrorCode::Corrupt, msg);
        }
        throw Error(ErrorCode::StorageFailure, "open " + path.string() + ": " + msg);
    }
    sqlite3_busy_timeout(db, busy_ms);
    sqlite3_extended_result_codes(db, 1);
    return db;
}

constexpr const char* kImageColumns =
    "image_id, device_id, captured_at, altitude_m, frame_kind, sequence_no, width_px, height_px, "
    "byte_len, content_type, task, status, reason, stored_path";

ImageRecord read_image(const Stmt& s) {
    ImageRecord r;
    r.image_id = s.text(0);
    r.meta.device_id = s.text(1);
    r.meta.captured_at = TimestampMs(std::chrono::milliseconds(s.i64(2)));
    r.meta.altitude_m = s.f64(3);
    r.meta.frame_kind = parse_frame_kind(s.text(4)).value_or(FrameKind::Unknown);
    r.meta.sequence_no = static_cast<std::uint32_t>(s.i64(5));
    r.width_px = static_cast<int>(s.i64(6));
    r.height_px = static_cast<int>(s.i64(7));
    r.byte_len = s.i64(8);
    r.content_type = s.text(9);
    const auto task = parse_task(s.text(10));
    const auto status = parse_status(s.text(11));
    if (!task || !status) throw Error(ErrorCode::Corrupt, "bad enum in images row " + r.image_id);
    r.task = *task;
    r.status = *status;
    r.failure_reason = s.text(12);
    r.stored_path = s.text(13);
    return r;
}

std::int64_t to_ms(TimestampMs t) { return t.time_since_epoch().count(); }

}  // namespace

nlohmann::json result_to_json(const ResultRow& row) {
    return {{"result_id", row.result_id},
            {"image_id", row.image_id},
            {"task", std::string(to_string(row.task))},
            {"payload", nlohmann::json::parse(row.payload)},
            {"created_at", format_rfc3339(row.created_at)},
            {"model_version", row.model_version},
            {"latency_ms", row.latency_ms}};
}

nlohmann::json stats_to_json(const StoreStats& s) {
    nlohmann::json tasks = nlohmann::json::object();
    nlohmann::json classes = nlohmann::json::object();
    for (const TaskKind t : kAllTasks) {
        const auto it = s.results_per_task.find(t);
        tasks[std::string(to_string(t))] = it == s.results_per_task.end() ? 0 : it->second;
        nlohmann::json per = nlohmann::json::object();
        if (const auto pc = s.per_class.find(t); pc != s.per_class.end()) {
            for (const auto& [label, n] : pc->second) per[label] = n;
        }
        classes[std::string(to_string(t))] = per;
    }
    return {{"tasks", tasks},
            {"classes", classes},
            {"failed", s.failed},
            {"queue_depth", s.queue_depth()},
            {"images",
             {{"total", s.images},
              {"received", s.received},
              {"queued", s.queued},
              {"processed", s.processed},
              {"failed", s.failed}}}};
}

Store::Store(std::filesystem::path path, StoreOptions options)
    : path_(std::move(path)), options_(std::move(options)) {}

std::unique_ptr<Store> Store::open(const std::filesystem::path& path, StoreOptions options) {
    std::unique_ptr<Store> store(new Store(path, std::move(options)));

    const std::string lock_path = path.string() + ".lock";
    store->lock_fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (store->lock_fd_ < 0) {
        throw Error(ErrorCode::StorageFailure, "cannot create " + lock_path);
    }
    if (::flock(store->lock_fd_, LOCK_EX | LOCK_NB) != 0) {
        if (errno == EWOULDBLOCK) {
            throw Error(ErrorCode::Locked, path.string() + " is open by another writer");
        }
        throw Error(ErrorCode::StorageFailure, "flock " + lock_path);
    }

    store->writer_ = open_connection(path, store->options_.busy_timeout_ms);
    exec(store->writer_, "PRAGMA foreign_keys = ON");
    exec(store->writer_, "PRAGMA journal_mode = WAL");
    exec(store->writer_, "PRAGMA synchronous = FULL");
    store->migrate();

    store->reader_ = open_connection(path, store->options_.busy_timeout_ms);
    exec(store->reader_, "PRAGMA query_only = ON");
    return store;
}

Store::~Store() {
    sqlite3_close(reader_);
    sqlite3_close(writer_);
    if (lock_fd_ >= 0) ::close(lock_fd_);
}

void Store::hook(std::string_view point) const {
    if (options_.fault_hook) options_.fault_hook(point);
}

void Store::migrate() {
    std::lock_guard lk(write_mu_);
    try {
        exec(writer_,
             "CREATE TABLE IF NOT EXISTS migrations (version INTEGER PRIMARY KEY, applied_at INTEGER NOT NULL)");
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Corrupt || e.code() == ErrorCode::Locked) throw;
        throw Error(ErrorCode::MigrationFailure, e.what());
    }
    int current = 0;
    {
        Stmt s(writer_, "SELECT COALESCE(MAX(version), 0) FROM migrations");
        if (s.step()) current = static_cast<int>(s.i64(0));
    }
    if (current > kSchemaVersion) {
        throw Error(ErrorCode::MigrationFailure,
                    "database schema v" + std::to_string(current) + " is newer than supported v" +
                        std::to_string(kSchemaVersion));
    }
    static constexpr const char* kMigrations[] = {kMigrationV1};
    for (int v = current + 1; v <= kSchemaVersion; ++v) {
        try {
            Transaction tx(writer_, "BEGIN IMMEDIATE");
            exec(writer_, kMigrations[v - 1]);
            Stmt ins(writer_, "INSERT INTO migrations(version, applied_at) VALUES (?, strftime('%s','now'))");
            ins.bind(1, static_cast<std::int64_t>(v));
            if (ins.run() != SQLITE_OK) fail(writer_, SQLITE_ERROR, "record migration");
            tx.commit();
        } catch (const Error& e) {
            if (e.code() == ErrorCode::Corrupt || e.code() == ErrorCode::Locked) throw;
            throw Error(ErrorCode::MigrationFailure,
                        "migration v" + std::to_string(v) + ": " + e.what());
        }
    }
}

int Store::schema_version() const {
    std::lock_guard lk(read_mu_);
    Stmt s(reader_, "SELECT COALESCE(MAX(version), 0) FROM migrations");
    return s.step() ? static_cast<int>(s.i64(0)) : 0;
}

void Store::put_image(const ImageRecord& rec) {
    std::lock_guard lk(write_mu_);
    Transaction tx(writer_, "BEGIN IMMEDIATE");
    Stmt s(writer_, std::string("INSERT INTO images(") + kImageColumns +
                        ") VALUES (?,?,?,?,?,?,?,?,?,?,?,?,?,?)");
    s.bind(1, rec.image_id)
        .bind(2, rec.meta.device_id)
        .bind(3, to_ms(rec.meta.captured_at))
        .bind(4, rec.meta.altitude_m)
        .bind(5, to_string(rec.meta.frame_kind))
        .bind(6, static_cast<std::int64_t>(rec.meta.sequence_no))
        .bind(7, static_cast<std::int64_t>(rec.width_px))
        .bind(8, static_cast<std::int64_t>(rec.height_px))
        .bind(9, rec.byte_len)
        .bind(10, rec.content_type)
        .bind(11, to_string(rec.task))
        .bind(12, to_string(rec.status))
        .bind(13, rec.failure_reason)
        .bind(14, rec.stored_path);
    const int rc = s.run();
    if (rc == SQLITE_CONSTRAINT_PRIMARYKEY) {
        throw Error(ErrorCode::StorageFailure, "duplicate image_id " + rec.image_id);
    }
    if (rc != SQLITE_OK) fail(writer_, rc, "insert image");
    hook("put_image:inserted");
    tx.commit();
    hook("put_image:committed");
}

void Store::put_result(const ResultRow& row) {
    std::optional<std::string> label;
    std::int64_t detections = 0;
    try {
        const auto payload = nlohmann::json::parse(row.payload);
        if (row.task == TaskKind::AppleDetection) {
            detections = static_cast<std::int64_t>(payload.at("detections").size());
        } else {
            label = payload.at("label").get<std::string>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::StorageFailure, std::string("result payload: ") + e.what());
    }

    std::lock_guard lk(write_mu_);
    Transaction tx(writer_, "BEGIN IMMEDIATE");
    {
        Stmt q(writer_,
               "SELECT i.status, r.result_id FROM images i LEFT JOIN results r ON r.image_id = i.image_id "
               "WHERE i.image_id = ?");
        q.bind(1, row.image_id);
        if (!q.step()) throw Error(ErrorCode::ForeignKeyViolation, "unknown image_id " + row.image_id);
        if (!q.is_null(1)) throw Error(ErrorCode::DuplicateResult, "result exists for " + row.image_id);
    }
    {
        Stmt s(writer_,
               "INSERT INTO results(result_id, image_id, task, payload, model_version, created_at, "
               "latency_ms, label, detections) VALUES (?,?,?,?,?,?,?,?,?)");
        s.bind(1, row.result_id)
            .bind(2, row.image_id)
            .bind(3, to_string(row.task))
            .bind(4, row.payload)
            .bind(5, row.model_version)
            .bind(6, to_ms(row.created_at))
            .bind(7, row.latency_ms);
        if (label) s.bind(8, *label);
        s.bind(9, detections);
        const int rc = s.run();
        if (rc == SQLITE_CONSTRAINT_FOREIGNKEY) {
            throw Error(ErrorCode::ForeignKeyViolation, "unknown image_id " + row.image_id);
        }
        if (rc == SQLITE_CONSTRAINT_UNIQUE || rc == SQLITE_CONSTRAINT_PRIMARYKEY) {
            throw Error(ErrorCode::DuplicateResult, "result exists for " + row.image_id);
        }
        if (rc != SQLITE_OK) fail(writer_, rc, "insert result");
    }
    hook("put_result:inserted");
    {
        Stmt s(writer_, "UPDATE images SET status = 'processed', reason = '' WHERE image_id = ?");
        s.bind(1, row.image_id);
        if (const int rc = s.run(); rc != SQLITE_OK) fail(writer_, rc, "mark processed");
    }
    hook("put_result:status");
    tx.commit();
    hook("put_result:committed");
}

void Store::set_status(const std::string& image_id, ImageStatus status, const std::string& reason) {
    std::lock_guard lk(write_mu_);
    Transaction tx(writer_, "BEGIN IMMEDIATE");
    Stmt s(writer_, "UPDATE images SET status = ?, reason = ? WHERE image_id = ?");
    s.bind(1, to_string(status)).bind(2, reason).bind(3, image_id);
    if (const int rc = s.run(); rc != SQLITE_OK) fail(writer_, rc, "set status");
    if (sqlite3_changes(writer_) == 0) throw Error(ErrorCode::NotFound, "unknown image_id " + image_id);
    hook("set_status:updated");
    tx.commit();
    hook("set_status:committed");
}

std::optional<ImageRecord> Store::get_image(const std::string& image_id) const {
    std::lock_guard lk(read_mu_);
    Stmt s(reader_, std::string("SELECT ") + kImageColumns + " FROM images WHERE image_id = ?");
    s.bind(1, image_id);
    if (!s.step()) return std::nullopt;
    return read_image(s);
}

std::optional<ResultRow> Store::get_result(const std::string& image_id) const {
    std::lock_guard lk(read_mu_);
    Stmt s(reader_,
           "SELECT result_id, image_id, task, payload, model_version, created_at, latency_ms "
           "FROM results WHERE image_id = ?");
    s.bind(1, image_id);
    if (!s.step()) return std::nullopt;
    ResultRow r;
    r.result_id = s.text(0);
    r.image_id = s.text(1);
    const auto task = parse_task(s.text(2));
    if (!task) throw Error(ErrorCode::Corrupt, "bad task in results row " + r.result_id);
    r.task = *task;
    r.payload = s.text(3);
    r.model_version = s.text(4);
    r.created_at = TimestampMs(std::chrono::milliseconds(s.i64(5)));
    r.latency_ms = s.f64(6);
    return r;
}

ImagePage Store::list_images(const ImageFilter& filter) const {
    const int limit = std::clamp(filter.limit, 1, 1000);
    std::string sql = std::string("SELECT ") + kImageColumns + " FROM images WHERE 1=1";
    if (filter.since) sql += " AND image_id > ?";
    if (filter.device_id) sql += " AND device_id = ?";
    if (filter.task) sql += " AND task = ?";
    if (filter.status) sql += " AND status = ?";
    sql += " ORDER BY image_id LIMIT ?";

    std::lock_guard lk(read_mu_);
    Stmt s(reader_, sql);
    int i = 1;
    if (filter.since) s.bind(i++, *filter.since);
    if (filter.device_id) s.bind(i++, *filter.device_id);
    if (filter.task) s.bind(i++, to_string(*filter.task));
    if (filter.status) s.bind(i++, to_string(*filter.status));
    s.bind(i, static_cast<std::int64_t>(limit) + 1);

    ImagePage page;
    while (s.step()) page.items.push_back(read_image(s));
    if (page.items.size() > static_cast<std::size_t>(limit)) {
        page.items.pop_back();
        page.next = page.items.back().image_id;
    }
    return page;
}

std::vector<std::string> Store::queued_ids() const {
    std::lock_guard lk(read_mu_);
    Stmt s(reader_, "SELECT image_id FROM images WHERE status = 'queued' ORDER BY image_id");
    std::vector<std::string> ids;
    while (s.step()) ids.push_back(s.text(0));
    return ids;
}

StoreStats Store::stats() const {
    StoreStats out;
    for (const TaskKind t : kAllTasks) {
        out.results_per_task[t] = 0;
        for (const auto& label : default_labels(t)) out.per_class[t][label] = 0;
    }

    std::lock_guard lk(read_mu_);
    Transaction tx(reader_, "BEGIN");
    {
        Stmt s(reader_, "SELECT status, COUNT(*) FROM images GROUP BY status");
        while (s.step()) {
            const auto st = parse_status(s.text(0));
            const std::int64_t n = s.i64(1);
            out.images += n;
            if (!st) continue;
            switch (*st) {
                case ImageStatus::Received: out.received = n; break;
                case ImageStatus::Queued: out.queued = n; break;
                case ImageStatus::Processed: out.processed = n; break;
                case ImageStatus::Failed: out.failed = n; break;
            }
        }
    }
    {
        Stmt s(reader_, "SELECT task, label, COUNT(*), SUM(detections) FROM results GROUP BY task, label");
        while (s.step()) {
            const auto task = parse_task(s.text(0));
            if (!task) continue;
            const std::int64_t n = s.i64(2);
            out.results += n;
            out.results_per_task[*task] += n;
            if (*task == TaskKind::AppleDetection) {
                out.per_class[*task]["apple"] += s.i64(3);
            } else if (!s.is_null(1)) {
                out.per_class[*task][s.text(1)] += n;
            }
        }
    }
    tx.commit();
    return out;
}

}  // namespace orchard
