#include "sitewalk/inspection.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include <fcntl.h>
#include <unistd.h>

#include <fmt/format.h>

#include "sitewalk/codec.hpp"
#include "sitewalk/errors.hpp"
#include "sitewalk/mission.hpp"

namespace sitewalk {

nlohmann::json capture_to_json(const Capture& c, bool withPayload)
{
    nlohmann::json j {
        { "capture_id", c.capture_id },
        { "mission_id", c.mission_id },
        { "drp_id", c.drp_id },
        { "sequence", c.sequence },
        { "pose", { { "x", c.pose_at_capture.x() }, { "y", c.pose_at_capture.y() }, { "theta", c.pose_at_capture.theta() } } },
        { "timestamp", c.timestamp },
    };
    if (withPayload)
        j["payload_b64"] = base64_encode(c.payload);
    return j;
}

Capture capture_from_json(const nlohmann::json& j)
{
    try {
        Capture c;
        c.capture_id = j.at("capture_id").get<std::string>();
        c.mission_id = j.at("mission_id").get<std::string>();
        c.drp_id = j.at("drp_id").get<std::string>();
        c.sequence = j.at("sequence").get<std::size_t>();
        const auto& p = j.at("pose");
        c.pose_at_capture = Pose2D(p.at("x").get<double>(), p.at("y").get<double>(), p.at("theta").get<double>());
        c.timestamp = j.at("timestamp").get<double>();
        if (const auto it = j.find("payload_b64"); it != j.end())
            c.payload = base64_decode(it->get<std::string>());
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("capture: ") + e.what());
    }
}

nlohmann::json record_to_json(const InspectionRecord& r, bool withPayload)
{
    nlohmann::json captures = nlohmann::json::array();
    for (const Capture& c : r.captures)
        captures.push_back(capture_to_json(c, withPayload));
    return { { "project_id", r.project_id },
             { "inspection_date", r.inspection_date },
             { "mission_id", r.mission_id },
             { "captures", std::move(captures) } };
}

InspectionRecord record_from_json(const nlohmann::json& j)
{
    try {
        InspectionRecord r;
        r.project_id = j.at("project_id").get<std::string>();
        r.inspection_date = j.at("inspection_date").get<std::string>();
        r.mission_id = j.at("mission_id").get<std::string>();
        for (const auto& c : j.at("captures"))
            r.captures.push_back(capture_from_json(c));
        if (!is_valid_date(r.inspection_date))
            throw ProtocolError("record has a malformed inspection_date");
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("record: ") + e.what());
    }
}

namespace {

void write_durably(const std::filesystem::path& path, const std::string& data, bool append)
{
    const int flags = O_WRONLY | O_CREAT | O_CLOEXEC | (append ? O_APPEND : O_TRUNC);
    const int fd = ::open(path.c_str(), flags, 0644);
    if (fd < 0)
        throw StorageError(fmt::format("open {}: {}", path.string(), std::strerror(errno)));
    std::size_t done = 0;
    while (done < data.size()) {
        const ssize_t n = ::write(fd, data.data() + done, data.size() - done);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            const int err = errno;
            ::close(fd);
            throw StorageError(fmt::format("write {}: {}", path.string(), std::strerror(err)));
        }
        done += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
        const int err = errno;
        ::close(fd);
        throw StorageError(fmt::format("fsync {}: {}", path.string(), std::strerror(err)));
    }
    ::close(fd);
}

} // namespace

CaptureStore::CaptureStore(std::filesystem::path path) : mPath(std::move(path))
{
    std::error_code ec;
    if (mPath.has_parent_path())
        std::filesystem::create_directories(mPath.parent_path(), ec);

    if (std::filesystem::exists(mPath)) {
        std::ifstream in(mPath, std::ios::binary);
        if (!in)
            throw StorageError("cannot read " + mPath.string());
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty())
                continue;
            try {
                index(record_from_json(nlohmann::json::parse(line)));
            } catch (const std::exception&) {
                // A crash mid-append leaves a torn last line; skip it.
            }
        }
    }

    std::string compacted;
    for (const auto& [key, records] : mRecords)
        for (const InspectionRecord& r : records)
            compacted += record_to_json(r).dump() + "\n";
    const auto tmp = std::filesystem::path(mPath.string() + ".tmp");
    write_durably(tmp, compacted, false);
    std::filesystem::rename(tmp, mPath, ec);
    if (ec)
        throw StorageError(fmt::format("rename {}: {}", tmp.string(), ec.message()));
}

void CaptureStore::index(InspectionRecord record)
{
    auto& day = mRecords[{ record.project_id, record.inspection_date }];
    for (InspectionRecord& existing : day)
        if (existing.mission_id == record.mission_id) {
            existing = std::move(record);
            return;
        }
    day.push_back(std::move(record));
}

void CaptureStore::append_line(const std::string& line) { write_durably(mPath, line, true); }

void CaptureStore::put(const InspectionRecord& record)
{
    if (!is_valid_date(record.inspection_date))
        throw StorageError("record has a malformed inspection date");
    const std::string line = record_to_json(record).dump() + "\n";
    std::lock_guard lock(mMutex);
    append_line(line);
    index(record);
}

std::vector<InspectionRecord> CaptureStore::query(const std::string& project, const std::string& date) const
{
    std::lock_guard lock(mMutex);
    const auto it = mRecords.find({ project, date });
    return it == mRecords.end() ? std::vector<InspectionRecord> {} : it->second;
}

std::vector<std::string> CaptureStore::dates(const std::string& project) const
{
    std::lock_guard lock(mMutex);
    std::vector<std::string> out;
    for (const auto& [key, records] : mRecords)
        if (key.first == project && !records.empty())
            out.push_back(key.second);
    return out;
}

std::optional<Capture> CaptureStore::find_capture(const std::string& project, const std::string& captureId) const
{
    std::lock_guard lock(mMutex);
    for (const auto& [key, records] : mRecords) {
        if (key.first != project)
            continue;
        for (const InspectionRecord& r : records)
            for (const Capture& c : r.captures)
                if (c.capture_id == captureId)
                    return c;
    }
    return std::nullopt;
}

bool CaptureStore::has_mission(const std::string& project, const std::string& missionId) const
{
    std::lock_guard lock(mMutex);
    for (const auto& [key, records] : mRecords)
        if (key.first == project)
            for (const InspectionRecord& r : records)
                if (r.mission_id == missionId)
                    return true;
    return false;
}

std::size_t CaptureStore::record_count() const
{
    std::lock_guard lock(mMutex);
    std::size_t n = 0;
    for (const auto& [key, records] : mRecords)
        n += records.size();
    return n;
}

} // namespace sitewalk
