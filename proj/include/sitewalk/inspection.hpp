#ifndef SITEWALK_INSPECTION_HPP
#define SITEWALK_INSPECTION_HPP

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sitewalk/capture.hpp"

namespace sitewalk {

/* Captures of one mission, in path order, filed under its inspection date */
struct InspectionRecord
{
    std::string project_id;
    /* "YYYY-MM-DD" */
    std::string inspection_date;
    std::string mission_id;
    std::vector<Capture> captures;

    friend bool operator==(const InspectionRecord&, const InspectionRecord&) = default;
};

/* Payloads travel as base64; `withPayload=false` leaves them out */
nlohmann::json capture_to_json(const Capture& capture, bool withPayload = true);
/* Throws ProtocolError */
Capture capture_from_json(const nlohmann::json& j);

nlohmann::json record_to_json(const InspectionRecord& record, bool withPayload = true);
InspectionRecord record_from_json(const nlohmann::json& j);

/*
 * Durable inspection records: one JSON line per stored bundle in an
 * append-only log, plus an in-memory index. Opening the store replays the
 * log (a torn final line is discarded) and rewrites it compacted. Records
 * are keyed by (project, date, mission); storing a key again replaces it.
 * Thread safe. I/O failures raise StorageError.
 */
class CaptureStore
{
public:
    explicit CaptureStore(std::filesystem::path path);

    void put(const InspectionRecord& record);

    /* Records of one day, in first-stored order */
    std::vector<InspectionRecord> query(const std::string& project, const std::string& date) const;
    std::vector<std::string> dates(const std::string& project) const;
    std::optional<Capture> find_capture(const std::string& project, const std::string& captureId) const;
    bool has_mission(const std::string& project, const std::string& missionId) const;
    std::size_t record_count() const;

    const std::filesystem::path& path() const { return mPath; }

private:
    using Key = std::pair<std::string, std::string>;

    void index(InspectionRecord record);
    void append_line(const std::string& line);

    std::filesystem::path mPath;
    mutable std::mutex mMutex;
    /* (project, date) -> records in first-stored order */
    std::map<Key, std::vector<InspectionRecord>> mRecords;
};

} // namespace sitewalk

#endif // SITEWALK_INSPECTION_HPP
