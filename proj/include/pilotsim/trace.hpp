#pragma once

#include <array>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "error.hpp"

namespace pilotsim {

enum class EntityKind { pilot, unit, middleware };

inline const char* to_string(EntityKind k) {
    switch (k) {
        case EntityKind::pilot: return "pilot";
        case EntityKind::unit: return "unit";
        case EntityKind::middleware: return "middleware";
    }
    return "?";
}

inline EntityKind entity_kind_from(std::string_view s) {
    if (s == "pilot") return EntityKind::pilot;
    if (s == "unit") return EntityKind::unit;
    if (s == "middleware") return EntityKind::middleware;
    fail(Errc::parse_error, "unknown entity kind '" + std::string(s) + "'");
}

// One state transition. `ref` names a related entity: the pilot a unit was scheduled
// on, the site of a queued pilot, or the reason a unit failed.
struct TraceRecord {
    EntityKind entity_kind = EntityKind::unit;
    std::string entity_id;
    std::string state;
    double time_s = 0.0;
    std::string ref;

    bool operator==(const TraceRecord&) const = default;
};

struct Trace {
    std::vector<TraceRecord> records;

    void add(EntityKind kind, std::string id, std::string state, double t, std::string ref = {}) {
        records.push_back({kind, std::move(id), std::move(state), t, std::move(ref)});
    }

    // Newline-delimited JSON with a fixed field order; the content hash covers exactly this text.
    std::string to_ndjson() const {
        std::string out;
        out.reserve(records.size() * 80);
        for (const auto& r : records) {
            nlohmann::ordered_json j;
            j["entity_kind"] = to_string(r.entity_kind);
            j["entity_id"] = r.entity_id;
            j["state"] = r.state;
            j["time_s"] = r.time_s;
            if (!r.ref.empty()) j["ref"] = r.ref;
            out += j.dump();
            out += '\n';
        }
        return out;
    }

    static Trace from_ndjson(std::string_view text) {
        Trace t;
        std::size_t pos = 0;
        std::size_t line_no = 0;
        while (pos < text.size()) {
            auto end = text.find('\n', pos);
            if (end == std::string_view::npos) end = text.size();
            const auto line = text.substr(pos, end - pos);
            pos = end + 1;
            ++line_no;
            if (line.empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                fail(Errc::parse_error, "trace line " + std::to_string(line_no) + ": " + e.what());
            }
            TraceRecord r;
            r.entity_kind = entity_kind_from(j.at("entity_kind").get<std::string>());
            r.entity_id = j.at("entity_id").get<std::string>();
            r.state = j.at("state").get<std::string>();
            r.time_s = j.at("time_s").get<double>();
            if (auto it = j.find("ref"); it != j.end()) r.ref = it->get<std::string>();
            t.records.push_back(std::move(r));
        }
        return t;
    }

    // SHA-256 of the NDJSON rendering, hex encoded.
    std::string hash() const {
        const auto text = to_ndjson();
        std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
        unsigned int len = 0;
        EVP_Digest(text.data(), text.size(), digest.data(), &len, EVP_sha256(), nullptr);
        std::ostringstream hex;
        for (unsigned int i = 0; i < len; ++i)
            hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
        return hex.str();
    }

    bool operator==(const Trace&) const = default;
};

}  // namespace pilotsim
