#pragma once

#include <map>
#include <string>
#include <vector>

#include "mo/mobject/micro_object.hpp"

namespace mo {

// Durable part of one store entry. Caches are never persisted.
struct StoreRecord {
    DistributedPart part;
    bool adopted = false;
    std::uint64_t adopted_at = 0;
    std::vector<ReplicationPolicy> policies;
    std::map<Address, std::uint64_t> peers;

    friend bool operator==(const StoreRecord&, const StoreRecord&) = default;
};

Bytes store_encode(const std::vector<StoreRecord>& records);
std::vector<StoreRecord> store_decode(ByteView bytes); // throws Error(malformed_message)

// Writes via a temporary file and rename, so a crash leaves either the old
// or the new contents.
void store_save(const std::string& path, const std::vector<StoreRecord>& records);
// A missing file is an empty store.
std::vector<StoreRecord> store_load(const std::string& path);

// One line per record, stable across runs; used to compare stores.
std::string store_dump(const std::vector<StoreRecord>& records);

} // namespace mo
