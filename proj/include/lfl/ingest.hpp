// Copyright 2026 The lflctr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Event-log ingestion: TSV parsing, vocabularies, one-of-K and banner-cross
// feature encoding, negative down-sampling and dyad aggregation.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lfl/core.hpp"

namespace lfl {

struct RawEvent {
    std::int32_t day = 0;
    std::string banner;
    std::string domain;
    bool clicked = false;
    /// (name, value) pairs; an empty value means presence.
    std::vector<std::pair<std::string, std::string>> attributes;

    friend bool operator==(const RawEvent&, const RawEvent&) = default;
};

struct ParseResult {
    std::vector<RawEvent> events;
    std::size_t malformed = 0;
};

/// Parses `day \t banner \t domain \t label \t a=v|b|...` lines. Malformed
/// lines are skipped and counted.
ParseResult parse_log(std::istream& in);

/// Reads a plain or gzip-compressed log file. Throws DataError when the
/// file cannot be opened.
ParseResult parse_log_file(const std::string& path);

/// Appends one TSV line per event.
void write_log(std::ostream& out, const std::vector<RawEvent>& events);

/// Which attributes become features and which are crossed with the banner.
struct Schema {
    /// Attribute names to encode; empty means every attribute seen.
    std::vector<std::string> attributes;
    /// Attributes additionally emitted as (attribute value x banner id).
    std::vector<std::string> crossed;
    bool banner_indicator = false;
    bool domain_indicator = false;
    /// Features seen fewer times than this are left out of the vocabulary.
    std::size_t min_count = 1;
    /// Keep at most this many features (most frequent first); 0 = no cap.
    std::size_t top_k = 0;

    bool encodes(const std::string& attribute) const;
    bool crosses(const std::string& attribute) const;

    /// Parses `key = value` lines; list values are comma separated. Throws
    /// std::invalid_argument naming an unknown key.
    static Schema parse(std::istream& in);
    static Schema load(const std::string& path);
};

/// Injective map from string keys to dense indices.
class Vocabulary {
public:
    std::optional<std::uint32_t> find(const std::string& key) const;

    /// Returns the existing index or assigns the next one. Throws
    /// std::logic_error on a frozen vocabulary.
    std::uint32_t add(const std::string& key);

    const std::string& key(std::uint32_t index) const { return keys_.at(index); }
    std::size_t size() const { return keys_.size(); }
    const std::vector<std::string>& keys() const { return keys_; }

    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }

    /// FNV-1a over the keys in index order.
    std::uint64_t digest() const;

private:
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<std::string> keys_;
    bool frozen_ = false;
};

struct Vocabularies {
    Vocabulary banners;
    Vocabulary domains;
    Vocabulary features;
};

/// Feature key of a one-of-K attribute value, e.g. "ua=ff" or "ua".
std::string feature_key(const std::string& name, const std::string& value);
/// Feature key of an attribute value crossed with a banner, e.g. "ua=ff^B7".
std::string cross_key(const std::string& name, const std::string& value, const std::string& banner);

/// Two-pass build: counts every feature key the schema emits, applies the
/// min-count and top-k filters, assigns indices by decreasing count (ties by
/// key) and freezes the feature vocabulary. Banners and domains get indices
/// in order of first appearance.
Vocabularies build_vocabularies(const std::vector<RawEvent>& events, const Schema& schema);

/// One-of-K encoding with the configured banner crosses; every indicator has
/// value 1. Unknown banners and domains extend their vocabularies; unknown
/// features under a frozen feature vocabulary are dropped.
std::vector<EventRecord> encode(const std::vector<RawEvent>& events, Vocabularies& vocab,
                                const Schema& schema);

struct DownsampleResult {
    std::vector<EventRecord> events;
    /// Kept negatives / original negatives (1/factor when there were none).
    double keep_rate = 1.0;
};

/// Keeps every positive and each negative independently with probability
/// 1/factor. Deterministic for a given seed. Throws std::invalid_argument
/// when factor < 1.
DownsampleResult downsample_negatives(const std::vector<EventRecord>& events, double factor,
                                      std::uint64_t seed);

/// One aggregate per distinct dyad, ordered by key.
std::vector<DyadAggregate> aggregate(const std::vector<EventRecord>& events);

/// Feature vectors per dyad, duplicates kept.
std::map<DyadKey, std::vector<SparseFeatureVector>> group_by_dyad(const std::vector<EventRecord>& events);

/// Event indices per dyad, ordered by key; the index-based form of
/// group_by_dyad used by the trainers.
struct DyadIndexGroups {
    std::vector<DyadKey> keys;
    /// members[g] lists indices into the event list for keys[g].
    std::vector<std::vector<std::size_t>> members;
};

DyadIndexGroups group_event_indices(const std::vector<EventRecord>& events);

/// Events of one day together with their dyad aggregates.
struct DatasetDay {
    std::int32_t day = 0;
    std::vector<EventRecord> events;
    std::vector<DyadAggregate> aggregates;
    /// Negative down-sampling factor applied to `events` (1 = none).
    double downsample_factor = 1.0;
    double keep_rate = 1.0;

    static DatasetDay from_events(std::int32_t day, std::vector<EventRecord> events);
    /// Down-sampled copy with aggregates recomputed.
    DatasetDay downsampled(double factor, std::uint64_t seed) const;
};

/// Splits records by day, ascending.
std::vector<DatasetDay> partition_by_day(std::vector<EventRecord> events);

}  // namespace lfl
