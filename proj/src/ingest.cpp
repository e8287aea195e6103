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

#include "lfl/ingest.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "lfl/config.hpp"

namespace lfl {

namespace {

bool parse_line(const std::string& line, RawEvent& ev) {
    std::string_view rest(line);
    if (!rest.empty() && rest.back() == '\r') rest.remove_suffix(1);
    std::vector<std::string_view> fields;
    while (true) {
        const auto tab = rest.find('\t');
        fields.push_back(rest.substr(0, tab));
        if (tab == std::string_view::npos) break;
        rest.remove_prefix(tab + 1);
    }
    if (fields.size() != 4 && fields.size() != 5) return false;

    std::int32_t day = 0;
    const auto res = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), day);
    if (res.ec != std::errc() || res.ptr != fields[0].data() + fields[0].size()) return false;
    if (fields[1].empty() || fields[2].empty()) return false;
    if (fields[3] != "0" && fields[3] != "1") return false;

    ev.day = day;
    ev.banner.assign(fields[1]);
    ev.domain.assign(fields[2]);
    ev.clicked = fields[3] == "1";
    ev.attributes.clear();
    if (fields.size() == 5 && !fields[4].empty()) {
        std::string_view feats = fields[4];
        while (true) {
            const auto bar = feats.find('|');
            const std::string_view tok = feats.substr(0, bar);
            if (!tok.empty()) {
                const auto eq = tok.find('=');
                const std::string_view name = tok.substr(0, eq);
                if (name.empty()) return false;
                ev.attributes.emplace_back(
                    std::string(name),
                    eq == std::string_view::npos ? std::string() : std::string(tok.substr(eq + 1)));
            }
            if (bar == std::string_view::npos) break;
            feats.remove_prefix(bar + 1);
        }
    }
    return true;
}

void consume_line(const std::string& line, ParseResult& out) {
    if (line.empty() || line == "\r") return;
    RawEvent ev;
    if (parse_line(line, ev)) {
        out.events.push_back(std::move(ev));
    } else {
        ++out.malformed;
    }
}

/// Feature keys an event contributes under the schema.
template <typename Fn>
void for_each_feature_key(const RawEvent& ev, const Schema& schema, Fn&& fn) {
    for (const auto& [name, value] : ev.attributes) {
        if (schema.encodes(name)) fn(feature_key(name, value));
        if (schema.crosses(name)) fn(cross_key(name, value, ev.banner));
    }
    if (schema.banner_indicator) fn("banner=" + ev.banner);
    if (schema.domain_indicator) fn("domain=" + ev.domain);
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

ParseResult parse_log(std::istream& in) {
    ParseResult out;
    std::string line;
    while (std::getline(in, line)) {
        consume_line(line, out);
    }
    if (in.bad()) {
        throw DataError("error while reading event log stream");
    }
    return out;
}

ParseResult parse_log_file(const std::string& path) {
    // gzopen reads uncompressed files transparently.
    gzFile file = gzopen(path.c_str(), "rb");
    if (file == nullptr) {
        throw DataError("cannot open event log " + path);
    }
    ParseResult out;
    std::string line;
    char buf[1 << 16];
    while (gzgets(file, buf, sizeof(buf)) != nullptr) {
        line.append(buf);
        if (!line.empty() && line.back() == '\n') {
            line.pop_back();
            consume_line(line, out);
            line.clear();
        }
    }
    int err = Z_OK;
    const char* msg = gzerror(file, &err);
    const bool failed = err != Z_OK && err != Z_STREAM_END;
    const std::string what = failed ? std::string(msg) : std::string();
    gzclose(file);
    if (failed) {
        throw DataError("error reading event log " + path + ": " + what);
    }
    if (!line.empty()) consume_line(line, out);
    return out;
}

void write_log(std::ostream& out, const std::vector<RawEvent>& events) {
    for (const auto& ev : events) {
        out << ev.day << '\t' << ev.banner << '\t' << ev.domain << '\t' << (ev.clicked ? '1' : '0')
            << '\t';
        for (std::size_t n = 0; n < ev.attributes.size(); ++n) {
            if (n > 0) out << '|';
            out << ev.attributes[n].first;
            if (!ev.attributes[n].second.empty()) out << '=' << ev.attributes[n].second;
        }
        out << '\n';
    }
}

bool Schema::encodes(const std::string& attribute) const {
    return attributes.empty() ||
           std::find(attributes.begin(), attributes.end(), attribute) != attributes.end();
}

bool Schema::crosses(const std::string& attribute) const {
    return std::find(crossed.begin(), crossed.end(), attribute) != crossed.end();
}

Schema Schema::parse(std::istream& in) {
    const auto cfg = KeyValueConfig::parse(in);
    cfg.require_known({"attributes", "cross", "banner_indicator", "domain_indicator", "min_count", "top_k"});
    Schema s;
    s.attributes = cfg.get_list("attributes");
    s.crossed = cfg.get_list("cross");
    s.banner_indicator = cfg.get_bool("banner_indicator", false);
    s.domain_indicator = cfg.get_bool("domain_indicator", false);
    s.min_count = cfg.get_uint("min_count", 1);
    s.top_k = cfg.get_uint("top_k", 0);
    return s;
}

Schema Schema::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open schema file " + path);
    }
    return parse(in);
}

std::optional<std::uint32_t> Vocabulary::find(const std::string& key) const {
    const auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::uint32_t Vocabulary::add(const std::string& key) {
    if (const auto idx = find(key)) return *idx;
    if (frozen_) {
        throw std::logic_error("cannot add '" + key + "' to a frozen vocabulary");
    }
    const auto idx = static_cast<std::uint32_t>(keys_.size());
    index_.emplace(key, idx);
    keys_.push_back(key);
    return idx;
}

std::uint64_t Vocabulary::digest() const {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](unsigned char c) {
        h ^= c;
        h *= 1099511628211ull;
    };
    for (const auto& k : keys_) {
        for (unsigned char c : k) mix(c);
        mix(0);
    }
    return h;
}

std::string feature_key(const std::string& name, const std::string& value) {
    return value.empty() ? name : name + "=" + value;
}

std::string cross_key(const std::string& name, const std::string& value, const std::string& banner) {
    return feature_key(name, value) + "^" + banner;
}

Vocabularies build_vocabularies(const std::vector<RawEvent>& events, const Schema& schema) {
    Vocabularies vocab;
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& ev : events) {
        vocab.banners.add(ev.banner);
        vocab.domains.add(ev.domain);
        for_each_feature_key(ev, schema, [&counts](const std::string& key) { ++counts[key]; });
    }
    std::vector<std::pair<std::string, std::size_t>> ranked;
    ranked.reserve(counts.size());
    for (auto& [key, count] : counts) {
        if (count >= schema.min_count) ranked.emplace_back(key, count);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (schema.top_k > 0 && ranked.size() > schema.top_k) {
        ranked.resize(schema.top_k);
    }
    for (const auto& [key, count] : ranked) vocab.features.add(key);
    vocab.features.freeze();
    return vocab;
}

std::vector<EventRecord> encode(const std::vector<RawEvent>& events, Vocabularies& vocab,
                                const Schema& schema) {
    std::vector<EventRecord> out;
    out.reserve(events.size());
    std::vector<std::vector<std::uint32_t>> indices(events.size());
    for (std::size_t n = 0; n < events.size(); ++n) {
        const auto& ev = events[n];
        EventRecord rec;
        rec.day = ev.day;
        rec.key = DyadKey{vocab.banners.add(ev.banner), vocab.domains.add(ev.domain)};
        rec.clicked = ev.clicked;
        for_each_feature_key(ev, schema, [&](const std::string& key) {
            if (const auto idx = vocab.features.find(key)) {
                indices[n].push_back(*idx);
            } else if (!vocab.features.frozen()) {
                indices[n].push_back(vocab.features.add(key));
            }
        });
        out.push_back(std::move(rec));
    }
    const std::size_t dimension = vocab.features.size();
    for (std::size_t n = 0; n < out.size(); ++n) {
        auto& idx = indices[n];
        std::sort(idx.begin(), idx.end());
        idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
        std::vector<FeatureEntry> entries;
        entries.reserve(idx.size());
        for (const auto i : idx) entries.push_back({i, 1.0});
        out[n].features = SparseFeatureVector(std::move(entries), dimension);
    }
    return out;
}

DownsampleResult downsample_negatives(const std::vector<EventRecord>& events, double factor,
                                      std::uint64_t seed) {
    if (!(factor >= 1.0)) {
        throw std::invalid_argument("down-sampling factor must be >= 1");
    }
    DownsampleResult res;
    if (factor == 1.0) {
        res.events = events;
        return res;
    }
    std::mt19937_64 rng(seed);
    const double keep = 1.0 / factor;
    std::size_t negatives = 0;
    std::size_t kept = 0;
    res.events.reserve(events.size());
    for (const auto& ev : events) {
        if (ev.clicked) {
            res.events.push_back(ev);
            continue;
        }
        ++negatives;
        if (uniform01(rng) < keep) {
            ++kept;
            res.events.push_back(ev);
        }
    }
    res.keep_rate = negatives > 0 && kept > 0
                        ? static_cast<double>(kept) / static_cast<double>(negatives)
                        : keep;
    return res;
}

std::vector<DyadAggregate> aggregate(const std::vector<EventRecord>& events) {
    std::map<DyadKey, std::pair<std::uint64_t, std::uint64_t>> counts;
    for (const auto& ev : events) {
        auto& c = counts[ev.key];
        c.first += ev.clicked ? 1 : 0;
        c.second += 1;
    }
    std::vector<DyadAggregate> out;
    out.reserve(counts.size());
    for (const auto& [key, c] : counts) out.emplace_back(key, c.first, c.second);
    return out;
}

std::map<DyadKey, std::vector<SparseFeatureVector>> group_by_dyad(const std::vector<EventRecord>& events) {
    std::map<DyadKey, std::vector<SparseFeatureVector>> groups;
    for (const auto& ev : events) groups[ev.key].push_back(ev.features);
    return groups;
}

DyadIndexGroups group_event_indices(const std::vector<EventRecord>& events) {
    std::vector<std::size_t> order(events.size());
    for (std::size_t n = 0; n < order.size(); ++n) order[n] = n;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return events[a].key < events[b].key; });
    DyadIndexGroups g;
    for (const auto n : order) {
        if (g.keys.empty() || g.keys.back() != events[n].key) {
            g.keys.push_back(events[n].key);
            g.members.emplace_back();
        }
        g.members.back().push_back(n);
    }
    return g;
}

DatasetDay DatasetDay::from_events(std::int32_t day, std::vector<EventRecord> events) {
    DatasetDay d;
    d.day = day;
    d.aggregates = aggregate(events);
    d.events = std::move(events);
    return d;
}

DatasetDay DatasetDay::downsampled(double factor, std::uint64_t seed) const {
    auto res = downsample_negatives(events, factor, seed);
    DatasetDay d = from_events(day, std::move(res.events));
    d.downsample_factor = downsample_factor * factor;
    d.keep_rate = keep_rate * res.keep_rate;
    return d;
}

std::vector<DatasetDay> partition_by_day(std::vector<EventRecord> events) {
    std::map<std::int32_t, std::vector<EventRecord>> by_day;
    for (auto& ev : events) by_day[ev.day].push_back(std::move(ev));
    std::vector<DatasetDay> days;
    for (auto& [day, evs] : by_day) days.push_back(DatasetDay::from_events(day, std::move(evs)));
    return days;
}

}  // namespace lfl
