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

#include "lfl/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "lfl/config.hpp"

namespace lfl {

namespace {

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string mask_string(const std::vector<std::uint8_t>& mask) {
    if (mask.empty()) return "-";
    std::string s(mask.size(), '0');
    for (std::size_t n = 0; n < mask.size(); ++n) s[n] = mask[n] ? '1' : '0';
    return s;
}

void write_vocab(std::ostream& out, const char* name, const Vocabulary& v) {
    out << name << ' ' << v.size() << '\n';
    for (const auto& k : v.keys()) out << k << '\n';
}

void write_factors(std::ostream& out, const char* name, std::span<const double> data, std::size_t rows,
                   std::size_t width) {
    out << name << ' ' << rows << ' ' << width << '\n';
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t s = 0; s < width; ++s) {
            if (s > 0) out << ' ';
            out << format_double(data[i * width + s]);
        }
        out << '\n';
    }
}

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::string line() {
        std::string l;
        if (!std::getline(in_, l)) fail("unexpected end of model file");
        ++line_no_;
        if (!l.empty() && l.back() == '\r') l.pop_back();
        return l;
    }

    /// Reads "name value" and returns value.
    std::string field(const std::string& name) {
        const std::string l = line();
        if (l.rfind(name + ' ', 0) != 0) fail("expected '" + name + "'");
        return l.substr(name.size() + 1);
    }

    double real(const std::string& name) { return to_real(field(name)); }
    std::uint64_t count(const std::string& name) { return to_uint(field(name)); }

    double to_real(const std::string& s) {
        try {
            return parse_double(s);
        } catch (const std::invalid_argument&) {
            fail("bad number '" + s + "'");
        }
    }
    std::uint64_t to_uint(const std::string& s) {
        try {
            return parse_uint(s);
        } catch (const std::invalid_argument&) {
            fail("bad count '" + s + "'");
        }
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw DataError("model file line " + std::to_string(line_no_) + ": " + what);
    }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

Vocabulary read_vocab(Reader& r, const std::string& name, std::uint64_t expected_digest) {
    const auto n = r.count(name);
    Vocabulary v;
    for (std::uint64_t k = 0; k < n; ++k) {
        const std::string key = r.line();
        if (v.add(key) != k) r.fail("duplicate vocabulary key '" + key + "'");
    }
    if (v.digest() != expected_digest) {
        r.fail(name + " digest mismatch: vocabulary does not match the header");
    }
    return v;
}

std::vector<std::uint8_t> read_mask(Reader& r, const std::string& name, std::size_t expected) {
    const std::string s = r.field(name);
    if (s == "-") {
        if (expected != 0) r.fail(name + " missing");
        return {};
    }
    if (s.size() != expected) r.fail(name + " has the wrong length");
    std::vector<std::uint8_t> mask(s.size());
    for (std::size_t n = 0; n < s.size(); ++n) {
        if (s[n] != '0' && s[n] != '1') r.fail(name + " must be a 0/1 string");
        mask[n] = s[n] == '1';
    }
    return mask;
}

void read_factor_rows(Reader& r, const std::string& name, std::size_t rows, std::size_t width,
                      LatentFactors& f, bool row_side) {
    const std::string header = r.field(name);
    std::istringstream hs(header);
    std::size_t got_rows = 0, got_width = 0;
    if (!(hs >> got_rows >> got_width) || got_rows != rows || got_width != width) {
        r.fail(name + " dimensions do not match the header");
    }
    for (std::size_t i = 0; i < rows; ++i) {
        const auto parts = split(r.line(), ' ');
        if (parts.size() != width) r.fail(name + " row with the wrong width");
        auto dst = row_side ? f.row_mut(i) : f.col_mut(i);
        for (std::size_t s = 0; s < width; ++s) dst[s] = r.to_real(parts[s]);
        const std::size_t constant = row_side ? f.row_constant_slot() : f.col_constant_slot();
        if (dst[constant] != 1.0) r.fail(name + " constant slot is not 1");
    }
}

}  // namespace

void save_model(std::ostream& out, const ModelFile& file) {
    const CombinedModel& m = file.model;
    const Hyperparameters& h = file.hyper;
    out << "lflctr-model " << kModelFormatVersion << '\n';
    out << "family " << to_string(m.family) << '\n';
    out << "order " << m.factors.order() << '\n';
    out << "banners " << m.factors.banners() << '\n';
    out << "domains " << m.factors.domains() << '\n';
    out << "features " << m.side.weights.size() << '\n';
    out << "penalty " << to_string(h.latent_penalty) << '\n';
    out << "lambda_lr " << format_double(h.lambda_lr) << '\n';
    out << "lambda_bias " << format_double(h.lambda_bias) << '\n';
    out << "lambda_latent " << format_double(h.lambda_latent) << '\n';
    out << "alternations_run " << m.alternations_run << '\n';
    out << "day_trained " << m.day_trained << '\n';
    out << "intercept " << format_double(m.side.intercept) << '\n';
    out << "intercept_correction " << format_double(m.side.intercept_correction) << '\n';
    out << "digest_banners " << hex(file.vocab.banners.digest()) << '\n';
    out << "digest_domains " << hex(file.vocab.domains.digest()) << '\n';
    out << "digest_features " << hex(file.vocab.features.digest()) << '\n';
    write_vocab(out, "vocab_banners", file.vocab.banners);
    write_vocab(out, "vocab_domains", file.vocab.domains);
    write_vocab(out, "vocab_features", file.vocab.features);
    out << "trained_banners " << mask_string(m.trained_banners) << '\n';
    out << "trained_domains " << mask_string(m.trained_domains) << '\n';
    write_factors(out, "factors_A", m.factors.row_data(), m.factors.banners(), m.factors.width());
    write_factors(out, "factors_B", m.factors.col_data(), m.factors.domains(), m.factors.width());
    out << "side " << m.side.nonzero_weights() << '\n';
    for (std::size_t k = 0; k < m.side.weights.size(); ++k) {
        if (m.side.weights[k] != 0.0) out << k << ' ' << format_double(m.side.weights[k]) << '\n';
    }
    out << "end\n";
}

void save_model_file(const std::string& path, const ModelFile& file) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model file " + path);
    save_model(out, file);
    if (!out) throw DataError("error writing model file " + path);
}

ModelFile load_model(std::istream& in) {
    Reader r(in);
    const std::string magic = r.line();
    if (magic != "lflctr-model " + std::to_string(kModelFormatVersion)) {
        r.fail("not a version " + std::to_string(kModelFormatVersion) + " model file");
    }
    ModelFile file;
    CombinedModel& m = file.model;
    Hyperparameters& h = file.hyper;
    try {
        m.family = family_from_string(r.field("family"));
        h.order = r.count("order");
        const auto banners = r.count("banners");
        const auto domains = r.count("domains");
        const auto features = r.count("features");
        h.latent_penalty = penalty_from_string(r.field("penalty"));
        h.lambda_lr = r.real("lambda_lr");
        h.lambda_bias = r.real("lambda_bias");
        h.lambda_latent = r.real("lambda_latent");
        m.alternations_run = r.count("alternations_run");
        m.day_trained = static_cast<std::int32_t>(std::stol(r.field("day_trained")));
        m.side = SideModel(features);
        m.side.intercept = r.real("intercept");
        m.side.intercept_correction = r.real("intercept_correction");
        const auto digest_banners = std::stoull(r.field("digest_banners"), nullptr, 16);
        const auto digest_domains = std::stoull(r.field("digest_domains"), nullptr, 16);
        const auto digest_features = std::stoull(r.field("digest_features"), nullptr, 16);
        file.vocab.banners = read_vocab(r, "vocab_banners", digest_banners);
        file.vocab.domains = read_vocab(r, "vocab_domains", digest_domains);
        file.vocab.features = read_vocab(r, "vocab_features", digest_features);
        // Banners and domains may grow at scoring time (cold start); features
        // may not.
        file.vocab.features.freeze();
        m.trained_banners = read_mask(r, "trained_banners", m.family == ModelFamily::kLR ? 0 : banners);
        m.trained_domains = read_mask(r, "trained_domains", m.family == ModelFamily::kLR ? 0 : domains);
        m.factors = LatentFactors(banners, domains, h.order);
        read_factor_rows(r, "factors_A", banners, h.order + 2, m.factors, true);
        read_factor_rows(r, "factors_B", domains, h.order + 2, m.factors, false);
        const auto nnz = r.count("side");
        for (std::uint64_t n = 0; n < nnz; ++n) {
            const auto parts = split(r.line(), ' ');
            if (parts.size() != 2) r.fail("side entry must be 'index weight'");
            const auto k = r.to_uint(parts[0]);
            if (k >= features) r.fail("side index out of range");
            m.side.weights[k] = r.to_real(parts[1]);
        }
    } catch (const std::invalid_argument& e) {
        r.fail(e.what());
    } catch (const std::out_of_range& e) {
        r.fail(e.what());
    }
    if (r.line() != "end") r.fail("expected 'end'");
    return file;
}

ModelFile load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file " + path);
    return load_model(in);
}

}  // namespace lfl
