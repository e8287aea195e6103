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

// Versioned text model files.
//
//   lflctr-model 1
//   family LR+LFL
//   order 5
//   ...header fields...
//   vocab_banners <n>      one key per line
//   vocab_domains <n>
//   vocab_features <n>
//   trained_banners <0/1 string or ->
//   trained_domains <0/1 string or ->
//   factors_A <rows> <width>   one row per line
//   factors_B <rows> <width>
//   side <nnz>                 "index weight" per line
//   end
//
// Reals are written in shortest round-trip form, so save then load
// reproduces predictions bit for bit.

#pragma once

#include <iosfwd>
#include <string>

#include "lfl/combined.hpp"
#include "lfl/ingest.hpp"

namespace lfl {

inline constexpr int kModelFormatVersion = 1;

struct ModelFile {
    CombinedModel model;
    Hyperparameters hyper;
    /// Encoding used at training time; empty for models trained on
    /// pre-encoded data.
    Vocabularies vocab;
};

void save_model(std::ostream& out, const ModelFile& file);
void save_model_file(const std::string& path, const ModelFile& file);

/// Throws DataError on malformed input, an unsupported version or a
/// vocabulary whose digest does not match the header.
ModelFile load_model(std::istream& in);
ModelFile load_model_file(const std::string& path);

}  // namespace lfl
