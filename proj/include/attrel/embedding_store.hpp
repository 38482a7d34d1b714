/*
 * Copyright 2026 The attrel Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "attrel/matrix.hpp"

namespace attrel {

// Pretrained word vectors, immutable after load. Tokens are lowercased on
// ingestion and queries are lowercased before lookup, so matching never
// depends on input casing.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::vector<std::string> tokens, Matrix vectors);

  std::size_t size() const { return tokens_.size(); }
  std::size_t dim() const { return vectors_.cols(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const Matrix& vectors() const { return vectors_; }

  bool contains(const std::string& token) const;
  // Row for `token`; throws InputError when absent.
  std::span<const double> lookup(const std::string& token) const;

  // Vocabulary tokens closest to `token` by Levenshtein distance,
  // for "did you mean" diagnostics. Ties by token index.
  std::vector<std::string> closest_tokens(const std::string& token,
                                          std::size_t count) const;

 private:
  std::vector<std::string> tokens_;
  Matrix vectors_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct PhraseVector {
  std::string phrase;
  std::vector<double> vector;
  std::vector<std::string> constituent_tokens;
};

enum class DistanceMetric { kEuclidean, kCosine };

// Text format: line 1 "<vocab_size> <dim>", then one "<token> <f1> .. <fd>"
// per line. Errors name the offending line.
EmbeddingTable load_embeddings(const std::string& path);

// Inverse of load_embeddings; values printed with 17 significant digits so
// a reload is bit-identical.
void save_embeddings(const EmbeddingTable& table, const std::string& path);

// Mean of the token vectors of `phrase` split on whitespace/underscore.
// Missing tokens raise InputError listing the 5 nearest vocabulary tokens.
PhraseVector embed_phrase(const EmbeddingTable& table,
                          const std::string& phrase);

// k nearest vocabulary tokens to `query`, ascending distance, ties by
// token index. k > vocab size is an error.
std::vector<std::pair<std::string, double>> nearest_neighbors(
    const EmbeddingTable& table, std::span<const double> query, std::size_t k,
    DistanceMetric metric);

}  // namespace attrel
