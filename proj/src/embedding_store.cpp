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

#include "attrel/embedding_store.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "attrel/errors.hpp"
#include "attrel/io.hpp"
#include "attrel/parallel.hpp"

namespace attrel {

namespace {

std::size_t levenshtein(const std::string& a, const std::string& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

std::vector<std::string> split_phrase(const std::string& phrase) {
  std::string normalized = phrase;
  for (char& c : normalized)
    if (c == '_') c = ' ';
  return split_whitespace(normalized);
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::vector<std::string> tokens, Matrix vectors)
    : tokens_(std::move(tokens)), vectors_(std::move(vectors)) {
  if (tokens_.size() != vectors_.rows())
    throw InputError("embedding table: token count does not match rows");
  if (!vectors_.all_finite())
    throw InputError("embedding table: non-finite vector entry");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    tokens_[i] = lowercase(tokens_[i]);
    if (!index_.emplace(tokens_[i], i).second)
      throw InputError("embedding table: duplicate token '" + tokens_[i] +
                       "'");
  }
}

bool EmbeddingTable::contains(const std::string& token) const {
  return index_.count(lowercase(token)) > 0;
}

std::span<const double> EmbeddingTable::lookup(const std::string& token) const {
  const auto it = index_.find(lowercase(token));
  if (it == index_.end())
    throw InputError("token not in embedding vocabulary: '" + token + "'");
  return vectors_.row(it->second);
}

std::vector<std::string> EmbeddingTable::closest_tokens(
    const std::string& token, std::size_t count) const {
  const std::string query = lowercase(token);
  std::vector<std::pair<std::size_t, std::size_t>> scored;  // (dist, index)
  scored.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    scored.emplace_back(levenshtein(query, tokens_[i]), i);
  std::sort(scored.begin(), scored.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < scored.size() && i < count; ++i)
    out.push_back(tokens_[scored[i].second]);
  return out;
}

EmbeddingTable load_embeddings(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw InputError(path + ":1: missing header line");
  const auto header = split_whitespace(lines[0]);
  if (header.size() != 2)
    throw InputError(path + ":1: header must be '<vocab_size> <dim>'");
  std::size_t vocab = 0, dim = 0;
  try {
    vocab = std::stoul(header[0]);
    dim = std::stoul(header[1]);
  } catch (const std::exception&) {
    throw InputError(path + ":1: malformed header '" + lines[0] + "'");
  }
  if (dim == 0) throw InputError(path + ":1: dim must be positive");

  std::vector<std::string> tokens;
  tokens.reserve(vocab);
  Matrix vectors(vocab, dim);
  std::size_t row = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const std::size_t lineno = li + 1;
    if (row >= vocab)
      throw InputError(path + ":" + std::to_string(lineno) +
                       ": more rows than declared vocab_size " +
                       std::to_string(vocab));
    const auto fields = split_whitespace(lines[li]);
    if (fields.size() != dim + 1)
      throw InputError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(dim + 1) + " fields, got " +
                       std::to_string(fields.size()));
    tokens.push_back(fields[0]);
    for (std::size_t j = 0; j < dim; ++j)
      vectors(row, j) = parse_double(
          fields[j + 1], path + ":" + std::to_string(lineno));
    ++row;
  }
  if (row != vocab)
    throw InputError(path + ": declared vocab_size " + std::to_string(vocab) +
                     " but found " + std::to_string(row) + " rows");
  try {
    return EmbeddingTable(std::move(tokens), std::move(vectors));
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
  std::ostringstream out;
  out << table.size() << ' ' << table.dim() << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.tokens()[i];
    const auto row = table.vectors().row(i);
    for (double v : row) out << ' ' << format_g17(v);
    out << '\n';
  }
  atomic_write_file(path, out.str());
}

PhraseVector embed_phrase(const EmbeddingTable& table,
                          const std::string& phrase) {
  const auto parts = split_phrase(lowercase(phrase));
  if (parts.empty())
    throw InputError("cannot embed empty phrase '" + phrase + "'");

  std::vector<std::string> missing;
  for (const auto& tok : parts)
    if (!table.contains(tok)) missing.push_back(tok);
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "phrase '" << phrase << "': missing token(s):";
    for (const auto& tok : missing) {
      msg << " '" << tok << "' (nearest:";
      for (const auto& near : table.closest_tokens(tok, 5)) msg << ' ' << near;
      msg << ")";
    }
    throw InputError(msg.str());
  }

  PhraseVector pv;
  pv.phrase = phrase;
  pv.constituent_tokens = parts;
  pv.vector.assign(table.dim(), 0.0);
  for (const auto& tok : parts) {
    const auto row = table.lookup(tok);
    for (std::size_t j = 0; j < table.dim(); ++j) pv.vector[j] += row[j];
  }
  const double inv = 1.0 / static_cast<double>(parts.size());
  for (double& v : pv.vector) v *= inv;
  return pv;
}

std::vector<std::pair<std::string, double>> nearest_neighbors(
    const EmbeddingTable& table, std::span<const double> query, std::size_t k,
    DistanceMetric metric) {
  if (query.size() != table.dim())
    throw InputError("nearest_neighbors: query length " +
                     std::to_string(query.size()) + " != dim " +
                     std::to_string(table.dim()));
  if (k > table.size())
    throw InputError("nearest_neighbors: k=" + std::to_string(k) +
                     " exceeds vocab size " + std::to_string(table.size()));

  std::vector<double> dist(table.size());
  if (metric == DistanceMetric::kEuclidean) {
    par::parallel_for(table.size(), [&](std::size_t i) {
      dist[i] = euclidean_distance(table.vectors().row(i), query);
    });
  } else {
    const double qn = std::sqrt(dot(query, query));
    par::parallel_for(table.size(), [&](std::size_t i) {
      const auto row = table.vectors().row(i);
      const double rn = std::sqrt(dot(row, row));
      const double denom = rn * qn;
      // Zero vectors get maximal distance rather than NaN.
      dist[i] = denom > 0.0 ? 1.0 - dot(row, query) / denom : 2.0;
    });
  }

  std::vector<std::size_t> order(table.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return a < b;
  });

  std::vector<std::pair<std::string, double>> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i)
    out.emplace_back(table.tokens()[order[i]], dist[order[i]]);
  return out;
}

}  // namespace attrel
