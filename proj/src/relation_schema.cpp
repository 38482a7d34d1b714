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

#include "attrel/relation_schema.hpp"

#include <algorithm>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "attrel/errors.hpp"
#include "attrel/io.hpp"
#include "attrel/parallel.hpp"

namespace attrel {

namespace {

void check_unique(const std::vector<std::string>& names, const char* what) {
  std::unordered_set<std::string> seen;
  for (const auto& n : names)
    if (!seen.insert(n).second)
      throw InputError(std::string(what) + ": duplicate name '" + n + "'");
}

}  // namespace

std::size_t ClassVocabulary::seen_count() const {
  std::size_t n = 0;
  for (bool s : seen)
    if (s) ++n;
  return n;
}

std::size_t ClassVocabulary::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw InputError("unknown class name: '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

void ClassVocabulary::validate() const {
  check_unique(names, "class vocabulary");
  if (seen.size() != names.size())
    throw InputError("class vocabulary: seen mask size mismatch");
}

std::size_t AttributeVocabulary::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw InputError("unknown attribute name: '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

void AttributeVocabulary::validate() const {
  check_unique(names, "attribute vocabulary");
}

void RelationSchema::validate(std::size_t n_attributes) const {
  check_unique(relation_names, "relation schema");
  if (assignment.size() != n_attributes)
    throw InputError("relation schema: assignment not total over attributes");
  for (std::size_t r : assignment)
    if (r >= relation_names.size())
      throw InputError("relation schema: relation index out of range");
}

RelationSchema load_semantic_schema(const std::string& path,
                                    const AttributeVocabulary& attrs) {
  const auto lines = read_lines(path);
  std::unordered_map<std::string, std::string> attr_to_rel;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = split_tabs(lines[li]);
    if (fields.size() != 2)
      throw InputError(path + ":" + std::to_string(li + 1) +
                       ": expected 'attribute<TAB>relation'");
    const auto [it, inserted] = attr_to_rel.emplace(fields[0], fields[1]);
    if (!inserted && it->second != fields[1])
      throw InputError(path + ":" + std::to_string(li + 1) + ": attribute '" +
                       fields[0] + "' assigned to two relations ('" +
                       it->second + "' and '" + fields[1] + "')");
  }

  RelationSchema schema;
  schema.assignment.resize(attrs.size());
  std::unordered_set<std::string> known(attrs.names.begin(),
                                        attrs.names.end());
  for (const auto& [attr, rel] : attr_to_rel) {
    (void)rel;
    if (!known.count(attr))
      throw InputError(path + ": unknown attribute name '" + attr + "'");
  }
  std::unordered_map<std::string, std::size_t> rel_index;
  for (std::size_t m = 0; m < attrs.size(); ++m) {
    const auto it = attr_to_rel.find(attrs.names[m]);
    if (it == attr_to_rel.end())
      throw InputError(path + ": attribute '" + attrs.names[m] +
                       "' has no relation mapping");
    const auto [ri, inserted] =
        rel_index.emplace(it->second, schema.relation_names.size());
    if (inserted) schema.relation_names.push_back(it->second);
    schema.assignment[m] = ri->second;
  }
  return schema;
}

void save_schema(const RelationSchema& schema, const AttributeVocabulary& attrs,
                 const std::string& path) {
  schema.validate(attrs.size());
  std::ostringstream out;
  for (std::size_t m = 0; m < attrs.size(); ++m)
    out << attrs.names[m] << '\t'
        << schema.relation_names[schema.assignment[m]] << '\n';
  atomic_write_file(path, out.str());
}

RelationSchema single_relation_schema(const AttributeVocabulary& attrs,
                                      const std::string& relation_name) {
  RelationSchema schema;
  schema.relation_names = {relation_name};
  schema.assignment.assign(attrs.size(), 0);
  return schema;
}

RelationSchema discover_relations(const EmbeddingTable& table,
                                  const AttributeVocabulary& attrs,
                                  std::size_t n_clusters) {
  const std::size_t m = attrs.size();
  if (n_clusters == 0 || n_clusters > m)
    throw InputError("discover_relations: n_clusters must be in [1, " +
                     std::to_string(m) + "]");

  Matrix points(m, table.dim());
  for (std::size_t i = 0; i < m; ++i) {
    const auto pv = embed_phrase(table, attrs.names[i]);
    std::copy(pv.vector.begin(), pv.vector.end(), points.row(i).begin());
  }

  // Pairwise point distances, fixed once.
  Matrix pdist(m, m);
  par::parallel_for(m, [&](std::size_t i) {
    for (std::size_t j = 0; j < m; ++j)
      pdist(i, j) = euclidean_distance(points.row(i), points.row(j));
  });

  // Active clusters as sorted member lists; cluster id = smallest member.
  std::vector<std::vector<std::size_t>> clusters(m);
  for (std::size_t i = 0; i < m; ++i) clusters[i] = {i};

  auto linkage = [&](const std::vector<std::size_t>& a,
                     const std::vector<std::size_t>& b) {
    double sum = 0.0;
    for (std::size_t x : a)
      for (std::size_t y : b) sum += pdist(x, y);
    return sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
  };

  while (clusters.size() > n_clusters) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i + 1 < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double d = linkage(clusters[i], clusters[j]);
        if (d < best) {
          best = d;
          bi = i;
          bj = j;
        } else if (d == best) {
          // Tie: smallest (min id, max id). Clusters are kept sorted by id,
          // so the first (i, j) found already wins; nothing to do.
        }
      }
    }
    std::vector<std::size_t> merged;
    merged.reserve(clusters[bi].size() + clusters[bj].size());
    std::merge(clusters[bi].begin(), clusters[bi].end(), clusters[bj].begin(),
               clusters[bj].end(), std::back_inserter(merged));
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    clusters[bi] = std::move(merged);
    // Keep clusters ordered by id so the scan order stays canonical.
    std::sort(clusters.begin(), clusters.end(),
              [](const auto& a, const auto& b) { return a[0] < b[0]; });
  }

  RelationSchema schema;
  schema.assignment.resize(m);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    schema.relation_names.push_back("dr_" + std::to_string(c));
    for (std::size_t member : clusters[c]) schema.assignment[member] = c;
  }
  return schema;
}

TripletDataset build_triplets(const AssociationMatrix& assoc,
                              const RelationSchema& schema,
                              const ClassVocabulary& classes) {
  if (assoc.n_classes != classes.size() ||
      assoc.n_attributes != schema.assignment.size())
    throw InputError("build_triplets: dimension mismatch");
  TripletDataset out;
  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (!classes.seen[k]) continue;
    for (std::size_t m = 0; m < assoc.n_attributes; ++m) {
      const Assoc cell = assoc.at(k, m);
      if (cell == Assoc::kUnknown) continue;
      const Triplet t{schema.assignment[m], k, m};
      if (cell == Assoc::kPositive)
        out.positives.push_back(t);
      else
        out.negatives.push_back(t);
    }
  }
  return out;
}

Dataset merge_datasets(const Dataset& a, const Dataset& b) {
  a.classes.validate();
  b.classes.validate();
  a.attributes.validate();
  b.attributes.validate();
  a.schema.validate(a.attributes.size());
  b.schema.validate(b.attributes.size());

  Dataset out;
  out.name = a.name + "+" + b.name;

  // Classes: union by name, a's order first. seen flags OR together.
  std::unordered_map<std::string, std::size_t> class_index;
  for (std::size_t k = 0; k < a.classes.size(); ++k) {
    class_index.emplace(a.classes.names[k], out.classes.names.size());
    out.classes.names.push_back(a.classes.names[k]);
    out.classes.seen.push_back(a.classes.seen[k]);
  }
  for (std::size_t k = 0; k < b.classes.size(); ++k) {
    const auto [it, inserted] =
        class_index.emplace(b.classes.names[k], out.classes.names.size());
    if (inserted) {
      out.classes.names.push_back(b.classes.names[k]);
      out.classes.seen.push_back(b.classes.seen[k]);
    } else if (b.classes.seen[k]) {
      out.classes.seen[it->second] = true;
    }
  }

  // Relation names: namespace only on collision.
  std::unordered_set<std::string> a_rels(a.schema.relation_names.begin(),
                                         a.schema.relation_names.end());
  std::unordered_set<std::string> b_rels(b.schema.relation_names.begin(),
                                         b.schema.relation_names.end());
  auto merged_rel_name = [&](const Dataset& src, const std::string& rel) {
    const bool collides = a_rels.count(rel) && b_rels.count(rel);
    return collides ? src.name + "." + rel : rel;
  };

  std::unordered_map<std::string, std::size_t> rel_index;
  auto intern_relation = [&](const std::string& name) {
    const auto [it, inserted] =
        rel_index.emplace(name, out.schema.relation_names.size());
    if (inserted) out.schema.relation_names.push_back(name);
    return it->second;
  };

  // Attributes: union by name; a duplicated attribute keeps a's relation.
  std::unordered_map<std::string, std::size_t> attr_index;
  for (std::size_t m = 0; m < a.attributes.size(); ++m) {
    attr_index.emplace(a.attributes.names[m], out.attributes.names.size());
    out.attributes.names.push_back(a.attributes.names[m]);
    out.schema.assignment.push_back(intern_relation(
        merged_rel_name(a, a.schema.relation_names[a.schema.assignment[m]])));
  }
  for (std::size_t m = 0; m < b.attributes.size(); ++m) {
    const auto [it, inserted] =
        attr_index.emplace(b.attributes.names[m], out.attributes.names.size());
    (void)it;
    if (inserted) {
      out.attributes.names.push_back(b.attributes.names[m]);
      out.schema.assignment.push_back(intern_relation(merged_rel_name(
          b, b.schema.relation_names[b.schema.assignment[m]])));
    }
  }

  // Associations: start all-unknown, fill from a then b; conflicts on known
  // cells resolve to positive.
  out.assoc =
      AssociationMatrix(out.classes.size(), out.attributes.size());
  auto fill_from = [&](const Dataset& src) {
    for (std::size_t k = 0; k < src.classes.size(); ++k) {
      const std::size_t ko = class_index.at(src.classes.names[k]);
      for (std::size_t m = 0; m < src.attributes.size(); ++m) {
        const Assoc cell = src.assoc.at(k, m);
        if (cell == Assoc::kUnknown) continue;
        const std::size_t mo = attr_index.at(src.attributes.names[m]);
        Assoc& target = out.assoc.at(ko, mo);
        if (target == Assoc::kUnknown) {
          target = cell;
        } else if (target != cell) {
          std::cerr << "merge_datasets: conflicting labels for ("
                    << src.classes.names[k] << ", "
                    << src.attributes.names[m]
                    << "); keeping positive\n";
          target = Assoc::kPositive;
        }
      }
    }
  };
  fill_from(a);
  fill_from(b);

  out.classes.validate();
  out.attributes.validate();
  out.schema.validate(out.attributes.size());
  return out;
}

Dataset load_association_file(const std::string& path,
                              const std::string& dataset_name) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw InputError(path + ":1: missing header");
  const auto header = split_tabs(lines[0]);
  if (header.size() < 2)
    throw InputError(path + ":1: header needs at least one attribute column");

  Dataset ds;
  ds.name = dataset_name;
  ds.attributes.names.assign(header.begin() + 1, header.end());
  ds.attributes.validate();

  std::vector<std::vector<Assoc>> rows;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto fields = split_tabs(lines[li]);
    if (fields.size() != header.size())
      throw InputError(path + ":" + std::to_string(li + 1) + ": expected " +
                       std::to_string(header.size()) + " columns, got " +
                       std::to_string(fields.size()));
    ds.classes.names.push_back(fields[0]);
    ds.classes.seen.push_back(true);
    std::vector<Assoc> row;
    for (std::size_t m = 1; m < fields.size(); ++m) {
      if (fields[m] == "1")
        row.push_back(Assoc::kPositive);
      else if (fields[m] == "0")
        row.push_back(Assoc::kNegative);
      else if (fields[m] == "?")
        row.push_back(Assoc::kUnknown);
      else
        throw InputError(path + ":" + std::to_string(li + 1) +
                         ": cell must be 0, 1 or ?, got '" + fields[m] + "'");
    }
    rows.push_back(std::move(row));
  }
  ds.classes.validate();

  ds.assoc = AssociationMatrix(rows.size(), ds.attributes.size());
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t m = 0; m < ds.attributes.size(); ++m)
      ds.assoc.at(k, m) = rows[k][m];

  // Schema is attached separately (semantic file or clustering); default to
  // the single abstract relation so the dataset is always self-consistent.
  ds.schema = single_relation_schema(ds.attributes);
  return ds;
}

void save_association_file(const Dataset& dataset, const std::string& path) {
  std::ostringstream out;
  out << "class";
  for (const auto& a : dataset.attributes.names) out << '\t' << a;
  out << '\n';
  for (std::size_t k = 0; k < dataset.classes.size(); ++k) {
    out << dataset.classes.names[k];
    for (std::size_t m = 0; m < dataset.attributes.size(); ++m) {
      const Assoc cell = dataset.assoc.at(k, m);
      out << '\t'
          << (cell == Assoc::kPositive
                  ? "1"
                  : (cell == Assoc::kNegative ? "0" : "?"));
    }
    out << '\n';
  }
  atomic_write_file(path, out.str());
}

}  // namespace attrel
