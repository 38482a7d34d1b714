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

#include <cstdint>
#include <string>
#include <vector>

#include "attrel/embedding_store.hpp"

namespace attrel {

// Class names plus a seen/unseen flag per class. Unseen classes never
// contribute training triplets.
struct ClassVocabulary {
  std::vector<std::string> names;
  std::vector<bool> seen;

  std::size_t size() const { return names.size(); }
  std::size_t seen_count() const;
  std::size_t index_of(const std::string& name) const;  // InputError if absent
  void validate() const;
};

struct AttributeVocabulary {
  std::vector<std::string> names;

  std::size_t size() const { return names.size(); }
  std::size_t index_of(const std::string& name) const;
  void validate() const;
};

// Partition of the attribute vocabulary into named relations. assignment[m]
// is the relation index of attribute m; total by construction.
struct RelationSchema {
  std::vector<std::string> relation_names;
  std::vector<std::size_t> assignment;

  std::size_t n_relations() const { return relation_names.size(); }
  void validate(std::size_t n_attributes) const;
};

enum class Assoc : std::int8_t { kNegative = 0, kPositive = 1, kUnknown = -1 };

// Ground-truth class-attribute associations over {1, 0, unknown}.
struct AssociationMatrix {
  std::size_t n_classes = 0;
  std::size_t n_attributes = 0;
  std::vector<Assoc> cells;

  AssociationMatrix() = default;
  AssociationMatrix(std::size_t k, std::size_t m)
      : n_classes(k), n_attributes(m), cells(k * m, Assoc::kUnknown) {}

  Assoc& at(std::size_t k, std::size_t m) { return cells[k * n_attributes + m]; }
  Assoc at(std::size_t k, std::size_t m) const {
    return cells[k * n_attributes + m];
  }
};

struct Triplet {
  std::size_t relation;
  std::size_t class_index;
  std::size_t attribute_index;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct TripletDataset {
  std::vector<Triplet> positives;
  std::vector<Triplet> negatives;

  std::size_t size() const { return positives.size() + negatives.size(); }
};

// One dataset: vocabularies, relation partition and ground truth together.
// `name` namespaces colliding relation names when datasets are merged.
struct Dataset {
  std::string name;
  ClassVocabulary classes;
  AttributeVocabulary attributes;
  RelationSchema schema;
  AssociationMatrix assoc;
};

// Schema file: TSV lines "attribute<TAB>relation" covering every attribute.
RelationSchema load_semantic_schema(const std::string& path,
                                    const AttributeVocabulary& attrs);

void save_schema(const RelationSchema& schema, const AttributeVocabulary& attrs,
                 const std::string& path);

// All attributes grouped under one abstract relation.
RelationSchema single_relation_schema(const AttributeVocabulary& attrs,
                                      const std::string& relation_name =
                                          "has_attribute");

// Hierarchical agglomerative clustering (average linkage, Euclidean) over
// the attribute name embeddings, cut at n_clusters. Relations are named
// dr_0..dr_{N-1}, ordered by smallest member attribute index. Equal-distance
// merges pick the pair with smallest (min cluster id, max cluster id), where
// a cluster id is its smallest member index.
RelationSchema discover_relations(const EmbeddingTable& table,
                                  const AttributeVocabulary& attrs,
                                  std::size_t n_clusters);

// Positives/negatives from the known cells of seen classes; unknown cells
// emit nothing.
TripletDataset build_triplets(const AssociationMatrix& assoc,
                              const RelationSchema& schema,
                              const ClassVocabulary& classes);

// Union of two datasets. Class and attribute names deduplicate; relation
// names colliding across sources get namespaced "<dataset>.<relation>"; a
// duplicated attribute keeps the relation of the first source; cells absent
// in a source stay unknown; conflicting known cells resolve to positive
// (logged to stderr).
Dataset merge_datasets(const Dataset& a, const Dataset& b);

// Association file: TSV; header "class<TAB>attr1..attrM"; one row per class;
// cells in {0,1,?}. Every class starts out seen; callers flip seen flags.
Dataset load_association_file(const std::string& path,
                              const std::string& dataset_name);

void save_association_file(const Dataset& dataset, const std::string& path);

}  // namespace attrel
