/*
 * Copyright 2026 The SimpleRec Authors
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

#include "simplerec/features.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

namespace simplerec {

FeatureTable FeatureTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open feature file '{}'", path));

  FeatureTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw DataError(fmt::format("{}:{}: expected key<TAB>f1,f2,...", path, lineno));
    const std::string key = line.substr(0, tab);

    std::vector<double> vec;
    std::size_t start = tab + 1;
    while (start <= line.size()) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) comma = line.size();
      const std::string field = line.substr(start, comma - start);
      try {
        std::size_t consumed = 0;
        const double v = std::stod(field, &consumed);
        if (consumed != field.size()) throw std::invalid_argument(field);
        if (!std::isfinite(v))
          throw DataError(fmt::format("{}:{}: non-finite value '{}'", path, lineno, field));
        vec.push_back(v);
      } catch (const DataError&) {
        throw;
      } catch (const std::exception&) {
        throw DataError(fmt::format("{}:{}: invalid float '{}'", path, lineno, field));
      }
      start = comma + 1;
    }
    if (vec.empty()) throw DataError(fmt::format("{}:{}: empty feature vector", path, lineno));
    if (table.dim == 0) table.dim = static_cast<int>(vec.size());
    if (static_cast<int>(vec.size()) != table.dim)
      throw DataError(fmt::format("{}:{}: dimension {} does not match {}", path, lineno,
                                  vec.size(), table.dim));
    if (!table.index.emplace(key, static_cast<int>(table.keys.size())).second)
      throw DataError(fmt::format("{}:{}: duplicate key '{}'", path, lineno, key));
    table.keys.push_back(key);
    rows.push_back(std::move(vec));
  }
  if (rows.empty()) throw DataError(fmt::format("feature file '{}' has no rows", path));

  table.values.resize(table.dim, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (int d = 0; d < table.dim; ++d) table.values(d, static_cast<Eigen::Index>(j)) = rows[j][d];
  return table;
}

void FeatureTable::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write feature file '{}'", path));
  for (std::size_t j = 0; j < keys.size(); ++j) {
    out << keys[j] << '\t';
    for (int d = 0; d < dim; ++d) {
      if (d) out << ',';
      out << fmt::format("{}", values(d, static_cast<Eigen::Index>(j)));
    }
    out << '\n';
  }
}

std::vector<NodeId> FeatureMatrix::nodes_of(FeatureSource src) const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < num_nodes(); ++v)
    if (source[v] == src) out.push_back(v);
  return out;
}

FeatureMatrix assemble_initial_features(const CollabKG& kg, const FeatureTable& text_table,
                                        const FeatureTable* kge_features) {
  FeatureMatrix fm;
  const int n = kg.num_nodes();
  fm.source.assign(n, FeatureSource::UserZero);
  fm.column.assign(n, -1);

  std::vector<NodeId> text_nodes, kge_nodes;
  for (NodeId v = 0; v < n; ++v) {
    const NodeKind kind = kg.kind_of(v);
    if (kind == NodeKind::User) continue;
    const std::string& key = kg.node_key(v);
    if (text_table.index.contains(key)) {
      fm.source[v] = FeatureSource::Text;
      fm.column[v] = static_cast<int>(text_nodes.size());
      text_nodes.push_back(v);
    } else if (kind == NodeKind::Item) {
      throw DataError(fmt::format("item '{}' has no textual feature", key));
    } else if (kge_features && kge_features->index.contains(key)) {
      fm.source[v] = FeatureSource::Kge;
      fm.column[v] = static_cast<int>(kge_nodes.size());
      kge_nodes.push_back(v);
    } else {
      throw DataError(fmt::format("entity '{}' covered neither by text nor by KGE features", key));
    }
  }

  auto fill = [&](const FeatureTable& table, const std::vector<NodeId>& nodes,
                  Eigen::MatrixXd& dst) {
    dst.resize(table.dim + 1, static_cast<Eigen::Index>(nodes.size()));
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const NodeId v = nodes[j];
      dst.col(static_cast<Eigen::Index>(j)).head(table.dim) =
          table.values.col(table.index.at(kg.node_key(v)));
      dst(table.dim, static_cast<Eigen::Index>(j)) = std::log1p(static_cast<double>(kg.degree(v)));
    }
  };

  if (!text_nodes.empty()) {
    fill(text_table, text_nodes, fm.text);
    fm.text_dim = text_table.dim + 1;
  }
  if (!kge_nodes.empty()) {
    fill(*kge_features, kge_nodes, fm.kge);
    fm.kge_dim = kge_features->dim + 1;
  }

  if (!fm.text.allFinite() || !fm.kge.allFinite())
    throw NumericError("assembled feature matrix contains NaN/Inf");
  return fm;
}

}  // namespace simplerec
