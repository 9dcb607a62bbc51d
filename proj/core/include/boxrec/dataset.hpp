#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "boxrec/checkpoint.hpp"
#include "boxrec/geometry.hpp"
#include "boxrec/vocab.hpp"

namespace boxrec {

enum class Partition : std::uint8_t { train, eval };

struct Pair {
  Index row = 0;
  Index item = 0;

  auto operator<=>(const Pair&) const = default;
};

/// Sparse binary relation between row entities (users or attributes) and
/// items, each pair tagged train or eval.
class InteractionSet {
 public:
  InteractionSet() = default;
  InteractionSet(std::size_t rows, std::size_t items) : rows_(rows), items_(items) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t items() const noexcept { return items_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }

  /// Adds a pair; returns false (and changes nothing) if it already exists.
  bool add(Pair p, Partition part = Partition::train);
  bool contains(Pair p) const { return where_.contains(key(p)); }
  std::optional<Partition> partition(Pair p) const;
  bool in(Pair p, Partition part) const { return partition(p) == part; }
  void set_partition(Pair p, Partition part);

  /// Pairs sorted by (row, item). With no argument, every pair.
  std::vector<Pair> pairs() const;
  std::vector<Pair> pairs(Partition part) const;
  std::size_t count(Partition part) const;

  /// Items of each row (all partitions, or one), sorted.
  std::vector<std::vector<Index>> items_by_row() const;
  std::vector<std::vector<Index>> items_by_row(Partition part) const;
  /// Rows of each item (all partitions), sorted.
  std::vector<std::vector<Index>> rows_by_item() const;

  bool operator==(const InteractionSet& other) const;

 private:
  std::uint64_t key(Pair p) const { return static_cast<std::uint64_t>(p.row) * items_ + p.item; }

  std::size_t rows_ = 0;
  std::size_t items_ = 0;
  std::vector<Pair> pairs_;
  std::vector<Partition> tags_;
  std::unordered_map<std::uint64_t, std::size_t> where_;
};

/// Users x items (D_U) and attributes x items (D_A) over shared vocabularies.
struct Dataset {
  Vocabularies vocab;
  InteractionSet user_items;
  InteractionSet attribute_items;
};

enum class QueryType : std::uint8_t { simple, inter, neg };

inline constexpr QueryType kQueryTypes[] = {QueryType::simple, QueryType::inter, QueryType::neg};

std::string_view to_string(QueryType t);
QueryType parse_query_type(std::string_view s);

/// One evaluation query and the item it should retrieve.
struct QueryRecord {
  QueryShape shape;
  Index target = 0;

  QueryType type() const;
  std::strong_ordering operator<=>(const QueryRecord& other) const;
  bool operator==(const QueryRecord&) const = default;
};

QueryRecord make_simple_query(Index user, Index attribute, Index item);
QueryRecord make_inter_query(Index user, Index a1, Index a2, Index item);
QueryRecord make_neg_query(Index user, Index a1, Index a2, Index item);

struct QuerySets {
  std::vector<QueryRecord> simple;
  std::vector<QueryRecord> inter;
  std::vector<QueryRecord> neg;

  const std::vector<QueryRecord>& of(QueryType t) const;
  std::vector<QueryRecord>& of(QueryType t);
};

}  // namespace boxrec
